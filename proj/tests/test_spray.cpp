#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "finsler/errors.hpp"
#include "finsler/finsler_metric.hpp"
#include "finsler/models.hpp"
#include "finsler/riemann.hpp"
#include "finsler/spray.hpp"

using namespace finsler;

namespace {

Spray zero_spray(int n) {
  Spray s;
  s.dim = n;
  s.name = "zero";
  s.coefficients = [n](std::span<const double>, std::span<const double>, int order) {
    return std::vector<Jet>(n, Jet(JetSpace::get(2 * n), order, 0.0));
  };
  return s;
}

// P = <c(x), y> + 0.3 x^1 |y|, positively homogeneous of degree 1 in y.
Jet shift_factor(std::span<const Jet> x, std::span<const Jet> y) {
  Jet lin(0.0), len2(0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    lin += (0.5 + 0.2 * static_cast<double>(i) + x[i] * x[0]) * y[i];
    len2 += y[i] * y[i];
  }
  return lin + 0.3 * x[0] * sqrt(len2);
}

struct Case {
  std::string model;
  std::vector<double> x, y;
};

std::vector<Case> cases() {
  std::vector<Case> out;
  for (const char* name : {"cfc-kropina", "warped-nonflat", "projflat-eta"}) {
    const auto M = build(named_model(name, 3));
    const auto b = sample(M, 7, 2);
    for (const auto& s : b.points) out.push_back({name, s.x, s.y});
  }
  return out;
}

std::vector<double> scaled(const std::vector<double>& y, double l) {
  auto out = y;
  for (auto& v : out) v *= l;
  return out;
}

}  // namespace

TEST(Spray, ZeroSprayIsFlat) {
  const auto S = zero_spray(3);
  const std::vector<double> x{0.1, 0.2, 0.3}, y{1.0, 0.0, 0.5};
  EXPECT_EQ(max_abs(riemann_from_spray(S, x, y)), 0.0);
  EXPECT_EQ(ricci(S, x, y), 0.0);
  EXPECT_EQ(max_abs(weyl(S, x, y)), 0.0);
  EXPECT_EQ(max_abs(douglas(S, x, y)), 0.0);
}

TEST(Spray, SphereAlphaCurvatureThroughSprayPipeline) {
  const auto M = build(named_model("cfc-kropina", 3));
  const std::vector<double> x{0.2, 0.1, -0.3}, y{0.3, -0.4, 0.9};
  const auto S = alpha_spray(M.pair.alpha);
  const auto c = spray_curvature(S, x, y);
  // Constant curvature 1: Ric = (n-1) alpha^2, W = 0, D = 0.
  const double a = characteristic_scale(S, x, y);
  EXPECT_NEAR(c.ricci, 2.0 * a * a, 1e-11);
  EXPECT_LE(c.weyl_residual, 1e-9);
  EXPECT_LE(c.douglas_residual, 1e-9);
}

TEST(Spray, RiemannAnnihilatesDirection) {
  for (const auto& c : cases()) {
    const auto M = build(named_model(c.model, 3));
    const auto R = riemann_from_spray(spray(M.metric), c.x, c.y);
    for (int i = 0; i < 3; ++i) {
      double v = 0.0;
      for (int k = 0; k < 3; ++k) v += R(i, k) * c.y[k];
      EXPECT_LE(std::abs(v), 1e-9 * std::max(frobenius(R), 1.0)) << c.model;
    }
  }
}

TEST(Spray, ProjectiveShiftLeavesWeylAndDouglasInvariant) {
  for (const auto& c : cases()) {
    const auto M = build(named_model(c.model, 3));
    const auto S = spray(M.metric);
    const auto T = projective_shift(S, shift_factor);
    const auto a = spray_curvature(S, c.x, c.y);
    const auto b = spray_curvature(T, c.x, c.y);
    const double scale = std::max(frobenius(a.R), a.scale * a.scale);
    EXPECT_LE(frobenius(a.W - b.W) / scale, 1e-8) << c.model;
    const double dscale = std::max(frobenius(a.D), 1.0 / a.scale);
    EXPECT_LE(frobenius(a.D - b.D) / dscale, 1e-8) << c.model;
    // The Riemann curvature itself is not projectively invariant.
    EXPECT_GT(frobenius(a.R - b.R) / scale, 1e-3) << c.model;
  }
}

TEST(Spray, ZeroShiftIsIdentity) {
  const auto M = build(named_model("cfc-kropina", 3));
  const auto S = spray(M.metric);
  const auto T = projective_shift(S, [](std::span<const Jet>, std::span<const Jet>) {
    return Jet(0.0);
  });
  const std::vector<double> x{0.2, 0.1, -0.3}, y{0.3, -0.4, 0.9};
  const auto g1 = spray_values(S, x, y), g2 = spray_values(T, x, y);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(g1[i], g2[i]);
}

TEST(Spray, HomogeneityDegrees) {
  const double l = 1.7;
  for (const auto& c : cases()) {
    const auto M = build(named_model(c.model, 3));
    const auto S = spray(M.metric);
    const auto ly = scaled(c.y, l);
    EXPECT_NEAR(metric_value(M.metric, c.x, ly), l * metric_value(M.metric, c.x, c.y),
                1e-12 * l * metric_value(M.metric, c.x, c.y));
    const auto g1 = fundamental_tensor(M.metric, c.x, c.y);
    const auto g2 = fundamental_tensor(M.metric, c.x, ly);
    EXPECT_LE(frobenius(g2 - g1), 1e-10 * frobenius(g1)) << c.model;
    const auto a = spray_curvature(S, c.x, c.y);
    const auto b = spray_curvature(S, c.x, ly);
    double gd = 0.0, gn = 0.0;
    for (int i = 0; i < 3; ++i) {
      gd = std::max(gd, std::abs(b.G[i] - l * l * a.G[i]));
      gn = std::max(gn, std::abs(b.G[i]));
    }
    EXPECT_LE(gd, 1e-10 * gn) << c.model;
    EXPECT_LE(frobenius(b.R - l * l * a.R), 1e-10 * frobenius(b.R)) << c.model;
    EXPECT_LE(frobenius(b.W - l * l * a.W), 1e-10 * std::max(frobenius(b.W), frobenius(b.R)))
        << c.model;
    EXPECT_LE(frobenius(b.D - (1.0 / l) * a.D), 1e-10 * std::max(frobenius(b.D), 1.0))
        << c.model;
  }
}

TEST(Spray, WeylNeedsThreeDimensions) {
  const auto M = build(named_model("minkowski-parallel", 2));
  const std::vector<double> x{0.1, 0.2}, y{1.0, 0.3};
  EXPECT_THROW(weyl(spray(M.metric), x, y), UnsupportedDimensionError);
  EXPECT_NO_THROW(douglas(spray(M.metric), x, y));
}

TEST(Spray, InsufficientJetOrderFailsFast) {
  const auto M = build(named_model("cfc-kropina", 3));
  const std::vector<double> x{0.2, 0.1, -0.3}, y{0.3, -0.4, 0.9};
  EXPECT_THROW(douglas(spray(M.metric), x, y, 5), ConfigError);
  EXPECT_NO_THROW(weyl(spray(M.metric), x, y, 5));
}

TEST(Spray, ConeViolationIsADomainError) {
  const auto M = build(named_model("cfc-kropina", 3));
  const std::vector<double> x{0.0, 0.0, 0.0}, y{0.0, 0.0, -1.0};
  EXPECT_THROW(spray_values(spray(M.metric), x, y), DomainError);
}
