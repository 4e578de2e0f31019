#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "finsler/errors.hpp"
#include "finsler/harness.hpp"
#include "finsler/kropina.hpp"
#include "finsler/models.hpp"

using namespace finsler;

namespace {

MetricModel model(const std::string& name, nlohmann::json params = nlohmann::json::object()) {
  auto spec = named_model(name, 3);
  for (auto& [k, v] : params.items()) spec.params[k] = v;
  return build(spec);
}

double alpha_of(const MKropinaMetric& M, std::span<const double> x, std::span<const double> y) {
  std::vector<Jet> xj(x.begin(), x.end());
  return alpha_norm(values(M.alpha.a(xj)), y);
}

double beta_of(const MKropinaMetric& M, std::span<const double> x, std::span<const double> y) {
  std::vector<Jet> xj(x.begin(), x.end());
  const auto b = values(M.beta.b(xj));
  double v = 0.0;
  for (int i = 0; i < b.dim(); ++i) v += b(i) * y[i];
  return v;
}

}  // namespace

TEST(ClosedFormSpray, MatchesAutodiffOnCatalog) {
  for (const auto& [name, params] :
       std::vector<std::pair<std::string, nlohmann::json>>{
           {"minkowski-parallel", {}},
           {"minkowski-conformal", {}},
           {"minkowski-conformal", {{"m", -0.5}}},
           {"cfc-kropina", {}},
           {"cfc-perturbed", {}},
           {"warped-kropina", {}},
           {"warped-kropina", {{"h", "cosh"}}},
           {"warped-nonflat", {}},
           {"projflat-eta", {}},
           {"conformal-perturbed", {}}}) {
    const auto M = model(name, params);
    const auto r = compare_sprays(M, sample(M, 42, 20));
    EXPECT_EQ(r.n_errors, 0) << name;
    EXPECT_LE(r.max, 1e-9) << name << " " << params.dump();
  }
}

TEST(ClosedFormSpray, ParallelFlatReducesToZero) {
  const auto M = model("minkowski-parallel");
  const auto G = spray_closed_form(M.pair, std::vector<double>{0.1, 0.2, 0.3},
                                   std::vector<double>{1.0, 0.1, 0.2});
  for (double g : G) EXPECT_EQ(g, 0.0);
}

TEST(ClosedFormSpray, NearConeBoundary) {
  // Bisect along a segment of directions to land at beta/alpha = 0.11.
  const auto M = model("cfc-kropina");
  const std::vector<double> x{0.1, -0.2, 0.15};
  std::vector<double> lo{0.0, 1.0, 0.0}, hi{0.0, 0.0, 1.0};
  auto s_of = [&](const std::vector<double>& y) { return beta_of(M.pair, x, y) / alpha_of(M.pair, x, y); };
  ASSERT_LT(s_of(lo), 0.11);
  ASSERT_GT(s_of(hi), 0.11);
  std::vector<double> y(3);
  for (int it = 0; it < 80; ++it) {
    for (int i = 0; i < 3; ++i) y[i] = 0.5 * (lo[i] + hi[i]);
    (s_of(y) < 0.11 ? lo : hi) = y;
  }
  ASSERT_NEAR(s_of(y), 0.11, 1e-9);
  EXPECT_LE(spray_discrepancy(M.pair, x, y), 1e-8);
}

TEST(ClosedFormSpray, OutsideConeIsADomainError) {
  const auto M = model("cfc-kropina");
  const std::vector<double> x{0.0, 0.0, 0.0}, y{1.0, 0.0, 0.05};
  EXPECT_FALSE(cone_violation(M.pair, x, y).empty());
  EXPECT_THROW(spray_values(spray_closed_form(M.pair), x, y), DomainError);
}

TEST(Deformation, UnitFormIsUnchanged) {
  const auto M = model("minkowski-parallel");
  const auto d = deform(M.pair, std::vector<double>{0.3, 0.1, 0.2});
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(d.b(i), i == 0 ? 1.0 : 0.0);
    for (int j = 0; j < 3; ++j) EXPECT_EQ(d.a(i, j), i == j ? 1.0 : 0.0);
  }
}

TEST(Deformation, ConformalPairRecoversMinkowskiData) {
  for (double m : {2.0, -0.5}) {
    const auto M = model("minkowski-conformal", {{"m", m}});
    for (const auto& s : sample(M, 9, 5).points) {
      const auto d = deform(M.pair, s.x);
      for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(d.b(i), i == 0 ? 1.0 : 0.0, 1e-10);
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(d.a(i, j), i == j ? 1.0 : 0.0, 1e-10);
      }
    }
  }
}

TEST(Deformation, PreservesFAndNormalizesBeta) {
  const auto M = model("conformal-perturbed");
  const auto D = deformed(M.pair);
  for (const auto& s : sample(M, 5, 10).points) {
    const double F = metric_value(M.pair, s.x, s.y);
    const double a = alpha_of(D, s.x, s.y), b = beta_of(D, s.x, s.y);
    EXPECT_NEAR(std::pow(a, 1.0 - M.pair.m) * std::pow(b, M.pair.m), F, 1e-12 * F);
    EXPECT_NEAR(b_squared(D, s.x), 1.0, 1e-12);
    // The deformed metric keeps the original cone.
    EXPECT_TRUE(in_cone(D, s.x, s.y));
  }
}

TEST(Randers, EuclideanUnitDirection) {
  const auto M = model("minkowski-parallel");
  const std::vector<double> x{0.0, 0.0, 0.0}, y{1.0, 0.0, 0.0};
  for (double bb : {0.3, 0.6, 0.9}) {
    const auto r = randers_from_kropina(M.pair, bb, x, y);
    EXPECT_NEAR(r.F_bar, 1.0 / (1.0 + bb), 1e-14);
    EXPECT_NEAR(r.alpha_bar, 1.0 / (1.0 - bb * bb), 1e-14);
  }
}

TEST(Randers, BetaBarHasNormBBar) {
  const auto M = model("cfc-kropina");
  for (double bb : {0.3, 0.6, 0.9}) {
    for (const auto& s : sample(M, 2, 10).points) {
      EXPECT_NEAR(randers_from_kropina(M.pair, bb, s.x, s.y).beta_bar_norm, bb, 1e-12);
    }
  }
}

TEST(Randers, ConvergesToHalfKropina) {
  const auto M = model("cfc-kropina");
  for (const auto& s : sample(M, 4, 10).points) {
    const double F = metric_value(M.pair, s.x, s.y);
    const auto r = randers_from_kropina(M.pair, 1.0 - 1e-6, s.x, s.y);
    EXPECT_LE(std::abs(r.F_bar - 0.5 * F), 1e-4 * F);
    double prev = INFINITY;
    for (double bb : {0.9, 0.99, 0.999}) {
      const double gap = std::abs(randers_from_kropina(M.pair, bb, s.x, s.y).F_bar - 0.5 * F);
      EXPECT_LT(gap, prev);
      prev = gap;
    }
  }
}

TEST(Randers, LiftIsPositiveAndAgreesWithData) {
  const auto M = model("cfc-kropina");
  const auto L = lift_to_randers(M, 0.5);
  for (const auto& s : sample(M, 8, 10).points) {
    const double f = metric_value(L.metric, s.x, s.y);
    EXPECT_GT(f, 0.0);
    EXPECT_NEAR(f, randers_from_kropina(M.pair, 0.5, s.x, s.y).F_bar, 1e-13 * f);
  }
}

TEST(Randers, ParameterChecks) {
  const auto M = model("cfc-kropina");
  const std::vector<double> x{0, 0, 0}, y{0.2, 0.1, 1.0};
  EXPECT_THROW(randers_from_kropina(M.pair, 1.0, x, y), ParameterError);
  EXPECT_THROW(randers_from_kropina(M.pair, 0.0, x, y), ParameterError);
  EXPECT_THROW(randers_from_kropina(model("minkowski-conformal").pair, 0.5, x, y), ParameterError);
  EXPECT_THROW(lift_to_randers(model("projflat-eta"), 0.5), ParameterError);
}

TEST(ScalarFlagCurvatureEquations, ConstantCurvatureModelWithLambdaOne) {
  const auto M = model("cfc-kropina");
  ThmResidualConfig cfg{ThmResidualConfig::LambdaMode::model_supplied, 1.0};
  for (const auto& s : sample(M, 21, 10).points) {
    const auto r = scalar_flag_curvature_residuals(M.pair, cfg, s.x, s.y);
    for (const char* k : {"t_relation", "covariant_s_relation", "q_relation",
                          "alpha_curvature_relation"}) {
      EXPECT_LE(r.at(k), 1e-7) << k;
    }
    const auto ls = scalar_flag_curvature_residuals(M.pair, ThmResidualConfig{}, s.x, s.y);
    EXPECT_NEAR(ls.at("lambda"), 1.0, 1e-8);
  }
}

TEST(ScalarFlagCurvatureEquations, WarpedModelWithLambdaFromWarp) {
  for (const char* h : {"exp", "cosh", "poly"}) {
    const auto M = model("warped-kropina", {{"h", h}});
    for (const auto& s : sample(M, 22, 10).points) {
      ThmResidualConfig cfg{ThmResidualConfig::LambdaMode::model_supplied,
                            M.expected.lambda(s.x)};
      const auto r = scalar_flag_curvature_residuals(M.pair, cfg, s.x, s.y);
      for (const char* k : {"t_relation", "covariant_s_relation", "q_relation",
                            "alpha_curvature_relation"}) {
        EXPECT_LE(r.at(k), 1e-7) << h << " " << k;
      }
    }
  }
}

TEST(ScalarFlagCurvatureEquations, PerturbedControlBreaksOne) {
  const auto M = model("cfc-perturbed");
  ThmResidualConfig cfg{ThmResidualConfig::LambdaMode::model_supplied, 1.0};
  double worst = 0.0;
  for (const auto& s : sample(M, 23, 10).points) {
    const auto r = scalar_flag_curvature_residuals(M.pair, cfg, s.x, s.y);
    for (const char* k : {"t_relation", "covariant_s_relation", "q_relation",
                          "alpha_curvature_relation"}) {
      worst = std::max(worst, r.at(k));
    }
  }
  EXPECT_GT(worst, 1e-3);
}

TEST(ScalarFlagCurvatureEquations, Preconditions) {
  const std::vector<double> x{0.1, 0.1, 0.1}, y{1.0, 0.1, 0.1};
  EXPECT_THROW(validate(ThmResidualConfig{ThmResidualConfig::LambdaMode::model_supplied, {}}),
               ConfigError);
  EXPECT_THROW(scalar_flag_curvature_residuals(model("minkowski-conformal").pair,
                                               ThmResidualConfig{}, x, y),
               ParameterError);
  // ||beta||_alpha != 1 before the deformation.
  EXPECT_THROW(scalar_flag_curvature_residuals(model("projflat-eta").pair, ThmResidualConfig{},
                                               x, y),
               ConstraintError);
  const auto two = build(named_model("minkowski-parallel", 2));
  EXPECT_THROW(scalar_flag_curvature_residuals(two.pair, ThmResidualConfig{},
                                               std::vector<double>{0.1, 0.1},
                                               std::vector<double>{1.0, 0.1}),
               UnsupportedDimensionError);
}

TEST(ProjectiveFlatnessEquations, WarpedAndEtaPass) {
  for (const char* name : {"warped-kropina", "projflat-eta"}) {
    const auto M = model(name);
    const auto U = unit_pair(M);
    for (const auto& s : sample(M, 24, 10).points) {
      ThmResidualConfig cfg;
      if (M.expected.lambda) cfg = {ThmResidualConfig::LambdaMode::model_supplied, M.expected.lambda(s.x)};
      const auto r = projective_flatness_residuals(U, cfg, s.x, s.y);
      for (const char* k : {"douglas_condition", "projective_q_relation", "alpha_curvature_relation"}) {
        EXPECT_LE(r.at(k), 1e-7) << name << " " << k;
      }
    }
  }
}

TEST(ProjectiveFlatnessEquations, ConstantCurvatureModelIsNotDouglas) {
  const auto M = model("cfc-kropina");
  for (const auto& s : sample(M, 25, 5).points) {
    ThmResidualConfig cfg{ThmResidualConfig::LambdaMode::model_supplied, 1.0};
    EXPECT_GT(projective_flatness_residuals(M.pair, cfg, s.x, s.y).at("douglas_condition"), 1e-3);
  }
}

TEST(Concircular, WarpedModelExtractsWarpData) {
  const auto M = model("warped-kropina", {{"h", "cosh"}});
  for (const auto& s : sample(M, 26, 10).points) {
    const auto r = concircular_residuals(M.pair, s.x, s.y);
    const double t = s.x[0];
    EXPECT_NEAR(r.at("epsilon"), std::tanh(t), 1e-9);
    EXPECT_NEAR(r.at("u"), 1.0 / (std::cosh(t) * std::cosh(t)), 1e-8);
    EXPECT_LE(r.at("concircular_relation"), 1e-7);
    EXPECT_LE(r.at("gradient_relation"), 1e-7);
    EXPECT_LE(r.at("concircular_curvature_relation"), 1e-7);
    EXPECT_LE(r.at("k_error"), 1e-8);
  }
}

TEST(Concircular, ParallelAndSphereBase) {
  const auto P = model("minkowski-parallel");
  const auto r = concircular_residuals(P.pair, std::vector<double>{0.2, 0.1, 0.0},
                                       std::vector<double>{1.0, 0.3, 0.2});
  EXPECT_NEAR(r.at("epsilon"), 0.0, 1e-14);
  EXPECT_NEAR(r.at("u"), 0.0, 1e-14);
  EXPECT_NEAR(r.at("k_measured"), 0.0, 1e-14);
  const auto S = model("warped-nonflat");
  double worst = 0.0;
  for (const auto& s : sample(S, 27, 10).points) {
    worst = std::max(worst, concircular_residuals(S.pair, s.x, s.y).at("concircular_curvature_relation"));
  }
  EXPECT_GT(worst, 1e-3);
  const auto C = model("cfc-kropina");
  EXPECT_THROW(concircular_residuals(C.pair, std::vector<double>{0.1, 0.1, 0.1},
                                     std::vector<double>{0.1, 0.2, 1.0}),
               StructureError);
}

TEST(KropinaFlagCurvatureFormula, ClosedFormsAndChain) {
  const auto C = model("cfc-kropina");
  for (const auto& s : sample(C, 28, 10).points) {
    const double K = kropina_flag_curvature(C.pair, s.x, s.y, 1.0);
    EXPECT_NEAR(K, 0.25, 1e-8);
    // Constant K chain: K = -t^l_l / (4(n-1)) = lambda / 4.
    const auto ap = apparatus(C.pair.alpha, C.pair.beta, s.x);
    EXPECT_NEAR(-ap.t_trace / 8.0, 0.25, 1e-10);
    EXPECT_NEAR(K, -ap.t_trace / 8.0, 1e-8);
  }
  const auto P = model("minkowski-parallel");
  EXPECT_EQ(kropina_flag_curvature(P.pair, std::vector<double>{0.1, 0.2, 0.3},
                                   std::vector<double>{1.0, 0.1, 0.1}, 0.0),
            0.0);
  const auto W = model("warped-kropina");
  for (const auto& s : sample(W, 29, 10).points) {
    const double K = kropina_flag_curvature(W.pair, s.x, s.y, W.expected.lambda(s.x));
    const double ref = W.expected.K(s.x, s.y);
    EXPECT_LE(relative_gap(K, ref), 1e-8);
  }
}

TEST(Rigidity, ConformalFamilyIsTrivial) {
  for (double m : {2.0, -0.5, 3.0}) {
    const auto M = model("minkowski-conformal", {{"m", m}});
    for (const auto& s : sample(M, 30, 5).points) {
      const auto r = mkropina_rigidity_residuals(M.pair, s.x);
      EXPECT_LE(std::abs(r.at("tau")), 1e-9) << m;
      EXPECT_LE(r.at("r_form_relation"), 1e-9) << m;
      EXPECT_LE(r.at("trace_relation"), 1e-9) << m;
    }
  }
}

TEST(Rigidity, NonConformalFormFails) {
  const auto M = model("conformal-perturbed");
  double worst = 0.0;
  for (const auto& s : sample(M, 31, 10).points) {
    worst = std::max(worst, mkropina_rigidity_residuals(M.pair, s.x).at("r_form_relation"));
  }
  EXPECT_GT(worst, 1e-3);
  EXPECT_THROW(mkropina_rigidity_residuals(model("cfc-kropina").pair, std::vector<double>{0, 0, 0}),
               ParameterError);
}

TEST(MKropina, ExponentValidation) {
  auto M = model("minkowski-parallel").pair;
  M.m = 0.0;
  EXPECT_THROW(validate(M), ParameterError);
  M.m = 1.0;
  EXPECT_THROW(validate(M), ParameterError);
  M.m = NAN;
  EXPECT_THROW(validate(M), ParameterError);
}
