#include "finsler/spray.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "finsler/errors.hpp"

namespace finsler {

namespace {

std::string describe(std::span<const double> v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

std::vector<Jet> y_seeds(const JetSpace& space, int order, std::span<const double> y) {
  const int n = static_cast<int>(y.size());
  std::vector<Jet> out;
  out.reserve(n);
  for (int j = 0; j < n; ++j) out.push_back(Jet::variable(space, order, n + j, y[j]));
  return out;
}

SquareMatrix<double> weyl_from_riemann(const SquareMatrix<Jet>& R, std::span<const double> y) {
  const int n = R.dim();
  if (R[0].order() < 1) throw ContractError("weyl: Riemann jets must carry first y-derivatives");
  Jet ric(0.0);
  for (int m = 0; m < n; ++m) ric += R(m, m);
  const Jet mean = ric * (1.0 / (n - 1));
  SquareMatrix<Jet> A = R;
  for (int i = 0; i < n; ++i) A(i, i) -= mean;
  SquareMatrix<double> W(n, 0.0);
  for (int k = 0; k < n; ++k) {
    double div = 0.0;
    for (int m = 0; m < n; ++m) div += A(m, k).partial({n + m});
    for (int i = 0; i < n; ++i) W(i, k) = A(i, k).value() - div * y[i] / (n + 1);
  }
  return W;
}

struct DouglasParts {
  Tensor<double, 4> D;
  Tensor<double, 4> third;  // d^3 G^i / dy^h dy^j dy^k stored (h, i, j, k)
};

DouglasParts douglas_from_spray_jets(std::span<const Jet> G, std::span<const double> y) {
  const int n = static_cast<int>(y.size());
  if (G[0].order() < 4) throw ContractError("douglas: spray jets must be of order >= 4");
  const auto& space = *G[0].space();
  const int order = G[0].order();
  const auto ys = y_seeds(space, order, y);
  Jet trace(0.0);
  for (int m = 0; m < n; ++m) trace += G[m].derivative(n + m);
  DouglasParts out{Tensor<double, 4>(n, 0.0), Tensor<double, 4>(n, 0.0)};
  for (int i = 0; i < n; ++i) {
    const Jet H = G[i] - trace * ys[i] * (1.0 / (n + 1));
    for (int h = 0; h < n; ++h)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          out.D(h, i, j, k) = H.partial({n + h, n + j, n + k});
          out.third(h, i, j, k) = G[i].partial({n + h, n + j, n + k});
        }
  }
  return out;
}

}  // namespace

void require_admissible(const Spray& spray, std::span<const double> x,
                        std::span<const double> y) {
  if (static_cast<int>(x.size()) != spray.dim || static_cast<int>(y.size()) != spray.dim) {
    throw ContractError(spray.name + ": point dimension does not match spray dimension " +
                        std::to_string(spray.dim));
  }
  bool nonzero = false;
  for (double v : y) nonzero = nonzero || v != 0.0;
  if (!nonzero) throw DomainError(spray.name + ": y = 0 is not admissible");
  if (spray.admissible && !spray.admissible(x, y)) {
    throw DomainError(spray.name + ": (x, y) = " + describe(x) + ", " + describe(y) +
                      " is outside the admissible cone");
  }
}

double characteristic_scale(const Spray& spray, std::span<const double> x,
                            std::span<const double> y) {
  if (spray.scale) return spray.scale(x, y);
  double s = 0.0;
  for (double v : y) s += v * v;
  return std::sqrt(s);
}

std::vector<Jet> spray_jets(const Spray& spray, std::span<const double> x,
                            std::span<const double> y, int order, int max_order) {
  if (order + spray.seed_overhead > max_order) {
    throw ConfigError(spray.name + ": needs jet order " +
                      std::to_string(order + spray.seed_overhead) + " but the cap is " +
                      std::to_string(max_order));
  }
  require_admissible(spray, x, y);
  auto G = spray.coefficients(x, y, order);
  if (static_cast<int>(G.size()) != spray.dim) {
    throw ContractError(spray.name + ": coefficient function returned wrong dimension");
  }
  // Polynomial sprays may return constants; lift them into the seed space so
  // every downstream derivative is well defined.
  const auto& space = JetSpace::get(2 * spray.dim);
  for (auto& g : G) {
    if (g.is_constant()) g = Jet(space, order, g.value());
    else g = g.truncated(order);
  }
  return G;
}

std::vector<double> spray_values(const Spray& spray, std::span<const double> x,
                                 std::span<const double> y) {
  const auto G = spray_jets(spray, x, y, 0);
  std::vector<double> out;
  out.reserve(G.size());
  for (const auto& g : G) out.push_back(g.value());
  return out;
}

SquareMatrix<Jet> riemann_jets(std::span<const Jet> G, std::span<const double> x,
                               std::span<const double> y) {
  const int n = static_cast<int>(x.size());
  const int order = G[0].order();
  if (order < 2) throw ContractError("riemann: spray jets must be of order >= 2");
  const auto& space = *G[0].space();
  const auto ys = y_seeds(space, order, y);

  Tensor<Jet, 2> Gy(n), Gx(n);
  Tensor<Jet, 3> Gxy(n), Gyy(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Gy(i, j) = G[i].derivative(n + j);
      Gx(i, j) = G[i].derivative(j);
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Gxy(i, j, k) = Gx(i, j).derivative(n + k);
        Gyy(i, j, k) = Gy(i, j).derivative(n + k);
      }

  SquareMatrix<Jet> R(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      Jet r = 2.0 * Gx(i, k);
      for (int j = 0; j < n; ++j) {
        r -= ys[j] * Gxy(i, j, k);
        r += 2.0 * G[j] * Gyy(i, j, k);
        r -= Gy(i, j) * Gy(j, k);
      }
      R(i, k) = r.truncated(order - 2);
    }
  return R;
}

SquareMatrix<double> riemann_from_spray(const Spray& spray, std::span<const double> x,
                                        std::span<const double> y, int max_order) {
  const auto G = spray_jets(spray, x, y, 2, max_order);
  return values(riemann_jets(G, x, y));
}

double ricci(const Spray& spray, std::span<const double> x, std::span<const double> y,
             int max_order) {
  const auto R = riemann_from_spray(spray, x, y, max_order);
  double ric = 0.0;
  for (int m = 0; m < R.dim(); ++m) ric += R(m, m);
  return ric;
}

SquareMatrix<double> weyl(const Spray& spray, std::span<const double> x,
                          std::span<const double> y, int max_order) {
  if (spray.dim < 3) {
    throw UnsupportedDimensionError(spray.name + ": Weyl curvature needs n >= 3");
  }
  const auto G = spray_jets(spray, x, y, 3, max_order);
  return weyl_from_riemann(riemann_jets(G, x, y), y);
}

Tensor<double, 4> douglas(const Spray& spray, std::span<const double> x,
                          std::span<const double> y, int max_order) {
  if (spray.dim < 2) throw UnsupportedDimensionError(spray.name + ": Douglas curvature needs n >= 2");
  const auto G = spray_jets(spray, x, y, 4, max_order);
  return douglas_from_spray_jets(G, y).D;
}

double weyl_residual_norm(const SquareMatrix<double>& W, const SquareMatrix<double>& R,
                          double scale) {
  return frobenius(W) / std::max(frobenius(R), scale * scale);
}

double douglas_residual_norm(const Tensor<double, 4>& D, const Tensor<double, 4>& third,
                             double scale) {
  // D is homogeneous of degree -1, so D * F is scale free.
  return frobenius(D) * scale / std::max(1.0, frobenius(third) * scale);
}

ProjectiveResidual projective_flatness_residual(const Spray& spray, std::span<const double> x,
                                                std::span<const double> y, int max_order) {
  const auto c = spray_curvature(spray, x, y, max_order);
  if (spray.dim < 3) {
    throw UnsupportedDimensionError(spray.name + ": projective flatness criterion needs n >= 3");
  }
  return {c.weyl_residual, c.douglas_residual};
}

Spray projective_shift(const Spray& spray, JetScalarField factor) {
  Spray out = spray;
  out.name = spray.name + "+P";
  out.coefficients = [inner = spray.coefficients, factor = std::move(factor), n = spray.dim](
                         std::span<const double> x, std::span<const double> y, int order) {
    auto G = inner(x, y, order);
    const auto s = seed(x, y, std::max(order, 1));
    std::span<const Jet> sx(s.data(), n), sy(s.data() + n, n);
    const Jet P = factor(sx, sy).truncated(order);
    for (int i = 0; i < n; ++i) G[i] = G[i] + P * sy[i].truncated(order);
    return G;
  };
  return out;
}

SprayCurvature spray_curvature(const Spray& spray, std::span<const double> x,
                               std::span<const double> y, int max_order) {
  const int n = spray.dim;
  const auto G = spray_jets(spray, x, y, 4, max_order);
  const auto Rj = riemann_jets(G, x, y);
  SprayCurvature out;
  out.G.reserve(n);
  for (const auto& g : G) out.G.push_back(g.value());
  out.R = values(Rj);
  for (int m = 0; m < n; ++m) out.ricci += out.R(m, m);
  out.scale = characteristic_scale(spray, x, y);
  if (n >= 3) {
    out.W = weyl_from_riemann(Rj, y);
    out.weyl_residual = weyl_residual_norm(out.W, out.R, out.scale);
  }
  const auto parts = douglas_from_spray_jets(G, y);
  out.D = parts.D;
  out.douglas_residual = douglas_residual_norm(parts.D, parts.third, out.scale);
  return out;
}

}  // namespace finsler
