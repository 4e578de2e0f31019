#include "finsler/finsler_metric.hpp"

#include <cmath>
#include <string>

#include "finsler/errors.hpp"

namespace finsler {

namespace {

std::string point_text(std::span<const double> x, std::span<const double> y) {
  auto fmt = [](std::span<const double> v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(v[i]);
    }
    return s + ")";
  };
  return "x = " + fmt(x) + ", y = " + fmt(y);
}

void require_admissible(const FinslerMetric& F, std::span<const double> x,
                        std::span<const double> y) {
  if (static_cast<int>(x.size()) != F.dim || static_cast<int>(y.size()) != F.dim) {
    throw ContractError(F.name + ": point dimension mismatch");
  }
  if (F.admissible && !F.admissible(x, y)) {
    throw DomainError(F.name + ": " + point_text(x, y) + " is outside the admissible cone");
  }
}

bool cholesky_ok(const SquareMatrix<double>& m) {
  const int n = m.dim();
  SquareMatrix<double> L(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double d = m(j, j);
    for (int k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (!(d > 0.0)) return false;
    L(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double v = m(i, j);
      for (int k = 0; k < j; ++k) v -= L(i, k) * L(j, k);
      L(i, j) = v / L(j, j);
    }
  }
  return true;
}

SquareMatrix<Jet> hessian_y(const Jet& F2, int n) {
  SquareMatrix<Jet> g(n);
  for (int i = 0; i < n; ++i) {
    const Jet Fy = F2.derivative(n + i);
    for (int j = i; j < n; ++j) {
      g(i, j) = 0.5 * Fy.derivative(n + j);
      g(j, i) = g(i, j);
    }
  }
  return g;
}

template <class M>
M invert_fundamental(const M& g, const std::string& name, std::span<const double> x,
                     std::span<const double> y) {
  try {
    return invert(g, name + " fundamental tensor g_ij");
  } catch (const SingularMatrixError& e) {
    throw DegenerateMetricError(std::string(e.what()) + " at " + point_text(x, y));
  }
}

}  // namespace

double metric_value(const FinslerMetric& F, std::span<const double> x, std::span<const double> y) {
  require_admissible(F, x, y);
  const auto s = seed(x, y, 1);
  std::span<const Jet> xs(s.data(), F.dim), ys(s.data() + F.dim, F.dim);
  return F.F(xs, ys).value();
}

SquareMatrix<double> fundamental_tensor(const FinslerMetric& F, std::span<const double> x,
                                        std::span<const double> y) {
  require_admissible(F, x, y);
  const int n = F.dim;
  const auto s = seed(x, y, 2);
  std::span<const Jet> xs(s.data(), n), ys(s.data() + n, n);
  const Jet f = F.F(xs, ys);
  const auto g = values(hessian_y(f * f, n));
  if (F.require_positive_definite) {
    if (!cholesky_ok(g)) {
      throw DegenerateMetricError(F.name + ": fundamental tensor not positive definite at " +
                                  point_text(x, y));
    }
  } else {
    invert_fundamental(g, F.name, x, y);
  }
  return g;
}

Spray spray(const FinslerMetric& F) {
  Spray s;
  s.dim = F.dim;
  s.seed_overhead = 2;
  s.admissible = F.admissible;
  s.name = F.name + " spray";
  s.coefficients = [F](std::span<const double> x, std::span<const double> y, int order) {
    const int n = F.dim;
    const auto seeds = seed(x, y, order + 2);
    std::span<const Jet> xs(seeds.data(), n), ys(seeds.data() + n, n);
    const Jet f = F.F(xs, ys);
    const Jet F2 = f * f;
    const auto g = hessian_y(F2, n);
    const auto g_inv = invert_fundamental(g, F.name, x, y);
    std::vector<Jet> bracket(n);
    for (int l = 0; l < n; ++l) {
      const Jet Fy = F2.derivative(n + l);
      Jet b = -F2.derivative(l);
      for (int k = 0; k < n; ++k) b += Fy.derivative(k) * ys[k];
      bracket[l] = b.truncated(order);
    }
    std::vector<Jet> G(n);
    for (int i = 0; i < n; ++i) {
      Jet v(0.0);
      for (int l = 0; l < n; ++l) v += g_inv(i, l) * bracket[l];
      G[i] = 0.25 * v;
    }
    return G;
  };
  s.scale = [F](std::span<const double> x, std::span<const double> y) {
    return metric_value(F, x, y);
  };
  return s;
}

std::vector<double> spray_at(const FinslerMetric& F, std::span<const double> x,
                             std::span<const double> y) {
  return spray_values(spray(F), x, y);
}

double flag_curvature(const FinslerMetric& F, std::span<const double> x, std::span<const double> y,
                      int max_order) {
  if (F.dim < 2) throw UnsupportedDimensionError(F.name + ": flag curvature needs n >= 2");
  const double f = metric_value(F, x, y);
  if (!(f > 0.0)) throw DomainError(F.name + ": F <= 0 at " + point_text(x, y));
  return ricci(spray(F), x, y, max_order) / ((F.dim - 1) * f * f);
}

namespace {

double sfc_from(const SquareMatrix<double>& R, const SquareMatrix<double>& g, double f,
                std::span<const double> y) {
  const int n = R.dim();
  double ric = 0.0;
  for (int m = 0; m < n; ++m) ric += R(m, m);
  const double K = ric / ((n - 1) * f * f);
  SquareMatrix<double> diff = R;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double yk = 0.0;
      for (int l = 0; l < n; ++l) yk += g(k, l) * y[l];
      diff(i, k) -= K * ((i == k ? f * f : 0.0) - y[i] * yk);
    }
  return frobenius(diff) / std::max(frobenius(R), f * f);
}

}  // namespace

double sfc_residual(const FinslerMetric& F, std::span<const double> x, std::span<const double> y,
                    int max_order) {
  const auto R = riemann_from_spray(spray(F), x, y, max_order);
  return sfc_from(R, fundamental_tensor(F, x, y), metric_value(F, x, y), y);
}

double projective_factor_residual(const FinslerMetric& F, std::span<const double> x,
                                  std::span<const double> y) {
  const auto G = spray_at(F, x, y);
  double gy = 0.0, yy = 0.0, gg = 0.0;
  for (int i = 0; i < F.dim; ++i) {
    gy += G[i] * y[i];
    yy += y[i] * y[i];
    gg += G[i] * G[i];
  }
  if (gg == 0.0) return 0.0;
  const double P = gy / yy;
  double rr = 0.0;
  for (int i = 0; i < F.dim; ++i) rr += (G[i] - P * y[i]) * (G[i] - P * y[i]);
  return std::sqrt(rr / gg);
}

double relative_gap(double value, double reference) {
  const double d = std::abs(value - reference);
  return reference == 0.0 ? d : d / std::abs(reference);
}

CurvatureBundle curvature_bundle(const FinslerMetric& F, std::span<const double> x,
                                 std::span<const double> y, int max_order) {
  CurvatureBundle b;
  b.F = metric_value(F, x, y);
  b.g = fundamental_tensor(F, x, y);
  const auto c = spray_curvature(spray(F), x, y, max_order);
  b.G = c.G;
  b.R = c.R;
  b.ricci = c.ricci;
  b.K = c.ricci / ((F.dim - 1) * b.F * b.F);
  b.weyl_norm = c.W.dim() ? frobenius(c.W) : 0.0;
  b.douglas_norm = frobenius(c.D);
  b.weyl_residual = c.weyl_residual;
  b.douglas_residual = c.douglas_residual;
  b.sfc_residual = sfc_from(c.R, b.g, b.F, y);
  double gyy = 0.0;
  for (int i = 0; i < F.dim; ++i)
    for (int j = 0; j < F.dim; ++j) gyy += b.g(i, j) * y[i] * y[j];
  b.euler_residual = std::abs(gyy - b.F * b.F) / (b.F * b.F);
  return b;
}

}  // namespace finsler
