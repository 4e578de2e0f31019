#include "finsler/riemann.hpp"

#include <cmath>
#include <string>

#include "finsler/errors.hpp"

namespace finsler {

void require_in_domain(const RiemannianMetric& g, std::span<const double> x) {
  if (static_cast<int>(x.size()) != g.dim) {
    throw ContractError(g.name + ": point has dimension " + std::to_string(x.size()) +
                        ", metric has " + std::to_string(g.dim));
  }
  if (g.domain && !g.domain(x)) throw DomainError(g.name + ": point outside the chart domain");
}

Tensor<Jet, 3> christoffel_jets(const SquareMatrix<Jet>& a, const SquareMatrix<Jet>& a_inv) {
  const int n = a.dim();
  const int order = a[0].order() - 1;
  Tensor<Jet, 3> da(n);  // da(l, k, j) = d a_lk / dx^j
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k) {
      const Jet d = a(l, k);
      for (int j = 0; j < n; ++j) da(l, k, j) = d.derivative(j);
    }
  Tensor<Jet, 3> lowered(n);  // Gamma_ljk
  for (int l = 0; l < n; ++l)
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) {
        lowered(l, j, k) = 0.5 * (da(l, k, j) + da(l, j, k) - da(j, k, l));
        lowered(l, k, j) = lowered(l, j, k);
      }
  Tensor<Jet, 3> gamma(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) {
        Jet s(0.0);
        for (int l = 0; l < n; ++l) s += a_inv(i, l).truncated(order) * lowered(l, j, k);
        gamma(i, j, k) = s;
        gamma(i, k, j) = s;
      }
  return gamma;
}

Tensor<double, 3> christoffel(const RiemannianMetric& g, std::span<const double> x) {
  require_in_domain(g, x);
  const auto xs = seed_x(x, 1);
  const auto a = g.a(xs);
  return values(christoffel_jets(a, invert(a, g.name + " metric a_ij")));
}

Spray alpha_spray(const RiemannianMetric& g) {
  Spray s;
  s.dim = g.dim;
  s.seed_overhead = 1;
  s.name = g.name + " spray";
  s.coefficients = [g](std::span<const double> x, std::span<const double> y, int order) {
    require_in_domain(g, x);
    const int n = g.dim;
    const auto seeds = seed(x, y, order + 1);
    std::span<const Jet> xs(seeds.data(), n);
    const auto a = g.a(xs);
    const auto gamma = christoffel_jets(a, invert(a, g.name + " metric a_ij"));
    std::vector<Jet> G(n, Jet(0.0));
    for (int i = 0; i < n; ++i) {
      Jet sum(0.0);
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) sum += gamma(i, j, k) * seeds[n + j] * seeds[n + k];
      G[i] = (0.5 * sum).truncated(order);
    }
    return G;
  };
  s.scale = [g](std::span<const double> x, std::span<const double> y) {
    const auto a = values(g.a(seed_x(x, 0)));
    return alpha_norm(a, y);
  };
  return s;
}

double alpha_norm(const SquareMatrix<double>& a, std::span<const double> y) {
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) s += a(i, j) * y[i] * y[j];
  return std::sqrt(s);
}

SquareMatrix<double> riemann_curvature_alpha(const RiemannianMetric& g, std::span<const double> x,
                                             std::span<const double> y) {
  return riemann_from_spray(alpha_spray(g), x, y);
}

Tensor<double, 4> riemann_tensor_alpha(const RiemannianMetric& g, std::span<const double> x) {
  const int n = g.dim;
  // R^i_k is quadratic in y, so its y-Hessian does not depend on y.
  std::vector<double> y(n, 1.0);
  const auto spray = alpha_spray(g);
  const auto G = spray_jets(spray, x, y, 4);
  const auto R = riemann_jets(G, x, y);
  Tensor<double, 4> out(n, 0.0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          out(j, i, k, l) = (R(i, k).partial({n + j, n + l}) - R(i, l).partial({n + j, n + k})) / 3.0;
        }
  return out;
}

SectionalFit sectional_fit(const SquareMatrix<double>& R, const SquareMatrix<double>& a,
                           std::span<const double> y) {
  const int n = R.dim();
  const double alpha = alpha_norm(a, y);
  SquareMatrix<double> P(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double yk = 0.0;
      for (int l = 0; l < n; ++l) yk += a(k, l) * y[l];
      P(i, k) = (i == k ? alpha * alpha : 0.0) - y[i] * yk;
    }
  double pp = 0.0, rp = 0.0;
  for (std::size_t e = 0; e < P.size(); ++e) {
    pp += P[e] * P[e];
    rp += R[e] * P[e];
  }
  SectionalFit fit;
  fit.lambda = pp > 0.0 ? rp / pp : 0.0;
  fit.residual = frobenius(R - fit.lambda * P) / (frobenius(R) + alpha * alpha);
  return fit;
}

SectionalFit sectional_constancy_residual(const RiemannianMetric& g, std::span<const double> x,
                                          std::span<const double> y) {
  const auto R = riemann_curvature_alpha(g, x, y);
  const auto a = values(g.a(seed_x(x, 0)));
  return sectional_fit(R, a, y);
}

Vector<Jet> covariant_derivative(const Jet& f, int dim) {
  const int n = dim;
  Vector<Jet> out(n);
  for (int k = 0; k < n; ++k) out(k) = f.derivative(k);
  return out;
}

SquareMatrix<Jet> covariant_derivative(const Vector<Jet>& T, const Tensor<Jet, 3>& gamma) {
  const int n = T.dim();
  SquareMatrix<Jet> out(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      Jet d = T(i).derivative(k);
      for (int l = 0; l < n; ++l) d -= gamma(l, i, k) * T(l);
      out(i, k) = d;
    }
  return out;
}

Tensor<Jet, 3> covariant_derivative(const SquareMatrix<Jet>& T, const Tensor<Jet, 3>& gamma) {
  const int n = T.dim();
  Tensor<Jet, 3> out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Jet d = T(i, j).derivative(k);
        for (int l = 0; l < n; ++l) d -= gamma(l, i, k) * T(l, j) + gamma(l, j, k) * T(i, l);
        out(i, j, k) = d;
      }
  return out;
}

SquareMatrix<double> covariant_derivative(const RiemannianMetric& g, const CovectorField& T,
                                          std::span<const double> x) {
  require_in_domain(g, x);
  const auto xs = seed_x(x, 1);
  const auto a = g.a(xs);
  const auto gamma = christoffel_jets(a, invert(a, g.name + " metric a_ij"));
  return values(covariant_derivative(T(xs), gamma));
}

Tensor<double, 3> covariant_derivative(const RiemannianMetric& g, const MetricField& T,
                                       std::span<const double> x) {
  require_in_domain(g, x);
  const auto xs = seed_x(x, 1);
  const auto a = g.a(xs);
  const auto gamma = christoffel_jets(a, invert(a, g.name + " metric a_ij"));
  return values(covariant_derivative(T(xs), gamma));
}

}  // namespace finsler
