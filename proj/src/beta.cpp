#include "finsler/beta.hpp"

#include <algorithm>
#include <cmath>

namespace finsler {

BetaJets beta_jets(const RiemannianMetric& alpha, const OneForm& beta, std::span<const Jet> x) {
  BetaJets j;
  j.a = alpha.a(x);
  j.a_inv = invert(j.a, alpha.name + " metric a_ij");
  j.b = beta.b(x);
  j.gamma = christoffel_jets(j.a, j.a_inv);
  j.db = covariant_derivative(j.b, j.gamma);
  return j;
}

BetaApparatus apparatus(const RiemannianMetric& alpha, const OneForm& beta,
                        std::span<const double> x) {
  require_in_domain(alpha, x);
  const int n = alpha.dim;
  const auto xs = seed_x(x, 2);
  const auto J = beta_jets(alpha, beta, xs);

  SquareMatrix<Jet> rj(n), sj(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      rj(i, k) = 0.5 * (J.db(i, k) + J.db(k, i));
      sj(i, k) = 0.5 * (J.db(i, k) - J.db(k, i));
    }
  Vector<Jet> b_up_j(n), s_low_j(n);
  for (int i = 0; i < n; ++i) {
    Jet v(0.0);
    for (int k = 0; k < n; ++k) v += J.a_inv(i, k) * J.b(k);
    b_up_j(i) = v.truncated(1);
  }
  for (int k = 0; k < n; ++k) {
    Jet v(0.0);
    for (int i = 0; i < n; ++i) v += b_up_j(i) * sj(i, k);
    s_low_j(k) = v;
  }

  BetaApparatus ap;
  ap.n = n;
  ap.a = values(J.a);
  ap.a_inv = values(J.a_inv);
  ap.b_lower = values(J.b);
  ap.b_upper = values(b_up_j);
  ap.db = values(J.db);
  ap.r = values(rj);
  ap.s = values(sj);
  ap.r_cov = values(covariant_derivative(rj, J.gamma));
  ap.s_cov = values(covariant_derivative(sj, J.gamma));
  ap.s_i_cov = values(covariant_derivative(s_low_j, J.gamma));

  for (int i = 0; i < n; ++i) ap.b2 += ap.b_upper(i) * ap.b_lower(i);

  ap.r_up = SquareMatrix<double>(n, 0.0);
  ap.s_up = SquareMatrix<double>(n, 0.0);
  ap.q = SquareMatrix<double>(n, 0.0);
  ap.t = SquareMatrix<double>(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        ap.r_up(i, j) += ap.a_inv(i, k) * ap.r(k, j);
        ap.s_up(i, j) += ap.a_inv(i, k) * ap.s(k, j);
      }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        ap.q(i, j) += ap.r(i, k) * ap.s_up(k, j);
        ap.t(i, j) += ap.s(i, k) * ap.s_up(k, j);
      }

  ap.r_i = Vector<double>(n, 0.0);
  ap.s_i = Vector<double>(n, 0.0);
  ap.q_i = Vector<double>(n, 0.0);
  ap.t_i = Vector<double>(n, 0.0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      ap.r_i(j) += ap.b_upper(i) * ap.r(i, j);
      ap.s_i(j) += ap.b_upper(i) * ap.s(i, j);
      ap.q_i(j) += ap.b_upper(i) * ap.q(i, j);
      ap.t_i(j) += ap.b_upper(i) * ap.t(i, j);
    }
  for (int i = 0; i < n; ++i) {
    ap.r_scalar += ap.b_upper(i) * ap.r_i(i);
    ap.t_scalar += ap.b_upper(i) * ap.t_i(i);
    ap.r_trace += ap.r_up(i, i);
    for (int k = 0; k < n; ++k) {
      ap.t_trace += ap.a_inv(i, k) * ap.t(k, i);
      ap.s_sq += ap.a_inv(i, k) * ap.s_i(i) * ap.s_i(k);
    }
  }
  return ap;
}

double BetaApparatus::beta(std::span<const double> y) const {
  double v = 0.0;
  for (int i = 0; i < n; ++i) v += b_lower(i) * y[i];
  return v;
}

double BetaApparatus::alpha(std::span<const double> y) const { return alpha_norm(a, y); }

double BetaApparatus::r00(std::span<const double> y) const {
  double v = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v += r(i, j) * y[i] * y[j];
  return v;
}

double BetaApparatus::s0(std::span<const double> y) const {
  double v = 0.0;
  for (int i = 0; i < n; ++i) v += s_i(i) * y[i];
  return v;
}

double BetaApparatus::q00(std::span<const double> y) const {
  double v = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v += q(i, j) * y[i] * y[j];
  return v;
}

double BetaApparatus::r00_0(std::span<const double> y) const {
  double v = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) v += r_cov(i, j, k) * y[i] * y[j] * y[k];
  return v;
}

double BetaApparatus::radial_r_defect(std::span<const double> y) const {
  double v = 0.0;
  for (int l = 0; l < n; ++l)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        v += b_upper(l) * (r_cov(l, j, k) - r_cov(j, k, l)) * y[j] * y[k];
      }
  return v;
}

Vector<double> BetaApparatus::lower(std::span<const double> y) const {
  Vector<double> out(n, 0.0);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) out(k) += a(k, l) * y[l];
  return out;
}

double closedness_defect(const RiemannianMetric& alpha, const OneForm& beta,
                         std::span<const double> x) {
  require_in_domain(alpha, x);
  const auto xs = seed_x(x, 1);
  const auto J = beta_jets(alpha, beta, xs);
  double m = 0.0;
  for (int i = 0; i < alpha.dim; ++i)
    for (int j = 0; j < alpha.dim; ++j) {
      m = std::max(m, 0.5 * std::abs(J.db(i, j).value() - J.db(j, i).value()));
    }
  return m;
}

ClosednessWitness closedness_witness(const BetaApparatus& ap) {
  return {max_abs(ap.t), std::abs(ap.t_trace), max_abs(ap.s)};
}

double ricci_identity_residual(const RiemannianMetric& alpha, const OneForm& beta,
                               std::span<const double> x) {
  const auto ap = apparatus(alpha, beta, x);
  const auto Rt = riemann_tensor_alpha(alpha, x);
  const int n = ap.n;
  double worst = 0.0, peak = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double bR = 0.0;
        for (int l = 0; l < n; ++l) bR += ap.b_lower(l) * Rt(k, l, i, j);
        const double rhs = ap.r_cov(i, k, j) - ap.r_cov(j, k, i) - bR;
        worst = std::max(worst, std::abs(ap.s_cov(i, j, k) - rhs));
        peak = std::max({peak, std::abs(ap.s_cov(i, j, k)), std::abs(ap.r_cov(i, k, j)),
                         std::abs(ap.r_cov(j, k, i)), std::abs(bR)});
      }
  return worst / std::max(1.0, peak);
}

}  // namespace finsler
