#pragma once

// Covariant quantities of a 1-form beta = b_i y^i relative to alpha.
//
//   b_{i|j}  covariant derivative of b_i along alpha
//   r_ij = (b_{i|j} + b_{j|i}) / 2      s_ij = (b_{i|j} - b_{j|i}) / 2
//   r^i_j = a^ik r_kj                   s^i_j = a^ik s_kj
//   q_ij = r_ik s^k_j                   t_ij = s_ik s^k_j
//   r_j = b^i r_ij   s_j = b^i s_ij   q_j = b^i q_ij   t_j = b^i t_ij
//   r = b^i r_i      t = b^i t_i
//
// A trailing 0 index means contraction with y, e.g. r_00 = r_ij y^i y^j.

#include <span>

#include "finsler/riemann.hpp"
#include "finsler/tensor.hpp"

namespace finsler {

// Jet-level building blocks at one chart point, all over the same x-jets.
struct BetaJets {
  SquareMatrix<Jet> a;
  SquareMatrix<Jet> a_inv;
  Vector<Jet> b;
  Tensor<Jet, 3> gamma;
  SquareMatrix<Jet> db;  // b_{i|j}, one order below a
};

BetaJets beta_jets(const RiemannianMetric& alpha, const OneForm& beta, std::span<const Jet> x);

struct BetaApparatus {
  int n = 0;
  double b2 = 0.0;
  Vector<double> b_lower, b_upper;
  SquareMatrix<double> a, a_inv;
  SquareMatrix<double> db;  // b_{i|j}
  SquareMatrix<double> r, s, r_up, s_up, q, t;
  Vector<double> r_i, s_i, q_i, t_i;
  double r_scalar = 0.0;  // r
  double t_scalar = 0.0;  // t
  double t_trace = 0.0;   // t^l_l
  double r_trace = 0.0;   // r^l_l
  double s_sq = 0.0;      // s^l s_l
  Tensor<double, 3> r_cov;  // r_{ij|k}
  Tensor<double, 3> s_cov;  // s_{ij|k}
  SquareMatrix<double> s_i_cov;  // s_{i|k}

  // Contractions with y.
  double beta(std::span<const double> y) const;
  double alpha(std::span<const double> y) const;
  double r00(std::span<const double> y) const;
  double s0(std::span<const double> y) const;
  double q00(std::span<const double> y) const;
  double r00_0(std::span<const double> y) const;  // r_{ij|k} y^i y^j y^k
  // b^l (r_{l0|0} - r_{00|l})
  double radial_r_defect(std::span<const double> y) const;
  Vector<double> lower(std::span<const double> y) const;  // y_k = a_kl y^l
};

BetaApparatus apparatus(const RiemannianMetric& alpha, const OneForm& beta,
                        std::span<const double> x);

// max |s_ij|; zero exactly when beta is closed at x.
double closedness_defect(const RiemannianMetric& alpha, const OneForm& beta,
                         std::span<const double> x);

// max_{i,j} |t_ij| and |t^l_l|; both vanish exactly when beta is closed.
struct ClosednessWitness {
  double t_max = 0.0;
  double t_trace = 0.0;
  double s_max = 0.0;
};
ClosednessWitness closedness_witness(const BetaApparatus& ap);

// Ricci identity for beta: s_{ij|k} = r_{ik|j} - r_{jk|i} - b_l R_k^l_ij with
// R_k^l_ij from riemann_tensor_alpha. Returns max |lhs - rhs| / max(1, max
// |term|).
double ricci_identity_residual(const RiemannianMetric& alpha, const OneForm& beta,
                               std::span<const double> x);

}  // namespace finsler
