#pragma once

// Riemannian side of an (alpha, beta) pair: Levi-Civita connection, the
// spray and curvature of alpha, and covariant differentiation along alpha.

#include <functional>
#include <span>
#include <string>

#include "finsler/jet.hpp"
#include "finsler/spray.hpp"
#include "finsler/tensor.hpp"

namespace finsler {

// Fields are evaluated on x-jets of any seed space; the first n seed
// variables are always x^1..x^n.
using MetricField = std::function<SquareMatrix<Jet>(std::span<const Jet> x)>;
using CovectorField = std::function<Vector<Jet>(std::span<const Jet> x)>;
using ChartPredicate = std::function<bool(std::span<const double> x)>;

struct RiemannianMetric {
  int dim = 0;
  MetricField a;
  ChartPredicate domain;  // empty means the whole chart
  std::string name = "alpha";
};

struct OneForm {
  int dim = 0;
  CovectorField b;
  std::string name = "beta";
};

void require_in_domain(const RiemannianMetric& g, std::span<const double> x);

// Gamma^i_jk over the jets of a_ij; the result has order a.order() - 1.
Tensor<Jet, 3> christoffel_jets(const SquareMatrix<Jet>& a, const SquareMatrix<Jet>& a_inv);

Tensor<double, 3> christoffel(const RiemannianMetric& g, std::span<const double> x);

// G_alpha^i = 1/2 Gamma^i_jk y^j y^k as a spray.
Spray alpha_spray(const RiemannianMetric& g);

SquareMatrix<double> riemann_curvature_alpha(const RiemannianMetric& g, std::span<const double> x,
                                             std::span<const double> y);

// R_j^i_kl stored as (j, i, k, l), recovered from the y-Hessian of R^i_k:
// R_j^i_kl = 1/3 (d^2 R^i_k / dy^j dy^l - d^2 R^i_l / dy^j dy^k).
Tensor<double, 4> riemann_tensor_alpha(const RiemannianMetric& g, std::span<const double> x);

struct SectionalFit {
  double lambda = 0.0;
  double residual = 0.0;
};

// Best constant lambda with R^i_k ~ lambda (alpha^2 delta^i_k - y^i y_k).
SectionalFit sectional_constancy_residual(const RiemannianMetric& g, std::span<const double> x,
                                          std::span<const double> y);
SectionalFit sectional_fit(const SquareMatrix<double>& R, const SquareMatrix<double>& a,
                           std::span<const double> y);

// Covariant derivatives along alpha over jets. The new index is last:
// T_{i|k} -> (i, k), T_{ij|k} -> (i, j, k). The result drops one jet order.
Vector<Jet> covariant_derivative(const Jet& f, int dim);
SquareMatrix<Jet> covariant_derivative(const Vector<Jet>& T, const Tensor<Jet, 3>& gamma);
Tensor<Jet, 3> covariant_derivative(const SquareMatrix<Jet>& T, const Tensor<Jet, 3>& gamma);

// Point evaluations for fields of rank 1 and 2.
SquareMatrix<double> covariant_derivative(const RiemannianMetric& g, const CovectorField& T,
                                          std::span<const double> x);
Tensor<double, 3> covariant_derivative(const RiemannianMetric& g, const MetricField& T,
                                       std::span<const double> x);

double alpha_norm(const SquareMatrix<double>& a, std::span<const double> y);

}  // namespace finsler
