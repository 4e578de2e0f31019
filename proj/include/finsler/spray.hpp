#pragma once

// Spray-level projective geometry: Riemann, Ricci, Weyl and Douglas
// curvature of an arbitrary spray G^i(x, y).

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "finsler/jet.hpp"
#include "finsler/tensor.hpp"

namespace finsler {

using PointPredicate = std::function<bool(std::span<const double> x, std::span<const double> y)>;
using PointScalar = std::function<double(std::span<const double> x, std::span<const double> y)>;

// G^i as jets over seed(x, y, order) (2n variables) truncated to `order`.
using SprayCoefficients = std::function<std::vector<Jet>(
    std::span<const double> x, std::span<const double> y, int order)>;

// A scalar field built from (x, y) jets, e.g. a projective factor.
using JetScalarField = std::function<Jet(std::span<const Jet> x, std::span<const Jet> y)>;

struct Spray {
  int dim = 0;
  SprayCoefficients coefficients;
  // Extra jet order the coefficient function seeds on top of the requested
  // order (2 for a spray derived from F^2, 1 for closed forms in a_ij, b_i).
  int seed_overhead = 0;
  // Admissible cone; empty means every y != 0.
  PointPredicate admissible;
  // Characteristic length F(x, y) used to normalize residuals; empty means |y|.
  PointScalar scale;
  std::string name = "spray";
};

// Fails with DomainError when (x, y) is not admissible.
void require_admissible(const Spray& spray, std::span<const double> x, std::span<const double> y);

double characteristic_scale(const Spray& spray, std::span<const double> x,
                            std::span<const double> y);

// Evaluates G^i at `order`, checking that order + seed_overhead fits under
// `max_order` (ConfigError otherwise).
std::vector<Jet> spray_jets(const Spray& spray, std::span<const double> x,
                            std::span<const double> y, int order, int max_order = kMaxJetOrder);

std::vector<double> spray_values(const Spray& spray, std::span<const double> x,
                                 std::span<const double> y);

// R^i_k as jets of order (order of G) - 2, from G^i jets over seed(x, y).
SquareMatrix<Jet> riemann_jets(std::span<const Jet> G, std::span<const double> x,
                               std::span<const double> y);

SquareMatrix<double> riemann_from_spray(const Spray& spray, std::span<const double> x,
                                        std::span<const double> y, int max_order = kMaxJetOrder);

double ricci(const Spray& spray, std::span<const double> x, std::span<const double> y,
             int max_order = kMaxJetOrder);

SquareMatrix<double> weyl(const Spray& spray, std::span<const double> x,
                          std::span<const double> y, int max_order = kMaxJetOrder);

// D_h^i_jk stored as D(h, i, j, k).
Tensor<double, 4> douglas(const Spray& spray, std::span<const double> x,
                          std::span<const double> y, int max_order = kMaxJetOrder);

struct ProjectiveResidual {
  double weyl = 0.0;
  double douglas = 0.0;
};

ProjectiveResidual projective_flatness_residual(const Spray& spray, std::span<const double> x,
                                                std::span<const double> y,
                                                int max_order = kMaxJetOrder);

// G^i + P y^i. P must be positively homogeneous of degree 1 in y.
Spray projective_shift(const Spray& spray, JetScalarField factor);

// Everything the spray determines at one point, computed from a single
// fourth-order evaluation of G.
struct SprayCurvature {
  std::vector<double> G;
  SquareMatrix<double> R;
  double ricci = 0.0;
  SquareMatrix<double> W;     // empty (dim 0) when n < 3
  Tensor<double, 4> D;
  double scale = 0.0;         // characteristic F(x, y)
  double weyl_residual = 0.0;
  double douglas_residual = 0.0;
};

SprayCurvature spray_curvature(const Spray& spray, std::span<const double> x,
                               std::span<const double> y, int max_order = kMaxJetOrder);

// Normalizations shared by the residual operations.
double weyl_residual_norm(const SquareMatrix<double>& W, const SquareMatrix<double>& R,
                          double scale);
double douglas_residual_norm(const Tensor<double, 4>& D, const Tensor<double, 4>& third_y_derivative,
                             double scale);

}  // namespace finsler
