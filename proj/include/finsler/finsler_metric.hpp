#pragma once

// Metric-level layer: fundamental tensor, geodesic spray and flag-curvature
// diagnostics of an arbitrary Finsler function F(x, y).

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "finsler/jet.hpp"
#include "finsler/spray.hpp"
#include "finsler/tensor.hpp"

namespace finsler {

// F over (x, y) jets of one seed space.
using FinslerFunction = std::function<Jet(std::span<const Jet> x, std::span<const Jet> y)>;

struct FinslerMetric {
  int dim = 0;
  FinslerFunction F;
  PointPredicate admissible;  // empty means every y != 0
  // Singular metrics such as m-Kropina with m > 1 have an indefinite but
  // non-degenerate fundamental tensor; they opt out of the definiteness check.
  bool require_positive_definite = true;
  std::string name = "F";
};

double metric_value(const FinslerMetric& F, std::span<const double> x, std::span<const double> y);

// g_ij = 1/2 [F^2]_{y^i y^j}
SquareMatrix<double> fundamental_tensor(const FinslerMetric& F, std::span<const double> x,
                                        std::span<const double> y);

// G^i = 1/4 g^il { [F^2]_{x^k y^l} y^k - [F^2]_{x^l} } as a spray.
Spray spray(const FinslerMetric& F);

std::vector<double> spray_at(const FinslerMetric& F, std::span<const double> x,
                             std::span<const double> y);

// K = Ric / ((n - 1) F^2)
double flag_curvature(const FinslerMetric& F, std::span<const double> x, std::span<const double> y,
                      int max_order = kMaxJetOrder);

// || R^i_k - K (F^2 delta^i_k - y^i y_k) || / max(||R||, F^2), y_k = g_ik y^i,
// with K the Ricci estimate above.
double sfc_residual(const FinslerMetric& F, std::span<const double> x, std::span<const double> y,
                    int max_order = kMaxJetOrder);

// min_P ||G - P y|| / ||G||; 0 when G vanishes.
double projective_factor_residual(const FinslerMetric& F, std::span<const double> x,
                                  std::span<const double> y);

struct CurvatureBundle {
  double F = 0.0;
  SquareMatrix<double> g;
  std::vector<double> G;
  SquareMatrix<double> R;
  double ricci = 0.0;
  double K = 0.0;
  double weyl_norm = 0.0;
  double douglas_norm = 0.0;
  double weyl_residual = 0.0;
  double douglas_residual = 0.0;
  double sfc_residual = 0.0;
  double euler_residual = 0.0;  // |g_ij y^i y^j - F^2| / F^2
};

// |value - reference| / |reference|, or |value| when the reference is 0.
double relative_gap(double value, double reference);

CurvatureBundle curvature_bundle(const FinslerMetric& F, std::span<const double> x,
                                 std::span<const double> y, int max_order = kMaxJetOrder);

}  // namespace finsler
