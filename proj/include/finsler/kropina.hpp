#pragma once

// m-Kropina metrics F = alpha^(1-m) beta^m and the Kropina case m = -1:
// closed-form spray, b-deformation, the Randers correspondence, and
// pointwise residuals of the scalar-flag-curvature characterizations.

#include <map>
#include <optional>
#include <span>
#include <string>

#include "finsler/beta.hpp"
#include "finsler/finsler_metric.hpp"
#include "finsler/riemann.hpp"
#include "finsler/spray.hpp"

namespace finsler {

inline constexpr double kDefaultSMin = 0.1;
inline constexpr double kDefaultDenomFactor = 0.05;

struct MKropinaMetric {
  RiemannianMetric alpha;
  OneForm beta;
  double m = -1.0;
  double s_min = kDefaultSMin;
  // The spray denominator m b^2 - (m+1) s^2 must stay above
  // denom_factor * (|m| b^2 + |m+1|).
  double denom_factor = kDefaultDenomFactor;
  // Replaces the s / denominator cone when set; deformed metrics keep the
  // cone of the metric they came from.
  PointPredicate cone;
  std::string name = "m-Kropina";
};

// Throws ParameterError for m in {0, 1} or non-finite m.
void validate(const MKropinaMetric& M);

double b_squared(const MKropinaMetric& M, std::span<const double> x);
double denom_min(const MKropinaMetric& M, double b2);

// Empty string when (x, y) is admissible, otherwise the violated predicate.
std::string cone_violation(const MKropinaMetric& M, std::span<const double> x,
                           std::span<const double> y);
bool in_cone(const MKropinaMetric& M, std::span<const double> x, std::span<const double> y);

FinslerMetric as_finsler(const MKropinaMetric& M);

double metric_value(const MKropinaMetric& M, std::span<const double> x, std::span<const double> y);

// G^i = G_alpha^i - m/((m-1)s) alpha s^i_0
//       + m/(2(m-1)) ((m-1) s r_00 + 2 m alpha s_0) / (s [m b^2 - (m+1) s^2])
//         (b^i - 2 s y^i / alpha),        s = beta / alpha.
Spray spray_closed_form(const MKropinaMetric& M);
std::vector<double> spray_closed_form(const MKropinaMetric& M, std::span<const double> x,
                                      std::span<const double> y);

// a~_ij = b^(2m) a_ij, b~_i = b^(m-1) b_i, so that F is unchanged and
// ||beta~||_alpha~ = 1.
struct Deformation {
  SquareMatrix<double> a;
  Vector<double> b;
};
Deformation deform(const MKropinaMetric& M, std::span<const double> x);
MKropinaMetric deformed(const MKropinaMetric& M);

// Randers data built from a unit-length Kropina pair:
//   abar^2 = ((1 - bb^2) alpha^2 + bb^2 beta^2) / (1 - bb^2)^2,
//   betabar = -bb beta / (1 - bb^2).
struct RandersData {
  double alpha_bar = 0.0;
  double beta_bar = 0.0;
  double F_bar = 0.0;
  double beta_bar_norm = 0.0;  // ||betabar||_abar from the assembled tensors
};
RandersData randers_from_kropina(const MKropinaMetric& M, double b_bar, std::span<const double> x,
                                 std::span<const double> y);

// F_bar = abar + betabar as a Finsler metric, evaluated as
// alpha^2 / (sqrt((1 - bb^2) alpha^2 + bb^2 beta^2) + bb beta).
FinslerMetric randers_lift(const MKropinaMetric& M, double b_bar);

using ResidualMap = std::map<std::string, double>;

struct ThmResidualConfig {
  enum class LambdaMode { model_supplied, least_squares };
  LambdaMode lambda_mode = LambdaMode::least_squares;
  std::optional<double> lambda;
};
void validate(const ThmResidualConfig& cfg);

// Keys: t_relation, covariant_s_relation, q_relation,
// alpha_curvature_relation, lambda.
ResidualMap scalar_flag_curvature_residuals(const MKropinaMetric& M, const ThmResidualConfig& cfg,
                                            std::span<const double> x, std::span<const double> y);

// Keys: douglas_condition, projective_q_relation, alpha_curvature_relation,
// lambda.
ResidualMap projective_flatness_residuals(const MKropinaMetric& M, const ThmResidualConfig& cfg,
                                          std::span<const double> x, std::span<const double> y);

// b_{i|j} = eps (a_ij - b_i b_j), eps_i = u b_i and the curvature condition
// R^i_k = -eps^2 (alpha^2 delta - y^i y_k)
//         - u (alpha^2 b^i b_k + beta^2 delta - beta y^i b_k - beta y_k b^i).
// Keys: concircular_relation, epsilon, u, gradient_relation,
// concircular_curvature_relation, k_formula, k_measured, k_error.
ResidualMap concircular_residuals(const MKropinaMetric& M, std::span<const double> x,
                                  std::span<const double> y, double structure_tol = 1e-6);

// Flag curvature of a unit-length Kropina metric of scalar flag curvature,
// written in the covariant quantities of (alpha, beta) and lambda.
double kropina_flag_curvature(const BetaApparatus& ap, std::span<const double> y, double lambda);
double kropina_flag_curvature(const MKropinaMetric& M, std::span<const double> x,
                              std::span<const double> y, double lambda);

// For m != -1, after deformation:
//   r_ij = 2 tau [m b^2 a_ij - (m+1) b_i b_j] - (m+1)/((m-1) b^2) (b_i s_j + b_j s_i)
//   t^k_k = -2 s_k s^k / b^2
// Keys: tau, r_form_relation, trace_relation.
ResidualMap mkropina_rigidity_residuals(const MKropinaMetric& M, std::span<const double> x,
                                        bool deform_first = true);

}  // namespace finsler
