#pragma once

// Check suites over seeded sample batches: per-sample residuals, ordered
// aggregation, and JSON / CSV reports.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "finsler/models.hpp"

namespace finsler {

enum class Expect { pass, fail, record };
std::string to_string(Expect e);

// Residual above which an expected failure counts as confirmed.
inline constexpr double kConfirmedFailure = 1e-3;

class SampleContext;
using CheckFn = std::function<double(SampleContext&)>;

struct Check {
  std::string name;
  double tol = 1e-7;
  Expect expect = Expect::pass;
  CheckFn eval;
};

struct CheckSuite {
  std::shared_ptr<const MetricModel> model;
  std::vector<Check> checks;
  std::uint64_t seed = 42;
  int count = 100;
  int jet_order = kMaxJetOrder;
  std::vector<std::string> notes;
};

// Everything evaluated at one sample, computed on first use. One context
// per sample; not shared across threads.
class SampleContext {
 public:
  SampleContext(const MetricModel& model, const Sample& sample, int jet_order);

  const MetricModel& model() const { return model_; }
  std::span<const double> x() const { return sample_.x; }
  std::span<const double> y() const { return sample_.y; }
  int jet_order() const { return jet_order_; }

  const CurvatureBundle& bundle();
  const MKropinaMetric& unit();
  const BetaApparatus& apparatus();
  // Lambda for the curvature characterizations: the model value when the
  // model supplies one, otherwise least squares.
  const ResidualMap& sfc_equations();
  const ResidualMap& projective_equations();
  const ResidualMap& concircular();

 private:
  const MetricModel& model_;
  const Sample& sample_;
  int jet_order_;
  std::optional<CurvatureBundle> bundle_;
  std::optional<MKropinaMetric> unit_;
  std::optional<BetaApparatus> apparatus_;
  std::optional<ResidualMap> sfc_, projective_, concircular_;
};

// Default suite of the model's family, with expectations from the model.
CheckSuite default_suite(std::shared_ptr<const MetricModel> model, std::uint64_t seed, int count,
                         int jet_order = kMaxJetOrder);

// Overrides tolerances by check name; ConfigError on an unknown name.
void override_tolerances(CheckSuite& suite, const std::map<std::string, double>& tolerances);

struct CheckResult {
  std::string name;
  double tol = 0.0;
  Expect expect = Expect::pass;
  double max = 0.0, mean = 0.0, min = 0.0;
  bool pass = false;  // max <= tol with no errors
  bool ok = false;    // outcome agrees with the expectation
  int n_samples = 0;
  int n_errors = 0;
  int worst = -1;  // sample index of max (or of the first error)
  std::string error;
  std::vector<double> values;       // per sample, NaN on error
  std::vector<std::string> errors;  // per sample, empty when evaluated
};

struct Report {
  ModelSpec spec;
  std::uint64_t seed = 0;
  int n_samples = 0;
  int jet_order = 0;
  double s_min = 0.0;
  double denom_factor = 0.0;
  SampleBatch batch;
  std::vector<CheckResult> checks;
  std::vector<std::string> notes;
  double runtime_ms = 0.0;
  bool ok() const;
};

// OpenMP over samples; threads <= 0 uses the runtime default. Results do
// not depend on the thread count.
Report run(const CheckSuite& suite, int threads = 0);
// Single-threaded reference with the same aggregation.
Report run_serial(const CheckSuite& suite);

// Relative discrepancy between the closed-form and autodiff sprays over a
// batch; m-Kropina models only.
CheckResult compare_sprays(const MetricModel& model, const SampleBatch& batch,
                           int jet_order = kMaxJetOrder, double tol = 1e-9);

// ||G_closed - G_F|| / max(||G_F||, F^2) at one point.
double spray_discrepancy(const MKropinaMetric& M, std::span<const double> x,
                         std::span<const double> y, int jet_order = kMaxJetOrder);

nlohmann::json to_json(const Report& report, bool include_timing = false);
// Summary rows, or one row per (check, sample) when per_sample is set.
std::string to_csv(const Report& report, bool per_sample);

}  // namespace finsler
