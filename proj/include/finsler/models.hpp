#pragma once

// Catalog of concrete metric families with their chart domains, closed-form
// expectations and negative-control variants, plus seeded sampling of chart
// points inside the admissible cone.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "finsler/finsler_metric.hpp"
#include "finsler/kropina.hpp"

namespace finsler {

struct ModelSpec {
  std::string family;
  int dim = 3;
  nlohmann::json params = nlohmann::json::object();
  std::optional<std::uint64_t> seed;
};

// {"family": ..., "dim": ..., "params": {...}, "seed": ...}; ConfigError on
// malformed input.
ModelSpec parse_model_spec(const nlohmann::json& j);
nlohmann::json to_json(const ModelSpec& spec);

// A family name or one of the negative-control aliases (warped-nonflat,
// cfc-perturbed, conformal-perturbed). ConfigError when unknown.
ModelSpec named_model(const std::string& name, int dim);

using ChartScalar = std::function<double(std::span<const double> x)>;
using PointValue = std::function<double(std::span<const double> x, std::span<const double> y)>;

struct Expectations {
  bool scalar_flag_curvature = false;
  bool projectively_flat = false;
  bool constant_flag_curvature = false;
  bool locally_minkowskian = false;
  bool closed_beta = false;
  // G^i = P y^i already in the model chart.
  bool flat_chart = false;
  // Expected failures of this variant are the point of the model.
  bool negative_control = false;
  PointValue K;                     // closed-form flag curvature, if known
  ChartScalar lambda;               // scalar of the curvature characterization
  ChartScalar epsilon, u;           // concircular data b_{i|j} = eps (a - b b)
  std::optional<double> sectional;  // constant sectional curvature of alpha
  std::optional<double> t_trace;    // t^l_l when constant
};

struct MetricModel {
  ModelSpec spec;
  int dim = 0;
  // The (alpha, beta) pair. For randers-lift this is the Kropina base.
  MKropinaMetric pair;
  // Metric under test: the m-Kropina metric itself, or the Randers lift.
  FinslerMetric metric;
  bool is_mkropina = true;
  // ||beta||_alpha = 1 holds identically in this chart.
  bool unit_length = false;
  double box = 1.0;  // x is drawn from [-box, box]^n, then filtered by the domain
  Expectations expected;
};

MetricModel build(const ModelSpec& spec);

// Pair with ||beta||_alpha = 1: the model pair itself when already unit
// length, otherwise its deformation.
MKropinaMetric unit_pair(const MetricModel& model);

bool admissible(const MetricModel& model, std::span<const double> x, std::span<const double> y);

struct FamilyInfo {
  std::string name;
  std::string summary;
  std::vector<std::string> formulas;
  std::vector<std::string> params;  // "name: meaning (default)"
  std::vector<std::string> expectations;
};
const std::vector<FamilyInfo>& family_catalog();
const FamilyInfo& family_info(const std::string& name);
std::vector<std::string> model_aliases();

struct Sample {
  std::vector<double> x;
  std::vector<double> y;
};

struct SampleBatch {
  std::uint64_t seed = 0;
  std::vector<Sample> points;
};

// x uniform in the chart, y uniform on the sphere, both filtered by
// rejection into the domain and cone. Deterministic in (model, seed, count).
SampleBatch sample(const MetricModel& model, std::uint64_t seed, int count,
                   int max_attempts_per_point = 20000);

MetricModel lift_to_randers(const MetricModel& model, double b_bar);

}  // namespace finsler
