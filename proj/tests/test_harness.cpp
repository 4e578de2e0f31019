#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <sstream>
#include <string>

#include "finsler/errors.hpp"
#include "finsler/harness.hpp"

using namespace finsler;

namespace {

std::shared_ptr<const MetricModel> shared_model(const std::string& name) {
  return std::make_shared<const MetricModel>(build(named_model(name, 3)));
}

const CheckResult& find(const Report& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return c;
  throw std::runtime_error("no check " + name);
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST(Harness, ParallelMatchesSerialExactly) {
  const auto suite = default_suite(shared_model("cfc-kropina"), 42, 24);
  const auto a = run_serial(suite);
  const auto b = run(suite, 4);
  ASSERT_EQ(a.checks.size(), b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    EXPECT_EQ(a.checks[i].max, b.checks[i].max) << a.checks[i].name;
    EXPECT_EQ(a.checks[i].mean, b.checks[i].mean) << a.checks[i].name;
    EXPECT_EQ(a.checks[i].worst, b.checks[i].worst) << a.checks[i].name;
  }
  EXPECT_EQ(to_json(a).dump(2), to_json(b).dump(2));
  EXPECT_EQ(to_csv(a, true), to_csv(b, true));
}

TEST(Harness, CatalogSuitesMeetExpectations) {
  for (const char* name : {"minkowski-parallel", "cfc-kropina", "warped-kropina", "projflat-eta",
                           "cfc-perturbed"}) {
    const auto r = run(default_suite(shared_model(name), 42, 12));
    for (const auto& c : r.checks) {
      EXPECT_TRUE(c.ok) << name << " " << c.name << " max " << c.max << " " << c.error;
    }
    EXPECT_TRUE(r.ok()) << name;
  }
}

TEST(Harness, WorstSampleReproducesIndependently) {
  const auto M = shared_model("warped-kropina");
  const auto r = run(default_suite(M, 42, 30));
  const auto& c = find(r, "flag_curvature");
  ASSERT_GE(c.worst, 0);
  const auto& s = r.batch.points[static_cast<std::size_t>(c.worst)];
  const double K = flag_curvature(M->metric, s.x, s.y);
  EXPECT_NEAR(relative_gap(K, M->expected.K(s.x, s.y)), c.max, 1e-12);
}

TEST(Harness, ToleranceOverrides) {
  auto suite = default_suite(shared_model("cfc-kropina"), 42, 4);
  override_tolerances(suite, {{"euler_identity", 0.5}});
  bool seen = false;
  for (const auto& c : suite.checks)
    if (c.name == "euler_identity") seen = c.tol == 0.5;
  EXPECT_TRUE(seen);
  EXPECT_THROW(override_tolerances(suite, {{"no_such_check", 1.0}}), ConfigError);
}

TEST(Harness, EvaluationErrorsAreRecorded) {
  // Douglas needs sixth-order jets; at order 3 the checks fail per sample
  // instead of aborting the run.
  const auto r = run(default_suite(shared_model("cfc-kropina"), 42, 5, 3));
  const auto& c = find(r, "douglas_residual");
  EXPECT_EQ(c.n_errors, 5);
  EXPECT_FALSE(c.error.empty());
  EXPECT_TRUE(std::isnan(c.values[0]));
  EXPECT_FALSE(r.ok());
}

TEST(Harness, ReportShapes) {
  const auto r = run(default_suite(shared_model("warped-kropina"), 9, 7));
  const auto j = to_json(r);
  EXPECT_EQ(j.at("n_samples"), 7);
  EXPECT_EQ(j.at("seed"), 9);
  EXPECT_TRUE(j.at("runtime_ms").is_null());
  EXPECT_TRUE(to_json(r, true).at("runtime_ms").is_number());
  EXPECT_EQ(j.at("checks").size(), r.checks.size());
  EXPECT_EQ(count_lines(to_csv(r, false)), 1 + static_cast<int>(r.checks.size()));
  EXPECT_EQ(count_lines(to_csv(r, true)), 1 + 7 * static_cast<int>(r.checks.size()));
}

TEST(Harness, SprayComparison) {
  const auto M = build(named_model("warped-kropina", 3));
  const auto c = compare_sprays(M, sample(M, 42, 10));
  EXPECT_TRUE(c.pass);
  EXPECT_LE(c.max, 1e-9);
  EXPECT_EQ(c.n_samples, 10);
}
