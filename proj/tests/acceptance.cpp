// Acceptance suite: one PASS/FAIL line per criterion on stdout, the
// failing measurements on stderr. Exit status 1 when any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "finsler/beta.hpp"
#include "finsler/cli.hpp"
#include "finsler/harness.hpp"
#include "finsler/kropina.hpp"
#include "finsler/models.hpp"
#include "finsler/spray.hpp"

using namespace finsler;

namespace {

constexpr int kSamples = 100;
constexpr std::uint64_t kSeed = 42;

// Collects failed conditions for one criterion.
class Criterion {
 public:
  explicit Criterion(std::string name) : name_(std::move(name)) {}

  void at_most(const std::string& what, double value, double bound) {
    if (!(value <= bound)) fail(what, value, "<=", bound);
  }
  void above(const std::string& what, double value, double bound) {
    if (!(value > bound)) fail(what, value, ">", bound);
  }
  void require(const std::string& what, bool ok) {
    if (!ok) failures_.push_back(what);
  }

  bool report() const {
    std::cout << (failures_.empty() ? "PASS " : "FAIL ") << name_ << std::endl;
    for (const auto& f : failures_) std::cerr << "  " << name_ << ": " << f << "\n";
    return failures_.empty();
  }

 private:
  void fail(const std::string& what, double value, const char* op, double bound) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s = %.3e, want %s %.1e", what.c_str(), value, op, bound);
    failures_.emplace_back(buf);
  }

  std::string name_;
  std::vector<std::string> failures_;
};

MetricModel model(const std::string& name, const nlohmann::json& params = nlohmann::json::object()) {
  auto spec = named_model(name, 3);
  for (const auto& [k, v] : params.items()) spec.params[k] = v;
  return build(spec);
}

Report suite_report(const std::string& name, const nlohmann::json& params = nlohmann::json::object()) {
  auto M = std::make_shared<const MetricModel>(model(name, params));
  return run(default_suite(M, kSeed, kSamples));
}

const CheckResult* find(const Report& r, const std::string& check) {
  for (const auto& c : r.checks)
    if (c.name == check) return &c;
  return nullptr;
}

// Max residual of a check that must exist and evaluate on every sample.
double max_of(Criterion& crit, const Report& r, const std::string& check) {
  const auto* c = find(r, check);
  const std::string where = r.spec.family + " " + r.spec.params.dump() + " " + check;
  if (!c) {
    crit.require(where + " missing from suite", false);
    return INFINITY;
  }
  crit.require(where + " evaluated without errors: " + c->error, c->n_errors == 0);
  return c->max;
}

double min_of(Criterion& crit, const Report& r, const std::string& check) {
  const auto* c = find(r, check);
  if (!c) {
    crit.require(check + " missing from suite", false);
    return -INFINITY;
  }
  crit.require(check + " evaluated without errors", c->n_errors == 0);
  return c->min;
}

bool spray_oracle() {
  Criterion crit("closed-form m-Kropina spray matches autodiff spray on the catalog");
  const std::vector<std::pair<std::string, nlohmann::json>> models = {
      {"minkowski-parallel", {}},          {"minkowski-conformal", {}},
      {"minkowski-conformal", {{"m", -0.5}}}, {"cfc-kropina", {}},
      {"warped-kropina", {}},              {"warped-kropina", {{"h", "cosh"}}},
      {"warped-kropina", {{"h", "poly"}}}, {"projflat-eta", {}},
      {"warped-nonflat", {}},              {"cfc-perturbed", {}},
      {"conformal-perturbed", {}}};
  for (const auto& [name, params] : models) {
    const auto M = model(name, params);
    const auto r = compare_sprays(M, sample(M, kSeed, kSamples));
    crit.require(name + " spray errors: " + r.error, r.n_errors == 0);
    crit.at_most(name + " " + params.dump() + " spray discrepancy", r.max, 1e-9);
  }
  return crit.report();
}

bool constant_curvature_kropina() {
  Criterion crit("constant flag curvature Kropina model");
  const auto r = suite_report("cfc-kropina");
  crit.at_most("r00 / alpha^2", max_of(crit, r, "r00_vanishes"), 1e-10);
  crit.at_most("|t^l_l - (1 - n)|", max_of(crit, r, "t_trace"), 1e-10);
  crit.at_most("|lambda_fit - 1|", max_of(crit, r, "alpha_sectional_curvature"), 1e-8);
  // K = 1/4, so the relative gap times 1/4 is the absolute error.
  crit.at_most("|K - 1/4|", 0.25 * max_of(crit, r, "flag_curvature"), 1e-8);
  crit.at_most("weyl residual", max_of(crit, r, "weyl_residual"), 1e-7);
  crit.above("min douglas residual", min_of(crit, r, "douglas_residual"), 1e-3);
  return crit.report();
}

bool scalar_flag_curvature_characterization() {
  Criterion crit("scalar flag curvature characterization of Kropina metrics");
  const char* parts[] = {"t_relation", "covariant_s_relation", "q_relation",
                         "alpha_curvature_relation"};
  for (const auto& [name, params] : std::vector<std::pair<std::string, nlohmann::json>>{
           {"cfc-kropina", {}}, {"warped-kropina", {}}, {"warped-kropina", {{"h", "cosh"}}}}) {
    const auto r = suite_report(name, params);
    for (const char* p : parts) crit.at_most(name + " " + p, max_of(crit, r, p), 1e-7);
  }
  const auto neg = suite_report("cfc-perturbed");
  double worst = 0.0;
  for (const char* p : parts) {
    const auto* c = find(neg, p);
    if (c) worst = std::max(worst, c->max);
  }
  crit.above("negative control worst residual", worst, 1e-3);
  return crit.report();
}

bool projective_flatness_and_concircular() {
  Criterion crit("projective flatness and concircular conditions on warped Kropina models");
  for (const char* h : {"exp", "cosh", "poly"}) {
    const auto r = suite_report("warped-kropina", {{"h", h}});
    const std::string tag = std::string("h=") + h + " ";
    for (const char* c : {"douglas_condition", "projective_q_relation",
                          "projective_alpha_curvature_relation", "concircular_relation",
                          "concircular_gradient_relation"}) {
      crit.at_most(tag + c, max_of(crit, r, c), 1e-7);
    }
    crit.at_most(tag + "epsilon against h'/h", max_of(crit, r, "concircular_epsilon"), 1e-8);
    crit.at_most(tag + "u against (h'/h)'", max_of(crit, r, "concircular_u"), 1e-8);
    crit.at_most(tag + "K from the covariant formula", max_of(crit, r, "kropina_flag_curvature"), 1e-8);
    crit.at_most(tag + "K from the concircular formula", max_of(crit, r, "concircular_flag_curvature"),
                 1e-8);
    crit.at_most(tag + "K against the warped closed form", max_of(crit, r, "flag_curvature"), 1e-8);
  }
  return crit.report();
}

bool eta_model() {
  Criterion crit("projectively flat eta-perturbed Kropina metric");
  const auto r = suite_report("projflat-eta");
  crit.at_most("projective factor residual", max_of(crit, r, "projective_factor"), 1e-8);
  crit.at_most("K against closed form", max_of(crit, r, "flag_curvature"), 1e-8);
  return crit.report();
}

bool conformal_family() {
  Criterion crit("conformally flat-parallel m-Kropina family");
  for (double m : {2.0, -0.5}) {
    const auto r = suite_report("minkowski-conformal", {{"m", m}});
    const std::string tag = "m=" + std::to_string(m) + " ";
    crit.at_most(tag + "weyl residual", max_of(crit, r, "weyl_residual"), 1e-7);
    crit.at_most(tag + "|R| / F^2", max_of(crit, r, "riemann_vanishes"), 1e-7);
    crit.at_most(tag + "deformation recovery", max_of(crit, r, "deformation_recovery"), 1e-10);
    crit.at_most(tag + "r form relation", max_of(crit, r, "r_form_relation"), 1e-9);
    crit.at_most(tag + "trace relation", max_of(crit, r, "trace_relation"), 1e-9);
    crit.at_most(tag + "|tau|", max_of(crit, r, "rigidity_tau"), 1e-9);
  }
  return crit.report();
}

bool randers_correspondence() {
  Criterion crit("Randers correspondence and its Kropina limit");
  for (const char* name : {"cfc-kropina", "warped-kropina", "minkowski-parallel"}) {
    const auto M = model(name);
    const auto batch = sample(M, kSeed, kSamples);
    double norm_gap = 0.0, limit_gap = 0.0;
    for (const auto& s : batch.points) {
      for (double bb : {0.3, 0.6, 0.9}) {
        norm_gap = std::max(norm_gap,
                            std::abs(randers_from_kropina(M.pair, bb, s.x, s.y).beta_bar_norm - bb));
      }
      const double F = metric_value(M.pair, s.x, s.y);
      const auto lim = randers_from_kropina(M.pair, 1.0 - 1e-6, s.x, s.y);
      limit_gap = std::max(limit_gap, std::abs(lim.F_bar - 0.5 * F) / F);
    }
    crit.at_most(std::string(name) + " | ||beta_bar|| - b_bar |", norm_gap, 1e-12);
    crit.at_most(std::string(name) + " |F_bar - F/2| / F", limit_gap, 1e-4);
  }
  return crit.report();
}

// P = <c + C x, y> + k x^1 |y|_a with random coefficients.
JetScalarField random_shift(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> c(n), C(n * n);
  for (auto& v : c) v = u(rng);
  for (auto& v : C) v = u(rng);
  const double k = u(rng);
  return [n, c, C, k](std::span<const Jet> x, std::span<const Jet> y) {
    Jet lin(0.0), len2(0.0);
    for (int i = 0; i < n; ++i) {
      Jet coef(c[i]);
      for (int j = 0; j < n; ++j) coef += C[i * n + j] * x[j];
      lin += coef * y[i];
      len2 += y[i] * y[i];
    }
    return lin + k * x[0] * sqrt(len2);
  };
}

bool property_suites() {
  Criterion crit("projective invariance, homogeneity and structural identities");
  std::mt19937_64 rng(kSeed);
  const double l = 1.7;
  for (const char* name : {"cfc-kropina", "warped-nonflat", "projflat-eta", "cfc-perturbed"}) {
    const auto M = model(name);
    const auto S = spray(M.metric);
    double inv_w = 0.0, inv_d = 0.0, hom = 0.0, hom_d = 0.0;
    for (const auto& s : sample(M, kSeed, 10).points) {
      const auto a = spray_curvature(S, s.x, s.y);
      const auto b = spray_curvature(projective_shift(S, random_shift(rng, M.dim)), s.x, s.y);
      const double scale = std::max(frobenius(a.R), a.scale * a.scale);
      inv_w = std::max(inv_w, frobenius(a.W - b.W) / scale);
      inv_d = std::max(inv_d, frobenius(a.D - b.D) / std::max(frobenius(a.D), 1.0 / a.scale));

      auto ly = s.y;
      for (auto& v : ly) v *= l;
      const auto c = spray_curvature(S, s.x, ly);
      const double f1 = metric_value(M.metric, s.x, s.y), f2 = metric_value(M.metric, s.x, ly);
      const auto g1 = fundamental_tensor(M.metric, s.x, s.y), g2 = fundamental_tensor(M.metric, s.x, ly);
      double gG = 0.0, nG = 0.0;
      for (int i = 0; i < M.dim; ++i) {
        gG = std::max(gG, std::abs(c.G[i] - l * l * a.G[i]));
        nG = std::max(nG, std::abs(c.G[i]));
      }
      hom = std::max({hom, std::abs(f2 - l * f1) / f2, frobenius(g2 - g1) / frobenius(g1), gG / nG,
                      frobenius(c.R - l * l * a.R) / std::max(frobenius(c.R), c.scale * c.scale),
                      frobenius(c.W - l * l * a.W) / std::max(frobenius(c.R), c.scale * c.scale)});
      // D is a sixth-order jet quantity; on Douglas metrics it is pure
      // cancellation noise, so it gets the Douglas residual tolerance.
      hom_d = std::max(hom_d, frobenius(c.D - (1.0 / l) * a.D) / std::max(frobenius(c.D), 1.0 / c.scale));
    }
    crit.at_most(std::string(name) + " Weyl change under projective shift", inv_w, 1e-8);
    crit.at_most(std::string(name) + " Douglas change under projective shift", inv_d, 1e-8);
    crit.at_most(std::string(name) + " homogeneity defect of F, g, G, R, W", hom, 1e-10);
    crit.at_most(std::string(name) + " homogeneity defect of D", hom_d, 1e-7);
  }

  for (const auto& f : family_catalog()) {
    const auto r = suite_report(f.name);
    crit.at_most(f.name + " Euler identity", max_of(crit, r, "euler_identity"), 1e-11);
    if (find(r, "r_plus_s_vanishes"))
      crit.at_most(f.name + " r_i + s_i", max_of(crit, r, "r_plus_s_vanishes"), 1e-10);
    if (find(r, "closedness_biconditional"))
      crit.at_most(f.name + " closedness biconditional", max_of(crit, r, "closedness_biconditional"), 0.0);
  }
  for (const char* name : {"cfc-perturbed", "warped-nonflat"}) {
    const auto r = suite_report(name);
    crit.at_most(std::string(name) + " r_i + s_i", max_of(crit, r, "r_plus_s_vanishes"), 1e-10);
    crit.at_most(std::string(name) + " closedness biconditional",
                 max_of(crit, r, "closedness_biconditional"), 0.0);
  }

  // Closed forms have t = 0; the constant curvature model has |t^l_l| = 2.
  for (const char* name : {"minkowski-parallel", "warped-kropina", "warped-nonflat", "cfc-kropina"}) {
    const auto M = model(name);
    const bool closed = M.expected.closed_beta;
    for (const auto& s : sample(M, kSeed, 20).points) {
      const auto w = closedness_witness(apparatus(M.pair.alpha, M.pair.beta, s.x));
      if (closed) {
        crit.at_most(std::string(name) + " t_ij", w.t_max, 1e-10);
        crit.at_most(std::string(name) + " t^l_l", w.t_trace, 1e-10);
      } else {
        crit.at_most(std::string(name) + " ||t^l_l| - 2|", std::abs(w.t_trace - 2.0), 1e-10);
      }
    }
  }
  return crit.report();
}

bool determinism() {
  Criterion crit("repeated verify runs give byte-identical reports");
  auto once = [](std::vector<std::string> args) {
    args.insert(args.begin(), "finsler");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return std::make_pair(code, out.str());
  };
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"verify", "--model", "cfc-kropina", "--samples", "100", "--seed", "42"},
           {"verify", "--model", "warped-kropina", "--format", "csv", "--per-sample"}}) {
    const auto a = once(args), b = once(args);
    crit.require(args[2] + " exit code", a.first == kExitPass && b.first == kExitPass);
    crit.require(args[2] + " report bytes", !a.second.empty() && a.second == b.second);
  }
  return crit.report();
}

}  // namespace

int main() {
  const std::vector<std::function<bool()>> criteria = {
      spray_oracle,  constant_curvature_kropina, scalar_flag_curvature_characterization,
      projective_flatness_and_concircular, eta_model, conformal_family, randers_correspondence,
      property_suites, determinism};
  bool all = true;
  for (const auto& c : criteria) {
    try {
      all = c() && all;
    } catch (const std::exception& ex) {
      std::cout << "FAIL criterion raised an exception" << std::endl;
      std::cerr << "  " << ex.what() << "\n";
      all = false;
    }
  }
  return all ? 0 : 1;
}
