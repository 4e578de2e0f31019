#include "finsler/cli.hpp"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "finsler/errors.hpp"
#include "finsler/harness.hpp"
#include "finsler/models.hpp"

namespace finsler {
namespace {

using nlohmann::json;

struct Options {
  std::string model;
  std::optional<int> dim;
  int samples = 100;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";
  bool per_sample = false;
  std::vector<std::string> tol;
  std::vector<std::string> param;
  int threads = 0;
  int jet_order = kMaxJetOrder;
  bool timing = false;
  std::vector<double> at, dir;
  std::string show;
};

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("finsler", sink);
  log->set_pattern("[%l] %v");
  log->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("FINSLER_LOG")) {
    const std::string s = env;
    const auto level = spdlog::level::from_str(s);
    if (level == spdlog::level::off && s != "off") {
      log->warn("FINSLER_LOG='{}' is not a level (trace, debug, info, warn, error, off)", s);
    } else {
      log->set_level(level);
    }
  }
  return log;
}

std::pair<std::string, std::string> split_assignment(const std::string& s, const char* what) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(std::string(what) + " must look like name=value, got '" + s + "'");
  }
  return {s.substr(0, eq), s.substr(eq + 1)};
}

json parse_param_value(const std::string& v) {
  try {
    return json::parse(v);
  } catch (const json::parse_error&) {
    return v;
  }
}

// A model file (*.json or an existing path) or a catalog name; flags win
// over the file.
ModelSpec resolve_model(const Options& o) {
  if (o.model.empty()) throw ConfigError("--model is required");
  ModelSpec spec;
  namespace fs = std::filesystem;
  const bool looks_like_file =
      o.model.size() > 5 && o.model.substr(o.model.size() - 5) == ".json";
  if (looks_like_file || fs::exists(o.model)) {
    std::ifstream in(o.model);
    if (!in) throw ConfigError("cannot open model file '" + o.model + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("model file '" + o.model + "': " + e.what());
    }
    spec = parse_model_spec(j);
    if (o.dim) spec.dim = *o.dim;
  } else {
    spec = named_model(o.model, o.dim.value_or(3));
  }
  for (const auto& p : o.param) {
    const auto [k, v] = split_assignment(p, "--param");
    spec.params[k] = parse_param_value(v);
  }
  if (o.seed) spec.seed = o.seed;
  return spec;
}

std::map<std::string, double> parse_tolerances(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& t : items) {
    const auto [k, v] = split_assignment(t, "--tol");
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size()) throw ConfigError("--tol " + k + ": '" + v + "' is not a number");
    out[k] = d;
  }
  return out;
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + o.out + "'");
  f << text;
}

json matrix_json(const SquareMatrix<double>& m) {
  auto j = json::array();
  for (int i = 0; i < m.dim(); ++i) {
    auto row = json::array();
    for (int k = 0; k < m.dim(); ++k) row.push_back(m(i, k));
    j.push_back(row);
  }
  return j;
}

int cmd_verify(const Options& o, std::ostream& out, spdlog::logger& log) {
  if (o.samples < 1) throw ConfigError("--samples must be at least 1");
  if (o.format != "json" && o.format != "csv") throw ConfigError("--format must be json or csv");
  const ModelSpec spec = resolve_model(o);
  const std::uint64_t seed = spec.seed.value_or(42);
  auto model = std::make_shared<const MetricModel>(build(spec));
  auto suite = default_suite(model, seed, o.samples, o.jet_order);
  override_tolerances(suite, parse_tolerances(o.tol));
  log.info("verify {} (n = {}), {} samples, seed {}, {} checks", spec.family, model->dim,
           o.samples, seed, suite.checks.size());
  const Report rep = run(suite, o.threads);
  for (const auto& c : rep.checks) {
    if (!c.ok) {
      log.warn("check {} expected {} but max residual {:.3e} (tol {:.1e}, {} errors){}", c.name,
               to_string(c.expect), c.max, c.tol, c.n_errors,
               c.error.empty() ? "" : ": " + c.error);
    } else {
      log.debug("check {} ok: max {:.3e}", c.name, c.max);
    }
  }
  if (o.format == "csv") {
    emit(o, to_csv(rep, o.per_sample), out);
  } else {
    emit(o, to_json(rep, o.timing).dump(2) + "\n", out);
  }
  log.info("{} in {:.1f} ms", rep.ok() ? "all checks as expected" : "check failures",
           rep.runtime_ms);
  return rep.ok() ? kExitPass : kExitCheckFailure;
}

int cmd_curvature(const Options& o, std::ostream& out, std::ostream& err) {
  const ModelSpec spec = resolve_model(o);
  const MetricModel model = build(spec);
  const int n = model.dim;
  if (static_cast<int>(o.at.size()) != n || static_cast<int>(o.dir.size()) != n) {
    throw ConfigError("--at and --dir need " + std::to_string(n) + " components each");
  }
  if (model.pair.alpha.domain && !model.pair.alpha.domain(o.at)) {
    err << "point outside the chart domain of " << spec.family << "\n";
    return kExitConfigError;
  }
  const std::string violated = cone_violation(model.pair, o.at, o.dir);
  if (!violated.empty()) {
    err << "direction outside the admissible cone: " << violated << "\n";
    return kExitConfigError;
  }
  const auto b = curvature_bundle(model.metric, o.at, o.dir, o.jet_order);
  json j;
  j["model"] = to_json(spec);
  j["x"] = o.at;
  j["y"] = o.dir;
  j["F"] = b.F;
  j["g"] = matrix_json(b.g);
  j["G"] = b.G;
  j["R"] = matrix_json(b.R);
  j["ricci"] = b.ricci;
  j["K"] = b.K;
  j["weyl_norm"] = b.weyl_norm;
  j["douglas_norm"] = b.douglas_norm;
  j["weyl_residual"] = b.weyl_residual;
  j["douglas_residual"] = b.douglas_residual;
  j["scalar_flag_curvature_residual"] = b.sfc_residual;
  j["euler_residual"] = b.euler_residual;
  if (model.expected.K) j["expected"] = {{"K", model.expected.K(o.at, o.dir)}};
  emit(o, j.dump(2) + "\n", out);
  return kExitPass;
}

int cmd_spray_diff(const Options& o, std::ostream& out) {
  if (o.samples < 1) throw ConfigError("--samples must be at least 1");
  const ModelSpec spec = resolve_model(o);
  const std::uint64_t seed = spec.seed.value_or(42);
  const MetricModel model = build(spec);
  double tol = 1e-9;
  for (const auto& [k, v] : parse_tolerances(o.tol)) {
    if (k != "spray_agreement") throw ConfigError("spray-diff has only the check 'spray_agreement'");
    tol = v;
  }
  const auto batch = sample(model, seed, o.samples);
  const auto r = compare_sprays(model, batch, o.jet_order, tol);
  json j;
  j["model"] = to_json(spec);
  j["seed"] = seed;
  j["n_samples"] = r.n_samples;
  j["jet_order"] = o.jet_order;
  j["tol"] = r.tol;
  j["max_residual"] = std::isfinite(r.max) ? json(r.max) : json(nullptr);
  j["mean_residual"] = std::isfinite(r.mean) ? json(r.mean) : json(nullptr);
  j["pass"] = r.pass;
  j["n_errors"] = r.n_errors;
  j["error"] = r.error.empty() ? json(nullptr) : json(r.error);
  if (r.worst >= 0) {
    j["worst"] = {{"index", r.worst},
                  {"x", batch.points[r.worst].x},
                  {"y", batch.points[r.worst].y}};
  }
  emit(o, j.dump(2) + "\n", out);
  return r.pass ? kExitPass : kExitCheckFailure;
}

int cmd_models_list(std::ostream& out) {
  for (const auto& f : family_catalog()) out << f.name << "  " << f.summary << "\n";
  out << "\nnegative-control variants:";
  for (const auto& a : model_aliases()) out << " " << a;
  out << "\n";
  return kExitPass;
}

int cmd_models_show(const std::string& name, std::ostream& out) {
  const auto& f = family_info(name);
  out << f.name << "\n  " << f.summary << "\n\nformulas:\n";
  for (const auto& s : f.formulas) out << "  " << s << "\n";
  out << "\nparameters:\n";
  for (const auto& s : f.params) out << "  " << s << "\n";
  out << "\nexpected:\n";
  for (const auto& s : f.expectations) out << "  " << s << "\n";
  return kExitPass;
}

void add_model_flags(CLI::App* sub, Options& o) {
  sub->add_option("--model", o.model, "catalog name or model JSON file")->required();
  sub->add_option("--dim", o.dim, "dimension n (overrides the file)");
  sub->add_option("--param", o.param, "family parameter name=value, repeatable");
  sub->add_option("--jet-order", o.jet_order, "maximum jet order")
      ->check(CLI::Range(1, kMaxJetOrder));
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  auto log = make_logger(err);
  Options o;
  CLI::App app{"Finsler curvature checks for m-Kropina and Kropina metrics", "finsler"};
  app.require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "run the default check suite of a model");
  add_model_flags(verify, o);
  verify->add_option("--samples", o.samples, "number of samples");
  verify->add_option("--seed", o.seed, "sampling seed (default 42)");
  verify->add_option("--out", o.out, "report path (default stdout)");
  verify->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  verify->add_flag("--per-sample", o.per_sample, "csv: one row per check and sample");
  verify->add_option("--tol", o.tol, "tolerance override check=value, repeatable");
  verify->add_option("--threads", o.threads, "worker threads (default: all)");
  verify->add_flag("--timing", o.timing, "include runtime_ms in the report");

  auto* curvature = app.add_subcommand("curvature", "curvature bundle at one point");
  add_model_flags(curvature, o);
  curvature->add_option("--at", o.at, "chart point x")->delimiter(',')->required();
  curvature->add_option("--dir", o.dir, "direction y")->delimiter(',')->required();
  curvature->add_option("--out", o.out, "output path (default stdout)");

  auto* spray_diff =
      app.add_subcommand("spray-diff", "closed-form against autodiff spray over a batch");
  add_model_flags(spray_diff, o);
  spray_diff->add_option("--samples", o.samples, "number of samples");
  spray_diff->add_option("--seed", o.seed, "sampling seed (default 42)");
  spray_diff->add_option("--tol", o.tol, "spray_agreement=value");
  spray_diff->add_option("--out", o.out, "output path (default stdout)");

  auto* models = app.add_subcommand("models", "model catalog");
  models->require_subcommand(1);
  auto* list = models->add_subcommand("list", "list families");
  auto* show = models->add_subcommand("show", "formulas and expectations of a family");
  show->add_option("name", o.show, "family name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    // Subcommand help requests arrive here as well.
    if (e.get_exit_code() == 0) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().back()->help());
      return kExitPass;
    }
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    if (verify->parsed()) return cmd_verify(o, out, *log);
    if (curvature->parsed()) return cmd_curvature(o, out, err);
    if (spray_diff->parsed()) return cmd_spray_diff(o, out);
    if (list->parsed()) return cmd_models_list(out);
    if (show->parsed()) return cmd_models_show(o.show, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}

}  // namespace finsler
