#include "finsler/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "finsler/errors.hpp"

namespace finsler {

using nlohmann::json;

namespace {

const std::vector<std::string>& family_names() {
  static const std::vector<std::string> names = {"minkowski-parallel", "minkowski-conformal",
                                                 "cfc-kropina",        "warped-kropina",
                                                 "projflat-eta",       "randers-lift"};
  return names;
}

void check_params(const ModelSpec& spec, const std::set<std::string>& allowed) {
  if (!spec.params.is_object()) throw ConfigError(spec.family + ": params must be an object");
  for (const auto& [key, value] : spec.params.items()) {
    if (!allowed.count(key)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(spec.family + ": unknown parameter '" + key + "' (allowed: " +
                        (list.empty() ? "none" : list) + ")");
    }
  }
}

double number_param(const ModelSpec& spec, const std::string& key, double fallback) {
  if (!spec.params.contains(key)) return fallback;
  const auto& v = spec.params.at(key);
  if (!v.is_number()) throw ConfigError(spec.family + ": parameter '" + key + "' must be a number");
  return v.get<double>();
}

std::string string_param(const ModelSpec& spec, const std::string& key, const std::string& fallback,
                         const std::set<std::string>& choices) {
  if (!spec.params.contains(key)) return fallback;
  const auto& v = spec.params.at(key);
  if (!v.is_string()) throw ConfigError(spec.family + ": parameter '" + key + "' must be a string");
  const auto s = v.get<std::string>();
  if (!choices.count(s)) {
    std::string list;
    for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
    throw ConfigError(spec.family + ": parameter '" + key + "' must be one of " + list);
  }
  return s;
}

void require_dim(const ModelSpec& spec, int lo) {
  if (spec.dim < lo || spec.dim > kMaxJetVars / 2) {
    throw UnsupportedDimensionError(spec.family + ": dimension " + std::to_string(spec.dim) +
                                    " outside [" + std::to_string(lo) + ", " +
                                    std::to_string(kMaxJetVars / 2) + "]");
  }
}

ChartPredicate ball(double radius) {
  return [radius](std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return r2 < radius * radius;
  };
}

ChartPredicate cube(double half) {
  return [half](std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [half](double v) { return std::abs(v) <= half; });
  };
}

Jet norm2(std::span<const Jet> x) {
  Jet s(0.0);
  for (const auto& v : x) s += v * v;
  return s;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return s;
}

void finish(MetricModel& M, ChartPredicate domain, double box) {
  M.pair.alpha.domain = std::move(domain);
  M.box = box;
  M.metric = as_finsler(M.pair);
}

MetricModel minkowski_parallel(const ModelSpec& spec) {
  check_params(spec, {"m"});
  require_dim(spec, 2);
  const int n = spec.dim;
  MetricModel M;
  M.spec = spec;
  M.dim = n;
  M.pair.m = number_param(spec, "m", -1.0);
  M.pair.name = "minkowski-parallel";
  M.pair.alpha = {n, [n](std::span<const Jet>) { return identity<Jet>(n); }, {}, "euclidean"};
  M.pair.beta = {n,
                 [n](std::span<const Jet>) {
                   Vector<Jet> b(n, Jet(0.0));
                   b(0) = Jet(1.0);
                   return b;
                 },
                 "dx1"};
  M.unit_length = true;
  auto& e = M.expected;
  e.scalar_flag_curvature = e.projectively_flat = e.constant_flag_curvature = true;
  e.locally_minkowskian = e.closed_beta = e.flat_chart = true;
  e.K = [](std::span<const double>, std::span<const double>) { return 0.0; };
  e.lambda = [](std::span<const double>) { return 0.0; };
  e.epsilon = [](std::span<const double>) { return 0.0; };
  e.u = [](std::span<const double>) { return 0.0; };
  e.sectional = 0.0;
  e.t_trace = 0.0;
  finish(M, cube(1.0), 1.0);
  return M;
}

MetricModel minkowski_conformal(const ModelSpec& spec) {
  check_params(spec, {"m", "c", "perturb"});
  require_dim(spec, 2);
  const int n = spec.dim;
  const double m = number_param(spec, "m", 2.0);
  const double kappa = number_param(spec, "perturb", 0.0);
  string_param(spec, "c", "exp", {"exp"});
  if (m == -1.0) throw ParameterError("minkowski-conformal: m = -1 is the Kropina case, use m != -1");
  MetricModel M;
  M.spec = spec;
  M.dim = n;
  M.pair.m = m;
  M.pair.name = kappa == 0.0 ? "minkowski-conformal" : "minkowski-conformal (perturbed)";
  // alpha = c^-m |y|, beta = c^(1-m) (y^1 + kappa x^1 y^2), c = exp(x^1)
  M.pair.alpha = {n,
                  [n, m](std::span<const Jet> x) {
                    const Jet f = exp(-2.0 * m * x[0]);
                    SquareMatrix<Jet> a(n, Jet(0.0));
                    for (int i = 0; i < n; ++i) a(i, i) = f;
                    return a;
                  },
                  {},
                  "c^-m euclidean"};
  M.pair.beta = {n,
                 [n, m, kappa](std::span<const Jet> x) {
                   const Jet f = exp((1.0 - m) * x[0]);
                   Vector<Jet> b(n, Jet(0.0));
                   b(0) = f;
                   if (kappa != 0.0) b(1) = kappa * x[0] * f;
                   return b;
                 },
                 "c^(1-m) dx1"};
  auto& e = M.expected;
  if (kappa == 0.0) {
    e.scalar_flag_curvature = e.projectively_flat = e.constant_flag_curvature = true;
    e.locally_minkowskian = e.closed_beta = true;
    e.K = [](std::span<const double>, std::span<const double>) { return 0.0; };
    e.t_trace = 0.0;
  } else {
    e.negative_control = true;
  }
  finish(M, cube(1.0), 1.0);
  return M;
}

struct CfcData {
  SquareMatrix<double> Q;
  Vector<double> e;
};

CfcData cfc_data(const ModelSpec& spec) {
  const int n = spec.dim;
  CfcData d{SquareMatrix<double>(n, 0.0), Vector<double>(n, 0.0)};
  if (spec.params.contains("Q") || spec.params.contains("e")) {
    if (!spec.params.contains("Q") || !spec.params.contains("e")) {
      throw ConfigError("cfc-kropina: Q and e must be given together");
    }
    try {
      const auto Q = spec.params.at("Q").get<std::vector<std::vector<double>>>();
      const auto e = spec.params.at("e").get<std::vector<double>>();
      if (static_cast<int>(Q.size()) != n || static_cast<int>(e.size()) != n) {
        throw ConfigError("cfc-kropina: Q must be n x n and e must have n entries");
      }
      for (int i = 0; i < n; ++i) {
        if (static_cast<int>(Q[i].size()) != n) throw ConfigError("cfc-kropina: Q must be n x n");
        d.e(i) = e[i];
        for (int j = 0; j < n; ++j) d.Q(i, j) = Q[i][j];
      }
    } catch (const json::exception& ex) {
      throw ConfigError(std::string("cfc-kropina: malformed Q or e: ") + ex.what());
    }
  } else {
    for (int i = 0; i + 1 < n; i += 2) {
      d.Q(i, i + 1) = 1.0;
      d.Q(i + 1, i) = -1.0;
    }
    d.e(n - 1) = 1.0;
  }
  constexpr double tol = 1e-14;
  std::vector<std::string> violated;
  double skew = 0.0, qe = 0.0, proj = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      skew = std::max(skew, std::abs(d.Q(i, j) + d.Q(j, i)));
      row += d.Q(i, j) * d.e(j);
      double qq = 0.0;
      for (int k = 0; k < n; ++k) qq += d.Q(i, k) * d.Q(j, k);
      proj = std::max(proj, std::abs((i == j ? 1.0 : 0.0) - d.e(i) * d.e(j) - qq));
    }
    qe = std::max(qe, std::abs(row));
  }
  double e2 = 0.0;
  for (int i = 0; i < n; ++i) e2 += d.e(i) * d.e(i);
  if (skew > tol) violated.push_back("Q^T = -Q");
  if (std::abs(std::sqrt(e2) - 1.0) > tol) violated.push_back("|e| = 1");
  if (qe > tol) violated.push_back("Qe = 0");
  if (proj > tol) violated.push_back("delta_ij - e_i e_j = p_ik p_jk");
  if (!violated.empty()) {
    std::string msg = "cfc-kropina: constraint violated:";
    for (const auto& v : violated) msg += " " + v + ";";
    throw ConstraintError(msg);
  }
  return d;
}

MetricModel cfc_kropina(const ModelSpec& spec) {
  check_params(spec, {"perturb", "Q", "e", "radius"});
  require_dim(spec, 3);
  const int n = spec.dim;
  if (n % 2 == 0) {
    throw UnsupportedDimensionError("cfc-kropina: n must be odd (rank Q = n - 1 for a skew Q)");
  }
  const auto d = cfc_data(spec);
  const double kappa = number_param(spec, "perturb", 0.0);
  const double radius = number_param(spec, "radius", 0.8);
  if (!(radius > 0.0 && radius <= 0.8)) throw ParameterError("cfc-kropina: radius must be in (0, 0.8]");

  MetricModel M;
  M.spec = spec;
  M.dim = n;
  M.pair.m = -1.0;
  M.pair.name = kappa == 0.0 ? "cfc-kropina" : "cfc-kropina (perturbed)";
  // alpha^2 = ((1+|x|^2)|y|^2 - <x,y>^2) / (1+|x|^2)^2
  M.pair.alpha = {n,
                  [n](std::span<const Jet> x) {
                    const Jet rho = 1.0 + norm2(x);
                    const Jet inv2 = reciprocal(rho * rho);
                    SquareMatrix<Jet> a(n);
                    for (int i = 0; i < n; ++i)
                      for (int j = 0; j < n; ++j) {
                        a(i, j) = ((i == j ? rho : Jet(0.0)) - x[i] * x[j]) * inv2;
                      }
                    return a;
                  },
                  {},
                  "unit sphere (projective chart)"};
  M.pair.beta = {n,
                 [n, d, kappa](std::span<const Jet> x) {
                   const Jet rho = 1.0 + norm2(x);
                   const Jet inv = reciprocal(rho);
                   Vector<Jet> b(n);
                   for (int i = 0; i < n; ++i) {
                     Jet v(d.e(i));
                     for (int k = 0; k < n; ++k) v += d.Q(i, k) * x[k];
                     if (kappa != 0.0) v += kappa * x[i];
                     b(i) = v * inv;
                   }
                   if (kappa != 0.0) {
                     // Renormalize with a^ij = rho (delta_ij + x_i x_j).
                     Jet len2(0.0), bx(0.0);
                     for (int i = 0; i < n; ++i) {
                       len2 += b(i) * b(i);
                       bx += b(i) * x[i];
                     }
                     const Jet scale = reciprocal(sqrt(rho * (len2 + bx * bx)));
                     for (int i = 0; i < n; ++i) b(i) = b(i) * scale;
                   }
                   return b;
                 },
                 "<Qx + e, y> / (1+|x|^2)"};
  M.unit_length = true;
  auto& e = M.expected;
  if (kappa == 0.0) {
    e.scalar_flag_curvature = e.constant_flag_curvature = true;
    e.K = [](std::span<const double>, std::span<const double>) { return 0.25; };
    e.lambda = [](std::span<const double>) { return 1.0; };
    e.t_trace = 1.0 - n;
  } else {
    e.negative_control = true;
  }
  e.sectional = 1.0;
  finish(M, ball(radius), radius);
  return M;
}

struct Warp {
  std::function<Jet(const Jet&)> h;
  std::function<double(double)> h0, h1, h2;
};

Warp warp(const std::string& name) {
  if (name == "exp") {
    return {[](const Jet& t) { return exp(t); }, [](double t) { return std::exp(t); },
            [](double t) { return std::exp(t); }, [](double t) { return std::exp(t); }};
  }
  if (name == "cosh") {
    return {[](const Jet& t) { return cosh(t); }, [](double t) { return std::cosh(t); },
            [](double t) { return std::sinh(t); }, [](double t) { return std::cosh(t); }};
  }
  return {[](const Jet& t) { return 1.0 + 0.5 * t * t; }, [](double t) { return 1.0 + 0.5 * t * t; },
          [](double t) { return t; }, [](double) { return 1.0; }};
}

MetricModel warped_kropina(const ModelSpec& spec) {
  check_params(spec, {"h", "base"});
  const auto hname = string_param(spec, "h", "exp", {"exp", "cosh", "poly"});
  const auto base = string_param(spec, "base", "flat", {"flat", "sphere"});
  require_dim(spec, 3);
  const int n = spec.dim;
  const Warp w = warp(hname);
  const bool sphere = base == "sphere";

  MetricModel M;
  M.spec = spec;
  M.dim = n;
  M.pair.m = -1.0;
  M.pair.name = sphere ? "warped-kropina (sphere base)" : "warped-kropina";
  // alpha^2 = (y^1)^2 + h(x^1)^2 alpha~^2, alpha~ flat or the round sphere
  // 4 |y~|^2 / (1 + |x~|^2)^2.
  M.pair.alpha = {n,
                  [n, w, sphere](std::span<const Jet> x) {
                    const Jet h = w.h(x[0]);
                    Jet f = h * h;
                    if (sphere) {
                      const Jet rho = 1.0 + norm2(x.subspan(1));
                      f = 4.0 * f * reciprocal(rho * rho);
                    }
                    SquareMatrix<Jet> a(n, Jet(0.0));
                    a(0, 0) = Jet(1.0);
                    for (int i = 1; i < n; ++i) a(i, i) = f;
                    return a;
                  },
                  {},
                  "warped product"};
  M.pair.beta = {n,
                 [n](std::span<const Jet>) {
                   Vector<Jet> b(n, Jet(0.0));
                   b(0) = Jet(1.0);
                   return b;
                 },
                 "dx1"};
  M.unit_length = true;
  auto& e = M.expected;
  e.closed_beta = true;
  e.t_trace = 0.0;
  e.epsilon = [w](std::span<const double> x) { return w.h1(x[0]) / w.h0(x[0]); };
  e.u = [w](std::span<const double> x) {
    const double h = w.h0(x[0]), h1 = w.h1(x[0]), h2 = w.h2(x[0]);
    return h2 / h - (h1 * h1) / (h * h);
  };
  e.lambda = [w](std::span<const double> x) { return -w.h2(x[0]) / w.h0(x[0]); };
  if (sphere) {
    e.negative_control = true;
  } else {
    e.scalar_flag_curvature = e.projectively_flat = true;
    e.K = [w, n](std::span<const double> x, std::span<const double> y) {
      const double h = w.h0(x[0]), h1 = w.h1(x[0]), h2 = w.h2(x[0]);
      double tilde2 = 0.0;
      for (int i = 1; i < n; ++i) tilde2 += y[i] * y[i];
      const double alpha2 = y[0] * y[0] + h * h * tilde2;
      const double s2 = y[0] * y[0] / alpha2;
      return -s2 * s2 * s2 * (h2 / h + 3.0 * h1 * h1 * tilde2 / alpha2);
    };
  }
  finish(M, cube(1.0), 1.0);
  return M;
}

MetricModel projflat_eta(const ModelSpec& spec) {
  check_params(spec, {"k"});
  require_dim(spec, 2);
  const int n = spec.dim;
  const double k = number_param(spec, "k", 1.0);
  if (!(std::abs(k) <= 1.0)) throw ParameterError("projflat-eta: |k| must be at most 1");
  MetricModel M;
  M.spec = spec;
  M.dim = n;
  M.pair.m = -1.0;
  M.pair.name = "projflat-eta";
  // F = |y|^2 / y^1 + k <x, y> = (|y|^2 + eta y^1) / y^1
  M.pair.alpha = {n,
                  [n, k](std::span<const Jet> x) {
                    SquareMatrix<Jet> a(n, Jet(0.0));
                    for (int i = 0; i < n; ++i) a(i, i) = Jet(1.0);
                    for (int i = 0; i < n; ++i) {
                      a(0, i) = a(0, i) + 0.5 * k * x[i];
                      a(i, 0) = a(i, 0) + 0.5 * k * x[i];
                    }
                    return a;
                  },
                  {},
                  "|y|^2 + eta y^1"};
  M.pair.beta = {n,
                 [n](std::span<const Jet>) {
                   Vector<Jet> b(n, Jet(0.0));
                   b(0) = Jet(1.0);
                   return b;
                 },
                 "dx1"};
  auto& e = M.expected;
  e.scalar_flag_curvature = e.projectively_flat = e.closed_beta = e.flat_chart = true;
  e.K = [k](std::span<const double> x, std::span<const double> y) {
    double eta = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) eta += k * x[i] * y[i];
    const double y2 = norm2(y);
    const double y1 = y[0];
    return 0.75 * k * k * y2 * y2 * std::pow(y1, 4) / std::pow(eta * y1 + y2, 4);
  };
  finish(M, ball(0.5), 0.5);
  return M;
}

MetricModel randers_lift_model(const ModelSpec& spec) {
  check_params(spec, {"base", "b_bar"});
  const auto base = string_param(spec, "base", "cfc-kropina",
                                 {"cfc-kropina", "warped-kropina", "minkowski-parallel"});
  const double b_bar = number_param(spec, "b_bar", 0.5);
  ModelSpec inner;
  inner.family = base;
  inner.dim = spec.dim;
  auto lifted = lift_to_randers(build(inner), b_bar);
  lifted.spec = spec;
  return lifted;
}

}  // namespace

ModelSpec parse_model_spec(const json& j) {
  if (!j.is_object()) throw ConfigError("model file: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "family" && key != "dim" && key != "params" && key != "seed") {
      throw ConfigError("model file: unknown field '" + key + "'");
    }
  }
  ModelSpec s;
  if (!j.contains("family") || !j.at("family").is_string()) {
    throw ConfigError("model file: 'family' (string) is required");
  }
  s.family = j.at("family").get<std::string>();
  if (j.contains("dim")) {
    if (!j.at("dim").is_number_integer()) throw ConfigError("model file: 'dim' must be an integer");
    s.dim = j.at("dim").get<int>();
  }
  if (j.contains("params")) {
    if (!j.at("params").is_object()) throw ConfigError("model file: 'params' must be an object");
    s.params = j.at("params");
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) {
      throw ConfigError("model file: 'seed' must be a non-negative integer");
    }
    s.seed = j.at("seed").get<std::uint64_t>();
  }
  return s;
}

json to_json(const ModelSpec& spec) {
  json j;
  j["family"] = spec.family;
  j["dim"] = spec.dim;
  j["params"] = spec.params;
  if (spec.seed) j["seed"] = *spec.seed;
  return j;
}

std::vector<std::string> model_aliases() {
  return {"warped-nonflat", "cfc-perturbed", "conformal-perturbed"};
}

ModelSpec named_model(const std::string& name, int dim) {
  ModelSpec s;
  s.dim = dim;
  if (name == "warped-nonflat") {
    s.family = "warped-kropina";
    s.params = {{"base", "sphere"}};
  } else if (name == "cfc-perturbed") {
    s.family = "cfc-kropina";
    s.params = {{"perturb", 0.3}};
  } else if (name == "conformal-perturbed") {
    s.family = "minkowski-conformal";
    s.params = {{"perturb", 0.5}};
  } else if (std::find(family_names().begin(), family_names().end(), name) != family_names().end()) {
    s.family = name;
  } else {
    throw ConfigError("unknown model '" + name + "'");
  }
  return s;
}

MetricModel build(const ModelSpec& spec) {
  if (spec.family == "minkowski-parallel") return minkowski_parallel(spec);
  if (spec.family == "minkowski-conformal") return minkowski_conformal(spec);
  if (spec.family == "cfc-kropina") return cfc_kropina(spec);
  if (spec.family == "warped-kropina") return warped_kropina(spec);
  if (spec.family == "projflat-eta") return projflat_eta(spec);
  if (spec.family == "randers-lift") return randers_lift_model(spec);
  throw ConfigError("unknown model family '" + spec.family + "'");
}

MKropinaMetric unit_pair(const MetricModel& model) {
  return model.unit_length ? model.pair : deformed(model.pair);
}

bool admissible(const MetricModel& model, std::span<const double> x, std::span<const double> y) {
  return in_cone(model.pair, x, y);
}

MetricModel lift_to_randers(const MetricModel& model, double b_bar) {
  if (!model.is_mkropina || model.pair.m != -1.0 || !model.unit_length) {
    throw ParameterError("Randers lift needs a unit-length Kropina model, got " +
                         model.spec.family);
  }
  MetricModel out = model;
  out.spec.family = "randers-lift";
  out.spec.params = {{"base", model.spec.family}, {"b_bar", b_bar}};
  out.metric = randers_lift(model.pair, b_bar);
  out.is_mkropina = false;
  out.expected = Expectations{};
  return out;
}

const std::vector<FamilyInfo>& family_catalog() {
  static const std::vector<FamilyInfo> catalog = {
      {"minkowski-parallel",
       "flat alpha with a parallel 1-form; F is a Minkowski norm",
       {"alpha = |y|", "beta = y^1", "F = alpha^(1-m) beta^m"},
       {"m: exponent, m != 0, 1 (-1)"},
       {"G = 0, R = 0, K = 0", "b_{i|j} = 0, ||beta||_alpha = 1"}},
      {"minkowski-conformal",
       "conformally deformed Minkowski pair, locally Minkowskian after the b-deformation",
       {"c = exp(x^1)", "alpha = c^(-m) |y|", "beta = c^(1-m) y^1",
        "deformation: alpha~ = b^m alpha = |y|, beta~ = b^(m-1) beta = y^1"},
       {"m: exponent, m != -1, 0, 1 (2)", "c: conformal factor, only 'exp' (exp)",
        "perturb: adds perturb * x^1 y^2 to beta/c^(1-m), a non-conformal negative control (0)"},
       {"R = 0, W = 0, K = 0",
        "r_ij = 2 tau [m b^2 a_ij - (m+1) b_i b_j] - (m+1)/((m-1) b^2)(b_i s_j + b_j s_i) with tau = 0",
        "t^k_k = -2 s_k s^k / b^2"}},
      {"cfc-kropina",
       "Kropina metric of constant flag curvature 1/4 over the unit sphere (odd n)",
       {"alpha = sqrt((1+|x|^2)|y|^2 - <x,y>^2) / (1+|x|^2)", "beta = <Qx + e, y> / (1+|x|^2)",
        "Q skew, |e| = 1, Qe = 0, Q Q^T = I - e e^T", "chart |x| < 0.8"},
       {"Q, e: skew matrix and unit vector (block rotations [[0,1],[-1,0]], e = e_n)",
        "perturb: adds perturb * x to Qx + e and renormalizes to unit length (0)",
        "radius: chart radius, at most 0.8 (0.8)"},
       {"K = 1/4", "alpha has constant sectional curvature 1, lambda = 1", "r_00 = 0, t^l_l = 1 - n",
        "K = s^2 + (4 s^2 - 1) t^l_l / (4(n-1)) = -t^l_l / (4(n-1)) = lambda / 4",
        "not projectively flat (Douglas curvature nonzero)"}},
      {"warped-kropina",
       "Kropina metric over a warped product; projectively flat iff the base is flat",
       {"alpha^2 = (y^1)^2 + h(x^1)^2 alpha~^2", "beta = y^1",
        "b_{i|j} = eps (a_ij - b_i b_j), eps = h'/h, eps_i = u b_i, u = (h'/h)'",
        "lambda = -u - eps^2 = -h''/h",
        "K = -(beta/alpha)^6 { h''/h + 3 h'^2 (alpha~/alpha)^2 }", "chart [-1, 1]^n"},
       {"h: warping function exp | cosh | poly (1 + x^2/2) (exp)",
        "base: flat | sphere, alpha~^2 = 4|y~|^2/(1+|x~|^2)^2 (flat)"},
       {"flat base: W = 0, D = 0, K as above",
        "K = s^6 [eps^2 (3 s^2 - 4) - u]",
        "R^i_k = -eps^2 (alpha^2 delta - y^i y_k) - u (alpha^2 b^i b_k + beta^2 delta - beta y^i b_k - beta y_k b^i)",
        "sphere base: negative control, W != 0"}},
      {"projflat-eta",
       "projectively flat Kropina metric perturbed by a closed 1-form",
       {"F = |y|^2 / y^1 + eta, eta = k <x, y>", "alpha^2 = |y|^2 + eta y^1, beta = y^1",
        "chart |x| < 0.5"},
       {"k: coefficient of eta, |k| <= 1 (1)"},
       {"G^i = P y^i in this chart", "K = (3/4) k^2 |y|^4 (y^1)^4 / (eta y^1 + |y|^2)^4"}},
      {"randers-lift",
       "Randers metric built from a unit-length Kropina pair",
       {"abar^2 = ((1 - bb^2) alpha^2 + bb^2 beta^2) / (1 - bb^2)^2",
        "betabar = -bb beta / (1 - bb^2)", "Fbar = abar + betabar",
        "Fbar -> F/2 as bb -> 1"},
       {"base: cfc-kropina | warped-kropina | minkowski-parallel (cfc-kropina)",
        "b_bar: constant in (0, 1) (0.5)"},
       {"||betabar||_abar = bb", "Weyl residual recorded, not asserted"}},
  };
  return catalog;
}

const FamilyInfo& family_info(const std::string& name) {
  for (const auto& f : family_catalog()) {
    if (f.name == name) return f;
  }
  throw ConfigError("unknown model family '" + name + "'");
}

SampleBatch sample(const MetricModel& model, std::uint64_t seed, int count,
                   int max_attempts_per_point) {
  if (count < 1) throw ConfigError("sample count must be at least 1");
  const int n = model.dim;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-model.box, model.box);
  std::normal_distribution<double> normal(0.0, 1.0);
  SampleBatch batch;
  batch.seed = seed;
  batch.points.reserve(count);
  std::vector<double> x(n), y(n);
  for (int p = 0; p < count; ++p) {
    int attempts = 0, domain_rejects = 0, cone_rejects = 0;
    bool accepted = false;
    while (!accepted) {
      if (++attempts > max_attempts_per_point) {
        std::ostringstream os;
        os << model.spec.family << ": no admissible sample after " << max_attempts_per_point
           << " attempts for point " << p << " (domain rejections " << domain_rejects
           << ", cone rejections " << cone_rejects << ")";
        throw SamplingError(os.str());
      }
      for (auto& v : x) v = box(rng);
      if (model.pair.alpha.domain && !model.pair.alpha.domain(x)) {
        ++domain_rejects;
        continue;
      }
      double len = 0.0;
      for (auto& v : y) {
        v = normal(rng);
        len += v * v;
      }
      len = std::sqrt(len);
      if (!(len > 0.0)) continue;
      for (auto& v : y) v /= len;
      if (!admissible(model, x, y)) {
        ++cone_rejects;
        continue;
      }
      accepted = true;
    }
    batch.points.push_back({x, y});
  }
  return batch;
}

}  // namespace finsler
