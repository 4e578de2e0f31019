#include "finsler/kropina.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "finsler/errors.hpp"

namespace finsler {

namespace {

constexpr double kUnitLengthTol = 1e-10;

// Accumulates the terms of a tensor equation written as sum(terms) = 0 and
// reports max|sum| / max(1, max |term entry|).
template <int R>
class Balance {
 public:
  explicit Balance(int n) : sum_(n, 0.0) {}
  void add(const Tensor<double, R>& term, double sign = 1.0) {
    for (std::size_t e = 0; e < sum_.size(); ++e) sum_[e] += sign * term[e];
    peak_ = std::max(peak_, max_abs(term));
  }
  double residual() const { return max_abs(sum_) / std::max(1.0, peak_); }

 private:
  Tensor<double, R> sum_;
  double peak_ = 0.0;
};

struct PairValues {
  SquareMatrix<double> a;
  Vector<double> b;
};

PairValues pair_values(const MKropinaMetric& M, std::span<const double> x) {
  require_in_domain(M.alpha, x);
  const auto xs = seed_x(x, 0);
  return {values(M.alpha.a(xs)), values(M.beta.b(xs))};
}

double one_form_value(const Vector<double>& b, std::span<const double> y) {
  double v = 0.0;
  for (int i = 0; i < b.dim(); ++i) v += b(i) * y[i];
  return v;
}

void require_kropina(const MKropinaMetric& M, const char* what) {
  if (M.m != -1.0) throw ParameterError(std::string(what) + " needs m = -1");
  if (M.alpha.dim < 3) throw UnsupportedDimensionError(std::string(what) + " needs n >= 3");
}

void require_unit_length(const BetaApparatus& ap, const std::string& name) {
  if (std::abs(ap.b2 - 1.0) > kUnitLengthTol) {
    throw ConstraintError(name + ": ||beta||_alpha = 1 required, found b^2 = " +
                          std::to_string(ap.b2));
  }
}

SquareMatrix<double> outer(const Vector<double>& u, const Vector<double>& v) {
  SquareMatrix<double> out(u.dim());
  for (int i = 0; i < u.dim(); ++i)
    for (int j = 0; j < u.dim(); ++j) out(i, j) = u(i) * v(j);
  return out;
}

Vector<double> contract(const SquareMatrix<double>& m, std::span<const double> y) {
  Vector<double> out(m.dim(), 0.0);
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) out(i) += m(i, j) * y[j];
  return out;
}

Vector<double> raise(const SquareMatrix<double>& a_inv, const Vector<double>& v) {
  Vector<double> out(v.dim(), 0.0);
  for (int i = 0; i < v.dim(); ++i)
    for (int j = 0; j < v.dim(); ++j) out(i) += a_inv(i, j) * v(j);
  return out;
}

Vector<double> as_vector(std::span<const double> y) {
  Vector<double> v(static_cast<int>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) v(static_cast<int>(i)) = y[i];
  return v;
}

// Terms on the right of the alpha-curvature relation, each as a (1,1)
// tensor R^i_k. `projective` selects the sigma_i of the projectively flat
// characterization.
std::vector<SquareMatrix<double>> alpha_curvature_terms(const BetaApparatus& ap,
                                                        std::span<const double> y, double lambda,
                                                        bool projective) {
  const int n = ap.n;
  const double nm1 = n - 1.0;
  const double alpha2 = ap.alpha(y) * ap.alpha(y);

  Vector<double> sigma(n, 0.0);
  for (int i = 0; i < n; ++i) {
    sigma(i) = 2.0 * ((n - 3.0) * ap.s_sq - nm1 * lambda - ap.t_trace) * ap.b_lower(i);
    double extra = 0.0;
    if (projective) {
      for (int l = 0; l < n; ++l) extra += ap.b_upper(l) * ap.s_i_cov(i, l);
      extra -= 2.0 * ap.s_sq * ap.b_lower(i);
    } else {
      for (int p = 0; p < n; ++p)
        for (int l = 0; l < n; ++l) {
          extra += ap.b_upper(p) * ap.b_upper(l) * (ap.r_cov(l, p, i) - ap.r_cov(l, i, p));
        }
    }
    sigma(i) += 2.0 * nm1 * extra;
  }

  SquareMatrix<double> X(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double rr = 0.0, br = 0.0;
      for (int l = 0; l < n; ++l) {
        rr += ap.r(i, l) * ap.r_up(l, k);
        br += ap.b_upper(l) * ap.r_cov(l, k, i);
      }
      X(i, k) = 0.5 * (rr + br) + ap.b_lower(k) * sigma(i) / (4.0 * nm1) + ap.s_i_cov(i, k);
    }
  SquareMatrix<double> B(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) B(i, k) = X(i, k) + X(k, i);

  const auto yv = as_vector(y);
  const auto y_low = ap.lower(y);
  const auto B_0 = contract(B, y);  // B_k0 = B_0k by symmetry
  double B00 = 0.0;
  for (int i = 0; i < n; ++i) B00 += B_0(i) * y[i];
  const auto B_up0 = raise(ap.a_inv, B_0);
  const auto r_0 = contract(ap.r, y);
  const auto r_up0 = raise(ap.a_inv, r_0);
  const double r00 = ap.r00(y);
  const auto I = identity<double>(n);

  std::vector<SquareMatrix<double>> terms;
  const double c = ((n - 3.0) * ap.s_sq - ap.t_trace) / nm1;
  terms.push_back(c * (alpha2 * I - outer(yv, y_low)));
  terms.push_back(-B00 * I);
  terms.push_back(-alpha2 * matmul(ap.a_inv, B));
  terms.push_back(outer(yv, B_0));
  terms.push_back(outer(B_up0, y_low));
  terms.push_back(outer(r_up0, r_0));
  terms.push_back(-r00 * ap.r_up);
  return terms;
}

SquareMatrix<double> sum_terms(const std::vector<SquareMatrix<double>>& terms, int n) {
  SquareMatrix<double> s(n, 0.0);
  for (const auto& t : terms) s = s + t;
  return s;
}

// Residual of the alpha-curvature relation and the lambda used.
std::pair<double, double> alpha_curvature_balance(const MKropinaMetric& M,
                                                  const ThmResidualConfig& cfg,
                                                  const BetaApparatus& ap,
                                                  std::span<const double> x,
                                                  std::span<const double> y, bool projective) {
  const int n = ap.n;
  const auto Rbar = riemann_curvature_alpha(M.alpha, x, y);
  double lambda = 0.0;
  if (cfg.lambda_mode == ThmResidualConfig::LambdaMode::model_supplied) {
    lambda = *cfg.lambda;
  } else {
    const auto rhs0 = sum_terms(alpha_curvature_terms(ap, y, 0.0, projective), n);
    const auto rhs1 = sum_terms(alpha_curvature_terms(ap, y, 1.0, projective), n);
    const auto C = rhs1 - rhs0;
    const auto target = Rbar - rhs0;
    double cc = 0.0, ct = 0.0;
    for (std::size_t e = 0; e < C.size(); ++e) {
      cc += C[e] * C[e];
      ct += C[e] * target[e];
    }
    const double alpha2 = ap.alpha(y) * ap.alpha(y);
    if (!(std::sqrt(cc) > 1e-12 * alpha2)) {
      throw IndeterminateError(M.name + ": lambda does not enter the curvature relation at this point");
    }
    lambda = ct / cc;
  }
  Balance<2> bal(n);
  bal.add(Rbar);
  for (const auto& t : alpha_curvature_terms(ap, y, lambda, projective)) bal.add(t, -1.0);
  return {bal.residual(), lambda};
}

}  // namespace

void validate(const MKropinaMetric& M) {
  if (!std::isfinite(M.m) || M.m == 0.0 || M.m == 1.0) {
    throw ParameterError(M.name + ": exponent m must be finite and not 0 or 1");
  }
  if (M.alpha.dim < 2 || M.alpha.dim != M.beta.dim) {
    throw ContractError(M.name + ": alpha and beta dimensions disagree");
  }
  if (!(M.s_min > 0.0)) throw ParameterError(M.name + ": s_min must be positive");
}

double b_squared(const MKropinaMetric& M, std::span<const double> x) {
  const auto p = pair_values(M, x);
  const auto b_up = raise(invert(p.a, M.alpha.name + " metric a_ij"), p.b);
  double b2 = 0.0;
  for (int i = 0; i < p.b.dim(); ++i) b2 += b_up(i) * p.b(i);
  return b2;
}

double denom_min(const MKropinaMetric& M, double b2) {
  return M.denom_factor * (std::abs(M.m) * b2 + std::abs(M.m + 1.0));
}

std::string cone_violation(const MKropinaMetric& M, std::span<const double> x,
                           std::span<const double> y) {
  if (static_cast<int>(x.size()) != M.alpha.dim || static_cast<int>(y.size()) != M.alpha.dim) {
    return "dim(x) = dim(y) = " + std::to_string(M.alpha.dim);
  }
  if (M.alpha.domain && !M.alpha.domain(x)) return "x inside the chart domain";
  if (M.cone) return M.cone(x, y) ? "" : "(x, y) inside the cone of the undeformed metric";
  const auto p = pair_values(M, x);
  const double alpha = alpha_norm(p.a, y);
  if (!(alpha > 0.0)) return "alpha(x, y) > 0";
  const double s = one_form_value(p.b, y) / alpha;
  if (!(s >= M.s_min)) return "beta/alpha >= " + std::to_string(M.s_min);
  const auto b_up = raise(invert(p.a, M.alpha.name + " metric a_ij"), p.b);
  double b2 = 0.0;
  for (int i = 0; i < p.b.dim(); ++i) b2 += b_up(i) * p.b(i);
  if (!(std::abs(M.m * b2 - (M.m + 1.0) * s * s) >= denom_min(M, b2))) {
    return "|m b^2 - (m+1) s^2| >= " + std::to_string(denom_min(M, b2));
  }
  return "";
}

bool in_cone(const MKropinaMetric& M, std::span<const double> x, std::span<const double> y) {
  return cone_violation(M, x, y).empty();
}

FinslerMetric as_finsler(const MKropinaMetric& M) {
  validate(M);
  FinslerMetric F;
  F.dim = M.alpha.dim;
  F.name = M.name;
  // For m > 1 the fundamental tensor is indefinite on the whole cone.
  F.require_positive_definite = M.m < 1.0;
  F.admissible = [M](std::span<const double> x, std::span<const double> y) {
    return in_cone(M, x, y);
  };
  F.F = [M](std::span<const Jet> x, std::span<const Jet> y) {
    const int n = M.alpha.dim;
    const auto a = M.alpha.a(x);
    const auto b = M.beta.b(x);
    Jet a2(0.0), beta(0.0);
    for (int i = 0; i < n; ++i) {
      beta += b(i) * y[i];
      for (int j = 0; j < n; ++j) a2 += a(i, j) * y[i] * y[j];
    }
    if (M.m == -1.0) return a2 / beta;
    return pow(a2, 0.5 * (1.0 - M.m)) * pow(beta, M.m);
  };
  return F;
}

double metric_value(const MKropinaMetric& M, std::span<const double> x, std::span<const double> y) {
  return metric_value(as_finsler(M), x, y);
}

Spray spray_closed_form(const MKropinaMetric& M) {
  validate(M);
  Spray S;
  S.dim = M.alpha.dim;
  S.seed_overhead = 1;
  S.name = M.name + " closed-form spray";
  S.admissible = [M](std::span<const double> x, std::span<const double> y) {
    return in_cone(M, x, y);
  };
  S.scale = [M](std::span<const double> x, std::span<const double> y) {
    return metric_value(M, x, y);
  };
  S.coefficients = [M](std::span<const double> x, std::span<const double> y, int order) {
    const int n = M.alpha.dim;
    const double m = M.m;
    const auto seeds = seed(x, y, order + 1);
    std::span<const Jet> xs(seeds.data(), n), ys(seeds.data() + n, n);
    const auto J = beta_jets(M.alpha, M.beta, xs);

    Jet a2(0.0), beta(0.0), b2(0.0), r00(0.0), s0(0.0);
    std::vector<Jet> b_up(n, Jet(0.0)), s_up0(n, Jet(0.0)), s_low0(n, Jet(0.0));
    for (int i = 0; i < n; ++i) {
      beta += J.b(i) * ys[i];
      for (int j = 0; j < n; ++j) {
        a2 += J.a(i, j) * ys[i] * ys[j];
        b_up[i] += J.a_inv(i, j) * J.b(j);
        r00 += J.db(i, j) * ys[i] * ys[j];
        s_low0[i] += 0.5 * (J.db(i, j) - J.db(j, i)) * ys[j];
      }
    }
    for (int i = 0; i < n; ++i) {
      b2 += b_up[i] * J.b(i);
      s0 += b_up[i] * s_low0[i];  // s_0 = b^i s_ij y^j
      for (int k = 0; k < n; ++k) s_up0[i] += J.a_inv(i, k) * s_low0[k];
    }
    const Jet alpha = sqrt(a2);
    const Jet s = beta / alpha;
    const Jet denom = m * b2 - (m + 1.0) * s * s;
    const Jet c1 = (-m / (m - 1.0)) * a2 / beta;
    const Jet c2 = (m / (2.0 * (m - 1.0))) * ((m - 1.0) * s * r00 + 2.0 * m * alpha * s0) / (s * denom);
    const Jet ratio = 2.0 * s / alpha;

    std::vector<Jet> G(n);
    for (int i = 0; i < n; ++i) {
      Jet ga(0.0);
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) ga += J.gamma(i, j, k) * ys[j] * ys[k];
      G[i] = (0.5 * ga + c1 * s_up0[i] + c2 * (b_up[i] - ratio * ys[i])).truncated(order);
    }
    return G;
  };
  return S;
}

std::vector<double> spray_closed_form(const MKropinaMetric& M, std::span<const double> x,
                                      std::span<const double> y) {
  return spray_values(spray_closed_form(M), x, y);
}

Deformation deform(const MKropinaMetric& M, std::span<const double> x) {
  const auto p = pair_values(M, x);
  const double b2 = b_squared(M, x);
  if (!(b2 > 0.0)) throw DegenerateMetricError(M.name + ": ||beta||_alpha = 0, cannot deform");
  Deformation d;
  d.a = std::pow(b2, M.m) * p.a;
  d.b = std::pow(b2, 0.5 * (M.m - 1.0)) * p.b;
  return d;
}

MKropinaMetric deformed(const MKropinaMetric& M) {
  validate(M);
  MKropinaMetric D = M;
  D.name = M.name + " (deformed)";
  const double m = M.m;
  const auto length2 = [M](std::span<const Jet> x) {
    const auto a = M.alpha.a(x);
    const auto a_inv = invert(a, M.alpha.name + " metric a_ij");
    const auto b = M.beta.b(x);
    Jet b2(0.0);
    for (int i = 0; i < M.alpha.dim; ++i)
      for (int j = 0; j < M.alpha.dim; ++j) b2 += a_inv(i, j) * b(i) * b(j);
    if (!(b2.value() > 0.0)) throw DegenerateMetricError(M.name + ": ||beta||_alpha = 0, cannot deform");
    return b2;
  };
  D.alpha.name = M.alpha.name + "~";
  D.alpha.a = [M, m, length2](std::span<const Jet> x) {
    auto a = M.alpha.a(x);
    const Jet f = pow(length2(x), m);
    for (auto& e : a) e = f * e;
    return a;
  };
  D.beta.name = M.beta.name + "~";
  D.beta.b = [M, m, length2](std::span<const Jet> x) {
    auto b = M.beta.b(x);
    const Jet f = pow(length2(x), 0.5 * (m - 1.0));
    for (auto& e : b) e = f * e;
    return b;
  };
  D.cone = [M](std::span<const double> x, std::span<const double> y) { return in_cone(M, x, y); };
  return D;
}

RandersData randers_from_kropina(const MKropinaMetric& M, double b_bar, std::span<const double> x,
                                 std::span<const double> y) {
  if (M.m != -1.0) throw ParameterError("Randers correspondence needs a Kropina metric (m = -1)");
  if (!(b_bar > 0.0 && b_bar < 1.0)) {
    throw ParameterError("Randers correspondence needs 0 < b_bar < 1, got " + std::to_string(b_bar));
  }
  const double b2 = b_squared(M, x);
  if (std::abs(b2 - 1.0) > kUnitLengthTol) {
    throw ConstraintError(M.name + ": Randers correspondence needs ||beta||_alpha = 1");
  }
  const auto p = pair_values(M, x);
  const int n = M.alpha.dim;
  const double k = 1.0 - b_bar * b_bar;
  SquareMatrix<double> a_bar(n);
  Vector<double> bb(n);
  for (int i = 0; i < n; ++i) {
    bb(i) = -b_bar * p.b(i) / k;
    for (int j = 0; j < n; ++j) a_bar(i, j) = (k * p.a(i, j) + b_bar * b_bar * p.b(i) * p.b(j)) / (k * k);
  }
  RandersData out;
  out.alpha_bar = alpha_norm(a_bar, y);
  out.beta_bar = one_form_value(bb, y);
  out.F_bar = out.alpha_bar + out.beta_bar;
  const auto bb_up = raise(invert(a_bar, "Randers metric abar_ij"), bb);
  double norm2 = 0.0;
  for (int i = 0; i < n; ++i) norm2 += bb_up(i) * bb(i);
  out.beta_bar_norm = std::sqrt(norm2);
  return out;
}

FinslerMetric randers_lift(const MKropinaMetric& M, double b_bar) {
  if (M.m != -1.0) throw ParameterError("Randers lift needs a Kropina metric (m = -1)");
  if (!(b_bar > 0.0 && b_bar < 1.0)) {
    throw ParameterError("Randers lift needs 0 < b_bar < 1, got " + std::to_string(b_bar));
  }
  FinslerMetric F;
  F.dim = M.alpha.dim;
  F.name = M.name + " Randers lift";
  F.admissible = [M](std::span<const double> x, std::span<const double> y) {
    return in_cone(M, x, y);
  };
  F.F = [M, b_bar](std::span<const Jet> x, std::span<const Jet> y) {
    const int n = M.alpha.dim;
    const auto a = M.alpha.a(x);
    const auto b = M.beta.b(x);
    Jet a2(0.0), beta(0.0);
    for (int i = 0; i < n; ++i) {
      beta += b(i) * y[i];
      for (int j = 0; j < n; ++j) a2 += a(i, j) * y[i] * y[j];
    }
    const double k = 1.0 - b_bar * b_bar;
    return a2 / (sqrt(k * a2 + (b_bar * b_bar) * beta * beta) + b_bar * beta);
  };
  return F;
}

void validate(const ThmResidualConfig& cfg) {
  if (cfg.lambda_mode == ThmResidualConfig::LambdaMode::model_supplied && !cfg.lambda) {
    throw ConfigError("model-supplied lambda mode without a lambda value");
  }
}

ResidualMap scalar_flag_curvature_residuals(const MKropinaMetric& M, const ThmResidualConfig& cfg,
                                            std::span<const double> x, std::span<const double> y) {
  require_kropina(M, "scalar flag curvature residuals");
  validate(cfg);
  const auto ap = apparatus(M.alpha, M.beta, x);
  require_unit_length(ap, M.name);
  const int n = ap.n;
  const double nm1 = n - 1.0;
  ResidualMap out;

  {
    Balance<2> bal(n);
    bal.add(ap.t);
    bal.add(outer(ap.b_lower, ap.t_i), -1.0);
    bal.add(outer(ap.t_i, ap.b_lower), -1.0);
    bal.add(outer(ap.s_i, ap.s_i));
    bal.add(((ap.t_trace + 2.0 * ap.s_sq) / nm1) * ap.a, -1.0);
    bal.add(((ap.t_trace - (n - 3.0) * ap.s_sq) / nm1) * outer(ap.b_lower, ap.b_lower));
    out["t_relation"] = bal.residual();
  }
  {
    const double c = (ap.t_trace - (n - 3.0) * ap.s_sq) / nm1;
    // X_ijk pieces, antisymmetrized in (i, j).
    Tensor<double, 3> t1(n), t2(n), t3(n), t4(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          t1(i, j, k) = (ap.t_i(j) - c * ap.b_lower(j)) * ap.a(i, k) -
                        (ap.t_i(i) - c * ap.b_lower(i)) * ap.a(j, k);
          t2(i, j, k) = ap.r(i, k) * ap.s_i(j) - ap.r(j, k) * ap.s_i(i);
          t3(i, j, k) = ap.q(k, i) * ap.b_lower(j) - ap.q(k, j) * ap.b_lower(i);
          t4(i, j, k) = ap.s_i_cov(j, k) * ap.b_lower(i) - ap.s_i_cov(i, k) * ap.b_lower(j);
        }
    Balance<3> bal(n);
    bal.add(ap.s_cov);
    bal.add(t1, -1.0);
    bal.add(t2, -1.0);
    bal.add(t3, -1.0);
    bal.add(t4, -1.0);
    out["covariant_s_relation"] = bal.residual();
  }
  {
    SquareMatrix<double> t1(n, 0.0), t2(n, 0.0), rr = matmul(ap.r, ap.r_up);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        double bb_i = 0.0, bb_k = 0.0, bl = 0.0;
        for (int p = 0; p < n; ++p)
          for (int l = 0; l < n; ++l) {
            const double w = ap.b_upper(p) * ap.b_upper(l);
            bb_i += w * (ap.r_cov(l, p, i) - ap.r_cov(l, i, p));
            bb_k += w * (ap.r_cov(l, p, k) - ap.r_cov(l, k, p));
          }
        for (int l = 0; l < n; ++l) bl += ap.b_upper(l) * (ap.r_cov(l, k, i) + ap.r_cov(l, i, k));
        t1(i, k) = 0.5 * (bb_i * ap.b_lower(k) - bb_k * ap.b_lower(i));
        t2(i, k) = -0.5 * bl;
      }
    Balance<2> bal(n);
    bal.add(ap.q);
    bal.add(t1, -1.0);
    bal.add(t2, -1.0);
    bal.add(rr);
    bal.add(ap.s_i_cov);
    out["q_relation"] = bal.residual();
  }
  const auto [res, lambda] = alpha_curvature_balance(M, cfg, ap, x, y, false);
  out["alpha_curvature_relation"] = res;
  out["lambda"] = lambda;
  return out;
}

ResidualMap projective_flatness_residuals(const MKropinaMetric& M, const ThmResidualConfig& cfg,
                                          std::span<const double> x, std::span<const double> y) {
  require_kropina(M, "projective flatness residuals");
  validate(cfg);
  const auto ap = apparatus(M.alpha, M.beta, x);
  require_unit_length(ap, M.name);
  const int n = ap.n;
  ResidualMap out;
  {
    Balance<2> bal(n);
    bal.add(ap.s);
    bal.add(outer(ap.b_lower, ap.s_i), -1.0);
    bal.add(outer(ap.s_i, ap.b_lower));
    out["douglas_condition"] = bal.residual();
  }
  {
    SquareMatrix<double> t1(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        double v = 0.0;
        for (int l = 0; l < n; ++l) {
          v += ap.b_upper(l) * (ap.b_lower(k) * ap.s_i_cov(i, l) - ap.b_lower(i) * ap.s_i_cov(k, l) -
                                ap.r_cov(l, k, i) - ap.r_cov(l, i, k));
        }
        t1(i, k) = 0.5 * v;
      }
    Balance<2> bal(n);
    bal.add(ap.q);
    bal.add(t1, -1.0);
    bal.add(matmul(ap.r, ap.r_up));
    bal.add(ap.s_i_cov);
    out["projective_q_relation"] = bal.residual();
  }
  const auto [res, lambda] = alpha_curvature_balance(M, cfg, ap, x, y, true);
  out["alpha_curvature_relation"] = res;
  out["lambda"] = lambda;
  return out;
}

ResidualMap concircular_residuals(const MKropinaMetric& M, std::span<const double> x,
                                  std::span<const double> y, double structure_tol) {
  require_kropina(M, "concircular residuals");
  require_in_domain(M.alpha, x);
  const int n = M.alpha.dim;
  const auto xs = seed_x(x, 2);
  const auto J = beta_jets(M.alpha, M.beta, xs);

  // eps as a jet: least-squares coefficient of db against P = a - b b.
  SquareMatrix<Jet> P(n);
  Jet num(0.0), den(0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      P(i, j) = J.a(i, j).truncated(1) - J.b(i).truncated(1) * J.b(j).truncated(1);
      num += J.db(i, j) * P(i, j);
      den += P(i, j) * P(i, j);
    }
  if (!(den.value() > 1e-24)) throw StructureError(M.name + ": a_ij - b_i b_j vanishes");
  const Jet eps = num / den;

  ResidualMap out;
  const auto db = values(J.db);
  const auto Pv = values(P);
  {
    Balance<2> bal(n);
    bal.add(db);
    bal.add(eps.value() * Pv, -1.0);
    out["concircular_relation"] = bal.residual();
  }
  if (out["concircular_relation"] > structure_tol) {
    throw StructureError(M.name + ": b_{i|j} is not proportional to a_ij - b_i b_j (residual " +
                         std::to_string(out["concircular_relation"]) + ")");
  }
  const auto b = values(J.b);
  Vector<double> grad(n);
  double gb = 0.0, bb = 0.0;
  for (int i = 0; i < n; ++i) {
    grad(i) = eps.derivative(i).value();
    gb += grad(i) * b(i);
    bb += b(i) * b(i);
  }
  const double u = gb / bb;
  {
    Balance<1> bal(n);
    bal.add(grad);
    bal.add(u * b, -1.0);
    out["gradient_relation"] = bal.residual();
  }
  out["epsilon"] = eps.value();
  out["u"] = u;

  const auto ap = apparatus(M.alpha, M.beta, x);
  require_unit_length(ap, M.name);
  const auto Rbar = riemann_curvature_alpha(M.alpha, x, y);
  const auto yv = as_vector(y);
  const auto y_low = ap.lower(y);
  const double alpha = ap.alpha(y);
  const double alpha2 = alpha * alpha;
  const double beta = ap.beta(y);
  const auto I = identity<double>(n);
  const double e2 = eps.value() * eps.value();
  {
    Balance<2> bal(n);
    bal.add(Rbar);
    bal.add(e2 * (alpha2 * I - outer(yv, y_low)));
    bal.add(u * alpha2 * outer(ap.b_upper, ap.b_lower));
    bal.add(u * beta * beta * I);
    bal.add(-u * beta * outer(yv, ap.b_lower));
    bal.add(-u * beta * outer(ap.b_upper, y_low));
    out["concircular_curvature_relation"] = bal.residual();
  }
  const double s = beta / alpha;
  const double k_formula = std::pow(s, 6) * (e2 * (3.0 * s * s - 4.0) - u);
  const double k_measured = flag_curvature(as_finsler(M), x, y);
  out["k_formula"] = k_formula;
  out["k_measured"] = k_measured;
  out["k_error"] = relative_gap(k_measured, k_formula);
  return out;
}

double kropina_flag_curvature(const BetaApparatus& ap, std::span<const double> y, double lambda) {
  const int n = ap.n;
  const double alpha = ap.alpha(y);
  const double alpha2 = alpha * alpha;
  const double s = ap.beta(y) / alpha;
  const double s2 = s * s;
  const double r00 = ap.r00(y);
  const double s0 = ap.s0(y);
  const double inner = 3.0 * s2 / alpha2 * r00 * r00 + s / alpha * (ap.r00_0(y) + 6.0 * r00 * s0) +
                       3.0 * ap.q00(y) + 3.0 * s0 * s0 - ap.radial_r_defect(y);
  const double tail = ((4.0 * s2 - 1.0) * ap.t_trace -
                       2.0 * (1.0 + 2.0 * n * s2 - 6.0 * s2) * ap.s_sq) /
                      (4.0 * (n - 1.0));
  return lambda * s2 + s2 / alpha2 * inner + tail;
}

double kropina_flag_curvature(const MKropinaMetric& M, std::span<const double> x,
                              std::span<const double> y, double lambda) {
  require_kropina(M, "Kropina flag curvature formula");
  const auto ap = apparatus(M.alpha, M.beta, x);
  require_unit_length(ap, M.name);
  return kropina_flag_curvature(ap, y, lambda);
}

ResidualMap mkropina_rigidity_residuals(const MKropinaMetric& M, std::span<const double> x,
                                        bool deform_first) {
  validate(M);
  if (M.m == -1.0) throw ParameterError("rigidity residuals apply to m != -1");
  const MKropinaMetric W = deform_first ? deformed(M) : M;
  const auto ap = apparatus(W.alpha, W.beta, x);
  const int n = ap.n;
  const double m = M.m;
  const auto bb = outer(ap.b_lower, ap.b_lower);
  const auto C = 2.0 * (m * ap.b2 * ap.a - (m + 1.0) * bb);
  const auto sym = (-(m + 1.0) / ((m - 1.0) * ap.b2)) *
                   (outer(ap.b_lower, ap.s_i) + outer(ap.s_i, ap.b_lower));
  const auto target = ap.r - sym;
  double cc = 0.0, ct = 0.0;
  for (std::size_t e = 0; e < C.size(); ++e) {
    cc += C[e] * C[e];
    ct += C[e] * target[e];
  }
  if (!(cc > 1e-24)) throw IndeterminateError(M.name + ": tau does not enter the r_ij relation");
  const double tau = ct / cc;
  ResidualMap out;
  out["tau"] = tau;
  {
    Balance<2> bal(n);
    bal.add(ap.r);
    bal.add(tau * C, -1.0);
    bal.add(sym, -1.0);
    out["r_form_relation"] = bal.residual();
  }
  const double rhs = -2.0 * ap.s_sq / ap.b2;
  out["trace_relation"] =
      std::abs(ap.t_trace - rhs) / std::max({1.0, std::abs(ap.t_trace), std::abs(rhs)});
  return out;
}

}  // namespace finsler
