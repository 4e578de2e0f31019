#include "finsler/jet.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "finsler/errors.hpp"

namespace finsler {

namespace {

// 3 bits per variable suffices for exponents <= kMaxJetOrder.
std::uint64_t pack(std::span<const std::uint8_t> e) {
  std::uint64_t key = 0;
  for (std::size_t v = 0; v < e.size(); ++v) {
    key |= static_cast<std::uint64_t>(e[v]) << (3 * v);
  }
  return key;
}

void enumerate_degree(int nvars, int var, int remaining,
                      std::vector<std::uint8_t>& current,
                      std::vector<std::uint8_t>& out) {
  if (var == nvars - 1) {
    current[var] = static_cast<std::uint8_t>(remaining);
    out.insert(out.end(), current.begin(), current.end());
    return;
  }
  for (int k = remaining; k >= 0; --k) {
    current[var] = static_cast<std::uint8_t>(k);
    enumerate_degree(nvars, var + 1, remaining - k, current, out);
  }
}

}  // namespace

JetSpace::JetSpace(int nvars) : nvars_(nvars) {
  std::vector<std::uint8_t> current(nvars, 0);
  for (int d = 0; d <= kMaxJetOrder; ++d) {
    enumerate_degree(nvars, 0, d, current, exponents_);
    prefix_[d] = exponents_.size() / nvars;
  }
  const std::size_t count = prefix_[kMaxJetOrder];

  std::unordered_map<std::uint64_t, std::uint32_t> lookup;
  lookup.reserve(count * 2);
  degree_.resize(count);
  factorial_.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto e = exponent(i);
    int deg = 0;
    double fact = 1.0;
    for (auto k : e) {
      deg += k;
      for (int f = 2; f <= k; ++f) fact *= f;
    }
    degree_[i] = deg;
    factorial_[i] = fact;
    lookup.emplace(pack(e), static_cast<std::uint32_t>(i));
  }

  raised_.assign(count * nvars, npos);
  std::vector<std::uint8_t> tmp(nvars);
  for (std::size_t i = 0; i < count; ++i) {
    if (degree_[i] == kMaxJetOrder) continue;
    auto e = exponent(i);
    for (int v = 0; v < nvars; ++v) {
      std::copy(e.begin(), e.end(), tmp.begin());
      ++tmp[v];
      raised_[i * nvars + v] = lookup.at(pack(tmp));
    }
  }

  // For every output multi-index g, all splits g = a + b. Outputs are visited
  // in graded order so the terms for order k form a prefix.
  std::vector<std::uint8_t> a(nvars), b(nvars);
  for (std::size_t out = 0; out < count; ++out) {
    auto g = exponent(out);
    std::fill(a.begin(), a.end(), 0);
    while (true) {
      for (int v = 0; v < nvars; ++v) b[v] = static_cast<std::uint8_t>(g[v] - a[v]);
      products_.push_back({lookup.at(pack(a)), lookup.at(pack(b)),
                           static_cast<std::uint32_t>(out)});
      int v = 0;
      while (v < nvars && a[v] == g[v]) {
        a[v] = 0;
        ++v;
      }
      if (v == nvars) break;
      ++a[v];
    }
    if (out + 1 == count || degree_[out + 1] != degree_[out]) {
      product_prefix_[degree_[out]] = products_.size();
    }
  }
}

const JetSpace& JetSpace::get(int nvars) {
  if (nvars < 1 || nvars > kMaxJetVars) {
    throw ConfigError("jet space: variable count " + std::to_string(nvars) +
                      " outside [1, " + std::to_string(kMaxJetVars) + "]");
  }
  static std::array<std::once_flag, kMaxJetVars + 1> flags;
  static std::array<std::unique_ptr<JetSpace>, kMaxJetVars + 1> spaces;
  std::call_once(flags[nvars], [nvars] { spaces[nvars].reset(new JetSpace(nvars)); });
  return *spaces[nvars];
}

std::uint32_t JetSpace::index(std::span<const int> exponent) const {
  if (static_cast<int>(exponent.size()) != nvars_) {
    throw ContractError("multi-index has wrong number of variables");
  }
  int deg = 0;
  for (int k : exponent) {
    if (k < 0) throw ContractError("negative exponent in multi-index");
    deg += k;
  }
  if (deg > kMaxJetOrder) return npos;
  // Degree-graded blocks are small; a linear scan within the block is fine
  // for the rare callers that extract individual partials.
  for (std::size_t i = deg == 0 ? 0 : prefix_[deg - 1]; i < prefix_[deg]; ++i) {
    auto e = this->exponent(i);
    if (std::equal(e.begin(), e.end(), exponent.begin(),
                   [](std::uint8_t l, int r) { return l == r; })) {
      return static_cast<std::uint32_t>(i);
    }
  }
  return npos;
}

namespace {

int checked_order(int order) {
  if (order < 0 || order > kMaxJetOrder) {
    throw ConfigError("jet order " + std::to_string(order) + " outside [0, " +
                      std::to_string(kMaxJetOrder) + "]");
  }
  return order;
}

}  // namespace

Jet::Jet(const JetSpace& space, int order, double value)
    : space_(&space), order_(checked_order(order)), coeffs_(space.size(order_), 0.0) {
  coeffs_[0] = value;
}

Jet Jet::variable(const JetSpace& space, int order, int var, double value) {
  Jet j(space, order, value);
  if (order >= 1) j.coeffs_[1 + var] = 1.0;  // degree-1 block follows the constant
  return j;
}

double Jet::partial(std::span<const int> vars) const {
  if (static_cast<int>(vars.size()) > order_) {
    throw ContractError("partial of order " + std::to_string(vars.size()) +
                        " requested from a jet of order " + std::to_string(order_));
  }
  if (vars.empty()) return coeffs_[0];
  if (is_constant()) return 0.0;
  std::vector<int> e(space_->nvars(), 0);
  for (int v : vars) {
    if (v < 0 || v >= space_->nvars()) throw ContractError("partial: variable out of range");
    ++e[v];
  }
  const auto idx = space_->index(e);
  return coeffs_[idx] * space_->factorial(idx);
}

Jet Jet::derivative(int var) const {
  if (is_constant()) return Jet(0.0);
  if (order_ == 0) throw ContractError("derivative of an order-0 jet");
  Jet out(*space_, order_ - 1, 0.0);
  const std::size_t n = space_->size(order_ - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = space_->raised(i, var);
    out.coeffs_[i] = (space_->exponent(i)[var] + 1) * coeffs_[src];
  }
  return out;
}

Jet Jet::truncated(int order) const {
  if (is_constant() || order >= order_) return *this;
  Jet out = *this;
  out.order_ = order;
  out.coeffs_.resize(space_->size(order));
  return out;
}

namespace {

void check_spaces(const Jet& a, const Jet& b) {
  if (!a.is_constant() && !b.is_constant() && a.space() != b.space()) {
    throw ContractError("jet arithmetic across different seed spaces");
  }
}

}  // namespace

Jet& Jet::operator+=(const Jet& rhs) {
  check_spaces(*this, rhs);
  if (rhs.is_constant()) {
    coeffs_[0] += rhs.coeffs_[0];
    return *this;
  }
  if (is_constant()) {
    const double c = coeffs_[0];
    *this = rhs;
    coeffs_[0] += c;
    return *this;
  }
  if (rhs.order_ < order_) *this = truncated(rhs.order_);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += rhs.coeffs_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& rhs) { return *this += -rhs; }

Jet& Jet::operator*=(double rhs) {
  for (auto& c : coeffs_) c *= rhs;
  return *this;
}

Jet& Jet::operator*=(const Jet& rhs) {
  *this = *this * rhs;
  return *this;
}

Jet& Jet::operator/=(const Jet& rhs) {
  *this = *this / rhs;
  return *this;
}

Jet operator-(const Jet& a) {
  Jet out = a;
  for (auto& c : out.coeffs_) c = -c;
  return out;
}

Jet operator+(const Jet& a, const Jet& b) {
  Jet out = a;
  out += b;
  return out;
}

Jet operator-(const Jet& a, const Jet& b) {
  Jet out = a;
  out += -b;
  return out;
}

Jet operator*(const Jet& a, double b) {
  Jet out = a;
  out *= b;
  return out;
}

Jet operator*(double a, const Jet& b) { return b * a; }

Jet operator*(const Jet& a, const Jet& b) {
  check_spaces(a, b);
  if (a.is_constant()) return b * a.coeffs_[0];
  if (b.is_constant()) return a * b.coeffs_[0];
  const int order = std::min(a.order_, b.order_);
  Jet out(*a.space_, order, 0.0);
  const double* pa = a.coeffs_.data();
  const double* pb = b.coeffs_.data();
  double* po = out.coeffs_.data();
  for (const auto& t : a.space_->products(order)) po[t.out] += pa[t.lhs] * pb[t.rhs];
  return out;
}

Jet operator/(const Jet& a, const Jet& b) {
  if (b.is_constant()) return a * (1.0 / b.coeffs_[0]);
  return a * reciprocal(b);
}

Jet Jet::compose(std::span<const double> taylor) const {
  if (is_constant()) return Jet(taylor[0]);
  // Horner in h = u - u(0); h has no constant term so h^k only touches
  // degrees >= k.
  Jet h = *this;
  h.coeffs_[0] = 0.0;
  Jet out(*space_, order_, taylor[order_]);
  for (int k = order_ - 1; k >= 0; --k) {
    out = out * h;
    out.coeffs_[0] += taylor[k];
  }
  return out;
}

namespace {

using Taylor = std::array<double, kMaxJetOrder + 1>;

double inverse_factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return 1.0 / f;
}

}  // namespace

Jet pow(const Jet& u, double p) {
  const double u0 = u.value();
  const bool integral = p == std::floor(p);
  if (u0 < 0.0 && !integral) {
    throw DomainError("pow: negative base with non-integer exponent");
  }
  if (u0 == 0.0 && (p < 0.0 || (!integral && u.order() > 0 && !u.is_constant()))) {
    throw DomainError("pow: zero base is not differentiable here");
  }
  Taylor t{};
  double binom = 1.0;  // p (p-1) ... (p-k+1) / k!
  for (int k = 0; k <= u.order(); ++k) {
    t[k] = binom * std::pow(u0, p - k);
    binom *= (p - k) / (k + 1);
    if (integral && p - k <= 0 && p >= 0) {
      for (int r = k + 1; r <= u.order(); ++r) t[r] = 0.0;
      break;
    }
  }
  return u.compose(t);
}

Jet sqrt(const Jet& u) {
  if (u.value() <= 0.0 && !u.is_constant()) throw DomainError("sqrt of a non-positive jet");
  if (u.is_constant()) return Jet(std::sqrt(u.value()));
  return pow(u, 0.5);
}

Jet reciprocal(const Jet& u) {
  const double u0 = u.value();
  if (u0 == 0.0) throw DomainError("reciprocal of a jet with zero value");
  Taylor t{};
  double inv = 1.0 / u0;
  double term = inv;
  for (int k = 0; k <= u.order(); ++k) {
    t[k] = term;
    term *= -inv;
  }
  return u.compose(t);
}

Jet exp(const Jet& u) {
  Taylor t{};
  const double e = std::exp(u.value());
  for (int k = 0; k <= u.order(); ++k) t[k] = e * inverse_factorial(k);
  return u.compose(t);
}

Jet log(const Jet& u) {
  const double u0 = u.value();
  if (u0 <= 0.0) throw DomainError("log of a non-positive jet");
  Taylor t{};
  t[0] = std::log(u0);
  for (int k = 1; k <= u.order(); ++k) {
    t[k] = ((k % 2 == 1) ? 1.0 : -1.0) / (k * std::pow(u0, k));
  }
  return u.compose(t);
}

namespace {

// Derivatives of sin/cos/sinh/cosh cycle through four values.
Jet cyclic(const Jet& u, const std::array<double, 4>& cycle) {
  Taylor t{};
  for (int k = 0; k <= u.order(); ++k) t[k] = cycle[k % 4] * inverse_factorial(k);
  return u.compose(t);
}

}  // namespace

Jet sin(const Jet& u) {
  const double s = std::sin(u.value()), c = std::cos(u.value());
  return cyclic(u, {s, c, -s, -c});
}

Jet cos(const Jet& u) {
  const double s = std::sin(u.value()), c = std::cos(u.value());
  return cyclic(u, {c, -s, -c, s});
}

Jet sinh(const Jet& u) {
  const double s = std::sinh(u.value()), c = std::cosh(u.value());
  return cyclic(u, {s, c, s, c});
}

Jet cosh(const Jet& u) {
  const double s = std::sinh(u.value()), c = std::cosh(u.value());
  return cyclic(u, {c, s, c, s});
}

std::vector<Jet> seed(std::span<const double> x, std::span<const double> y, int order) {
  if (order < 1 || order > kMaxJetOrder) {
    throw ConfigError("seed: order " + std::to_string(order) + " outside [1, " +
                      std::to_string(kMaxJetOrder) + "]");
  }
  if (x.size() != y.size()) throw ContractError("seed: dim(x) != dim(y)");
  const int n = static_cast<int>(x.size());
  const auto& space = JetSpace::get(2 * n);
  std::vector<Jet> out;
  out.reserve(2 * n);
  for (int i = 0; i < n; ++i) out.push_back(Jet::variable(space, order, i, x[i]));
  for (int i = 0; i < n; ++i) out.push_back(Jet::variable(space, order, n + i, y[i]));
  return out;
}

std::vector<Jet> seed_x(std::span<const double> x, int order) {
  if (order < 0 || order > kMaxJetOrder) {
    throw ConfigError("seed_x: order " + std::to_string(order) + " outside [0, " +
                      std::to_string(kMaxJetOrder) + "]");
  }
  const int n = static_cast<int>(x.size());
  const auto& space = JetSpace::get(n);
  std::vector<Jet> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(Jet::variable(space, order, i, x[i]));
  return out;
}

}  // namespace finsler
