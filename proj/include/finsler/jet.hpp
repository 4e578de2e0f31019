#pragma once

// Truncated multivariate Taylor jets.
//
// A Jet carries the Taylor coefficients c_a = (d^a f)(p) / a! of a scalar
// function for every multi-index a over `nvars` seed variables with
// |a| <= order. Arithmetic is truncated Taylor algebra, so every partial
// derivative up to the carried order is exact (up to rounding) and Schwarz
// symmetry holds by construction.
//
// Coefficients are stored densely in a graded enumeration of multi-indices,
// shared by all jets over the same number of variables (JetSpace). Because
// the enumeration is graded, a jet of order k is the prefix of length
// JetSpace::size(k), and truncation is a resize.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace finsler {

inline constexpr int kMaxJetOrder = 6;
inline constexpr int kMaxJetVars = 12;

class JetSpace {
 public:
  struct ProductTerm {
    std::uint32_t lhs;
    std::uint32_t rhs;
    std::uint32_t out;
  };

  static constexpr std::uint32_t npos = 0xffffffffu;

  // Shared, lazily built table for `nvars` variables (1..kMaxJetVars).
  // Thread-safe.
  static const JetSpace& get(int nvars);

  int nvars() const { return nvars_; }
  std::size_t size(int order) const { return prefix_[order]; }
  int degree(std::size_t idx) const { return degree_[idx]; }
  std::span<const std::uint8_t> exponent(std::size_t idx) const {
    return {exponents_.data() + idx * nvars_, static_cast<std::size_t>(nvars_)};
  }
  // Index of the exponent vector, or npos when its degree exceeds the cap.
  std::uint32_t index(std::span<const int> exponent) const;
  // Index of exponent(idx) + e_var; npos when degree(idx) == kMaxJetOrder.
  std::uint32_t raised(std::size_t idx, int var) const {
    return raised_[idx * nvars_ + var];
  }
  double factorial(std::size_t idx) const { return factorial_[idx]; }
  // Cauchy product terms whose output has degree <= order.
  std::span<const ProductTerm> products(int order) const {
    return {products_.data(), product_prefix_[order]};
  }

 private:
  explicit JetSpace(int nvars);

  int nvars_;
  std::vector<std::uint8_t> exponents_;
  std::vector<int> degree_;
  std::vector<double> factorial_;
  std::vector<std::uint32_t> raised_;
  std::vector<ProductTerm> products_;
  std::size_t prefix_[kMaxJetOrder + 1] = {};
  std::size_t product_prefix_[kMaxJetOrder + 1] = {};
};

class Jet {
 public:
  // A constant with no seed variables; combines with any jet.
  Jet(double value = 0.0) : coeffs_{value} {}  // NOLINT(google-explicit-constructor)
  Jet(const JetSpace& space, int order, double value);

  static Jet variable(const JetSpace& space, int order, int var, double value);

  bool is_constant() const { return space_ == nullptr; }
  const JetSpace* space() const { return space_; }
  // Constants report kMaxJetOrder: they never limit the result order.
  int order() const { return order_; }
  double value() const { return coeffs_[0]; }
  std::span<const double> coefficients() const { return coeffs_; }

  // Plain partial derivative (not divided by factorials). `vars` lists the
  // differentiation variables with repetition, e.g. {0, 0, 3} for
  // d^3 / dv0^2 dv3. Throws ContractError when vars.size() > order().
  double partial(std::span<const int> vars) const;
  double partial(std::initializer_list<int> vars) const {
    return partial(std::span<const int>(vars.begin(), vars.size()));
  }

  // d/d(var) as a jet of order - 1.
  Jet derivative(int var) const;
  Jet truncated(int order) const;

  Jet& operator+=(const Jet& rhs);
  Jet& operator-=(const Jet& rhs);
  Jet& operator*=(const Jet& rhs);
  Jet& operator/=(const Jet& rhs);
  Jet& operator*=(double rhs);

  friend Jet operator-(const Jet& a);
  friend Jet operator+(const Jet& a, const Jet& b);
  friend Jet operator-(const Jet& a, const Jet& b);
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);
  friend Jet operator*(const Jet& a, double b);
  friend Jet operator*(double a, const Jet& b);

  // Composition with a univariate function given its Taylor coefficients
  // f^(k)(value()) / k! for k = 0..order().
  Jet compose(std::span<const double> taylor) const;

 private:
  const JetSpace* space_ = nullptr;
  int order_ = kMaxJetOrder;
  std::vector<double> coeffs_;
};

Jet sqrt(const Jet& u);
Jet pow(const Jet& u, double p);
Jet exp(const Jet& u);
Jet log(const Jet& u);
Jet sin(const Jet& u);
Jet cos(const Jet& u);
Jet sinh(const Jet& u);
Jet cosh(const Jet& u);
Jet reciprocal(const Jet& u);

inline double value_of(double v) { return v; }
inline double value_of(const Jet& j) { return j.value(); }

// Seeds 2n jets over the variables (x^1..x^n, y^1..y^n): variable i is x^i
// and variable n + i is y^i. Requires 1 <= order <= kMaxJetOrder.
std::vector<Jet> seed(std::span<const double> x, std::span<const double> y,
                      int order);
// Seeds n jets over x alone.
std::vector<Jet> seed_x(std::span<const double> x, int order);

}  // namespace finsler
