#pragma once

// Small dense tensors over a fixed chart dimension n (2 <= n <= 6 in
// practice). Entries are double or Jet.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>
#include <vector>

#include "finsler/errors.hpp"
#include "finsler/jet.hpp"

namespace finsler {

template <class T, int Rank>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(int dim, const T& fill = T{}) : dim_(dim), data_(extent(dim), fill) {}

  int dim() const { return dim_; }
  std::size_t size() const { return data_.size(); }

  template <class... I>
  T& operator()(I... idx) {
    static_assert(sizeof...(I) == Rank, "index count must match tensor rank");
    return data_[flat(idx...)];
  }
  template <class... I>
  const T& operator()(I... idx) const {
    static_assert(sizeof...(I) == Rank, "index count must match tensor rank");
    return data_[flat(idx...)];
  }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

 private:
  static std::size_t extent(int dim) {
    std::size_t e = 1;
    for (int r = 0; r < Rank; ++r) e *= static_cast<std::size_t>(dim);
    return e;
  }
  template <class... I>
  std::size_t flat(I... idx) const {
    std::size_t f = 0;
    ((f = f * dim_ + static_cast<std::size_t>(idx)), ...);
    return f;
  }

  int dim_ = 0;
  std::vector<T> data_;
};

template <class T>
using Vector = Tensor<T, 1>;
template <class T>
using SquareMatrix = Tensor<T, 2>;

template <class T, int R>
Tensor<double, R> values(const Tensor<T, R>& t) {
  Tensor<double, R> out(t.dim());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = value_of(t[i]);
  return out;
}

template <int R>
Tensor<Jet, R> truncated(const Tensor<Jet, R>& t, int order) {
  Tensor<Jet, R> out(t.dim());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i].truncated(order);
  return out;
}

template <int R>
double frobenius(const Tensor<double, R>& t) {
  double s = 0.0;
  for (double v : t) s += v * v;
  return std::sqrt(s);
}

template <int R>
double max_abs(const Tensor<double, R>& t) {
  double m = 0.0;
  for (double v : t) m = std::max(m, std::abs(v));
  return m;
}

template <class T, int R>
Tensor<T, R> operator+(Tensor<T, R> a, const Tensor<T, R>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

template <class T, int R>
Tensor<T, R> operator-(Tensor<T, R> a, const Tensor<T, R>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

template <class T, int R>
Tensor<T, R> operator*(double s, Tensor<T, R> a) {
  for (auto& v : a) v = v * s;
  return a;
}

template <class T>
SquareMatrix<T> identity(int n) {
  SquareMatrix<T> m(n, T(0.0));
  for (int i = 0; i < n; ++i) m(i, i) = T(1.0);
  return m;
}

template <class T>
SquareMatrix<T> matmul(const SquareMatrix<T>& a, const SquareMatrix<T>& b) {
  const int n = a.dim();
  SquareMatrix<T> c(n, T(0.0));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

// 1-norm condition estimate above which invert() refuses.
inline constexpr double kMaxConditionNumber = 1e13;

namespace detail {

inline double norm1(const SquareMatrix<double>& m) {
  double best = 0.0;
  for (int j = 0; j < m.dim(); ++j) {
    double col = 0.0;
    for (int i = 0; i < m.dim(); ++i) col += std::abs(m(i, j));
    best = std::max(best, col);
  }
  return best;
}

}  // namespace detail

// Gauss-Jordan elimination with partial pivoting chosen on value parts. For
// Jet entries the same elimination propagates every derivative of the
// inverse. `name` identifies the tensor in error messages.
template <class T>
SquareMatrix<T> invert(const SquareMatrix<T>& m, const std::string& name = "matrix") {
  const int n = m.dim();
  SquareMatrix<T> a = m;
  SquareMatrix<T> inv = identity<T>(n);
  const double scale = detail::norm1(values(m));
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw SingularMatrixError(name + " is zero or non-finite");
  }
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(value_of(a(r, col))) > std::abs(value_of(a(pivot, col)))) pivot = r;
    }
    if (std::abs(value_of(a(pivot, col))) <= 1e-300 + 1e-15 * scale) {
      throw SingularMatrixError(name + " has a zero pivot in column " + std::to_string(col));
    }
    if (pivot != col) {
      for (int j = 0; j < n; ++j) {
        std::swap(a(pivot, j), a(col, j));
        std::swap(inv(pivot, j), inv(col, j));
      }
    }
    const T p = a(col, col);
    const T rp = T(1.0) / p;
    for (int j = 0; j < n; ++j) {
      a(col, j) = a(col, j) * rp;
      inv(col, j) = inv(col, j) * rp;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const T f = a(r, col);
      if (value_of(f) == 0.0 && std::is_same_v<T, double>) continue;
      for (int j = 0; j < n; ++j) {
        a(r, j) -= f * a(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  const double cond = scale * detail::norm1(values(inv));
  if (!(cond < kMaxConditionNumber)) {
    throw SingularMatrixError(name + " is ill-conditioned (1-norm condition estimate " +
                              std::to_string(cond) + ")");
  }
  return inv;
}

}  // namespace finsler
