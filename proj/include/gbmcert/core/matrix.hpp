#pragma once

// Dense row-major matrices and vectors.  Row index = output, column index =
// input, so a growth bound matrix entry (i, j) bounds d out_i / d in_j.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "gbmcert/core/error.hpp"
#include "gbmcert/core/scalar.hpp"

namespace gbmcert {

template <class T>
class BasicVector {
 public:
  using value_type = T;

  BasicVector() = default;
  explicit BasicVector(std::size_t n, T fill = T{}) : data_(n, fill) {}
  explicit BasicVector(std::vector<T> data) : data_(std::move(data)) {}
  BasicVector(std::initializer_list<T> init) : data_(init) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> span() noexcept { return data_; }
  std::span<const T> span() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  friend bool operator==(const BasicVector&, const BasicVector&) = default;

 private:
  std::vector<T> data_;
};

template <class T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    require_dims(data_.size() == rows_ * cols_, "matrix: data length != rows * cols");
  }
  BasicMatrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      require_dims(r.size() == cols_, "matrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static BasicMatrix identity(std::size_t n) {
    BasicMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1.0};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<T> span() noexcept { return data_; }
  std::span<const T> span() const noexcept { return data_; }

  friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using Vector = BasicVector<double>;
using CMatrix = BasicMatrix<std::complex<double>>;

template <class T>
T dot(std::span<const T> a, std::span<const T> b) {
  T acc{};
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <class T>
T sum(std::span<const T> xs) {
  T acc{};
  for (const T& x : xs) acc += x;
  return acc;
}

inline bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

template <class T>
BasicVector<T> mat_vec(const BasicMatrix<T>& m, const BasicVector<T>& v) {
  require_dims(m.cols() == v.size(), "mat_vec: matrix has " + std::to_string(m.cols()) +
                                         " columns but vector has length " +
                                         std::to_string(v.size()));
  BasicVector<T> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), v.span());
  return out;
}

inline Vector checked_mat_vec(const Matrix& m, const Vector& v) {
  Vector out = mat_vec(m, v);
  if (!all_finite(out.span())) fail(ErrorKind::Numeric, "mat_vec: non-finite result");
  return out;
}

template <class T>
BasicMatrix<T> mat_mul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  require_dims(a.cols() == b.rows(), "mat_mul: inner dimensions differ");
  BasicMatrix<T> out(a.rows(), b.cols());
  std::vector<T> col(b.rows());
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t k = 0; k < b.rows(); ++k) col[k] = b(k, c);
    for (std::size_t r = 0; r < a.rows(); ++r) {
      out(r, c) = dot(a.row(r), std::span<const T>(col));
    }
  }
  return out;
}

template <class T>
BasicMatrix<T> add(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  require_dims(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  BasicMatrix<T> out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c) + b(r, c);
  return out;
}

template <class T>
BasicVector<T> add(const BasicVector<T>& a, const BasicVector<T>& b) {
  require_dims(a.size() == b.size(), "add: length mismatch");
  BasicVector<T> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

template <class T>
BasicMatrix<T> scale(const BasicMatrix<T>& m, const T& s) {
  BasicMatrix<T> out = m;
  for (T& x : out.span()) x = x * s;
  return out;
}

// Entrywise |m|; the complex modulus for complex scalars.
template <class T>
auto abs_entries(const BasicMatrix<T>& m) {
  using R = decltype(magnitude(std::declval<T>()));
  BasicMatrix<R> out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = magnitude(m(r, c));
  return out;
}

template <class To, class From>
BasicMatrix<To> cast(const BasicMatrix<From>& m) {
  BasicMatrix<To> out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = To(m(r, c));
  return out;
}

template <class To, class From>
BasicVector<To> cast(const BasicVector<From>& v) {
  BasicVector<To> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = To(v[i]);
  return out;
}

template <class T>
Matrix values_of(const BasicMatrix<T>& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = value_of(m(r, c));
  return out;
}

template <class T>
Vector values_of(const BasicVector<T>& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = value_of(v[i]);
  return out;
}

}  // namespace gbmcert
