#pragma once

// Interval enclosures.  No directed rounding: the enclosures are exact in
// real arithmetic and tests absorb last-ulp effects.

#include <cmath>
#include <cstddef>
#include <string>

#include "gbmcert/core/error.hpp"
#include "gbmcert/core/matrix.hpp"
#include "gbmcert/core/scalar.hpp"

namespace gbmcert {

template <class T>
class BasicInterval {
 public:
  BasicInterval() = default;
  explicit BasicInterval(T point) : lo_(point), hi_(point) {}
  BasicInterval(T lo, T hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (!std::isfinite(value_of(lo_)) || !std::isfinite(value_of(hi_)))
      fail(ErrorKind::Numeric, "interval: non-finite endpoint");
    if (!(value_of(lo_) <= value_of(hi_)))
      fail(ErrorKind::Domain, "interval: lo " + std::to_string(value_of(lo_)) + " > hi " +
                                  std::to_string(value_of(hi_)));
  }

  const T& lo() const noexcept { return lo_; }
  const T& hi() const noexcept { return hi_; }

  T mid() const { return (lo_ + hi_) * T{0.5}; }
  T width() const { return hi_ - lo_; }
  bool contains(double x) const { return value_of(lo_) <= x && x <= value_of(hi_); }

  // Largest magnitude attained on the interval.
  T max_abs() const { return max_first(magnitude(lo_), magnitude(hi_)); }

  friend BasicInterval operator+(const BasicInterval& a, const BasicInterval& b) {
    return {a.lo_ + b.lo_, a.hi_ + b.hi_};
  }
  friend BasicInterval operator-(const BasicInterval& a, const BasicInterval& b) {
    return {a.lo_ - b.hi_, a.hi_ - b.lo_};
  }
  friend BasicInterval operator*(const BasicInterval& a, const BasicInterval& b) {
    const T p1 = a.lo_ * b.lo_;
    const T p2 = a.lo_ * b.hi_;
    const T p3 = a.hi_ * b.lo_;
    const T p4 = a.hi_ * b.hi_;
    return {min_first(min_first(p1, p2), min_first(p3, p4)),
            max_first(max_first(p1, p2), max_first(p3, p4))};
  }
  // Scalar times interval.
  friend BasicInterval operator*(const T& s, const BasicInterval& a) {
    if (value_of(s) >= 0.0) return {s * a.lo_, s * a.hi_};
    return {s * a.hi_, s * a.lo_};
  }

 private:
  T lo_{};
  T hi_{};
};

using Interval = BasicInterval<double>;

template <class T>
class BasicBox {
 public:
  BasicBox() = default;
  BasicBox(BasicVector<T> lo, BasicVector<T> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    require_dims(lo_.size() == hi_.size(), "box: lo/hi length mismatch");
    for (std::size_t i = 0; i < lo_.size(); ++i) {
      if (!(value_of(lo_[i]) <= value_of(hi_[i])))
        fail(ErrorKind::Domain, "box: lo > hi at coordinate " + std::to_string(i));
    }
  }

  static BasicBox point(const BasicVector<T>& x) { return BasicBox(x, x); }

  std::size_t size() const noexcept { return lo_.size(); }
  const BasicVector<T>& lo() const noexcept { return lo_; }
  const BasicVector<T>& hi() const noexcept { return hi_; }

  BasicInterval<T> operator[](std::size_t i) const { return {lo_[i], hi_[i]}; }

  BasicVector<T> mid() const {
    BasicVector<T> m(size());
    for (std::size_t i = 0; i < size(); ++i) m[i] = (lo_[i] + hi_[i]) * T{0.5};
    return m;
  }
  BasicVector<T> width() const {
    BasicVector<T> w(size());
    for (std::size_t i = 0; i < size(); ++i) w[i] = hi_[i] - lo_[i];
    return w;
  }

  bool contains(std::span<const double> x, double tol = 0.0) const {
    if (x.size() != size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
      if (x[i] < value_of(lo_[i]) - tol || x[i] > value_of(hi_[i]) + tol) return false;
    }
    return true;
  }

 private:
  BasicVector<T> lo_;
  BasicVector<T> hi_;
};

using BoxInterval = BasicBox<double>;

template <class To, class From>
BasicBox<To> cast(const BasicBox<From>& b) {
  return {cast<To>(b.lo()), cast<To>(b.hi())};
}

// Per-row enclosure of T(v, h) = W v + U h + b over the boxes.  Each weight
// picks the box endpoint that minimises (maximises) its product, which makes
// the enclosure exact for affine maps: the corners attain both bounds.
template <class T>
BasicBox<T> interval_affine(const BasicMatrix<T>& weights_in, const BasicMatrix<T>& weights_hidden,
                            const BasicVector<T>& bias, const BasicBox<T>& v_box,
                            const BasicBox<T>& h_box) {
  require_dims(weights_in.cols() == v_box.size(), "interval_affine: input weights vs v_box");
  require_dims(weights_hidden.cols() == h_box.size(), "interval_affine: hidden weights vs h_box");
  require_dims(weights_in.rows() == weights_hidden.rows() && weights_in.rows() == bias.size(),
               "interval_affine: row counts differ");
  const std::size_t rows = bias.size();
  const std::size_t n_in = v_box.size();
  const std::size_t n_hid = h_box.size();
  std::vector<T> pick_lo(n_in + n_hid);
  std::vector<T> pick_hi(n_in + n_hid);
  std::vector<T> w(n_in + n_hid);
  BasicVector<T> lo(rows);
  BasicVector<T> hi(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t p = 0; p < n_in; ++p) {
      w[p] = weights_in(i, p);
      const bool nonneg = value_of(w[p]) >= 0.0;
      pick_lo[p] = nonneg ? v_box.lo()[p] : v_box.hi()[p];
      pick_hi[p] = nonneg ? v_box.hi()[p] : v_box.lo()[p];
    }
    for (std::size_t q = 0; q < n_hid; ++q) {
      w[n_in + q] = weights_hidden(i, q);
      const bool nonneg = value_of(w[n_in + q]) >= 0.0;
      pick_lo[n_in + q] = nonneg ? h_box.lo()[q] : h_box.hi()[q];
      pick_hi[n_in + q] = nonneg ? h_box.hi()[q] : h_box.lo()[q];
    }
    lo[i] = dot(std::span<const T>(w), std::span<const T>(pick_lo)) + bias[i];
    hi[i] = dot(std::span<const T>(w), std::span<const T>(pick_hi)) + bias[i];
  }
  return {std::move(lo), std::move(hi)};
}

}  // namespace gbmcert
