#pragma once

// S4 cell: bilinear discretisation of a continuous state space model and the
// growth bound matrix of the resulting affine step
//   h_t = A~ h_{t-1} + B~ v_t,   y_t = C~ h_t + D~ v_t.
// Since the map (v_t, h_{t-1}) -> y_t is affine its Jacobian is constant and
// the GBM is exact:  [ |C~ B~ + D~|  |  |C~ A~| ].

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <type_traits>
#include <vector>

#include "gbmcert/core/error.hpp"
#include "gbmcert/core/linalg.hpp"
#include "gbmcert/core/matrix.hpp"
#include "gbmcert/gbm.hpp"

namespace gbmcert {

template <class S>
struct S4ContinuousParams {
  BasicMatrix<S> a;  // n x n
  BasicMatrix<S> b;  // n x d0
  BasicMatrix<S> c;  // d0 x n
  BasicMatrix<S> d;  // d0 x d0
  // One shared step, or one step per input channel; a per-channel step
  // scales the channel's block of n / d0 consecutive states.
  std::vector<double> delta{1.0};

  std::size_t state_size() const { return a.rows(); }
  std::size_t input_size() const { return b.cols(); }

  void validate() const {
    const std::size_t n = state_size();
    const std::size_t d0 = input_size();
    require_dims(a.cols() == n, "s4: A must be square");
    require_dims(b.rows() == n, "s4: B rows != state size");
    require_dims(c.rows() == d0 && c.cols() == n, "s4: C must be d0 x n");
    require_dims(d.rows() == d0 && d.cols() == d0, "s4: D must be d0 x d0");
    require_dims(delta.size() == 1 || delta.size() == d0,
                 "s4: delta must be a scalar or one value per input channel");
    if (delta.size() == d0 && d0 > 1)
      require_dims(n % d0 == 0, "s4: per-channel delta needs state size divisible by d0");
    for (double s : delta) {
      if (!(s > 0.0) || !std::isfinite(s)) fail(ErrorKind::Domain, "s4: delta must be > 0");
    }
  }

  // Step applied to state coordinate k.
  double step_for_state(std::size_t k) const {
    if (delta.size() == 1) return delta[0];
    return delta[k / (state_size() / input_size())];
  }
};

template <class S>
struct S4DiscreteParams {
  BasicMatrix<S> a_bar;
  BasicMatrix<S> b_bar;
  BasicMatrix<S> c_bar;
  BasicMatrix<S> d_bar;

  std::size_t state_size() const { return a_bar.rows(); }
  std::size_t input_size() const { return b_bar.cols(); }

  void validate() const {
    const std::size_t n = state_size();
    const std::size_t d0 = input_size();
    require_dims(a_bar.cols() == n, "s4: A~ must be square");
    require_dims(b_bar.rows() == n, "s4: B~ rows != state size");
    require_dims(c_bar.rows() == d0 && c_bar.cols() == n, "s4: C~ must be d0 x n");
    require_dims(d_bar.rows() == d0 && d_bar.cols() == d0, "s4: D~ must be d0 x d0");
  }
};

// A~ = (I - Delta/2 A)^-1 (I + Delta/2 A),  B~ = (I - Delta/2 A)^-1 Delta B.
template <class S>
S4DiscreteParams<S> bilinear_discretize(const S4ContinuousParams<S>& p,
                                        double max_condition = 1e12) {
  p.validate();
  const std::size_t n = p.state_size();
  BasicMatrix<S> minus = BasicMatrix<S>::identity(n);
  BasicMatrix<S> plus = BasicMatrix<S>::identity(n);
  BasicMatrix<S> scaled_b = p.b;
  for (std::size_t r = 0; r < n; ++r) {
    const double half = 0.5 * p.step_for_state(r);
    for (std::size_t c = 0; c < n; ++c) {
      minus(r, c) -= S(half) * p.a(r, c);
      plus(r, c) += S(half) * p.a(r, c);
    }
    for (std::size_t c = 0; c < p.input_size(); ++c) scaled_b(r, c) *= S(p.step_for_state(r));
  }
  const BasicMatrix<S> inv = inverse(minus, max_condition);
  return {mat_mul(inv, plus), mat_mul(inv, scaled_b), p.c, p.d};
}

// Diagonal continuous A (entries `a_diag`, one shared step).  The inverse is
// entrywise, so this path runs on any scalar including autodiff ones.
template <class T>
S4DiscreteParams<T> bilinear_discretize_diagonal(const BasicVector<T>& a_diag,
                                                 const BasicMatrix<T>& b, const BasicMatrix<T>& c,
                                                 const BasicMatrix<T>& d, const T& delta) {
  const std::size_t n = a_diag.size();
  require_dims(b.rows() == n, "s4: B rows != state size");
  S4DiscreteParams<T> out;
  out.a_bar = BasicMatrix<T>(n, n);
  out.b_bar = BasicMatrix<T>(n, b.cols());
  for (std::size_t k = 0; k < n; ++k) {
    const T half = delta * a_diag[k] * T{0.5};
    const T denom = T{1.0} - half;
    if (value_of(denom) == 0.0) fail(ErrorKind::Numeric, "s4: singular bilinear transform");
    out.a_bar(k, k) = (T{1.0} + half) / denom;
    const T gain = delta / denom;
    for (std::size_t j = 0; j < b.cols(); ++j) out.b_bar(k, j) = gain * b(k, j);
  }
  out.c_bar = c;
  out.d_bar = d;
  out.validate();
  return out;
}

template <class S>
struct S4Step {
  BasicVector<S> y;
  BasicVector<S> h;
};

template <class S>
S4Step<S> s4_cell_forward(const S4DiscreteParams<S>& p, const BasicVector<S>& v,
                          const BasicVector<S>& h_prev) {
  p.validate();
  require_dims(v.size() == p.input_size(), "s4_cell_forward: input length mismatch");
  require_dims(h_prev.size() == p.state_size(), "s4_cell_forward: state length mismatch");
  S4Step<S> out;
  out.h = add(mat_vec(p.a_bar, h_prev), mat_vec(p.b_bar, v));
  out.y = add(mat_vec(p.c_bar, out.h), mat_vec(p.d_bar, v));
  return out;
}

template <class S>
auto gbm_s4(const S4DiscreteParams<S>& p) {
  p.validate();
  const auto through_input = add(mat_mul(p.c_bar, p.b_bar), p.d_bar);
  const auto through_state = mat_mul(p.c_bar, p.a_bar);
  const auto abs_in = abs_entries(through_input);
  const auto abs_state = abs_entries(through_state);
  using R = typename std::remove_cvref_t<decltype(abs_in)>::value_type;
  const std::size_t d0 = p.input_size();
  const std::size_t n = p.state_size();
  BasicGbm<R> out;
  out.m = BasicMatrix<R>(d0, d0 + n);
  for (std::size_t i = 0; i < d0; ++i) {
    for (std::size_t j = 0; j < d0; ++j) out.m(i, j) = abs_in(i, j);
    for (std::size_t j = 0; j < n; ++j) out.m(i, d0 + j) = abs_state(i, j);
  }
  out.blocks = {{"input", 0, d0}, {"state", d0, n}};
  return out;
}

}  // namespace gbmcert
