#pragma once

#include <string_view>

#include "gbmcert/core/interval.hpp"
#include "gbmcert/core/scalar.hpp"

namespace gbmcert {

enum class ActivationKind { Sigmoid, Tanh };

template <class T>
T activate(ActivationKind kind, const T& x) {
  return kind == ActivationKind::Sigmoid ? sigmoid(x) : tanh(x);
}

// sigma' = sigma (1 - sigma), tanh' = 1 - tanh^2.
template <class T>
T activation_derivative(ActivationKind kind, const T& x) {
  if (kind == ActivationKind::Sigmoid) {
    const T s = sigmoid(x);
    return s * (T{1.0} - s);
  }
  const T t = tanh(x);
  return T{1.0} - t * t;
}

// Both derivatives increase on (-inf, 0] and decrease on [0, inf): the
// minimum over an interval sits at an endpoint and the maximum is phi'(0)
// whenever 0 is inside.
template <class T>
BasicInterval<T> derivative_bounds(ActivationKind kind, const BasicInterval<T>& a) {
  const T at_lo = activation_derivative(kind, a.lo());
  const T at_hi = activation_derivative(kind, a.hi());
  const T lo = min_first(at_lo, at_hi);
  if (value_of(a.lo()) <= 0.0 && 0.0 <= value_of(a.hi())) {
    return {lo, T{kind == ActivationKind::Sigmoid ? 0.25 : 1.0}};
  }
  return {lo, max_first(at_lo, at_hi)};
}

// sigma and tanh are increasing.
template <class T>
BasicInterval<T> value_bounds(ActivationKind kind, const BasicInterval<T>& a) {
  return {activate(kind, a.lo()), activate(kind, a.hi())};
}

}  // namespace gbmcert
