#pragma once

// Scalar helpers shared by the double and autodiff code paths.  Generic code
// calls these unqualified; the autodiff overloads live in gbmcert::ad and are
// found through argument-dependent lookup.

#include <cmath>
#include <complex>

namespace gbmcert {

inline double value_of(double x) { return x; }

// Branches on the sign so that exp never overflows.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

inline double tanh(double x) { return std::tanh(x); }
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }

inline double magnitude(double x) { return x >= 0.0 ? x : -x; }

template <class T>
T magnitude(const std::complex<T>& x) {
  return std::abs(x);
}

// max/min that keep the first argument on ties.  For autodiff scalars the
// returned copy is the selected branch, which fixes the subgradient.
template <class T>
T max_first(const T& a, const T& b) {
  return value_of(a) >= value_of(b) ? a : b;
}

template <class T>
T min_first(const T& a, const T& b) {
  return value_of(a) <= value_of(b) ? a : b;
}

}  // namespace gbmcert
