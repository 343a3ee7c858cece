#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "gbmcert/core/error.hpp"
#include "gbmcert/core/matrix.hpp"

namespace gbmcert {

template <class S>
double one_norm(const BasicMatrix<S>& m) {
  double best = 0.0;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double col = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) col += std::abs(m(r, c));
    best = std::max(best, col);
  }
  return best;
}

// Inverse by Gauss-Jordan elimination with partial pivoting.  Fails when a
// pivot vanishes or the 1-norm condition number exceeds `max_condition`.
template <class S>
BasicMatrix<S> inverse(const BasicMatrix<S>& m, double max_condition = 1e12) {
  require_dims(m.rows() == m.cols(), "inverse: matrix is not square");
  const std::size_t n = m.rows();
  BasicMatrix<S> a = m;
  BasicMatrix<S> inv = BasicMatrix<S>::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (std::abs(a(pivot, col)) == 0.0) fail(ErrorKind::Numeric, "inverse: singular matrix");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(a(pivot, c), a(col, c));
        std::swap(inv(pivot, c), inv(col, c));
      }
    }
    const S p = a(col, col);
    for (std::size_t c = 0; c < n; ++c) {
      a(col, c) /= p;
      inv(col, c) /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const S factor = a(r, col);
      if (factor == S{}) continue;
      for (std::size_t c = 0; c < n; ++c) {
        a(r, c) -= factor * a(col, c);
        inv(r, c) -= factor * inv(col, c);
      }
    }
  }
  const double cond = one_norm(m) * one_norm(inv);
  if (!std::isfinite(cond) || cond > max_condition)
    fail(ErrorKind::Numeric, "inverse: condition number " + std::to_string(cond) +
                                 " exceeds " + std::to_string(max_condition));
  return inv;
}

}  // namespace gbmcert
