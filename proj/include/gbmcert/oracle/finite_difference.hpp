#pragma once

// Verification oracles.  Tests use these to check the bounds; nothing on the
// certification path calls them.

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "gbmcert/core/error.hpp"
#include "gbmcert/core/matrix.hpp"

namespace gbmcert::oracle {

struct FdConfig {
  double h = 1e-6;
  // Forward and backward one-sided differences that disagree by more than
  // this (relative to max(1, |central|)) mark a kink in that column.
  double kink_tol = 1e-3;
  // Margin below which a max-pool or ReLU comparison counts as a tie.
  double tie_tol = 1e-9;
};

struct FdJacobian {
  Matrix jacobian;
  std::vector<bool> kink;  // per input coordinate
};

using VectorFn = std::function<Vector(const Vector&)>;

inline Vector checked_eval(const VectorFn& f, const Vector& x) {
  Vector y = f(x);
  if (!all_finite(y.span())) fail(ErrorKind::Numeric, "fd_jacobian: non-finite evaluation");
  return y;
}

inline FdJacobian fd_jacobian(const VectorFn& f, const Vector& x, const FdConfig& cfg = {}) {
  if (!(cfg.h > 0.0)) fail(ErrorKind::Usage, "fd_jacobian: step must be > 0");
  const Vector y0 = checked_eval(f, x);
  FdJacobian out{Matrix(y0.size(), x.size()), std::vector<bool>(x.size(), false)};
  Vector xp = x;
  for (std::size_t j = 0; j < x.size(); ++j) {
    xp[j] = x[j] + cfg.h;
    const Vector yp = checked_eval(f, xp);
    xp[j] = x[j] - cfg.h;
    const Vector ym = checked_eval(f, xp);
    xp[j] = x[j];
    for (std::size_t i = 0; i < y0.size(); ++i) {
      const double central = (yp[i] - ym[i]) / (2.0 * cfg.h);
      const double fwd = (yp[i] - y0[i]) / cfg.h;
      const double bwd = (y0[i] - ym[i]) / cfg.h;
      out.jacobian(i, j) = central;
      if (std::abs(fwd - bwd) > cfg.kink_tol * std::max(1.0, std::abs(central)))
        out.kink[j] = true;
    }
  }
  return out;
}

// Central difference of a scalar function along one coordinate, with the
// same kink flag.
struct FdPartial {
  double value = 0.0;
  bool kink = false;
};

inline FdPartial fd_partial(const std::function<double(double)>& f, double x0,
                            const FdConfig& cfg = {}) {
  const double y0 = f(x0);
  const double yp = f(x0 + cfg.h);
  const double ym = f(x0 - cfg.h);
  if (!std::isfinite(y0) || !std::isfinite(yp) || !std::isfinite(ym))
    fail(ErrorKind::Numeric, "fd_partial: non-finite evaluation");
  const double central = (yp - ym) / (2.0 * cfg.h);
  const double fwd = (yp - y0) / cfg.h;
  const double bwd = (y0 - ym) / cfg.h;
  return {central, std::abs(fwd - bwd) > cfg.kink_tol * std::max(1.0, std::abs(central))};
}

struct Extrema {
  double min = 0.0;
  double max = 0.0;
};

// Min and max of f on `points` equally spaced samples of [lo, hi],
// endpoints included.
inline Extrema grid_extrema(const std::function<double(double)>& f, double lo, double hi,
                            std::size_t points) {
  require_dims(points >= 2 || lo == hi, "grid_extrema: need at least two points");
  Extrema e{f(lo), f(lo)};
  for (std::size_t k = 1; k < points; ++k) {
    const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    const double y = f(x);
    e.min = std::min(e.min, y);
    e.max = std::max(e.max, y);
  }
  return e;
}

}  // namespace gbmcert::oracle
