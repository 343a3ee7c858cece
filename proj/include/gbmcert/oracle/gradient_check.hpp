#pragma once

// Tape gradients of the training objective against central differences.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "gbmcert/oracle/finite_difference.hpp"
#include "gbmcert/train/loss.hpp"
#include "gbmcert/train/trainer.hpp"

namespace gbmcert::oracle {

struct GradientCheckConfig {
  double h = 1e-5;
  std::size_t samples = 100;  // parameters drawn without replacement
  // |ad - fd| / max(|ad|, |fd|, floor); the floor keeps near-zero partials
  // from producing meaningless ratios.
  double denominator_floor = 1e-6;
  double kink_tol = 1e-3;
};

struct GradientCheckEntry {
  std::size_t index = 0;
  double ad = 0.0;
  double fd = 0.0;
  double rel_error = 0.0;
  bool kink = false;
};

struct GradientCheckResult {
  std::vector<GradientCheckEntry> entries;
  double max_rel_error = 0.0;  // over entries away from kinks
  std::size_t checked = 0;
};

inline double objective_value(const Model<double>& m, std::span<const Example* const> batch,
                              double beta) {
  return value_of(batch_loss(m, batch, beta, beta > 0.0).total);
}

inline GradientCheckResult check_gradient(Model<double> m, std::span<const Example* const> batch,
                                          double beta, std::mt19937_64& rng,
                                          const GradientCheckConfig& cfg = {}) {
  std::vector<double> grad;
  loss_and_gradient(m, batch, beta, grad);
  std::vector<double*> params;
  m.visit([&](const std::string&, std::span<double> s, ParamGroup) {
    for (double& x : s) params.push_back(&x);
  });
  std::vector<std::size_t> idx(params.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(cfg.samples, idx.size()));

  GradientCheckResult out;
  const double f0 = objective_value(m, batch, beta);
  for (std::size_t i : idx) {
    double& p = *params[i];
    const double saved = p;
    p = saved + cfg.h;
    const double fp = objective_value(m, batch, beta);
    p = saved - cfg.h;
    const double fm = objective_value(m, batch, beta);
    p = saved;
    GradientCheckEntry e;
    e.index = i;
    e.ad = grad[i];
    e.fd = (fp - fm) / (2.0 * cfg.h);
    const double fwd = (fp - f0) / cfg.h;
    const double bwd = (f0 - fm) / cfg.h;
    e.kink = std::abs(fwd - bwd) > cfg.kink_tol * std::max(1.0, std::abs(e.fd));
    e.rel_error = std::abs(e.ad - e.fd) /
                  std::max({std::abs(e.ad), std::abs(e.fd), cfg.denominator_floor});
    if (!e.kink) {
      out.max_rel_error = std::max(out.max_rel_error, e.rel_error);
      ++out.checked;
    }
    out.entries.push_back(e);
  }
  return out;
}

}  // namespace gbmcert::oracle
