#pragma once

// Adam with L2 weight decay folded into the gradient, per parameter group.

#include <cmath>
#include <cstddef>
#include <vector>

#include "gbmcert/core/error.hpp"
#include "gbmcert/models/model.hpp"

namespace gbmcert {

struct GroupSettings {
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
};

struct AdamConfig {
  GroupSettings base;
  GroupSettings ssm;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(const AdamConfig& cfg, std::vector<ParamGroup> groups)
      : cfg_(cfg), groups_(std::move(groups)), m_(groups_.size()), v_(groups_.size()) {
    for (const auto* g : {&cfg_.base, &cfg_.ssm}) {
      if (!(g->learning_rate > 0.0)) fail(ErrorKind::Usage, "learning rate must be > 0");
      if (!(g->weight_decay >= 0.0)) fail(ErrorKind::Usage, "weight decay must be >= 0");
    }
  }

  std::size_t steps() const noexcept { return t_; }

  void step(std::vector<double*>& params, const std::vector<double>& grad) {
    require_dims(params.size() == groups_.size() && grad.size() == groups_.size(),
                 "adam: parameter count changed");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const GroupSettings& g = groups_[i] == ParamGroup::Ssm ? cfg_.ssm : cfg_.base;
      const double gi = grad[i] + g.weight_decay * *params[i];
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * gi;
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * gi * gi;
      *params[i] -= g.learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.eps);
    }
  }

 private:
  AdamConfig cfg_;
  std::vector<ParamGroup> groups_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

}  // namespace gbmcert
