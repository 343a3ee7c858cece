#pragma once

// Training objective: (1 - beta) * mean cross-entropy + beta * sum_ij M_ij.
// The GBM term depends on the parameters (and calibrated domain) only, so it
// is added once per batch.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gbmcert/core/error.hpp"
#include "gbmcert/core/matrix.hpp"
#include "gbmcert/models/model.hpp"

namespace gbmcert {

struct Example {
  Sequence x;
  std::size_t label = 0;
};

template <class T>
T cross_entropy(const BasicVector<T>& z, std::size_t label) {
  require_dims(label < z.size(), "cross_entropy: label out of range");
  double shift = value_of(z[0]);
  for (std::size_t k = 1; k < z.size(); ++k) shift = std::max(shift, value_of(z[k]));
  std::vector<T> e(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) e[k] = exp(z[k] - T{shift});
  return log(sum(std::span<const T>(e))) + T{shift} - z[label];
}

template <class T>
struct LossParts {
  T total{};
  T ce{};
  T l_gbm{};
};

// `gbm_needed` = false skips the GBM (its term is then reported as 0).
template <class T>
LossParts<T> batch_loss(const Model<T>& m, std::span<const Example* const> batch, double beta,
                        bool gbm_needed = true) {
  if (!(beta >= 0.0 && beta <= 1.0)) fail(ErrorKind::Usage, "beta must lie in [0, 1]");
  require_dims(!batch.empty(), "batch_loss: empty batch");
  std::vector<T> ces;
  ces.reserve(batch.size());
  for (const Example* ex : batch) ces.push_back(cross_entropy(logits(m, ex->x), ex->label));
  LossParts<T> out;
  out.ce = sum(std::span<const T>(ces)) * T{1.0 / static_cast<double>(batch.size())};
  if (beta > 0.0 || gbm_needed) out.l_gbm = model_gbm(m).total();
  out.total = out.ce * T{1.0 - beta};
  if (beta > 0.0) out.total = out.total + out.l_gbm * T{beta};
  return out;
}

}  // namespace gbmcert
