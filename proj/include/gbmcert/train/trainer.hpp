#pragma once

// Minibatch training of Model<double> by recording each batch on a tape.
//
// Per epoch: recalibrate LSTM domains (every `calibration_every` epochs) on
// a fixed subset of the training set, shuffle, take Adam steps, then score
// the validation set.  Training stops after `patience` epochs without a
// lower validation loss and returns the best parameters seen, with LSTM
// domains recalibrated on the full training set.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gbmcert/autodiff/tape.hpp"
#include "gbmcert/core/error.hpp"
#include "gbmcert/models/model.hpp"
#include "gbmcert/train/loss.hpp"
#include "gbmcert/train/optimizer.hpp"

namespace gbmcert {

struct TrainConfig {
  double beta = 0.0;
  AdamConfig adam;
  std::size_t batch_size = 64;
  std::size_t epochs = 20;
  std::size_t patience = 3;
  std::size_t calibration_every = 1;
  std::size_t calibration_size = 256;
  double inflation = 1.1;
  std::uint64_t seed = 42;
  double divergence_limit = 1e6;

  void validate() const {
    if (!(beta >= 0.0 && beta <= 1.0)) fail(ErrorKind::Usage, "beta must lie in [0, 1]");
    if (batch_size == 0) fail(ErrorKind::Usage, "batch_size must be positive");
    if (epochs == 0) fail(ErrorKind::Usage, "epochs must be positive");
    if (calibration_every == 0) fail(ErrorKind::Usage, "calibration_every must be positive");
    if (calibration_size == 0) fail(ErrorKind::Usage, "calibration_size must be positive");
    if (!(inflation >= 1.0)) fail(ErrorKind::Usage, "inflation must be >= 1");
    for (const auto* g : {&adam.base, &adam.ssm}) {
      if (!(g->learning_rate > 0.0)) fail(ErrorKind::Usage, "learning rate must be > 0");
      if (!(g->weight_decay >= 0.0)) fail(ErrorKind::Usage, "weight decay must be >= 0");
    }
  }
};

// Optimiser settings shipped per architecture.
inline TrainConfig default_train_config(ModelKind kind) {
  TrainConfig c;
  switch (kind) {
    case ModelKind::Lstm:
    case ModelKind::BiLstm:
      c.adam.base = {1e-3, 1e-4};
      c.adam.ssm = c.adam.base;
      break;
    case ModelKind::S4:
      c.adam.base = {5e-4, 1e-2};
      c.adam.ssm = {5e-3, 0.0};
      break;
    case ModelKind::Cnn:
      c.adam.base = {1e-4, 1e-4};
      c.adam.ssm = c.adam.base;
      break;
  }
  return c;
}

inline ModelShape default_model_shape(ModelKind kind, std::size_t input_size,
                                      std::size_t num_classes) {
  ModelShape s;
  s.kind = kind;
  s.input_size = input_size;
  s.num_classes = num_classes;
  s.hidden_size = 64;
  s.filters = 128;
  s.kernel_sizes = {3, 4, 5};
  return s;
}

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;       // mean training objective over the epoch's steps
  double ce = 0.0;         // mean training cross-entropy
  double l_gbm = 0.0;      // mean GBM term over the epoch's steps
  double clean_acc = 0.0;  // validation accuracy after the epoch
  double sum_m = 0.0;      // sum of GBM entries after the epoch
  double val_loss = 0.0;
};

struct TrainResult {
  Model<double> model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

// A Model<Var> whose parameters are leaves on the active tape, plus the
// double parameters they mirror.
struct TapeModel {
  Model<ad::Var> model;
  std::vector<double*> params;
  std::vector<ad::NodeId> ids;
  std::vector<ParamGroup> groups;
};

inline TapeModel bind_to_tape(Model<double>& m) {
  TapeModel out;
  out.model = model_convert<ad::Var>(m, [](double x) { return ad::Var::leaf(x); });
  m.visit([&](const std::string&, std::span<double> s, ParamGroup g) {
    for (double& x : s) {
      out.params.push_back(&x);
      out.groups.push_back(g);
    }
  });
  out.model.visit([&](const std::string&, std::span<ad::Var> s, ParamGroup) {
    for (const ad::Var& x : s) out.ids.push_back(x.id());
  });
  return out;
}

inline std::vector<double> gather_gradient(const TapeModel& tm, const std::vector<double>& adjoint) {
  std::vector<double> g(tm.ids.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = adjoint[static_cast<std::size_t>(tm.ids[i])];
  return g;
}

struct LossValue {
  double total = 0.0;
  double ce = 0.0;
  double l_gbm = 0.0;
};

// Objective and its gradient for one batch.
inline LossValue loss_and_gradient(Model<double>& m, std::span<const Example* const> batch,
                                   double beta, std::vector<double>& grad) {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  TapeModel tm = bind_to_tape(m);
  const auto parts = batch_loss(tm.model, batch, beta, beta > 0.0);
  const auto adjoint = tape.backward(parts.total.id());
  grad = gather_gradient(tm, adjoint);
  return {value_of(parts.total), value_of(parts.ce), value_of(parts.l_gbm)};
}

struct Evaluation {
  double ce = 0.0;
  double accuracy = 0.0;
};

inline Evaluation evaluate(const Model<double>& m, const std::vector<Example>& data) {
  Evaluation e;
  if (data.empty()) return e;
  std::size_t correct = 0;
  for (const auto& ex : data) {
    const Vector z = logits(m, ex.x);
    e.ce += cross_entropy(z, ex.label);
    correct += argmax(z) == ex.label ? 1 : 0;
  }
  e.ce /= static_cast<double>(data.size());
  e.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return e;
}

using EpochCallback = std::function<void(const EpochRecord&)>;

inline TrainResult train(Model<double> model, const std::vector<Example>& train_set,
                         const std::vector<Example>& val_set, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
  cfg.validate();
  require_dims(!train_set.empty(), "train: empty training set");
  for (const auto& ex : train_set)
    if (ex.label >= model.shape.num_classes) fail(ErrorKind::Data, "train: label out of range");

  std::vector<Sequence> calib;
  for (std::size_t i = 0; i < std::min(cfg.calibration_size, train_set.size()); ++i)
    calib.push_back(train_set[i].x);
  const bool recurrent =
      model.shape.kind == ModelKind::Lstm || model.shape.kind == ModelKind::BiLstm;

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<ParamGroup> groups;
  model.visit([&](const std::string&, std::span<double> s, ParamGroup g) {
    groups.insert(groups.end(), s.size(), g);
  });
  Adam adam(cfg.adam, groups);

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<double> grad;
  std::vector<const Example*> batch;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (recurrent && (epoch - 1) % cfg.calibration_every == 0)
      calibrate(model, calib, cfg.inflation);
    std::shuffle(order.begin(), order.end(), rng);

    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k)
        batch.push_back(&train_set[order[k]]);
      const LossValue lv = loss_and_gradient(model, batch, cfg.beta, grad);
      if (!std::isfinite(lv.total))
        fail(ErrorKind::Numeric, "train: non-finite loss at epoch " + std::to_string(epoch) +
                                     " (ce=" + std::to_string(lv.ce) +
                                     ", l_gbm=" + std::to_string(lv.l_gbm) + ")");
      if (lv.total > cfg.divergence_limit)
        fail(ErrorKind::Numeric, "train: loss " + std::to_string(lv.total) +
                                     " exceeds the divergence limit at epoch " +
                                     std::to_string(epoch));
      std::vector<double*> params;
      model.visit([&](const std::string&, std::span<double> s, ParamGroup) {
        for (double& x : s) params.push_back(&x);
      });
      adam.step(params, grad);
      rec.loss += lv.total;
      rec.ce += lv.ce;
      rec.l_gbm += cfg.beta > 0.0 ? lv.l_gbm : model_gbm(model).total();
      ++steps;
    }
    rec.loss /= static_cast<double>(steps);
    rec.ce /= static_cast<double>(steps);
    rec.l_gbm /= static_cast<double>(steps);

    rec.sum_m = model_gbm(model).total();
    const Evaluation ev = evaluate(model, val_set.empty() ? train_set : val_set);
    rec.clean_acc = ev.accuracy;
    rec.val_loss = (1.0 - cfg.beta) * ev.ce + cfg.beta * rec.sum_m;
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience && cfg.patience > 0) {
      break;
    }
  }
  // The shipped domain covers the whole training set, not just the subset.
  if (recurrent) {
    std::vector<Sequence> all;
    all.reserve(train_set.size());
    for (const auto& ex : train_set) all.push_back(ex.x);
    calibrate(result.model, all, cfg.inflation);
  }
  return result;
}

}  // namespace gbmcert
