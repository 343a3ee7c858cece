#pragma once

// Text classifiers built on the three cells.  Every model maps a sequence of
// frozen word vectors to a feature vector and applies a linear head:
//   lstm    final hidden state
//   bilstm  [final forward state; final backward state]
//   s4      mean over time of the cell outputs
//   cnn     pooled filter responses
//
// Model<T> is templated on the scalar so the same code runs in double for
// inference and certification and on autodiff Vars for training.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gbmcert/cnn_gbm.hpp"
#include "gbmcert/core/error.hpp"
#include "gbmcert/core/interval.hpp"
#include "gbmcert/core/matrix.hpp"
#include "gbmcert/gbm.hpp"
#include "gbmcert/lstm_gbm.hpp"
#include "gbmcert/s4_gbm.hpp"

namespace gbmcert {

enum class ModelKind { Lstm, BiLstm, S4, Cnn };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Lstm: return "lstm";
    case ModelKind::BiLstm: return "bilstm";
    case ModelKind::S4: return "s4";
    case ModelKind::Cnn: return "cnn";
  }
  return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "lstm") return ModelKind::Lstm;
  if (s == "bilstm") return ModelKind::BiLstm;
  if (s == "s4") return ModelKind::S4;
  if (s == "cnn") return ModelKind::Cnn;
  fail(ErrorKind::Usage, "unknown model kind '" + s + "' (expected lstm, bilstm, s4 or cnn)");
}

// Optimizer parameter groups.  The S4 transition parameters get their own
// learning rate and weight decay.
enum class ParamGroup { Default, Ssm };

struct ModelShape {
  ModelKind kind = ModelKind::Lstm;
  std::size_t input_size = 16;
  std::size_t num_classes = 2;
  std::size_t hidden_size = 16;     // lstm / bilstm, per direction
  std::size_t state_per_channel = 4;  // s4: state size = input_size * state_per_channel
  std::vector<std::size_t> kernel_sizes{3, 4, 5};
  std::size_t filters = 8;
  ConvActivation activation = ConvActivation::Relu;
  // Sequence length the CNN growth bound matrix is evaluated at in training.
  std::size_t gbm_words = 16;

  std::size_t feature_size() const {
    switch (kind) {
      case ModelKind::Lstm: return hidden_size;
      case ModelKind::BiLstm: return 2 * hidden_size;
      case ModelKind::S4: return input_size;
      case ModelKind::Cnn: return kernel_sizes.size() * filters;
    }
    return 0;
  }

  std::size_t min_length() const {
    if (kind != ModelKind::Cnn) return 1;
    std::size_t m = 0;
    for (auto k : kernel_sizes) m = std::max(m, k);
    return m;
  }

  void validate() const {
    require_dims(input_size > 0, "model: input_size must be positive");
    require_dims(num_classes >= 2, "model: need at least two classes");
    if (kind == ModelKind::Lstm || kind == ModelKind::BiLstm)
      require_dims(hidden_size > 0, "model: hidden_size must be positive");
    if (kind == ModelKind::S4)
      require_dims(state_per_channel > 0, "model: state_per_channel must be positive");
    if (kind == ModelKind::Cnn) {
      require_dims(filters > 0 && !kernel_sizes.empty(), "model: cnn needs filters and kernels");
      require_dims(gbm_words >= min_length(), "model: gbm_words shorter than the widest kernel");
    }
  }
};

template <class T>
struct LinearHead {
  BasicMatrix<T> w;  // classes x features
  BasicVector<T> b;
};

// Diagonal continuous transition A = -exp(a_log) keeps every mode stable;
// the step is exp(delta_log).
template <class T>
struct S4Cell {
  BasicVector<T> a_log;      // n
  BasicMatrix<T> b;          // n x d0
  BasicMatrix<T> c;          // d0 x n
  BasicMatrix<T> d;          // d0 x d0
  BasicVector<T> delta_log;  // 1

  S4DiscreteParams<T> discretize() const {
    BasicVector<T> a(a_log.size());
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = -exp(a_log[k]);
    return bilinear_discretize_diagonal(a, b, c, d, exp(delta_log[0]));
  }
};

template <class T>
struct Model {
  ModelShape shape;
  LstmCellParams<T> fwd;
  LstmCellParams<T> bwd;
  S4Cell<T> s4;
  CnnParams<T> cnn;
  LinearHead<T> head;
  // Calibrated domain of each LSTM direction; required for its GBM.
  std::optional<LstmDomain<double>> fwd_domain;
  std::optional<LstmDomain<double>> bwd_domain;

  static Model zeros(const ModelShape& shape) {
    shape.validate();
    Model m;
    m.shape = shape;
    const std::size_t d0 = shape.input_size;
    switch (shape.kind) {
      case ModelKind::BiLstm:
        m.bwd = LstmCellParams<T>::zeros(d0, shape.hidden_size);
        [[fallthrough]];
      case ModelKind::Lstm:
        m.fwd = LstmCellParams<T>::zeros(d0, shape.hidden_size);
        break;
      case ModelKind::S4: {
        const std::size_t n = d0 * shape.state_per_channel;
        m.s4 = {BasicVector<T>(n), BasicMatrix<T>(n, d0), BasicMatrix<T>(d0, n),
                BasicMatrix<T>(d0, d0), BasicVector<T>(1)};
        break;
      }
      case ModelKind::Cnn:
        m.cnn = CnnParams<T>::zeros(shape.kernel_sizes, shape.filters, d0);
        m.cnn.activation = shape.activation;
        break;
    }
    m.head = {BasicMatrix<T>(shape.num_classes, shape.feature_size()),
              BasicVector<T>(shape.num_classes)};
    return m;
  }

  // Visits every trainable tensor as fn(name, flat span, group) in a fixed
  // order.
  template <class Fn>
  void visit(Fn&& fn) {
    auto dflt = [&](const std::string& name, std::span<T> s) { fn(name, s, ParamGroup::Default); };
    switch (shape.kind) {
      case ModelKind::Lstm:
        fwd.visit("fwd.", dflt);
        break;
      case ModelKind::BiLstm:
        fwd.visit("fwd.", dflt);
        bwd.visit("bwd.", dflt);
        break;
      case ModelKind::S4:
        fn("s4.a_log", s4.a_log.span(), ParamGroup::Ssm);
        fn("s4.b", s4.b.span(), ParamGroup::Ssm);
        fn("s4.c", s4.c.span(), ParamGroup::Ssm);
        fn("s4.delta_log", s4.delta_log.span(), ParamGroup::Ssm);
        fn("s4.d", s4.d.span(), ParamGroup::Default);
        break;
      case ModelKind::Cnn:
        cnn.visit("cnn.", dflt);
        break;
    }
    fn("head.w", head.w.span(), ParamGroup::Default);
    fn("head.b", head.b.span(), ParamGroup::Default);
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    visit([&](const std::string&, std::span<T> s, ParamGroup) { n += s.size(); });
    return n;
  }
};

// Copies parameters (and domains) into a model over another scalar type.
// `convert` maps each source scalar to the target one.
template <class To, class From, class Convert>
Model<To> model_convert(const Model<From>& src, Convert&& convert) {
  Model<To> out = Model<To>::zeros(src.shape);
  out.fwd_domain = src.fwd_domain;
  out.bwd_domain = src.bwd_domain;
  Model<From> copy = src;
  std::vector<std::span<From>> from;
  copy.visit([&](const std::string&, std::span<From> s, ParamGroup) { from.push_back(s); });
  std::size_t k = 0;
  out.visit([&](const std::string&, std::span<To> s, ParamGroup) {
    require_dims(s.size() == from[k].size(), "model_convert: tensor size mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = convert(from[k][i]);
    ++k;
  });
  return out;
}

template <class T>
Model<double> model_values(const Model<T>& m) {
  return model_convert<double>(m, [](const T& x) { return value_of(x); });
}

// Random initialisation: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for
// weights, stable diagonal S4 modes with a shared step of 0.5.
// `head_gain` scales the head's range.  The GBM term never sees the head,
// so a wider head lets a regularised cell stay small without losing the
// logit margin.
inline Model<double> init_model(const ModelShape& shape, std::uint64_t seed,
                                double head_gain = 1.0) {
  Model<double> m = Model<double>::zeros(shape);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::span<double> s, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    for (double& x : s) x = u(rng);
  };
  const double d0 = static_cast<double>(shape.input_size);
  switch (shape.kind) {
    case ModelKind::Lstm:
    case ModelKind::BiLstm: {
      const double scale = 1.0 / std::sqrt(static_cast<double>(shape.hidden_size));
      m.visit([&](const std::string& name, std::span<double> s, ParamGroup) {
        if (name.rfind("head.", 0) != 0) fill(s, scale);
      });
      break;
    }
    case ModelKind::S4: {
      const std::size_t n = m.s4.a_log.size();
      std::uniform_real_distribution<double> rate(0.2, 1.0);
      for (std::size_t k = 0; k < n; ++k) m.s4.a_log[k] = std::log(rate(rng));
      fill(m.s4.b.span(), 1.0 / std::sqrt(d0));
      fill(m.s4.c.span(), 1.0 / std::sqrt(static_cast<double>(n)));
      fill(m.s4.d.span(), 1.0 / std::sqrt(d0));
      m.s4.delta_log[0] = std::log(0.5);
      break;
    }
    case ModelKind::Cnn:
      for (auto& k : m.cnn.kernels) {
        const double scale = 1.0 / std::sqrt(d0 * static_cast<double>(k.width));
        fill(k.weights.span(), scale);
        fill(k.bias.span(), scale);
      }
      break;
  }
  const double head_scale = head_gain / std::sqrt(static_cast<double>(shape.feature_size()));
  fill(m.head.w.span(), head_scale);
  fill(m.head.b.span(), head_scale);
  return m;
}

using Sequence = std::vector<Vector>;

template <class T>
BasicVector<T> promote(const Vector& v) {
  return cast<T>(v);
}

template <class T>
std::vector<LstmState<T>> lstm_trajectory(const LstmCellParams<T>& p, const Sequence& xs,
                                          bool reverse) {
  const std::size_t d = p.hidden_size();
  std::vector<LstmState<T>> states;
  states.reserve(xs.size() + 1);
  states.push_back({BasicVector<T>(d), BasicVector<T>(d)});
  for (std::size_t s = 0; s < xs.size(); ++s) {
    const Vector& v = xs[reverse ? xs.size() - 1 - s : s];
    const auto& prev = states.back();
    states.push_back(lstm_cell_forward(p, promote<T>(v), prev.h, prev.c));
  }
  return states;
}

template <class T>
BasicVector<T> features(const Model<T>& m, const Sequence& xs) {
  if (xs.size() < m.shape.min_length())
    fail(ErrorKind::Domain, "model: sequence of " + std::to_string(xs.size()) +
                                " words is shorter than the minimum " +
                                std::to_string(m.shape.min_length()));
  for (const auto& v : xs)
    require_dims(v.size() == m.shape.input_size, "model: word vector length mismatch");
  switch (m.shape.kind) {
    case ModelKind::Lstm:
      return lstm_trajectory(m.fwd, xs, false).back().h;
    case ModelKind::BiLstm: {
      const auto f = lstm_trajectory(m.fwd, xs, false).back().h;
      const auto b = lstm_trajectory(m.bwd, xs, true).back().h;
      BasicVector<T> out(f.size() + b.size());
      for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i];
      for (std::size_t i = 0; i < b.size(); ++i) out[f.size() + i] = b[i];
      return out;
    }
    case ModelKind::S4: {
      // The cell is linear and A is diagonal, so the mean output is
      // C * mean(h) + D * mean(v) with a per-mode recurrence for h.
      const auto disc = m.s4.discretize();
      const std::size_t n = disc.state_size();
      const std::size_t d0 = m.shape.input_size;
      std::vector<T> h(n, T{0.0});
      std::vector<T> h_sum(n, T{0.0});
      Vector v_sum(d0);
      for (const auto& v : xs) {
        for (std::size_t k = 0; k < n; ++k) {
          T drive{0.0};
          for (std::size_t j = 0; j < d0; ++j) drive = drive + disc.b_bar(k, j) * T{v[j]};
          h[k] = disc.a_bar(k, k) * h[k] + drive;
          h_sum[k] = h_sum[k] + h[k];
        }
        for (std::size_t j = 0; j < d0; ++j) v_sum[j] += v[j];
      }
      const double inv_n = 1.0 / static_cast<double>(xs.size());
      BasicVector<T> out(d0);
      for (std::size_t i = 0; i < d0; ++i) {
        T acc{0.0};
        for (std::size_t k = 0; k < n; ++k) acc = acc + disc.c_bar(i, k) * h_sum[k];
        for (std::size_t j = 0; j < d0; ++j) acc = acc + disc.d_bar(i, j) * T{v_sum[j]};
        out[i] = acc * T{inv_n};
      }
      return out;
    }
    case ModelKind::Cnn: {
      std::vector<BasicVector<T>> words;
      words.reserve(xs.size());
      for (const auto& v : xs) words.push_back(promote<T>(v));
      return cnn_forward(m.cnn, std::span<const BasicVector<T>>(words));
    }
  }
  fail(ErrorKind::Usage, "model: unknown kind");
}

template <class T>
BasicVector<T> logits(const Model<T>& m, const Sequence& xs) {
  return add(mat_vec(m.head.w, features(m, xs)), m.head.b);
}

inline std::size_t argmax(const Vector& v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

inline std::size_t predict(const Model<double>& m, const Sequence& xs) {
  return argmax(logits(m, xs));
}

// GBM of the model's sequence cell(s); the regulariser is its entry sum.
template <class T>
BasicGbm<T> model_gbm(const Model<T>& m) {
  auto domain_of = [](const std::optional<LstmDomain<double>>& d) {
    if (!d) fail(ErrorKind::Usage, "model: lstm domain has not been calibrated");
    return LstmDomain<T>{cast<T>(d->v_box), cast<T>(d->h_box), cast<T>(d->c_box)};
  };
  switch (m.shape.kind) {
    case ModelKind::Lstm:
      return gbm_lstm(m.fwd, domain_of(m.fwd_domain));
    case ModelKind::BiLstm:
      return block_diagonal(gbm_lstm(m.fwd, domain_of(m.fwd_domain)), "fwd.",
                            gbm_lstm(m.bwd, domain_of(m.bwd_domain)), "bwd.");
    case ModelKind::S4:
      return gbm_s4(m.s4.discretize());
    case ModelKind::Cnn:
      return gbm_cnn(m.cnn, m.shape.gbm_words);
  }
  fail(ErrorKind::Usage, "model: unknown kind");
}

// Running min/max of the cell inputs (v_t, h_{t-1}, c_{t-1}).
class BoxTracker {
 public:
  explicit BoxTracker(std::size_t n) : lo_(n, INFINITY), hi_(n, -INFINITY) {}

  void add(std::span<const double> x) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      lo_[i] = std::min(lo_[i], x[i]);
      hi_[i] = std::max(hi_[i], x[i]);
    }
  }

  // Box scaled by `inflation` about its centre.
  BoxInterval box(double inflation) const {
    Vector lo(lo_.size());
    Vector hi(hi_.size());
    for (std::size_t i = 0; i < lo_.size(); ++i) {
      if (!(lo_[i] <= hi_[i])) fail(ErrorKind::Data, "calibration: no samples observed");
      const double c = 0.5 * (lo_[i] + hi_[i]);
      const double r = 0.5 * (hi_[i] - lo_[i]) * inflation;
      lo[i] = c - r;
      hi[i] = c + r;
    }
    return {std::move(lo), std::move(hi)};
  }

 private:
  std::vector<double> lo_;
  std::vector<double> hi_;
};

inline LstmDomain<double> calibrate_direction(const LstmCellParams<double>& p,
                                              const std::vector<Sequence>& data, bool reverse,
                                              double inflation) {
  BoxTracker v(p.input_size());
  BoxTracker h(p.hidden_size());
  BoxTracker c(p.hidden_size());
  for (const auto& xs : data) {
    const auto traj = lstm_trajectory(p, xs, reverse);
    for (std::size_t s = 0; s < xs.size(); ++s) {
      v.add(xs[s].span());
      h.add(traj[s].h.span());
      c.add(traj[s].c.span());
    }
  }
  return {v.box(inflation), h.box(inflation), c.box(inflation)};
}

// Sets the LSTM domains from the trajectories of `data`.  No-op for models
// without recurrent gates.
inline void calibrate(Model<double>& m, const std::vector<Sequence>& data, double inflation) {
  if (inflation < 1.0) fail(ErrorKind::Usage, "calibration inflation must be >= 1");
  if (m.shape.kind == ModelKind::Lstm || m.shape.kind == ModelKind::BiLstm)
    m.fwd_domain = calibrate_direction(m.fwd, data, false, inflation);
  if (m.shape.kind == ModelKind::BiLstm)
    m.bwd_domain = calibrate_direction(m.bwd, data, true, inflation);
}

}  // namespace gbmcert
