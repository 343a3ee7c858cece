#pragma once

// Sentence-level certificates for the classifiers in models/model.hpp.
//
// Word t may move anywhere in the box v_t +- r_t.  Deviations are pushed
// through the sequence cell (chained per time step for recurrent cells, in
// one shot for the CNN) and then through |W_head|.  For LSTMs the bound is
// only valid while the perturbed trajectory stays inside the domain the GBM
// was computed on, so that is checked along the way; a violation yields an
// uncertified result.

#include <cstddef>
#include <string>
#include <vector>

#include "gbmcert/certification.hpp"
#include "gbmcert/core/error.hpp"
#include "gbmcert/core/interval.hpp"
#include "gbmcert/core/matrix.hpp"
#include "gbmcert/data/dataset.hpp"
#include "gbmcert/lstm_gbm.hpp"
#include "gbmcert/models/model.hpp"

namespace gbmcert {

struct FeatureDeviation {
  Vector bound;
  bool domain_valid = true;
};

namespace detail {

inline bool interval_inside(double x, double dev, double lo, double hi) {
  return lo <= x - dev && x + dev <= hi;
}

// One LSTM direction.  The input box is the calibrated one widened to cover
// every v_t +- r_t; hidden and cell boxes stay as calibrated.
inline FeatureDeviation lstm_direction_deviation(const LstmCellParams<double>& p,
                                                 const LstmDomain<double>& calibrated,
                                                 const Sequence& xs,
                                                 const std::vector<Vector>& radii, bool reverse,
                                                 CertifyMode mode) {
  const std::size_t n = xs.size();
  const std::size_t d0 = p.input_size();
  const std::size_t d = p.hidden_size();
  Vector vlo = calibrated.v_box.lo();
  Vector vhi = calibrated.v_box.hi();
  std::vector<Vector> ordered_r(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t t = reverse ? n - 1 - s : s;
    ordered_r[s] = radii[t];
    for (std::size_t j = 0; j < d0; ++j) {
      vlo[j] = std::min(vlo[j], xs[t][j] - radii[t][j]);
      vhi[j] = std::max(vhi[j], xs[t][j] + radii[t][j]);
    }
  }
  const LstmDomain<double> dom{BoxInterval(vlo, vhi), calibrated.h_box, calibrated.c_box};
  const auto bounds = lstm_cell_bounds(p, dom);
  const auto sens = lstm_sensitivity(bounds);
  const auto chain = chain_recurrent_bounds(sens, ordered_r);
  const auto traj = lstm_trajectory(p, xs, reverse);

  FeatureDeviation out;
  // traj[s] and chain.state[s - 1] describe the state fed into step s.
  for (std::size_t s = 0; s < n && out.domain_valid; ++s) {
    for (std::size_t i = 0; i < d; ++i) {
      const double dh = s == 0 ? 0.0 : chain.state[s - 1][i];
      const double dc = s == 0 ? 0.0 : chain.state[s - 1][d + i];
      if (!interval_inside(traj[s].h[i], dh, dom.h_box.lo()[i], dom.h_box.hi()[i]) ||
          !interval_inside(traj[s].c[i], dc, dom.c_box.lo()[i], dom.c_box.hi()[i])) {
        out.domain_valid = false;
        break;
      }
    }
  }
  if (mode == CertifyMode::Chained || n == 1) {
    out.bound = chain.output.back();
  } else {
    // Only the last cell is bounded; the state it receives may sit anywhere
    // in the domain, so its deviation is at most the box width.
    Vector prev(2 * d);
    for (std::size_t i = 0; i < d; ++i) {
      prev[i] = dom.h_box.hi()[i] - dom.h_box.lo()[i];
      prev[d + i] = dom.c_box.hi()[i] - dom.c_box.lo()[i];
    }
    out.bound = add(mat_vec(sens.out_in, ordered_r.back()), mat_vec(sens.out_state, prev));
  }
  return out;
}

inline RecurrentSensitivity s4_sensitivity(const S4DiscreteParams<double>& p) {
  RecurrentSensitivity s;
  s.state_in = abs_entries(p.b_bar);
  s.state_state = abs_entries(p.a_bar);
  s.out_in = abs_entries(add(mat_mul(p.c_bar, p.b_bar), p.d_bar));
  s.out_state = abs_entries(mat_mul(p.c_bar, p.a_bar));
  return s;
}

}  // namespace detail

// Elementwise bound on |features(x') - features(x)| over the perturbation
// box.  S4 and CNN bounds hold globally; `mode` only affects LSTMs.
inline FeatureDeviation feature_deviation(const Model<double>& m, const Sequence& xs,
                                          const std::vector<Vector>& radii, CertifyMode mode) {
  require_dims(radii.size() == xs.size(), "certify: one radius per word is required");
  for (const auto& r : radii) PerturbationSpec{r}.validate();
  switch (m.shape.kind) {
    case ModelKind::Lstm:
      if (!m.fwd_domain) fail(ErrorKind::Usage, "certify: lstm domain has not been calibrated");
      return detail::lstm_direction_deviation(m.fwd, *m.fwd_domain, xs, radii, false, mode);
    case ModelKind::BiLstm: {
      if (!m.fwd_domain || !m.bwd_domain)
        fail(ErrorKind::Usage, "certify: bilstm domains have not been calibrated");
      const auto f = detail::lstm_direction_deviation(m.fwd, *m.fwd_domain, xs, radii, false, mode);
      const auto b = detail::lstm_direction_deviation(m.bwd, *m.bwd_domain, xs, radii, true, mode);
      FeatureDeviation out;
      out.domain_valid = f.domain_valid && b.domain_valid;
      out.bound = Vector(f.bound.size() + b.bound.size());
      for (std::size_t i = 0; i < f.bound.size(); ++i) out.bound[i] = f.bound[i];
      for (std::size_t i = 0; i < b.bound.size(); ++i) out.bound[f.bound.size() + i] = b.bound[i];
      return out;
    }
    case ModelKind::S4: {
      const auto chain = chain_recurrent_bounds(detail::s4_sensitivity(m.s4.discretize()), radii);
      FeatureDeviation out;
      out.bound = Vector(m.shape.input_size);
      for (const auto& o : chain.output)
        for (std::size_t i = 0; i < o.size(); ++i) out.bound[i] += o[i];
      for (double& x : out.bound) x /= static_cast<double>(xs.size());
      return out;
    }
    case ModelKind::Cnn: {
      const Gbm g = gbm_cnn(m.cnn, xs.size());
      Vector r(xs.size() * m.shape.input_size);
      for (std::size_t t = 0; t < xs.size(); ++t)
        for (std::size_t j = 0; j < m.shape.input_size; ++j) r[t * m.shape.input_size + j] = radii[t][j];
      return {deviation_bound(g.m, r), true};
    }
  }
  fail(ErrorKind::Usage, "certify: unknown model kind");
}

inline Certificate certify_embedded(const Model<double>& m, const Sequence& xs,
                                    const std::vector<Vector>& radii,
                                    CertifyMode mode = CertifyMode::Chained) {
  const Vector z = logits(m, xs);
  const FeatureDeviation fd = feature_deviation(m, xs, radii, mode);
  Certificate c;
  c.mode = mode;
  c.domain_valid = fd.domain_valid;
  finalize_certificate(c, z, mat_vec(abs_entries(m.head.w), fd.bound));
  return c;
}

inline Certificate certify_sentence(const Model<double>& m, const std::vector<std::string>& tokens,
                                    const EmbeddingTable& emb, const SynonymTable& syn,
                                    CertifyMode mode = CertifyMode::Chained,
                                    OovPolicy oov = OovPolicy::ZeroVector) {
  const auto s = embed_sentence(tokens, emb, &syn, m.shape.min_length(), oov);
  return certify_embedded(m, s.x, s.radius, mode);
}

}  // namespace gbmcert
