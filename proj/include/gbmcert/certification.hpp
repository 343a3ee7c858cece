#pragma once

// Certified output enclosures from a GBM, their composition across the time
// steps of a recurrent cell, and the certificate record.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gbmcert/core/error.hpp"
#include "gbmcert/core/interval.hpp"
#include "gbmcert/core/matrix.hpp"
#include "gbmcert/gbm.hpp"
#include "gbmcert/lstm_gbm.hpp"

namespace gbmcert {

// |delta_j| <= radius_j for every input coordinate j.
struct PerturbationSpec {
  Vector radius;

  void validate() const {
    for (std::size_t j = 0; j < radius.size(); ++j) {
      if (!(radius[j] >= 0.0) || !std::isfinite(radius[j]))
        fail(ErrorKind::Domain, "perturbation radius " + std::to_string(j) + " is negative");
    }
  }
};

// Sum_j M_ij r_j for every row i.
inline Vector deviation_bound(const Matrix& m, const Vector& r) {
  require_dims(m.cols() == r.size(), "deviation_bound: GBM has " + std::to_string(m.cols()) +
                                         " columns but radius has length " +
                                         std::to_string(r.size()));
  return mat_vec(m, r);
}

inline BoxInterval output_bounds(const Vector& f_at_x, const Gbm& m, const PerturbationSpec& spec) {
  spec.validate();
  require_dims(m.rows() == f_at_x.size(), "output_bounds: GBM rows != output length");
  const Vector dev = deviation_bound(m.m, spec.radius);
  Vector lo(f_at_x.size());
  Vector hi(f_at_x.size());
  for (std::size_t i = 0; i < f_at_x.size(); ++i) {
    lo[i] = f_at_x[i] - dev[i];
    hi[i] = f_at_x[i] + dev[i];
  }
  return {std::move(lo), std::move(hi)};
}

inline double lipschitz_constant(const Gbm& m) {
  double best = 0.0;
  for (double x : m.m.span()) best = std::max(best, x);
  return best;
}

// Linearised deviation dynamics of a recurrent cell with state s and output o:
//   |ds_t| <= state_in r_t + state_state |ds_{t-1}|
//   |do_t| <= out_in   r_t + out_state   |ds_{t-1}|
// All four matrices are nonnegative.
struct RecurrentSensitivity {
  Matrix state_in;
  Matrix state_state;
  Matrix out_in;
  Matrix out_state;

  std::size_t input_size() const { return state_in.cols(); }
  std::size_t state_size() const { return state_state.rows(); }
  std::size_t output_size() const { return out_in.rows(); }

  void validate() const {
    const std::size_t n = state_size();
    const std::size_t d0 = input_size();
    require_dims(state_state.cols() == n, "sensitivity: state_state must be square");
    require_dims(state_in.rows() == n, "sensitivity: state_in rows != state size");
    require_dims(out_in.cols() == d0, "sensitivity: out_in cols != input size");
    require_dims(out_state.rows() == out_in.rows() && out_state.cols() == n,
                 "sensitivity: out_state shape mismatch");
  }
};

// The LSTM state is (h, c) and the output is h:
//   state_in    = [M_v; |A^c|]        state_state = [[M_h, M_c], [|B^c|, |D^c|]]
//   out_in      = M_v                 out_state   = [M_h, M_c]
inline RecurrentSensitivity lstm_sensitivity(const LstmCellBounds<double>& b) {
  const std::size_t d = b.gbm.rows();
  const std::size_t d0 = b.gbm.cols() - 2 * d;
  const Matrix ac = b.ac.max_abs();
  const Matrix bc = b.bc.max_abs();
  const Matrix dc = b.dc.max_abs();
  RecurrentSensitivity s;
  s.state_in = Matrix(2 * d, d0);
  s.state_state = Matrix(2 * d, 2 * d);
  s.out_in = Matrix(d, d0);
  s.out_state = Matrix(d, 2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d0; ++j) {
      s.state_in(i, j) = b.gbm.m(i, j);
      s.state_in(d + i, j) = ac(i, j);
      s.out_in(i, j) = b.gbm.m(i, j);
    }
    for (std::size_t j = 0; j < 2 * d; ++j) {
      s.state_state(i, j) = b.gbm.m(i, d0 + j);
      s.out_state(i, j) = b.gbm.m(i, d0 + j);
    }
    for (std::size_t j = 0; j < d; ++j) {
      s.state_state(d + i, j) = bc(i, j);
      s.state_state(d + i, d + j) = dc(i, j);
    }
  }
  return s;
}

struct ChainedBounds {
  std::vector<Vector> output;  // |do_t|, t = 1..N
  std::vector<Vector> state;   // |ds_t|, t = 1..N
};

// Composes the per-step bound over a sequence that starts from an
// unperturbed state.  Shared weights mean one sensitivity for every step.
inline ChainedBounds chain_recurrent_bounds(const RecurrentSensitivity& s,
                                            const std::vector<Vector>& radii) {
  s.validate();
  ChainedBounds out;
  Vector prev(s.state_size());
  for (std::size_t t = 0; t < radii.size(); ++t) {
    PerturbationSpec{radii[t]}.validate();
    require_dims(radii[t].size() == s.input_size(),
                 "chain_recurrent_bounds: radius " + std::to_string(t) + " has wrong length");
    Vector o = add(mat_vec(s.out_in, radii[t]), mat_vec(s.out_state, prev));
    Vector next = add(mat_vec(s.state_in, radii[t]), mat_vec(s.state_state, prev));
    out.output.push_back(std::move(o));
    out.state.push_back(next);
    prev = std::move(next);
  }
  return out;
}

enum class CertifyMode { Chained, FinalCell };

inline std::string to_string(CertifyMode m) {
  return m == CertifyMode::Chained ? "chained" : "final-cell";
}

inline CertifyMode certify_mode_from_string(const std::string& s) {
  if (s == "chained") return CertifyMode::Chained;
  if (s == "final-cell") return CertifyMode::FinalCell;
  fail(ErrorKind::Usage, "unknown certification mode '" + s + "'");
}

struct Certificate {
  std::string id;
  std::size_t predicted = 0;
  int label = -1;  // -1 when unknown
  bool certified = false;
  bool domain_valid = true;
  double margin = 0.0;
  Vector logit_lo;
  Vector logit_hi;
  CertifyMode mode = CertifyMode::Chained;
};

// Certified iff the predicted logit's lower bound beats every other class's
// upper bound.
inline void finalize_certificate(Certificate& c, const Vector& logits, const Vector& deviation) {
  require_dims(logits.size() == deviation.size() && logits.size() >= 2,
               "certificate: need at least two classes");
  std::size_t pred = 0;
  for (std::size_t k = 1; k < logits.size(); ++k)
    if (logits[k] > logits[pred]) pred = k;
  c.predicted = pred;
  c.logit_lo = Vector(logits.size());
  c.logit_hi = Vector(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    c.logit_lo[k] = logits[k] - deviation[k];
    c.logit_hi[k] = logits[k] + deviation[k];
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < logits.size(); ++k)
    if (k != pred) worst = std::max(worst, c.logit_hi[k]);
  // Outside the validated domain the bounds mean nothing.
  c.margin = c.domain_valid ? c.logit_lo[pred] - worst : -std::numeric_limits<double>::infinity();
  c.certified = c.domain_valid && c.margin > 0.0;
}

inline nlohmann::json to_json(const Certificate& c) {
  nlohmann::json j;
  j["id"] = c.id;
  j["predicted"] = c.predicted;
  if (c.label >= 0) j["label"] = c.label;
  j["certified"] = c.certified;
  j["domain_valid"] = c.domain_valid;
  if (std::isfinite(c.margin))
    j["margin"] = c.margin;
  else
    j["margin"] = nullptr;
  j["mode"] = to_string(c.mode);
  j["logit_lo"] = c.logit_lo.values();
  j["logit_hi"] = c.logit_hi.values();
  return j;
}

}  // namespace gbmcert
