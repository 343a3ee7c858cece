#pragma once

// Growth bound matrix of an LSTM cell F(v, h_prev, c_prev) = h.
//
// Pipeline, per hidden unit i:
//   1. enclose every gate pre-activation T_gate over the (v, h) box
//      (sign-split affine bounds),
//   2. enclose sigma/tanh and their derivatives on those intervals,
//   3. enclose the cell-state Jacobians dc/dv, dc/dh, dc/dc_prev,
//   4. enclose c itself by midpoint evaluation inflated with the
//      Jacobian magnitudes times the full box widths,
//   5. evaluate dh/dv, dh/dh_prev, dh/dc_prev in interval arithmetic and
//      keep max(|lo|, |hi|).
//
// Everything is templated on the scalar so the same code produces the GBM in
// double precision and records it on an autodiff tape for training.

#include <array>
#include <cstddef>
#include <string>

#include "gbmcert/activation_bounds.hpp"
#include "gbmcert/core/error.hpp"
#include "gbmcert/core/interval.hpp"
#include "gbmcert/core/matrix.hpp"
#include "gbmcert/gbm.hpp"

namespace gbmcert {

enum class Gate : std::size_t { Input = 0, Forget = 1, Cell = 2, Output = 3 };

inline constexpr std::array<Gate, 4> kAllGates = {Gate::Input, Gate::Forget, Gate::Cell,
                                                  Gate::Output};

inline const char* gate_name(Gate g) {
  switch (g) {
    case Gate::Input: return "input";
    case Gate::Forget: return "forget";
    case Gate::Cell: return "cell";
    case Gate::Output: return "output";
  }
  return "?";
}

template <class T>
struct GateParams {
  BasicMatrix<T> theta;  // d x d0, input-to-hidden
  BasicMatrix<T> u;      // d x d, hidden-to-hidden
  BasicVector<T> b;      // d
};

template <class T>
struct LstmCellParams {
  std::array<GateParams<T>, 4> gates;

  static LstmCellParams zeros(std::size_t input_size, std::size_t hidden_size) {
    LstmCellParams p;
    for (auto& g : p.gates) {
      g.theta = BasicMatrix<T>(hidden_size, input_size);
      g.u = BasicMatrix<T>(hidden_size, hidden_size);
      g.b = BasicVector<T>(hidden_size);
    }
    return p;
  }

  GateParams<T>& gate(Gate g) { return gates[static_cast<std::size_t>(g)]; }
  const GateParams<T>& gate(Gate g) const { return gates[static_cast<std::size_t>(g)]; }

  std::size_t input_size() const { return gates[0].theta.cols(); }
  std::size_t hidden_size() const { return gates[0].theta.rows(); }

  void validate() const {
    const std::size_t d0 = input_size();
    const std::size_t d = hidden_size();
    for (Gate g : kAllGates) {
      const auto& gp = gate(g);
      require_dims(gp.theta.rows() == d && gp.theta.cols() == d0,
                   std::string("lstm: theta shape mismatch for gate ") + gate_name(g));
      require_dims(gp.u.rows() == d && gp.u.cols() == d,
                   std::string("lstm: U shape mismatch for gate ") + gate_name(g));
      require_dims(gp.b.size() == d, std::string("lstm: bias length mismatch for gate ") +
                                         gate_name(g));
    }
  }

  // Visits every trainable tensor as (name, flat span).
  template <class Fn>
  void visit(const std::string& prefix, Fn&& fn) {
    for (Gate g : kAllGates) {
      auto& gp = gate(g);
      const std::string base = prefix + gate_name(g);
      fn(base + ".theta", gp.theta.span());
      fn(base + ".u", gp.u.span());
      fn(base + ".b", gp.b.span());
    }
  }
};

template <class T>
struct LstmDomain {
  BasicBox<T> v_box;
  BasicBox<T> h_box;
  BasicBox<T> c_box;

  void validate(std::size_t input_size, std::size_t hidden_size) const {
    require_dims(v_box.size() == input_size, "lstm domain: v_box dimension mismatch");
    require_dims(h_box.size() == hidden_size, "lstm domain: h_box dimension mismatch");
    require_dims(c_box.size() == hidden_size, "lstm domain: c_box dimension mismatch");
  }
};

template <class T>
struct LstmState {
  BasicVector<T> h;
  BasicVector<T> c;
};

template <class T>
struct JacobianBounds {
  BasicMatrix<T> lo;
  BasicMatrix<T> hi;

  BasicMatrix<T> max_abs() const {
    BasicMatrix<T> out(lo.rows(), lo.cols());
    for (std::size_t r = 0; r < lo.rows(); ++r)
      for (std::size_t c = 0; c < lo.cols(); ++c)
        out(r, c) = max_first(magnitude(lo(r, c)), magnitude(hi(r, c)));
    return out;
  }

  bool contains(std::size_t r, std::size_t c, double x, double tol = 0.0) const {
    return value_of(lo(r, c)) - tol <= x && x <= value_of(hi(r, c)) + tol;
  }
};

template <class T>
BasicVector<T> gate_preactivation(const GateParams<T>& g, const BasicVector<T>& v,
                                  const BasicVector<T>& h_prev) {
  BasicVector<T> out(g.b.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = dot(g.theta.row(i), v.span()) + dot(g.u.row(i), h_prev.span()) + g.b[i];
  }
  return out;
}

template <class T>
LstmState<T> lstm_cell_forward(const LstmCellParams<T>& p, const BasicVector<T>& v,
                               const BasicVector<T>& h_prev, const BasicVector<T>& c_prev) {
  p.validate();
  require_dims(v.size() == p.input_size(), "lstm_cell_forward: input length mismatch");
  require_dims(h_prev.size() == p.hidden_size(), "lstm_cell_forward: h_prev length mismatch");
  require_dims(c_prev.size() == p.hidden_size(), "lstm_cell_forward: c_prev length mismatch");
  const std::size_t d = p.hidden_size();
  const auto pre_i = gate_preactivation(p.gate(Gate::Input), v, h_prev);
  const auto pre_f = gate_preactivation(p.gate(Gate::Forget), v, h_prev);
  const auto pre_g = gate_preactivation(p.gate(Gate::Cell), v, h_prev);
  const auto pre_o = gate_preactivation(p.gate(Gate::Output), v, h_prev);
  LstmState<T> out{BasicVector<T>(d), BasicVector<T>(d)};
  for (std::size_t i = 0; i < d; ++i) {
    out.c[i] = sigmoid(pre_f[i]) * c_prev[i] + sigmoid(pre_i[i]) * tanh(pre_g[i]);
    out.h[i] = sigmoid(pre_o[i]) * tanh(out.c[i]);
  }
  return out;
}

namespace detail {

template <class T>
struct PreactivationBounds {
  std::array<BasicBox<T>, 4> gate;

  BasicInterval<T> operator()(Gate g, std::size_t i) const {
    return gate[static_cast<std::size_t>(g)][i];
  }
};

template <class T>
PreactivationBounds<T> preactivation_bounds(const LstmCellParams<T>& p, const LstmDomain<T>& dom) {
  PreactivationBounds<T> out;
  for (Gate g : kAllGates) {
    const auto& gp = p.gate(g);
    out.gate[static_cast<std::size_t>(g)] =
        interval_affine(gp.theta, gp.u, gp.b, dom.v_box, dom.h_box);
  }
  return out;
}

// Row factors shared by dc/dv and dc/dh:
//   dc_i/dx_j = W^f_ij * sigma'(T_f) * c_prev_i
//             + W^I_ij * sigma'(T_I) * tanh(T_g)
//             + W^g_ij * sigma(T_I)  * tanh'(T_g)
template <class T>
struct CellJacobianFactors {
  std::vector<BasicInterval<T>> forget;
  std::vector<BasicInterval<T>> input;
  std::vector<BasicInterval<T>> cell;
};

template <class T>
CellJacobianFactors<T> cell_jacobian_factors(const PreactivationBounds<T>& pre,
                                             const LstmDomain<T>& dom, std::size_t d) {
  CellJacobianFactors<T> f;
  f.forget.reserve(d);
  f.input.reserve(d);
  f.cell.reserve(d);
  for (std::size_t i = 0; i < d; ++i) {
    const auto t_f = pre(Gate::Forget, i);
    const auto t_i = pre(Gate::Input, i);
    const auto t_g = pre(Gate::Cell, i);
    f.forget.push_back(derivative_bounds(ActivationKind::Sigmoid, t_f) * dom.c_box[i]);
    f.input.push_back(derivative_bounds(ActivationKind::Sigmoid, t_i) *
                      value_bounds(ActivationKind::Tanh, t_g));
    f.cell.push_back(value_bounds(ActivationKind::Sigmoid, t_i) *
                     derivative_bounds(ActivationKind::Tanh, t_g));
  }
  return f;
}

template <class T, class WeightOf>
JacobianBounds<T> cell_jacobian(const CellJacobianFactors<T>& f, std::size_t d, std::size_t cols,
                                WeightOf&& weight) {
  JacobianBounds<T> out{BasicMatrix<T>(d, cols), BasicMatrix<T>(d, cols)};
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const auto entry = weight(Gate::Forget, i, j) * f.forget[i] +
                         weight(Gate::Input, i, j) * f.input[i] +
                         weight(Gate::Cell, i, j) * f.cell[i];
      out.lo(i, j) = entry.lo();
      out.hi(i, j) = entry.hi();
    }
  }
  return out;
}

template <class T>
JacobianBounds<T> jacobian_ac(const LstmCellParams<T>& p, const CellJacobianFactors<T>& f) {
  return cell_jacobian(f, p.hidden_size(), p.input_size(),
                       [&](Gate g, std::size_t i, std::size_t j) { return p.gate(g).theta(i, j); });
}

template <class T>
JacobianBounds<T> jacobian_bc(const LstmCellParams<T>& p, const CellJacobianFactors<T>& f) {
  return cell_jacobian(f, p.hidden_size(), p.hidden_size(),
                       [&](Gate g, std::size_t i, std::size_t j) { return p.gate(g).u(i, j); });
}

// dc_i/dc_prev_k = delta_ik * sigma(T_f^i).
template <class T>
JacobianBounds<T> jacobian_dc(const PreactivationBounds<T>& pre, std::size_t d) {
  JacobianBounds<T> out{BasicMatrix<T>(d, d), BasicMatrix<T>(d, d)};
  for (std::size_t i = 0; i < d; ++i) {
    const auto s = value_bounds(ActivationKind::Sigmoid, pre(Gate::Forget, i));
    out.lo(i, i) = s.lo();
    out.hi(i, i) = s.hi();
  }
  return out;
}

template <class T>
BasicBox<T> cell_state_box(const LstmCellParams<T>& p, const LstmDomain<T>& dom,
                           const JacobianBounds<T>& ac, const JacobianBounds<T>& bc,
                           const JacobianBounds<T>& dc) {
  const auto mid = lstm_cell_forward(p, dom.v_box.mid(), dom.h_box.mid(), dom.c_box.mid());
  const auto wv = dom.v_box.width();
  const auto wh = dom.h_box.width();
  const auto wc = dom.c_box.width();
  const auto ac_abs = ac.max_abs();
  const auto bc_abs = bc.max_abs();
  const auto dc_abs = dc.max_abs();
  const std::size_t d = p.hidden_size();
  BasicVector<T> lo(d);
  BasicVector<T> hi(d);
  for (std::size_t i = 0; i < d; ++i) {
    const T inflation = dot(ac_abs.row(i), wv.span()) + dot(bc_abs.row(i), wh.span()) +
                        dot(dc_abs.row(i), wc.span());
    lo[i] = mid.c[i] - inflation;
    hi[i] = mid.c[i] + inflation;
  }
  return {std::move(lo), std::move(hi)};
}

}  // namespace detail

template <class T>
JacobianBounds<T> jacobian_bounds_ac(const LstmCellParams<T>& p, const LstmDomain<T>& dom) {
  p.validate();
  dom.validate(p.input_size(), p.hidden_size());
  const auto pre = detail::preactivation_bounds(p, dom);
  const auto f = detail::cell_jacobian_factors(pre, dom, p.hidden_size());
  return detail::jacobian_ac(p, f);
}

template <class T>
JacobianBounds<T> jacobian_bounds_bc(const LstmCellParams<T>& p, const LstmDomain<T>& dom) {
  p.validate();
  dom.validate(p.input_size(), p.hidden_size());
  const auto pre = detail::preactivation_bounds(p, dom);
  const auto f = detail::cell_jacobian_factors(pre, dom, p.hidden_size());
  return detail::jacobian_bc(p, f);
}

template <class T>
JacobianBounds<T> jacobian_bounds_dc(const LstmCellParams<T>& p, const LstmDomain<T>& dom) {
  p.validate();
  dom.validate(p.input_size(), p.hidden_size());
  return detail::jacobian_dc(detail::preactivation_bounds(p, dom), p.hidden_size());
}

template <class T>
BasicBox<T> cell_state_bounds(const LstmCellParams<T>& p, const LstmDomain<T>& dom) {
  p.validate();
  dom.validate(p.input_size(), p.hidden_size());
  const auto pre = detail::preactivation_bounds(p, dom);
  const auto f = detail::cell_jacobian_factors(pre, dom, p.hidden_size());
  return detail::cell_state_box(p, dom, detail::jacobian_ac(p, f),
                                detail::jacobian_bc(p, f),
                                detail::jacobian_dc(pre, p.hidden_size()));
}

// Everything certification needs from one cell: the GBM of h and the
// cell-state Jacobian enclosures used to propagate c deviations.
template <class T>
struct LstmCellBounds {
  BasicGbm<T> gbm;
  JacobianBounds<T> ac;
  JacobianBounds<T> bc;
  JacobianBounds<T> dc;
  BasicBox<T> c_next;
};

template <class T>
LstmCellBounds<T> lstm_cell_bounds(const LstmCellParams<T>& p, const LstmDomain<T>& dom) {
  p.validate();
  dom.validate(p.input_size(), p.hidden_size());
  const std::size_t d0 = p.input_size();
  const std::size_t d = p.hidden_size();

  const auto pre = detail::preactivation_bounds(p, dom);
  const auto f = detail::cell_jacobian_factors(pre, dom, d);
  LstmCellBounds<T> out;
  out.ac = detail::jacobian_ac(p, f);
  out.bc = detail::jacobian_bc(p, f);
  out.dc = detail::jacobian_dc(pre, d);
  out.c_next = detail::cell_state_box(p, dom, out.ac, out.bc, out.dc);

  out.gbm.m = BasicMatrix<T>(d, d0 + 2 * d);
  out.gbm.blocks = {{"input", 0, d0}, {"hidden", d0, d}, {"cell", d0 + d, d}};
  for (std::size_t i = 0; i < d; ++i) {
    const auto t_o = pre(Gate::Output, i);
    const auto c_t = out.c_next[i];
    const auto d_out = derivative_bounds(ActivationKind::Sigmoid, t_o);
    const auto s_out = value_bounds(ActivationKind::Sigmoid, t_o);
    const auto tanh_c = value_bounds(ActivationKind::Tanh, c_t);
    const auto dtanh_c = derivative_bounds(ActivationKind::Tanh, c_t);
    // dh_i/dx_j = W^o_ij sigma'(T_o) tanh(c_i) + sigma(T_o) tanh'(c_i) dc_i/dx_j
    const auto gate_path = d_out * tanh_c;
    const auto cell_path = s_out * dtanh_c;

    for (std::size_t j = 0; j < d0; ++j) {
      const auto e = p.gate(Gate::Output).theta(i, j) * gate_path +
                     cell_path * BasicInterval<T>(out.ac.lo(i, j), out.ac.hi(i, j));
      out.gbm.m(i, j) = e.max_abs();
    }
    for (std::size_t j = 0; j < d; ++j) {
      const auto e = p.gate(Gate::Output).u(i, j) * gate_path +
                     cell_path * BasicInterval<T>(out.bc.lo(i, j), out.bc.hi(i, j));
      out.gbm.m(i, d0 + j) = e.max_abs();
    }
    // dh_i/dc_prev_k vanishes for k != i.
    const auto e = cell_path * value_bounds(ActivationKind::Sigmoid, pre(Gate::Forget, i));
    out.gbm.m(i, d0 + d + i) = e.max_abs();
  }
  return out;
}

template <class T>
BasicGbm<T> gbm_lstm(const LstmCellParams<T>& p, const LstmDomain<T>& dom) {
  return lstm_cell_bounds(p, dom).gbm;
}

}  // namespace gbmcert
