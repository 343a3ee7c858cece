#pragma once

// Reverse-mode differentiation over scalars.
//
// A Tape is an append-only list of nodes.  Each node stores the partial
// derivative of its value with respect to every non-constant parent, so a
// single reverse sweep accumulates adjoints.  Nodes are n-ary: a dot product
// of length n is one node with up to 2n edges rather than 2n binary nodes.
//
// Var is a value plus a node id.  Vars with id == kConstant never touch the
// tape.  Operations on Vars record onto the tape installed by TapeScope on
// the calling thread.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "gbmcert/core/error.hpp"
#include "gbmcert/core/scalar.hpp"

namespace gbmcert::ad {

using NodeId = std::int64_t;
inline constexpr NodeId kConstant = -1;

class Tape {
 public:
  struct Edge {
    NodeId parent;
    double partial;
  };

  Tape() { begin_.push_back(0); }

  std::size_t size() const noexcept { return begin_.size() - 1; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  void clear() {
    begin_.assign(1, 0);
    edges_.clear();
  }

  NodeId new_leaf() { return close_node(); }

  void push_edge(NodeId parent, double partial) {
    assert(parent >= 0 && static_cast<std::size_t>(parent) < size());
    edges_.push_back({parent, partial});
  }

  // Closes the node whose edges were pushed since the previous close.
  NodeId close_node() {
    begin_.push_back(edges_.size());
    return static_cast<NodeId>(size() - 1);
  }

  // Adjoints of every node with respect to `root`.
  std::vector<double> backward(NodeId root) const {
    std::vector<double> adjoint(size(), 0.0);
    if (root == kConstant) return adjoint;
    adjoint[static_cast<std::size_t>(root)] = 1.0;
    for (std::size_t n = static_cast<std::size_t>(root) + 1; n-- > 0;) {
      const double a = adjoint[n];
      if (a == 0.0) continue;
      for (std::size_t e = begin_[n]; e < begin_[n + 1]; ++e) {
        adjoint[static_cast<std::size_t>(edges_[e].parent)] += a * edges_[e].partial;
      }
    }
    return adjoint;
  }

  static Tape*& active() {
    thread_local Tape* tape = nullptr;
    return tape;
  }

  static Tape& current() {
    Tape* t = active();
    if (t == nullptr) fail(ErrorKind::Usage, "autodiff: no active tape on this thread");
    return *t;
  }

 private:
  std::vector<std::size_t> begin_;
  std::vector<Edge> edges_;
};

// Installs a tape for the current thread; restores the previous one on exit.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape) : previous_(Tape::active()) { Tape::active() = &tape; }
  ~TapeScope() { Tape::active() = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

class Var {
 public:
  Var() = default;
  Var(double value) : value_(value) {}  // NOLINT: constants convert implicitly

  static Var leaf(double value) { return Var(value, Tape::current().new_leaf()); }

  // Wraps a node already closed on the active tape.
  static Var from_node(double value, NodeId id) { return Var(value, id); }

  double value() const noexcept { return value_; }
  NodeId id() const noexcept { return id_; }
  bool is_constant() const noexcept { return id_ == kConstant; }

  // Builds a node from (parent, partial) pairs; constant parents are dropped
  // and an all-constant result stays off the tape.
  static Var make(double value, std::initializer_list<std::pair<const Var*, double>> parents) {
    bool any = false;
    for (const auto& [p, d] : parents) any = any || !p->is_constant();
    if (!any) return Var(value);
    Tape& tape = Tape::current();
    for (const auto& [p, d] : parents) {
      if (!p->is_constant()) tape.push_edge(p->id_, d);
    }
    return Var(value, tape.close_node());
  }

  Var& operator+=(const Var& o) { return *this = *this + o; }
  Var& operator-=(const Var& o) { return *this = *this - o; }
  Var& operator*=(const Var& o) { return *this = *this * o; }
  Var& operator/=(const Var& o) { return *this = *this / o; }

  friend Var operator+(const Var& a, const Var& b) {
    return make(a.value_ + b.value_, {{&a, 1.0}, {&b, 1.0}});
  }
  friend Var operator-(const Var& a, const Var& b) {
    return make(a.value_ - b.value_, {{&a, 1.0}, {&b, -1.0}});
  }
  friend Var operator*(const Var& a, const Var& b) {
    return make(a.value_ * b.value_, {{&a, b.value_}, {&b, a.value_}});
  }
  friend Var operator/(const Var& a, const Var& b) {
    const double q = a.value_ / b.value_;
    return make(q, {{&a, 1.0 / b.value_}, {&b, -q / b.value_}});
  }
  friend Var operator-(const Var& a) { return make(-a.value_, {{&a, -1.0}}); }

 private:
  Var(double value, NodeId id) : value_(value), id_(id) {}

  double value_ = 0.0;
  NodeId id_ = kConstant;
};

inline double value_of(const Var& x) { return x.value(); }

inline Var exp(const Var& x) {
  const double e = std::exp(x.value());
  return Var::make(e, {{&x, e}});
}

inline Var log(const Var& x) {
  return Var::make(std::log(x.value()), {{&x, 1.0 / x.value()}});
}

inline Var tanh(const Var& x) {
  const double t = std::tanh(x.value());
  return Var::make(t, {{&x, 1.0 - t * t}});
}

inline Var sigmoid(const Var& x) {
  const double s = gbmcert::sigmoid(x.value());
  return Var::make(s, {{&x, s * (1.0 - s)}});
}

// abs keeps the positive branch at zero (first-branch tie rule).
inline Var magnitude(const Var& x) { return x.value() >= 0.0 ? x : -x; }

inline Var dot(std::span<const Var> a, std::span<const Var> b) {
  assert(a.size() == b.size());
  double v = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    v += a[i].value() * b[i].value();
    any = any || !a[i].is_constant() || !b[i].is_constant();
  }
  if (!any) return Var(v);
  Tape& tape = Tape::current();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_constant() && b[i].value() != 0.0) tape.push_edge(a[i].id(), b[i].value());
    if (!b[i].is_constant() && a[i].value() != 0.0) tape.push_edge(b[i].id(), a[i].value());
  }
  return Var::from_node(v, tape.close_node());
}

inline Var sum(std::span<const Var> xs) {
  double v = 0.0;
  bool any = false;
  for (const Var& x : xs) {
    v += x.value();
    any = any || !x.is_constant();
  }
  if (!any) return Var(v);
  Tape& tape = Tape::current();
  for (const Var& x : xs) {
    if (!x.is_constant()) tape.push_edge(x.id(), 1.0);
  }
  return Var::from_node(v, tape.close_node());
}

inline double gradient_of(const std::vector<double>& adjoint, const Var& x) {
  return x.is_constant() ? 0.0 : adjoint[static_cast<std::size_t>(x.id())];
}

}  // namespace gbmcert::ad
