#pragma once

// Scalar reverse-mode automatic differentiation.
//
// Every primitive records its value together with the local partial
// derivatives with respect to its (at most two) parents. A reverse sweep over
// the node list, which is topologically ordered by construction, accumulates
// adjoints.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "tdvpinn/errors.hpp"

namespace tdvpinn {

enum class Op : std::uint8_t {
  constant,
  input,
  add,
  mul,
  neg,
  tanh,
  reciprocal,
  power,
  unary,  // externally differentiated scalar function (e.g. a coefficient table)
};

using NodeId = std::uint32_t;

struct Node {
  NodeId id = 0;
  Op op = Op::constant;
  std::uint8_t arity = 0;
  std::array<NodeId, 2> parents{0, 0};
  double value = 0.0;
  std::array<double, 2> partials{0.0, 0.0};
};

class Tape {
 public:
  Tape() = default;

  /// Appends a node. Parents must already be on the tape.
  NodeId record(Op op, std::span<const NodeId> parents, double value,
                std::span<const double> partials) {
    if (parents.size() > 2 || partials.size() != parents.size()) {
      throw StructuralError("tape record: arity mismatch");
    }
    const auto id = static_cast<NodeId>(nodes_.size());
    Node node;
    node.id = id;
    node.op = op;
    node.arity = static_cast<std::uint8_t>(parents.size());
    node.value = value;
    for (std::size_t i = 0; i < parents.size(); ++i) {
      if (parents[i] >= id) {
        throw StructuralError("tape record: parent id " + std::to_string(parents[i]) +
                              " out of range (tape size " + std::to_string(id) + ")");
      }
      node.parents[i] = parents[i];
      node.partials[i] = partials[i];
    }
    nodes_.push_back(node);
    return id;
  }

  NodeId record(Op op, std::initializer_list<NodeId> parents, double value,
                std::initializer_list<double> partials) {
    return record(op, std::span<const NodeId>(parents.begin(), parents.size()), value,
                  std::span<const double>(partials.begin(), partials.size()));
  }

  NodeId constant(double value) { return record(Op::constant, {}, value, {}); }

  /// Leaf node; trainable leaves are listed in param_ids().
  NodeId input(double value, bool trainable = true) {
    const NodeId id = record(Op::input, {}, value, {});
    if (trainable) param_ids_.push_back(id);
    return id;
  }

  NodeId add(NodeId a, NodeId b) { return record(Op::add, {a, b}, value(a) + value(b), {1.0, 1.0}); }
  NodeId mul(NodeId a, NodeId b) {
    return record(Op::mul, {a, b}, value(a) * value(b), {value(b), value(a)});
  }
  NodeId neg(NodeId a) { return record(Op::neg, {a}, -value(a), {-1.0}); }
  NodeId tanh(NodeId a) {
    const double t = std::tanh(value(a));
    return record(Op::tanh, {a}, t, {1.0 - t * t});
  }
  NodeId reciprocal(NodeId a) {
    const double r = 1.0 / value(a);
    return record(Op::reciprocal, {a}, r, {-r * r});
  }
  /// a^p for a constant exponent p.
  NodeId power(NodeId a, double p) {
    const double x = value(a);
    return record(Op::power, {a}, std::pow(x, p), {p * std::pow(x, p - 1.0)});
  }
  NodeId unary(NodeId a, double value, double partial) {
    return record(Op::unary, {a}, value, {partial});
  }

  double value(NodeId id) const { return at(id).value; }
  const Node& at(NodeId id) const {
    if (id >= nodes_.size()) throw StructuralError("tape: node id out of range");
    return nodes_[id];
  }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::span<const Node> nodes() const noexcept { return nodes_; }
  std::span<const NodeId> param_ids() const noexcept { return param_ids_; }

  void clear() {
    nodes_.clear();
    param_ids_.clear();
  }

  /// d(output)/d(node) for every node on the tape.
  std::vector<double> backward(NodeId output) const {
    if (output >= nodes_.size()) throw StructuralError("backward: output id out of range");
    std::vector<double> adjoint(nodes_.size(), 0.0);
    adjoint[output] = 1.0;
    for (std::size_t i = output + 1; i-- > 0;) {
      const double g = adjoint[i];
      if (g == 0.0) continue;
      const Node& node = nodes_[i];
      for (std::uint8_t j = 0; j < node.arity; ++j) {
        adjoint[node.parents[j]] += node.partials[j] * g;
      }
    }
    return adjoint;
  }

  /// Gradient restricted to the trainable leaves, in registration order.
  std::vector<double> parameter_gradient(NodeId output) const {
    const auto adjoint = backward(output);
    std::vector<double> grad;
    grad.reserve(param_ids_.size());
    for (NodeId id : param_ids_) grad.push_back(adjoint[id]);
    return grad;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<NodeId> param_ids_;
};

/// Value handle bound to a tape; arithmetic records onto that tape.
class Var {
 public:
  Var() = default;
  Var(Tape& tape, NodeId id) : tape_(&tape), id_(id) {}

  NodeId id() const noexcept { return id_; }
  Tape& tape() const { return *tape_; }
  double value() const { return tape_->value(id_); }

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

inline Var operator+(const Var& a, const Var& b) { return {a.tape(), a.tape().add(a.id(), b.id())}; }
inline Var operator*(const Var& a, const Var& b) { return {a.tape(), a.tape().mul(a.id(), b.id())}; }
inline Var operator-(const Var& a) { return {a.tape(), a.tape().neg(a.id())}; }
inline Var operator-(const Var& a, const Var& b) { return a + (-b); }
inline Var operator/(const Var& a, const Var& b) {
  return a * Var(b.tape(), b.tape().reciprocal(b.id()));
}

inline Var operator+(const Var& a, double b) { return a + Var(a.tape(), a.tape().constant(b)); }
inline Var operator+(double a, const Var& b) { return b + a; }
inline Var operator-(const Var& a, double b) { return a + (-b); }
inline Var operator-(double a, const Var& b) { return Var(b.tape(), b.tape().constant(a)) - b; }
inline Var operator*(const Var& a, double b) { return a * Var(a.tape(), a.tape().constant(b)); }
inline Var operator*(double a, const Var& b) { return b * a; }
inline Var operator/(const Var& a, double b) { return a * (1.0 / b); }

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }

inline Var tanh(const Var& a) { return {a.tape(), a.tape().tanh(a.id())}; }
inline Var pow(const Var& a, double p) { return {a.tape(), a.tape().power(a.id(), p)}; }

inline double value_of(double x) noexcept { return x; }
inline double value_of(const Var& x) { return x.value(); }

/// Applies a scalar function with known derivative to either scalar type.
template <class F, class DF>
double apply_unary(const F& f, const DF&, double x) {
  return f(x);
}
template <class F, class DF>
Var apply_unary(const F& f, const DF& df, const Var& x) {
  const double v = x.value();
  return {x.tape(), x.tape().unary(x.id(), f(v), df(v))};
}

/// Lifts a plain double into the scalar domain of `like`.
inline double lift(double x, double) noexcept { return x; }
inline Var lift(double x, const Var& like) { return {like.tape(), like.tape().constant(x)}; }

}  // namespace tdvpinn
