#include "nvsim/operators.hpp"

#include <cmath>
#include <sstream>

#include "nvsim/error.hpp"

namespace nvsim {

namespace {
constexpr Complex kI{0.0, 1.0};
}

SpinOps spin1_ops() {
  const double r2 = std::sqrt(2.0);
  SpinOps ops;
  ops.sz = Operator::Zero(3, 3);
  ops.sz(0, 0) = 1.0;
  ops.sz(2, 2) = -1.0;
  // s_plus|0> = sqrt2 |+1>, s_plus|-1> = sqrt2 |0>
  ops.s_plus = Operator::Zero(3, 3);
  ops.s_plus(0, 1) = r2;
  ops.s_plus(1, 2) = r2;
  ops.s_minus = ops.s_plus.adjoint();
  ops.sx = 0.5 * (ops.s_plus + ops.s_minus);
  ops.sy = -0.5 * kI * (ops.s_plus - ops.s_minus);
  ops.s_squared = ops.sx * ops.sx + ops.sy * ops.sy + ops.sz * ops.sz;
  return ops;
}

PauliOps pauli_subspace_ops() {
  PauliOps ops;
  ops.pz = Operator::Zero(2, 2);
  ops.pz(0, 0) = 1.0;
  ops.pz(1, 1) = -1.0;
  ops.px = Operator::Zero(2, 2);
  ops.px(0, 1) = 1.0;
  ops.px(1, 0) = 1.0;
  ops.py = Operator::Zero(2, 2);
  ops.py(0, 1) = -kI;
  ops.py(1, 0) = kI;
  // raise: |-1> -> |0>
  ops.raise = Operator::Zero(2, 2);
  ops.raise(0, 1) = 1.0;
  ops.lower = ops.raise.adjoint();
  return ops;
}

Operator lift_to_spin1(const Operator& pseudo, Complex plus_one_entry) {
  if (pseudo.rows() != 2 || pseudo.cols() != 2) {
    throw DimensionError("lift_to_spin1: expected a 2x2 pseudospin operator");
  }
  Operator out = Operator::Zero(3, 3);
  out(0, 0) = plus_one_entry;
  out.block(1, 1, 2, 2) = pseudo;
  return out;
}

State spin1_basis(int m) {
  if (m < -1 || m > 1) {
    throw DimensionError("spin1_basis: m must be +1, 0 or -1");
  }
  State s = State::Zero(3);
  s(1 - m) = 1.0;
  return s;
}

State pseudo_basis(int m) {
  if (m != 0 && m != -1) {
    throw DimensionError("pseudo_basis: m must be 0 or -1");
  }
  State s = State::Zero(2);
  s(-m) = 1.0;
  return s;
}

TensorLayout::TensorLayout(std::vector<std::size_t> dims, std::vector<std::string> names)
    : dims_(std::move(dims)), names_(std::move(names)), total_(1) {
  if (dims_.empty() || dims_.size() != names_.size()) {
    throw DimensionError("TensorLayout: need one name per site and at least one site");
  }
  for (std::size_t d : dims_) {
    if (d == 0) {
      throw DimensionError("TensorLayout: local dimensions must be positive");
    }
    total_ *= d;
  }
}

TensorLayout TensorLayout::full() { return {{3, 3, 3, 3}, {"e1", "n1", "e2", "n2"}}; }
TensorLayout TensorLayout::reduced() { return {{2, 2, 2, 2}, {"e1", "n1", "e2", "n2"}}; }
TensorLayout TensorLayout::nuclear_spin1() { return {{3, 3}, {"n1", "n2"}}; }
TensorLayout TensorLayout::nuclear_pseudo() { return {{2, 2}, {"n1", "n2"}}; }
TensorLayout TensorLayout::electron_pseudo() { return {{2, 2}, {"e1", "e2"}}; }
TensorLayout TensorLayout::single_pseudo() { return {{2}, {"e"}}; }

std::size_t TensorLayout::local_dim(std::size_t site) const {
  if (site >= dims_.size()) {
    std::ostringstream msg;
    msg << "TensorLayout: site " << site << " out of range (" << dims_.size() << " sites)";
    throw DimensionError(msg.str());
  }
  return dims_[site];
}

const std::string& TensorLayout::name(std::size_t site) const {
  local_dim(site);
  return names_[site];
}

std::size_t TensorLayout::site_index(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) {
      return i;
    }
  }
  throw DimensionError("TensorLayout: no site named '" + name + "'");
}

Operator TensorLayout::embed(const Operator& op, std::size_t site) const {
  const std::size_t d = local_dim(site);
  if (static_cast<std::size_t>(op.rows()) != d || static_cast<std::size_t>(op.cols()) != d) {
    std::ostringstream msg;
    msg << "TensorLayout::embed: operator is " << op.rows() << "x" << op.cols() << " but site "
        << names_[site] << " has local dimension " << d;
    throw DimensionError(msg.str());
  }
  std::size_t left = 1;
  for (std::size_t i = 0; i < site; ++i) left *= dims_[i];
  std::size_t right = 1;
  for (std::size_t i = site + 1; i < dims_.size(); ++i) right *= dims_[i];
  const Operator id_left = Operator::Identity(left, left);
  const Operator id_right = Operator::Identity(right, right);
  return kron(kron(id_left, op), id_right);
}

State TensorLayout::product_state(const std::vector<State>& locals) const {
  if (locals.size() != dims_.size()) {
    throw DimensionError("TensorLayout::product_state: need one local state per site");
  }
  Operator acc = Operator::Ones(1, 1);
  for (std::size_t i = 0; i < locals.size(); ++i) {
    if (static_cast<std::size_t>(locals[i].size()) != dims_[i]) {
      std::ostringstream msg;
      msg << "TensorLayout::product_state: local state for " << names_[i] << " has dimension "
          << locals[i].size() << ", expected " << dims_[i];
      throw DimensionError(msg.str());
    }
    acc = kron(acc, Operator(locals[i]));
  }
  return acc.col(0);
}

}  // namespace nvsim
