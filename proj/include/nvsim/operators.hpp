#pragma once

// Spin-1 and pseudospin-1/2 operator sets, and embedding of single-site
// operators into composite Hilbert spaces.
//
// Basis conventions:
//   spin-1      |+1>, |0>, |-1>   (sz = diag(1, 0, -1))
//   pseudospin  |0>, |-1>         (pz = |0><0| - |-1><-1|)
// Composite spaces are ordered site-major, electron before nucleus:
//   e1 (x) n1 (x) e2 (x) n2

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "nvsim/spinalg.hpp"

namespace nvsim {

struct SpinOps {
  Operator sx, sy, sz, s_plus, s_minus, s_squared;
};

struct PauliOps {
  Operator pz, px, py, raise, lower;
};

SpinOps spin1_ops();
PauliOps pauli_subspace_ops();

// Lift a 2x2 pseudospin operator onto the {|0>, |-1>} block of a spin-1 space,
// with `plus_one_entry` on the |+1><+1| diagonal.
Operator lift_to_spin1(const Operator& pseudo, Complex plus_one_entry = 0.0);

// Single-site states.
State spin1_basis(int m);      // m in {+1, 0, -1}
State pseudo_basis(int m);     // m in {0, -1}

enum class Site : std::size_t { e1 = 0, n1 = 1, e2 = 2, n2 = 3 };

class TensorLayout {
 public:
  TensorLayout(std::vector<std::size_t> dims, std::vector<std::string> names);

  // (e1:3, n1:3, e2:3, n2:3) -> 81
  static TensorLayout full();
  // (e1:2, n1:2, e2:2, n2:2) -> 16
  static TensorLayout reduced();
  // (n1:3, n2:3) -> 9
  static TensorLayout nuclear_spin1();
  // (n1:2, n2:2) -> 4
  static TensorLayout nuclear_pseudo();
  // (e1:2, e2:2) -> 4
  static TensorLayout electron_pseudo();
  // (e:2) -> 2
  static TensorLayout single_pseudo();

  std::size_t num_sites() const { return dims_.size(); }
  std::size_t local_dim(std::size_t site) const;
  std::size_t dim() const { return total_; }
  const std::string& name(std::size_t site) const;
  // Index of a named site; throws if absent.
  std::size_t site_index(const std::string& name) const;
  bool operator==(const TensorLayout& other) const { return dims_ == other.dims_ && names_ == other.names_; }

  // Identity on every factor except `site`.
  Operator embed(const Operator& op, std::size_t site) const;
  Operator embed(const Operator& op, Site site) const { return embed(op, static_cast<std::size_t>(site)); }

  State product_state(const std::vector<State>& locals) const;

  Operator identity() const { return Operator::Identity(total_, total_); }

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::string> names_;
  std::size_t total_;
};

}  // namespace nvsim
