#pragma once

#include <string>
#include <vector>

#include "nvsim/model.hpp"
#include "nvsim/spinalg.hpp"

namespace nvsim {

// Orthogonal projector onto a slow manifold plus human-readable labels.
struct ManifoldSpec {
  Operator projector;
  std::vector<std::string> labels;

  // Projector W W^dagger for an isometry W whose columns span the manifold.
  static ManifoldSpec from_isometry(const Operator& w, std::vector<std::string> labels = {});

  // Throws NumericalError unless P^2 = P = P^dagger to 1e-12 and rank >= 1.
  void check() const;
  std::size_t rank() const;
};

inline constexpr double kSwGapFraction = 1e-3;
inline constexpr double kSwCommuteTol = 1e-8;
// Documented agreement level between the numeric second-order transform and
// the closed-form Ising coupling: neglected corrections are O((A/Omega_e)^2).
inline constexpr double kSwCrossCheckTol = 0.05;

// Second-order effective Hamiltonian on the manifold (full-space operator,
// supported on the manifold's range):
//   H_eff = P(H0 + V)P + sum_k P V |k><k| V P / (E_m - E_k)
// where |k> runs over eigenstates of H0 outside the manifold and E_m is the
// manifold-averaged unperturbed energy. Throws DegeneratePerturbationError
// when |E_m - E_k| < gap_fraction * max|H0|.
Operator schrieffer_wolff_2nd(const Operator& h0, const Operator& v, const ManifoldSpec& manifold,
                              double gap_fraction = kSwGapFraction);

// J_eff^xx = 2 A_perp1 A_perp2 J12 / D^2 with D = (d1 + d2)/2; requires
// |d1 - d2| <= 1% of D.
double jeff_xx(const NVPairParams& p);

// J_eff^xx (I1+ I2- + I1- I2+) - sum_j P_j (I_j^z)^2 on the 9-dim nuclear space.
Operator build_heff_xx(const NVPairParams& p);

struct DressedStructure {
  double xi = 0.0;
  double j_xi = 0.0;
  double omega_es = 0.0;
  double omega_ea = 0.0;
  State s_state;  // electron pseudospin pair, basis |00>, |0,-1>, |-1,0>, |-1,-1>
  State a_state;
};

// Smallest |J12| for which the xi expansion is accepted.
double degeneracy_threshold(const NVPairParams& p, const DriveParams& d);

// xi = 2 (A2^2 - A1^2) / (Omega_e J12), J(xi) = (J12/2) sqrt(1 + xi^2),
// Omega_eS/A = Omega_e [1 + (A1/Omega_e)^2 + (A2/Omega_e)^2] +/- J(xi).
// |S> and |A> are the exact orthonormal pair
//   |S> ~ (xi + r)|+-> + |-+>,   |A> ~ (r - xi)|+-> - |-+>,   r = sqrt(1 + xi^2)
// which equal (1 + xi) and (1 - xi) weights to first order in xi.
DressedStructure dressed_structure(const NVPairParams& p, const DriveParams& d);

struct IsingCoupling {
  double value = 0.0;
  DressedStructure structure;
  std::vector<std::string> warnings;
};

// J_eff^zz = -A1 A2 / (8 Omega_e) (J12 / Omega_e + 2 xi)
IsingCoupling jeff_zz(const NVPairParams& p, const DriveParams& d);

// J_eff^zz t1z t2z + sum_j Omega_n t_jx - A_j/4 t_jz on the (n1, n2) pseudospin space.
Operator build_heff_zz(const NVPairParams& p, const DriveParams& d);

// Driven electron block on (e1, e2) pseudospins:
//   Omega_e/2 (s1x + s2x) + J12/2 (s1z - I)(s2z - I)
Operator electron_block(const NVPairParams& p, const DriveParams& d);

// Isometry (16 x 4) |g>_e (x) |n1 n2> into the reduced layout, with |g> the
// ground state of electron_block.
Operator electron_ground_isometry(const NVPairParams& p, const DriveParams& d);

// Coefficient c of a Pauli string in a Hermitian operator: tr(H P) / tr(P P).
double pauli_component(const Operator& h, const Operator& pauli_string);

struct SwIsingCheck {
  double numeric_zz = 0.0;
  double formula_zz = 0.0;
  double relative_magnitude_error = 0.0;
  bool same_sign = false;
  Operator numeric_nuclear;  // 4x4 nuclear effective Hamiltonian
};

// Numeric second-order transform of build_two_level on the electron ground
// manifold, reduced to the nuclear pseudospins and compared to jeff_zz.
SwIsingCheck sw_ising_check(const NVPairParams& p, const DriveParams& d);

}  // namespace nvsim
