#pragma once

// Hamiltonians of the two-NV system: static lab frame, rotating-frame split,
// interaction picture, RWA spin-1, reduced pseudospin-1/2, and noise.
//
// Frequency convention: every coupling is an angular frequency in rad/s whose
// numeric value equals the tabulated "Hz" figure (2.87 GHz -> 2.87e9 rad/s).
// `scale_frequencies` applies a global factor (e.g. 2*pi) for sensitivity
// studies.

#include <optional>
#include <string>
#include <vector>

#include "nvsim/operators.hpp"
#include "nvsim/spinalg.hpp"

namespace nvsim {

struct NVPairParams {
  double d1 = 2.87e9;  // electronic zero-field splitting
  double d2 = 2.87e9;
  double p1 = 5.04e6;  // nuclear quadrupole splitting
  double p2 = 5.04e6;
  double a_par1 = 2.1e6;  // longitudinal hyperfine
  double a_par2 = 2.1e6;
  double a_perp1 = 2.3e6;  // transverse hyperfine
  double a_perp2 = 2.3e6;
  // Secular dipolar coupling. When unset it is derived from (r12, theta12).
  std::optional<double> j12 = 70e3;
  std::optional<double> r12;      // meters
  std::optional<double> theta12;  // radians
  double ge_mub = 2.8e6;  // per gauss
  double gn_mun = 0.31e3;  // per gauss
  double b_field = 30.0;  // gauss
  double theta1 = 0.0;  // NV axis polar angles w.r.t. the field (radians)
  double theta2 = 3.141592653589793;
  double phi1 = 0.0;
  double phi2 = 0.0;

  bool operator==(const NVPairParams&) const = default;
};

struct DriveParams {
  double omega_rabi_e = 15e6;
  double omega_rabi_n = 1e3;
  double carrier_e1 = 0.0;
  double carrier_e2 = 0.0;
  double carrier_n1 = 0.0;
  double carrier_n2 = 0.0;

  // Carriers on the m = 0 <-> -1 (electron) and M = 0 <-> -1 (nucleus)
  // transitions: w_e = D - ge_muB B cos(theta), w_n = P - gn_muN B cos(theta).
  static DriveParams resonant(const NVPairParams& p, double omega_rabi_e = 15e6,
                              double omega_rabi_n = 1e3);

  bool operator==(const DriveParams&) const = default;
};

// Throws ConfigError on non-finite values or non-positive splittings. Returns
// warnings for violations of the coupling hierarchy the effective formulas
// rely on (D >> P ~ A, J12 smallest).
std::vector<std::string> validate(const NVPairParams& p);
std::vector<std::string> validate(const DriveParams& d);

// Dipolar coupling in the artifact's frequency convention (numeric value of
// the frequency in Hz):
//   J12 = (mu0/4pi) (g_e mu_B)^2 (1 - 3 cos^2 theta12) / (2 h r12^3)
double dipolar_coupling(double r12, double theta12);

// Resolved J12. A direct value wins over (r12, theta12); a warning is appended
// when both are present.
double resolved_j12(const NVPairParams& p, std::vector<std::string>* warnings = nullptr);

NVPairParams scale_frequencies(NVPairParams p, double factor);
DriveParams scale_frequencies(DriveParams d, double factor);

// Field projection on each NV axis: B_j = B cos(theta_j).
double axial_field(const NVPairParams& p, int nv);

// Lab-frame static Hamiltonian (81-dim), constant energy offset dropped:
//   sum_j D_j Sz^2 + ge B.S - P_j Iz^2 - gn B.I + A_par Sz Iz
//         + A_perp/2 (S+ I- + S- I+)
//   + J12 (3 S1z S2z - S1.S2)
Operator build_static(const NVPairParams& p);

inline constexpr double kAdmixtureCut = 1e-4;

struct DriveTerm {
  Operator op;       // full-space operator (sigma_x or tau_x lifted to spin-1)
  double amplitude;  // rad/s
  double carrier;    // rad/s
};

// H = H01 + H02(t) with H01 diagonal in the product basis and
// H02(t) = h02_static + sum_k amplitude_k cos(carrier_k t) op_k.
struct RotatingFrameParts {
  Operator h01;
  Operator h02_static;
  std::vector<DriveTerm> drive_terms;

  Operator h02_at(double t) const;
};

RotatingFrameParts build_rotating_frame_parts(const NVPairParams& p, const DriveParams& d);

// Lab-frame drive H_d(t) alone.
Operator drive_at(const RotatingFrameParts& parts, double t);

// Exact interaction-picture generator e^{i H01 t} H02(t) e^{-i H01 t}.
// H01 is diagonalized once at construction; when it is already diagonal the
// eigenbasis is the product basis.
class InteractionPicture {
 public:
  explicit InteractionPicture(RotatingFrameParts parts);

  Operator operator()(double t) const;

  // Largest Bohr frequency (rad/s) of H01 among level pairs whose coupling
  // through H02 or the drive satisfies |h_ab| >= kAdmixtureCut |w_ab|.
  double max_bohr_frequency() const { return max_bohr_; }

  const RotatingFrameParts& parts() const { return parts_; }

 private:
  RotatingFrameParts parts_;
  RealVector levels_;
  Operator basis_;  // identity when H01 is diagonal
  bool diagonal_;
  Operator h02_eig_;  // h02_static in the H01 eigenbasis
  std::vector<Operator> drive_eig_;
  double max_bohr_ = 0.0;
};

// Convenience free function mirroring the class.
Operator interaction_picture(const Operator& h01, const Operator& h02_static,
                             const std::vector<DriveTerm>& drive, double t);

struct SplitHamiltonian {
  Operator h0;
  Operator h1;
  Operator total() const { return h0 + h1; }
};

// RWA Hamiltonian on the 81-dim spin-1 space:
//   h0 = sum_j (Oe/2 sigma_j^x + On/2 tau_j^x) + 2 J12 S1z S2z
//   h1 = sum_j A_par_j Sz_j Iz_j
// Dropped relative to build_static: transverse Zeeman (electron and nucleus),
// transverse hyperfine A_perp, transverse dipolar flip-flops, and the
// counter-rotating halves of the drive.
SplitHamiltonian build_rwa(const NVPairParams& p, const DriveParams& d);

// Pseudospin-1/2 reduction (16-dim):
//   h0 = sum_j (Oe/2 sigma_j^x + On/2 tau_j^x) + J12/2 (s1z - I)(s2z - I)
//   h1 = sum_j A_par_j/4 (s_jz - I)(t_jz - I)
SplitHamiltonian build_two_level(const NVPairParams& p, const DriveParams& d);

// sum_j b_j Sz_j + bn_j Iz_j on the full (81), reduced (16) or single
// pseudospin (2, electron only, uses b1) layout. Pseudospin layouts use
// S^z -> (sigma^z - I)/2.
Operator noise_hamiltonian(double b1, double b2, double bn1, double bn2, const TensorLayout& layout);

// Isometry (81 x 16) from the reduced pseudospin space into the spin-1 space.
Operator reduced_embedding();

// Projector onto the m_j, M_j in {0, -1} subspace of the 81-dim space.
Operator pseudospin_projector();

struct RwaRatio {
  std::string name;
  double value;
};

// Dimensionless smallness parameters behind the RWA.
std::vector<RwaRatio> rwa_ratios(const NVPairParams& p, const DriveParams& d);

inline constexpr double kRwaRatioLimit = 0.2;

}  // namespace nvsim
