#include "nvsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nvsim/error.hpp"

namespace nvsim {

namespace {

constexpr double kMu0Over4Pi = 1e-7;           // T m / A
constexpr double kBohrMagneton = 9.2740100783e-24;  // J / T
constexpr double kElectronG = 2.00231930436;
constexpr double kPlanck = 6.62607015e-34;     // J s

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw ConfigError(std::string("parameter '") + name + "' must be finite");
  }
}

struct Site4 {
  std::size_t e;
  std::size_t n;
};
constexpr Site4 kSites[2] = {{0, 1}, {2, 3}};

double d_of(const NVPairParams& p, int j) { return j == 0 ? p.d1 : p.d2; }
double p_of(const NVPairParams& p, int j) { return j == 0 ? p.p1 : p.p2; }
double apar_of(const NVPairParams& p, int j) { return j == 0 ? p.a_par1 : p.a_par2; }
double aperp_of(const NVPairParams& p, int j) { return j == 0 ? p.a_perp1 : p.a_perp2; }
double theta_of(const NVPairParams& p, int j) { return j == 0 ? p.theta1 : p.theta2; }
double phi_of(const NVPairParams& p, int j) { return j == 0 ? p.phi1 : p.phi2; }

// Field components in the local NV frame of center j.
struct LocalField {
  double x, y, z;
};
LocalField local_field(const NVPairParams& p, int j) {
  const double th = theta_of(p, j);
  const double ph = phi_of(p, j);
  return {p.b_field * std::sin(th) * std::cos(ph), p.b_field * std::sin(th) * std::sin(ph),
          p.b_field * std::cos(th)};
}

// Pseudospin sigma_x lifted onto the {|0>, |-1>} block.
Operator lifted_px() { return lift_to_spin1(pauli_subspace_ops().px); }

}  // namespace

DriveParams DriveParams::resonant(const NVPairParams& p, double omega_rabi_e, double omega_rabi_n) {
  DriveParams d;
  d.omega_rabi_e = omega_rabi_e;
  d.omega_rabi_n = omega_rabi_n;
  d.carrier_e1 = p.d1 - p.ge_mub * axial_field(p, 0);
  d.carrier_e2 = p.d2 - p.ge_mub * axial_field(p, 1);
  d.carrier_n1 = p.p1 - p.gn_mun * axial_field(p, 0);
  d.carrier_n2 = p.p2 - p.gn_mun * axial_field(p, 1);
  return d;
}

double axial_field(const NVPairParams& p, int nv) {
  if (nv != 0 && nv != 1) {
    throw DimensionError("axial_field: NV index must be 0 or 1");
  }
  return p.b_field * std::cos(theta_of(p, nv));
}

double dipolar_coupling(double r12, double theta12) {
  if (!(r12 > 0.0) || !std::isfinite(r12)) {
    throw ConfigError("dipolar_coupling: r12 must be a positive distance in meters");
  }
  const double gmu = kElectronG * kBohrMagneton;
  const double c = std::cos(theta12);
  return kMu0Over4Pi * gmu * gmu * (1.0 - 3.0 * c * c) / (2.0 * kPlanck * r12 * r12 * r12);
}

double resolved_j12(const NVPairParams& p, std::vector<std::string>* warnings) {
  const bool geometric = p.r12.has_value() || p.theta12.has_value();
  if (p.j12) {
    if (geometric && warnings) {
      warnings->push_back("both j12 and (r12, theta12) given; using the direct j12 value");
    }
    return *p.j12;
  }
  if (!p.r12 || !p.theta12) {
    throw ConfigError("j12 not set and (r12, theta12) incomplete");
  }
  return dipolar_coupling(*p.r12, *p.theta12);
}

std::vector<std::string> validate(const NVPairParams& p) {
  require_finite(p.d1, "d1");
  require_finite(p.d2, "d2");
  require_finite(p.p1, "p1");
  require_finite(p.p2, "p2");
  require_finite(p.a_par1, "a_par1");
  require_finite(p.a_par2, "a_par2");
  require_finite(p.a_perp1, "a_perp1");
  require_finite(p.a_perp2, "a_perp2");
  require_finite(p.ge_mub, "ge_mub");
  require_finite(p.gn_mun, "gn_mun");
  require_finite(p.b_field, "b_field");
  require_finite(p.theta1, "theta1");
  require_finite(p.theta2, "theta2");
  require_finite(p.phi1, "phi1");
  require_finite(p.phi2, "phi2");
  if (p.j12) require_finite(*p.j12, "j12");
  if (p.theta12) require_finite(*p.theta12, "theta12");
  if (!(p.d1 > 0.0) || !(p.d2 > 0.0)) {
    throw ConfigError("zero-field splittings d1, d2 must be positive");
  }

  std::vector<std::string> warnings;
  const double j12 = std::abs(resolved_j12(p, &warnings));
  for (int j = 0; j < 2; ++j) {
    const double d = d_of(p, j);
    const double pq = std::abs(p_of(p, j));
    const double a = std::max(std::abs(apar_of(p, j)), std::abs(aperp_of(p, j)));
    const std::string tag = "NV" + std::to_string(j + 1);
    if (d < 10.0 * std::max(pq, a)) {
      warnings.push_back(tag + ": D is not much larger than P and A");
    }
    if (j12 >= std::min(pq, a)) {
      warnings.push_back(tag + ": |J12| is not smaller than the nuclear and hyperfine couplings");
    }
  }
  return warnings;
}

std::vector<std::string> validate(const DriveParams& d) {
  require_finite(d.omega_rabi_e, "omega_rabi_e");
  require_finite(d.omega_rabi_n, "omega_rabi_n");
  require_finite(d.carrier_e1, "carrier_e1");
  require_finite(d.carrier_e2, "carrier_e2");
  require_finite(d.carrier_n1, "carrier_n1");
  require_finite(d.carrier_n2, "carrier_n2");
  std::vector<std::string> warnings;
  if (d.omega_rabi_e < 0.0 || d.omega_rabi_n < 0.0) {
    warnings.push_back("negative Rabi frequency; only its magnitude is physical");
  }
  return warnings;
}

NVPairParams scale_frequencies(NVPairParams p, double f) {
  p.d1 *= f;
  p.d2 *= f;
  p.p1 *= f;
  p.p2 *= f;
  p.a_par1 *= f;
  p.a_par2 *= f;
  p.a_perp1 *= f;
  p.a_perp2 *= f;
  if (p.j12) *p.j12 *= f;
  p.ge_mub *= f;
  p.gn_mun *= f;
  return p;
}

DriveParams scale_frequencies(DriveParams d, double f) {
  d.omega_rabi_e *= f;
  d.omega_rabi_n *= f;
  d.carrier_e1 *= f;
  d.carrier_e2 *= f;
  d.carrier_n1 *= f;
  d.carrier_n2 *= f;
  return d;
}

namespace {

struct StaticParts {
  Operator diagonal;  // h01
  Operator rest;      // transverse Zeeman, hyperfine, dipolar
};

StaticParts static_parts(const NVPairParams& p) {
  const TensorLayout L = TensorLayout::full();
  const SpinOps s = spin1_ops();
  const Operator sz2 = s.sz * s.sz;
  StaticParts out{Operator::Zero(81, 81), Operator::Zero(81, 81)};
  for (int j = 0; j < 2; ++j) {
    const auto [e, n] = kSites[j];
    const LocalField b = local_field(p, j);
    out.diagonal += d_of(p, j) * L.embed(sz2, e) - p_of(p, j) * L.embed(sz2, n) +
                    p.ge_mub * b.z * L.embed(s.sz, e) - p.gn_mun * b.z * L.embed(s.sz, n);
    out.rest += p.ge_mub * (b.x * L.embed(s.sx, e) + b.y * L.embed(s.sy, e));
    out.rest -= p.gn_mun * (b.x * L.embed(s.sx, n) + b.y * L.embed(s.sy, n));
    out.rest += apar_of(p, j) * L.embed(s.sz, e) * L.embed(s.sz, n);
    out.rest += 0.5 * aperp_of(p, j) *
                (L.embed(s.s_plus, e) * L.embed(s.s_minus, n) + L.embed(s.s_minus, e) * L.embed(s.s_plus, n));
  }
  const double j12 = resolved_j12(p);
  const Operator s1x = L.embed(s.sx, Site::e1), s1y = L.embed(s.sy, Site::e1), s1z = L.embed(s.sz, Site::e1);
  const Operator s2x = L.embed(s.sx, Site::e2), s2y = L.embed(s.sy, Site::e2), s2z = L.embed(s.sz, Site::e2);
  out.rest += j12 * (3.0 * s1z * s2z - (s1x * s2x + s1y * s2y + s1z * s2z));
  return out;
}

}  // namespace

Operator build_static(const NVPairParams& p) {
  StaticParts parts = static_parts(p);
  Operator h = parts.diagonal + parts.rest;
  require_hermitian(h, "static Hamiltonian");
  return h;
}

Operator RotatingFrameParts::h02_at(double t) const {
  Operator h = h02_static;
  for (const DriveTerm& d : drive_terms) {
    h += (d.amplitude * std::cos(d.carrier * t)) * d.op;
  }
  return h;
}

Operator drive_at(const RotatingFrameParts& parts, double t) {
  Operator h = Operator::Zero(parts.h01.rows(), parts.h01.cols());
  for (const DriveTerm& d : parts.drive_terms) {
    h += (d.amplitude * std::cos(d.carrier * t)) * d.op;
  }
  return h;
}

RotatingFrameParts build_rotating_frame_parts(const NVPairParams& p, const DriveParams& d) {
  StaticParts sp = static_parts(p);
  const TensorLayout L = TensorLayout::full();
  const Operator px = lifted_px();
  RotatingFrameParts out;
  out.h01 = std::move(sp.diagonal);
  out.h02_static = std::move(sp.rest);
  out.drive_terms = {
      {L.embed(px, Site::e1), d.omega_rabi_e, d.carrier_e1},
      {L.embed(px, Site::e2), d.omega_rabi_e, d.carrier_e2},
      {L.embed(px, Site::n1), d.omega_rabi_n, d.carrier_n1},
      {L.embed(px, Site::n2), d.omega_rabi_n, d.carrier_n2},
  };
  return out;
}

InteractionPicture::InteractionPicture(RotatingFrameParts parts) : parts_(std::move(parts)) {
  const Eigen::Index n = parts_.h01.rows();
  diagonal_ = is_diagonal(parts_.h01);
  if (diagonal_) {
    levels_ = parts_.h01.diagonal().real();
    h02_eig_ = parts_.h02_static;
    for (const DriveTerm& d : parts_.drive_terms) drive_eig_.push_back(d.op);
  } else {
    const Eigensystem es = eigh(parts_.h01);
    levels_ = es.values;
    basis_ = es.vectors;
    h02_eig_ = basis_.adjoint() * parts_.h02_static * basis_;
    for (const DriveTerm& d : parts_.drive_terms) drive_eig_.push_back(basis_.adjoint() * d.op * basis_);
  }
  // A pair counts when its first-order admixture |h_ab / w_ab| reaches
  // kAdmixtureCut; weaker pairs carry population below 1e-8.
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const double w = std::abs(levels_(a) - levels_(b));
      double coupling = std::abs(h02_eig_(a, b));
      for (std::size_t k = 0; k < drive_eig_.size(); ++k) {
        coupling = std::max(coupling, std::abs(parts_.drive_terms[k].amplitude * drive_eig_[k](a, b)));
      }
      if (w > 0.0 && coupling >= kAdmixtureCut * w) max_bohr_ = std::max(max_bohr_, w);
    }
  }
}

Operator InteractionPicture::operator()(double t) const {
  const Eigen::Index n = levels_.size();
  Operator m = h02_eig_;
  for (std::size_t k = 0; k < drive_eig_.size(); ++k) {
    const DriveTerm& d = parts_.drive_terms[k];
    m += (d.amplitude * std::cos(d.carrier * t)) * drive_eig_[k];
  }
  Eigen::VectorXcd u(n);
  for (Eigen::Index a = 0; a < n; ++a) u(a) = std::polar(1.0, levels_(a) * t);
  for (Eigen::Index b = 0; b < n; ++b) {
    const Complex ub = std::conj(u(b));
    for (Eigen::Index a = 0; a < n; ++a) m(a, b) *= u(a) * ub;
  }
  if (!diagonal_) {
    // Back to the product basis so callers see one convention.
    return basis_ * m * basis_.adjoint();
  }
  return m;
}

Operator interaction_picture(const Operator& h01, const Operator& h02_static,
                             const std::vector<DriveTerm>& drive, double t) {
  return InteractionPicture({h01, h02_static, drive})(t);
}

SplitHamiltonian build_rwa(const NVPairParams& p, const DriveParams& d) {
  const TensorLayout L = TensorLayout::full();
  const SpinOps s = spin1_ops();
  const Operator px = lifted_px();
  SplitHamiltonian out{Operator::Zero(81, 81), Operator::Zero(81, 81)};
  for (int j = 0; j < 2; ++j) {
    const auto [e, n] = kSites[j];
    out.h0 += 0.5 * d.omega_rabi_e * L.embed(px, e) + 0.5 * d.omega_rabi_n * L.embed(px, n);
    out.h1 += apar_of(p, j) * L.embed(s.sz, e) * L.embed(s.sz, n);
  }
  out.h0 += 2.0 * resolved_j12(p) * L.embed(s.sz, Site::e1) * L.embed(s.sz, Site::e2);
  return out;
}

SplitHamiltonian build_two_level(const NVPairParams& p, const DriveParams& d) {
  const TensorLayout L = TensorLayout::reduced();
  const PauliOps s = pauli_subspace_ops();
  const Operator id = L.identity();
  auto zm = [&](std::size_t site) -> Operator { return L.embed(s.pz, site) - id; };
  SplitHamiltonian out{Operator::Zero(16, 16), Operator::Zero(16, 16)};
  for (int j = 0; j < 2; ++j) {
    const auto [e, n] = kSites[j];
    out.h0 += 0.5 * d.omega_rabi_e * L.embed(s.px, e) + 0.5 * d.omega_rabi_n * L.embed(s.px, n);
    out.h1 += 0.25 * apar_of(p, j) * zm(e) * zm(n);
  }
  out.h0 += 0.5 * resolved_j12(p) * zm(0) * zm(2);
  return out;
}

Operator noise_hamiltonian(double b1, double b2, double bn1, double bn2, const TensorLayout& layout) {
  for (double v : {b1, b2, bn1, bn2}) require_finite(v, "noise field");
  const std::size_t sites = layout.num_sites();
  const bool spin1 = layout.local_dim(0) == 3;
  Operator local_z;
  if (spin1) {
    local_z = spin1_ops().sz;
  } else if (layout.local_dim(0) == 2) {
    local_z = 0.5 * (pauli_subspace_ops().pz - Operator::Identity(2, 2));
  } else {
    throw DimensionError("noise_hamiltonian: unsupported local dimension");
  }
  Operator h = Operator::Zero(layout.dim(), layout.dim());
  if (sites == 4) {
    const double coeff[4] = {b1, bn1, b2, bn2};
    for (std::size_t k = 0; k < 4; ++k) h += coeff[k] * layout.embed(local_z, k);
  } else if (sites == 1) {
    h += b1 * layout.embed(local_z, 0);
  } else {
    std::ostringstream msg;
    msg << "noise_hamiltonian: layout with " << sites << " sites is not an electron-nuclear layout";
    throw DimensionError(msg.str());
  }
  return h;
}

Operator reduced_embedding() {
  Operator local = Operator::Zero(3, 2);
  local(1, 0) = 1.0;  // pseudo |0>  -> spin-1 |0>
  local(2, 1) = 1.0;  // pseudo |-1> -> spin-1 |-1>
  return kron(kron(local, local), kron(local, local));
}

Operator pseudospin_projector() {
  const Operator w = reduced_embedding();
  return w * w.adjoint();
}

std::vector<RwaRatio> rwa_ratios(const NVPairParams& p, const DriveParams& d) {
  const double j12 = std::abs(resolved_j12(p));
  const double d_min = std::min(p.d1, p.d2);
  const double p_min = std::min(std::abs(p.p1), std::abs(p.p2));
  const double ez = p.ge_mub * std::abs(p.b_field);
  const double nz = p.gn_mun * std::abs(p.b_field);
  const double db = p.ge_mub * std::abs(axial_field(p, 0) - axial_field(p, 1));
  const double aperp = std::max(std::abs(p.a_perp1), std::abs(p.a_perp2));
  return {
      {"a_perp/D", aperp / d_min},
      {"ge_muB*B/D", ez / d_min},
      {"omega_e/(ge_muB*B)", std::abs(d.omega_rabi_e) / ez},
      {"gn_muN*B/P", nz / p_min},
      {"omega_n/(gn_muN*B)", std::abs(d.omega_rabi_n) / nz},
      {"J12/(ge_muB*|B1-B2|)", j12 / db},
  };
}

}  // namespace nvsim
