#include "nvsim/effective.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nvsim/error.hpp"
#include "nvsim/operators.hpp"

namespace nvsim {

ManifoldSpec ManifoldSpec::from_isometry(const Operator& w, std::vector<std::string> labels) {
  ManifoldSpec m{w * w.adjoint(), std::move(labels)};
  m.check();
  return m;
}

void ManifoldSpec::check() const {
  const Operator& p = projector;
  if (p.rows() != p.cols() || p.rows() == 0) {
    throw DimensionError("ManifoldSpec: projector must be square and non-empty");
  }
  if (hermiticity_defect(p) > 1e-12 || max_abs(p * p - p) > 1e-12) {
    throw NumericalError("ManifoldSpec: matrix is not an orthogonal projector to 1e-12");
  }
  if (rank() == 0) {
    throw NumericalError("ManifoldSpec: projector has rank 0");
  }
}

std::size_t ManifoldSpec::rank() const {
  return static_cast<std::size_t>(std::llround(projector.trace().real()));
}

Operator schrieffer_wolff_2nd(const Operator& h0, const Operator& v, const ManifoldSpec& manifold,
                              double gap_fraction) {
  manifold.check();
  require_hermitian(h0, "SW unperturbed Hamiltonian");
  require_hermitian(v, "SW perturbation");
  const Operator& P = manifold.projector;
  if (h0.rows() != P.rows() || v.rows() != P.rows()) {
    std::ostringstream msg;
    msg << "schrieffer_wolff_2nd: H0 is " << h0.rows() << "-dim, V is " << v.rows()
        << "-dim, projector is " << P.rows() << "-dim";
    throw DimensionError(msg.str());
  }
  const double scale = std::max(1.0, max_abs(h0));
  if (max_abs(commutator(h0, P)) > kSwCommuteTol * scale) {
    throw NumericalError("schrieffer_wolff_2nd: manifold projector does not commute with H0");
  }

  const Eigen::Index n = P.rows();
  const std::size_t r = manifold.rank();
  // Complement basis from the projector's null space.
  const Eigensystem pe = eigh(P);
  const Eigen::Index nc = n - static_cast<Eigen::Index>(r);
  const Operator q_basis = pe.vectors.leftCols(nc);

  const double e_manifold = (P * h0).trace().real() / static_cast<double>(r);

  Operator heff = P * (h0 + v) * P;
  if (nc == 0) return heff;

  const Eigensystem ce = eigh(q_basis.adjoint() * h0 * q_basis);
  const Operator excited = q_basis * ce.vectors;  // n x nc
  const Operator pv_k = P * v * excited;          // columns P V |k>
  const double min_gap = gap_fraction * max_abs(h0);
  for (Eigen::Index k = 0; k < nc; ++k) {
    const double gap = e_manifold - ce.values(k);
    if (std::abs(gap) < min_gap) {
      std::ostringstream msg;
      msg << "schrieffer_wolff_2nd: vanishing gap between manifold energy " << e_manifold
          << " and excited eigenvalue " << ce.values(k) << " (|gap| = " << std::abs(gap)
          << " < " << min_gap << ")";
      throw DegeneratePerturbationError(msg.str());
    }
    heff += (pv_k.col(k) * pv_k.col(k).adjoint()) / gap;
  }
  return 0.5 * (heff + heff.adjoint());
}

double jeff_xx(const NVPairParams& p) {
  const double d = 0.5 * (p.d1 + p.d2);
  if (std::abs(p.d1 - p.d2) > 0.01 * d) {
    throw NumericalError(
        "jeff_xx: the static flip-flop formula assumes equal zero-field splittings (D1 = D2 within 1%)");
  }
  return 2.0 * p.a_perp1 * p.a_perp2 * resolved_j12(p) / (d * d);
}

Operator build_heff_xx(const NVPairParams& p) {
  const double j = jeff_xx(p);
  const TensorLayout L = TensorLayout::nuclear_spin1();
  const SpinOps s = spin1_ops();
  const Operator h = j * (L.embed(s.s_plus, 0) * L.embed(s.s_minus, 1) + L.embed(s.s_minus, 0) * L.embed(s.s_plus, 1)) -
                     p.p1 * L.embed(s.sz * s.sz, 0) - p.p2 * L.embed(s.sz * s.sz, 1);
  return h;
}

double degeneracy_threshold(const NVPairParams& p, const DriveParams& d) {
  const double oe = std::abs(d.omega_rabi_e);
  const double da2 = std::abs(p.a_par2 * p.a_par2 - p.a_par1 * p.a_par1);
  return std::max(1e-6 * oe, oe > 0.0 ? 10.0 * da2 * 1e-3 / oe : 0.0);
}

namespace {

void require_nondegenerate(const NVPairParams& p, const DriveParams& d, double j12) {
  if (d.omega_rabi_e == 0.0) {
    throw DegeneratePerturbationError("dressed structure: Omega_e = 0 leaves the dressed states degenerate");
  }
  const double thr = degeneracy_threshold(p, d);
  if (std::abs(j12) < thr) {
    std::ostringstream msg;
    msg << "dressed structure: |J12| = " << std::abs(j12) << " is below the degeneracy threshold " << thr
        << "; the |S>, |A> splitting vanishes and the xi expansion is invalid";
    throw DegeneratePerturbationError(msg.str());
  }
}

}  // namespace

DressedStructure dressed_structure(const NVPairParams& p, const DriveParams& d) {
  const double j12 = resolved_j12(p);
  require_nondegenerate(p, d, j12);
  const double oe = d.omega_rabi_e;
  DressedStructure out;
  out.xi = 2.0 * (p.a_par2 * p.a_par2 - p.a_par1 * p.a_par1) / (oe * j12);
  const double r = std::sqrt(1.0 + out.xi * out.xi);
  out.j_xi = 0.5 * j12 * r;
  const double base = oe * (1.0 + std::pow(p.a_par1 / oe, 2) + std::pow(p.a_par2 / oe, 2));
  out.omega_es = base + out.j_xi;
  out.omega_ea = base - out.j_xi;

  const State plus = (pseudo_basis(0) + pseudo_basis(-1)) / std::sqrt(2.0);
  const State minus = (pseudo_basis(0) - pseudo_basis(-1)) / std::sqrt(2.0);
  const TensorLayout E = TensorLayout::electron_pseudo();
  const State pm = E.product_state({plus, minus});
  const State mp = E.product_state({minus, plus});
  State s = (out.xi + r) * pm + mp;
  State a = (r - out.xi) * pm - mp;
  out.s_state = s / s.norm();
  out.a_state = a / a.norm();
  return out;
}

IsingCoupling jeff_zz(const NVPairParams& p, const DriveParams& d) {
  IsingCoupling out;
  out.structure = dressed_structure(p, d);
  const double j12 = resolved_j12(p);
  const double oe = d.omega_rabi_e;
  out.value = -p.a_par1 * p.a_par2 / (8.0 * oe) * (j12 / oe + 2.0 * out.structure.xi);

  const double a = std::min(std::abs(p.a_par1), std::abs(p.a_par2));
  const double a_max = std::max(std::abs(p.a_par1), std::abs(p.a_par2));
  constexpr double kMargin = 5.0;
  if (std::abs(oe) < kMargin * a_max) out.warnings.push_back("Omega_e is not much larger than A_par");
  if (a < kMargin * std::abs(j12)) out.warnings.push_back("A_par is not much larger than J12");
  if (std::abs(j12) < kMargin * std::abs(d.omega_rabi_n)) out.warnings.push_back("J12 is not much larger than Omega_n");
  if (std::abs(out.structure.xi) > 0.2) out.warnings.push_back("|xi| is not small; the xi expansion is unreliable");
  return out;
}

Operator build_heff_zz(const NVPairParams& p, const DriveParams& d) {
  const double j = jeff_zz(p, d).value;
  const TensorLayout L = TensorLayout::nuclear_pseudo();
  const PauliOps s = pauli_subspace_ops();
  return j * L.embed(s.pz, 0) * L.embed(s.pz, 1) + d.omega_rabi_n * (L.embed(s.px, 0) + L.embed(s.px, 1)) -
         0.25 * p.a_par1 * L.embed(s.pz, 0) - 0.25 * p.a_par2 * L.embed(s.pz, 1);
}

Operator electron_block(const NVPairParams& p, const DriveParams& d) {
  const TensorLayout E = TensorLayout::electron_pseudo();
  const PauliOps s = pauli_subspace_ops();
  const Operator id = E.identity();
  return 0.5 * d.omega_rabi_e * (E.embed(s.px, 0) + E.embed(s.px, 1)) +
         0.5 * resolved_j12(p) * (E.embed(s.pz, 0) - id) * (E.embed(s.pz, 1) - id);
}

Operator electron_ground_isometry(const NVPairParams& p, const DriveParams& d) {
  const State g = eigh(electron_block(p, d)).vectors.col(0);
  const TensorLayout R = TensorLayout::reduced();
  const std::vector<State> basis = {pseudo_basis(0), pseudo_basis(-1)};
  Operator w = Operator::Zero(16, 4);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          w.col(i * 2 + k) += g(a * 2 + b) * R.product_state({basis[a], basis[i], basis[b], basis[k]});
  return w;
}

double pauli_component(const Operator& h, const Operator& pauli_string) {
  if (h.rows() != pauli_string.rows()) {
    throw DimensionError("pauli_component: dimension mismatch");
  }
  return ((h * pauli_string).trace() / (pauli_string * pauli_string).trace()).real();
}

SwIsingCheck sw_ising_check(const NVPairParams& p, const DriveParams& d) {
  const SplitHamiltonian two = build_two_level(p, d);
  const Operator w = electron_ground_isometry(p, d);
  const Operator heff = schrieffer_wolff_2nd(two.h0, two.h1, ManifoldSpec::from_isometry(w, {"|g>_e (x) n1 n2"}));
  SwIsingCheck out;
  out.numeric_nuclear = w.adjoint() * heff * w;
  const TensorLayout N = TensorLayout::nuclear_pseudo();
  const PauliOps s = pauli_subspace_ops();
  out.numeric_zz = pauli_component(out.numeric_nuclear, N.embed(s.pz, 0) * N.embed(s.pz, 1));
  out.formula_zz = jeff_zz(p, d).value;
  out.relative_magnitude_error = std::abs(std::abs(out.numeric_zz) - std::abs(out.formula_zz)) / std::abs(out.formula_zz);
  out.same_sign = (out.numeric_zz > 0) == (out.formula_zz > 0);
  return out;
}

}  // namespace nvsim
