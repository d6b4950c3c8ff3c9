#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "nvsim/error.hpp"
#include "nvsim/model.hpp"
#include "oracles.hpp"

using namespace nvsim;

namespace {

NVPairParams bare_params() {
  NVPairParams p;
  p.a_par1 = p.a_par2 = 0.0;
  p.a_perp1 = p.a_perp2 = 0.0;
  p.j12 = 0.0;
  p.b_field = 0.0;
  return p;
}

double relative(const Operator& a, const Operator& b) {
  return max_abs(a - b) / std::max(1.0, std::max(max_abs(a), max_abs(b)));
}

}  // namespace

TEST_CASE("dipolar coupling: magic angle, r^-3 law, SI magnitude") {
  CHECK(std::abs(dipolar_coupling(10e-9, std::acos(1.0 / std::sqrt(3.0)))) <= 1e-9);
  const double a = dipolar_coupling(10e-9, 0.3);
  const double b = dipolar_coupling(5e-9, 0.3);
  CHECK(b / a == doctest::Approx(8.0).epsilon(1e-12));

  // Independent constants: mu_B = e hbar / (2 m_e), mu0 = 4 pi 1e-7.
  const double e = 1.602176634e-19, hbar = 1.054571817e-34, me = 9.1093837015e-31;
  const double mu_b = e * hbar / (2.0 * me);
  const double mu0 = 4.0 * std::numbers::pi * 1e-7;
  const double g = 2.00231930436;
  const double r = 10e-9;
  const double oracle_hz = mu0 / (4.0 * std::numbers::pi) * std::pow(g * mu_b, 2) / (2.0 * std::numbers::pi * hbar * r * r * r);
  const double j = dipolar_coupling(r, 0.0);
  CHECK(j < 0.0);
  CHECK(std::abs(j) == doctest::Approx(oracle_hz).epsilon(1e-6));
  CHECK(std::abs(j) > 1e4);
  CHECK(std::abs(j) < 1e5);
  CHECK_THROWS_AS(dipolar_coupling(0.0, 0.0), ConfigError);
}

TEST_CASE("j12 resolution prefers the direct value") {
  NVPairParams p;
  p.r12 = 10e-9;
  p.theta12 = 0.0;
  std::vector<std::string> w;
  CHECK(resolved_j12(p, &w) == 70e3);
  CHECK(w.size() == 1);
  p.j12.reset();
  CHECK(resolved_j12(p) == doctest::Approx(dipolar_coupling(10e-9, 0.0)));
  p.r12.reset();
  CHECK_THROWS_AS(resolved_j12(p), ConfigError);
}

TEST_CASE("validate rejects non-finite and warns on hierarchy") {
  NVPairParams p;
  CHECK(validate(p).empty());
  p.d1 = std::nan("");
  CHECK_THROWS_AS(validate(p), ConfigError);
  p.d1 = -1.0;
  CHECK_THROWS_AS(validate(p), ConfigError);
  p.d1 = 2.87e9;
  p.j12 = 5e6;
  CHECK_FALSE(validate(p).empty());
}

TEST_CASE("resonant drive carriers") {
  NVPairParams p;
  const DriveParams d = DriveParams::resonant(p);
  CHECK(d.carrier_e1 == doctest::Approx(2.87e9 - 2.8e6 * 30.0));
  CHECK(d.carrier_e2 == doctest::Approx(2.87e9 + 2.8e6 * 30.0));
  CHECK(d.carrier_n1 == doctest::Approx(5.04e6 - 0.31e3 * 30.0));
  CHECK(d.omega_rabi_e == 15e6);
}

TEST_CASE("static Hamiltonian without couplings has the enumerated spectrum") {
  NVPairParams p = bare_params();
  p.d2 = 2.9e9;
  p.p2 = 4.9e6;
  const Operator h = build_static(p);
  CHECK(hermiticity_defect(h) <= 1e-10 * max_abs(h));
  std::vector<double> expected;
  for (int m1 : {1, 0, -1})
    for (int n1 : {1, 0, -1})
      for (int m2 : {1, 0, -1})
        for (int n2 : {1, 0, -1})
          expected.push_back(p.d1 * m1 * m1 - p.p1 * n1 * n1 + p.d2 * m2 * m2 - p.p2 * n2 * n2);
  std::sort(expected.begin(), expected.end());
  const RealVector got = eigh(h).values;
  for (int k = 0; k < 81; ++k) CHECK(got(k) == doctest::Approx(expected[k]).epsilon(1e-12));
}

TEST_CASE("static Hamiltonian: electron flip gap is about D") {
  const Operator h = build_static(NVPairParams{});
  CHECK(hermiticity_defect(h) <= 1e-10 * max_abs(h));
  const RealVector ev = eigh(h).values;
  // 9 lowest levels are the (m1, m2) = (0, 0) manifold with nuclear structure.
  const double gap = ev(9) - ev(8);
  CHECK(gap > 2.6e9);
  CHECK(gap < 2.95e9);
  // Magnitude check against D minus the largest axial Zeeman shift.
  CHECK(std::abs(gap - (2.87e9 - 2.8e6 * 30.0)) < 0.02 * 2.87e9);
}

TEST_CASE("rotating-frame partition reproduces static plus drive") {
  const NVPairParams p;
  const DriveParams d = DriveParams::resonant(p);
  const RotatingFrameParts parts = build_rotating_frame_parts(p, d);
  CHECK(is_diagonal(parts.h01));
  const Operator hs = build_static(p);
  CHECK(relative(parts.h01 + parts.h02_at(0.0), hs + drive_at(parts, 0.0)) <= 1e-9);
  for (double t : {1.3e-9, 7.7e-8, 2.1e-6}) {
    CHECK(relative(parts.h01 + parts.h02_at(t), hs + drive_at(parts, t)) <= 1e-9);
  }
  const TensorLayout L = TensorLayout::full();
  CHECK(max_abs(commutator(parts.h01, L.embed(spin1_ops().sz, Site::e1))) == 0.0);
  // drive_at(0) carries the full amplitude
  const Operator lifted = lift_to_spin1(pauli_subspace_ops().px);
  CHECK(max_abs(drive_at(parts, 0.0) - d.omega_rabi_e * (L.embed(lifted, Site::e1) + L.embed(lifted, Site::e2)) -
                d.omega_rabi_n * (L.embed(lifted, Site::n1) + L.embed(lifted, Site::n2))) <= 1e-6);
}

TEST_CASE("interaction picture generator") {
  const NVPairParams p;
  const DriveParams d = DriveParams::resonant(p);
  const RotatingFrameParts parts = build_rotating_frame_parts(p, d);
  const InteractionPicture ip(parts);
  CHECK(relative(ip(0.0), parts.h02_at(0.0)) <= 1e-14);
  const double t = 3.7e-8;
  const Operator g = ip(t);
  const Operator h02 = parts.h02_at(t);
  for (int k = 0; k < 81; ++k) CHECK(std::abs(g(k, k) - h02(k, k)) <= 1e-6);
  // Unitary equivalence: same spectrum as h02(t).
  const RealVector a = eigh(g).values, b = eigh(h02).values;
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff()));
  // Explicit phase oracle on one entry.
  const RealVector lam = parts.h01.diagonal().real();
  const int i = oracle::full_index(0, 0, 0, 0), j = oracle::full_index(-1, 1, 0, 0);
  const Complex expected = std::polar(1.0, (lam(i) - lam(j)) * t) * h02(i, j);
  CHECK(std::abs(g(i, j) - expected) <= 1e-6);
  // Largest coupled Bohr frequency sits near D + A_perp-scale shifts.
  CHECK(ip.max_bohr_frequency() > 2.8e9);
  CHECK(ip.max_bohr_frequency() < 3.0e9);
  CHECK(max_abs(interaction_picture(parts.h01, parts.h02_static, parts.drive_terms, t) - g) == 0.0);
}

TEST_CASE("RWA Hamiltonian structure") {
  NVPairParams p;
  DriveParams d = DriveParams::resonant(p);
  SplitHamiltonian rwa = build_rwa(p, d);
  CHECK(hermiticity_defect(rwa.total()) <= 1e-10 * max_abs(rwa.total()));

  // Commutes with the projector onto the m=+1 / M=+1 levels of every site.
  const TensorLayout L = TensorLayout::full();
  Operator plus_proj = Operator::Zero(3, 3);
  plus_proj(0, 0) = 1.0;
  for (std::size_t s = 0; s < 4; ++s) {
    CHECK(max_abs(commutator(rwa.total(), L.embed(plus_proj, s))) <= 1e-6);
  }
  CHECK(max_abs(commutator(rwa.total(), pseudospin_projector())) <= 1e-6);

  // Rabi doublet of one electron drive term.
  const Operator drive_only = 0.5 * d.omega_rabi_e * lift_to_spin1(pauli_subspace_ops().px);
  const RealVector ev = eigh(drive_only).values;
  CHECK(ev(0) == doctest::Approx(-7.5e6));
  CHECK(ev(2) == doctest::Approx(7.5e6));

  p.j12 = 0.0;
  d.omega_rabi_e = d.omega_rabi_n = 0.0;
  CHECK(max_abs(build_rwa(p, d).h0) == 0.0);
}

TEST_CASE("two-level model equals the restriction of the RWA model") {
  NVPairParams p;
  p.a_par2 = 2.2e6;
  const DriveParams d = DriveParams::resonant(p);
  const SplitHamiltonian rwa = build_rwa(p, d);
  const SplitHamiltonian red = build_two_level(p, d);
  const Operator w = reduced_embedding();
  CHECK(unitarity_defect(w) <= 1e-15);  // W^dagger W = I_16
  auto traceless = [](const Operator& m) {
    return Operator(m - (m.trace() / static_cast<double>(m.rows())) * Operator::Identity(m.rows(), m.cols()));
  };
  const Operator restricted = w.adjoint() * rwa.total() * w;
  CHECK(max_abs(traceless(restricted) - traceless(red.total())) <= 1e-9 * max_abs(red.total()));
  CHECK(hermiticity_defect(red.total()) <= 1e-10 * max_abs(red.total()));

  // J12 term annihilates states with electron 1 in |0>.
  NVPairParams only_j = bare_params();
  only_j.j12 = 70e3;
  DriveParams none;
  none.omega_rabi_e = none.omega_rabi_n = 0.0;
  const Operator hj = build_two_level(only_j, none).h0;
  const TensorLayout R = TensorLayout::reduced();
  for (int n1 : {0, -1})
    for (int e2 : {0, -1})
      for (int n2 : {0, -1}) {
        const State s = R.product_state({pseudo_basis(0), pseudo_basis(n1), pseudo_basis(e2), pseudo_basis(n2)});
        CHECK((hj * s).norm() == 0.0);
      }
}

TEST_CASE("noise Hamiltonian") {
  const TensorLayout full = TensorLayout::full(), red = TensorLayout::reduced();
  CHECK(max_abs(noise_hamiltonian(0, 0, 0, 0, full)) == 0.0);
  const Operator hf = noise_hamiltonian(1.1e3, -0.7e3, 0.3e2, 0.9e2, full);
  const Operator hr = noise_hamiltonian(1.1e3, -0.7e3, 0.3e2, 0.9e2, red);
  CHECK(is_diagonal(hf));
  CHECK(is_diagonal(hr));
  const Operator w = reduced_embedding();
  CHECK(max_abs(w.adjoint() * hf * w - hr) <= 1e-12);
  const Operator h2 = noise_hamiltonian(2.0, 0, 0, 0, TensorLayout::single_pseudo());
  CHECK(std::abs(h2(0, 0)) == 0.0);
  CHECK(std::abs(h2(1, 1) - (-2.0)) == 0.0);
  CHECK_THROWS_AS(noise_hamiltonian(1, 0, 0, 0, TensorLayout::nuclear_pseudo()), DimensionError);
}

TEST_CASE("RWA ratios are small at the defaults") {
  const NVPairParams p;
  const auto ratios = rwa_ratios(p, DriveParams::resonant(p));
  CHECK(ratios.size() == 6);
  for (const auto& r : ratios) {
    INFO(r.name << " = " << r.value);
    CHECK(r.value < kRwaRatioLimit);
  }
}

TEST_CASE("frequency scaling") {
  const NVPairParams p;
  const NVPairParams s = scale_frequencies(p, 2.0 * std::numbers::pi);
  CHECK(s.d1 == doctest::Approx(2.0 * std::numbers::pi * p.d1));
  CHECK(*s.j12 == doctest::Approx(2.0 * std::numbers::pi * 70e3));
  CHECK(s.b_field == p.b_field);
  const Operator a = build_static(p), b = build_static(s);
  CHECK(relative(b, 2.0 * std::numbers::pi * a) <= 1e-12);
}
