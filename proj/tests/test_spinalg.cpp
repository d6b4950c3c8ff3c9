#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "nvsim/error.hpp"
#include "nvsim/spinalg.hpp"
#include "oracles.hpp"

using namespace nvsim;

namespace {
Operator sigma_x() {
  Operator m = Operator::Zero(2, 2);
  m(0, 1) = m(1, 0) = 1.0;
  return m;
}
Operator sigma_z() {
  Operator m = Operator::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}
}  // namespace

TEST_CASE("kron of identities is identity") {
  CHECK(max_abs(kron(Operator::Identity(2, 2), Operator::Identity(2, 2)) - Operator::Identity(4, 4)) == 0.0);
}

TEST_CASE("kron of diagonal Paulis") {
  const Operator k = kron(sigma_z(), sigma_z());
  Operator expected = Operator::Zero(4, 4);
  expected.diagonal() << 1.0, -1.0, -1.0, 1.0;
  CHECK(max_abs(k - expected) == 0.0);
}

TEST_CASE("kron matches loop oracle, preserves Hermiticity and multiplies traces") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const Operator a = oracle::random_hermitian(3, rng);
    const Operator b = oracle::random_hermitian(3, rng);
    const Operator k = kron(a, b);
    CHECK(max_abs(k - oracle::kron_loops(a, b)) == 0.0);
    CHECK(hermiticity_defect(k) <= 1e-14);
    CHECK(std::abs(k.trace() - a.trace() * b.trace()) <= 1e-12);
  }
}

TEST_CASE("kron mixed-product property") {
  std::mt19937_64 rng(12);
  for (int n : {2, 3}) {
    const Operator a = oracle::random_hermitian(n, rng), b = oracle::random_hermitian(n, rng);
    const Operator c = oracle::random_hermitian(n, rng), d = oracle::random_hermitian(n, rng);
    CHECK(max_abs(kron(a, b) * kron(c, d) - kron(a * c, b * d)) <= 1e-12);
  }
}

TEST_CASE("eigh on simple spectra") {
  Operator d = Operator::Zero(3, 3);
  d.diagonal() << 3.0, 1.0, 2.0;
  const Eigensystem es = eigh(d);
  CHECK(es.values(0) == doctest::Approx(1.0));
  CHECK(es.values(1) == doctest::Approx(2.0));
  CHECK(es.values(2) == doctest::Approx(3.0));

  const Eigensystem px = eigh(sigma_x());
  CHECK(px.values(0) == doctest::Approx(-1.0));
  CHECK(px.values(1) == doctest::Approx(1.0));
}

TEST_CASE("eigh residuals and reconstruction on random 81x81") {
  std::mt19937_64 rng(13);
  const Operator h = oracle::random_hermitian(81, rng, 1e6);
  const Eigensystem es = eigh(h);
  const double h2 = h.operatorNorm();
  for (Eigen::Index k = 0; k < 81; ++k) {
    const State v = es.vectors.col(k);
    CHECK((h * v - es.values(k) * v).norm() <= 1e-9 * h2);
    if (k > 0) CHECK(es.values(k) >= es.values(k - 1));
  }
  CHECK(unitarity_defect(es.vectors) <= 1e-9);
  const Operator rebuilt = es.vectors * es.values.cast<Complex>().asDiagonal() * es.vectors.adjoint();
  CHECK(max_abs(rebuilt - h) <= 1e-9 * max_abs(h));
}

TEST_CASE("eigh spectrum is invariant under unitary conjugation") {
  std::mt19937_64 rng(14);
  const Operator h = oracle::random_hermitian(9, rng);
  const Operator u = oracle::random_unitary(9, rng);
  const RealVector a = eigh(h).values;
  const RealVector b = eigh(u.adjoint() * h * u).values;
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("eigh rejects non-Hermitian input with the defect in the message") {
  Operator m = Operator::Zero(2, 2);
  m(0, 1) = 1.0;
  try {
    eigh(m);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("||H - H^dagger||_max = 1") != std::string::npos);
  }
  CHECK_THROWS_AS(eigh(Operator::Zero(2, 3)), DimensionError);
}

TEST_CASE("propagator basics") {
  CHECK(max_abs(propagator(sigma_x(), 0.0) - Operator::Identity(2, 2)) <= 1e-15);
  const Operator u = propagator(sigma_z(), std::numbers::pi);
  CHECK(max_abs(u + Operator::Identity(2, 2)) <= 1e-12);
}

TEST_CASE("propagator matches Taylor oracle, is unitary and composes") {
  std::mt19937_64 rng(15);
  const Operator h = oracle::random_hermitian(16, rng);
  const double t1 = 0.37, t2 = 1.21;
  const Operator u1 = propagator(h, t1);
  CHECK(unitarity_defect(u1) <= 1e-9);
  CHECK(max_abs(u1 - oracle::expm_taylor(h, t1)) <= 1e-10);
  CHECK(max_abs(u1 * propagator(h, t2) - propagator(h, t1 + t2)) <= 1e-8);

  const State psi = oracle::random_state(16, rng);
  CHECK(std::abs((u1 * psi).norm() - psi.norm()) <= 1e-9);
  const Eigensystem es = eigh(h);
  CHECK((evolve(es, psi, t1) - u1 * psi).norm() <= 1e-12);
}

TEST_CASE("expect on basis and eigenstates") {
  State up(2);
  up << 1.0, 0.0;
  CHECK(expect(up, sigma_z()) == doctest::Approx(1.0));
  State plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  CHECK(expect(plus, sigma_x()) == doctest::Approx(1.0));
  std::mt19937_64 rng(16);
  const State r = oracle::random_state(9, rng);
  CHECK(expect(r, Operator::Identity(9, 9)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("expect names both dimensions on mismatch") {
  State s = State::Zero(3);
  try {
    expect(s, sigma_x());
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('3') != std::string::npos);
    CHECK(msg.find("2x2") != std::string::npos);
  }
}
