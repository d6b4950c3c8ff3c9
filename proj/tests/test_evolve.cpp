#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "nvsim/error.hpp"
#include "nvsim/evolve.hpp"
#include "nvsim/model.hpp"
#include "oracles.hpp"

using namespace nvsim;

namespace {

Operator px() { return pauli_subspace_ops().px; }
Operator pz() { return pauli_subspace_ops().pz; }

EvolutionSpec two_dim_spec(double dt, double t_final, std::size_t stride = 1) {
  EvolutionSpec s;
  s.frame = Frame::single2;
  s.dt = dt;
  s.t_final = t_final;
  s.stride = stride;
  s.taps = {{"sx", px()}, {"sz", pz()}};
  return s;
}

State ramsey_state() { return (pseudo_basis(0) + pseudo_basis(-1)) / std::sqrt(2.0); }

NoiseSetup electron_noise(double b, double tau) {
  NoiseSetup n;
  n.fields = {OUParams{b, tau}, OUParams{0.0, tau}, OUParams{0.0, tau}, OUParams{0.0, tau}};
  n.layout = TensorLayout::single_pseudo();
  return n;
}

}  // namespace

TEST_CASE("frames and specs") {
  CHECK(frame_dim(Frame::full_static) == 81);
  CHECK(frame_dim(Frame::effective_zz4) == 4);
  CHECK(frame_from_string(to_string(Frame::rwa81)) == Frame::rwa81);
  CHECK_THROWS_AS(frame_from_string("nope"), ConfigError);

  EvolutionSpec s = two_dim_spec(0.1, 1.0, 3);
  CHECK(s.steps() == 10);
  const auto idx = s.sample_indices();
  CHECK(idx == std::vector<std::size_t>{0, 3, 6, 9, 10});
  s.t_final = 0.05;
  CHECK_THROWS_AS(s.check(), NumericalError);
  s = two_dim_spec(0.1, 1.0);
  s.taps.push_back({"bad", Operator::Identity(3, 3)});
  CHECK_THROWS_AS(s.check(), DimensionError);
}

TEST_CASE("evolve_const: zero Hamiltonian keeps observables constant") {
  const EvolutionSpec s = two_dim_spec(0.1, 2.0);
  const ObservableSeries r = evolve_const(ramsey_state(), Operator::Zero(2, 2), s);
  for (double v : r.values("sx")) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
  for (double v : r.stderr_[0]) CHECK(v == 0.0);
}

TEST_CASE("evolve_const: Rabi oscillation") {
  const double omega = 3.0;
  const EvolutionSpec s = two_dim_spec(0.01, 10.0);
  const ObservableSeries r = evolve_const(pseudo_basis(0), 0.5 * omega * px(), s);
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    CHECK(std::abs(r.values("sz")[k] - std::cos(omega * r.times[k])) <= 1e-9);
  }
}

TEST_CASE("evolve_const: semigroup, norm and energy conservation on a random 16-dim model") {
  std::mt19937_64 rng(41);
  const Operator h = oracle::random_hermitian(16, rng, 1e3);
  const State psi0 = oracle::random_state(16, rng);
  EvolutionSpec s;
  s.frame = Frame::two_level16;
  s.dt = 1e-4;
  s.t_final = 0.5;
  s.stride = 500;
  s.taps = {{"H", h}};
  State mid, end;
  const ObservableSeries r = evolve_const(psi0, h, s, &end);
  for (double e : r.values("H")) CHECK(std::abs(e - r.values("H")[0]) <= 1e-9 * std::abs(r.values("H")[0]) + 1e-9);
  CHECK(std::abs(end.norm() - 1.0) <= 1e-9);

  EvolutionSpec first = s;
  first.t_final = 0.2;
  evolve_const(psi0, h, first, &mid);
  EvolutionSpec second = s;
  second.t_final = 0.3;
  State joined;
  evolve_const(mid, h, second, &joined);
  CHECK((joined - end).norm() <= 1e-9);
}

TEST_CASE("evolve_const applies pulses at grid times") {
  // A pi pulse about x halfway through free precession under sz refocuses it.
  EvolutionSpec s = two_dim_spec(0.01, 2.0);
  s.pulses = {{1.0, propagator(px(), std::numbers::pi / 2)}};
  State end;
  evolve_const(ramsey_state(), 0.5 * 1.7 * pz(), s, &end);
  CHECK(expect(end, px()) == doctest::Approx(1.0).epsilon(1e-12));

  EvolutionSpec bad = s;
  bad.pulses = {{0.005, Operator::Identity(2, 2)}};
  CHECK_THROWS_AS(bad.check(), NumericalError);
}

TEST_CASE("rk4: zero generator and constant generator") {
  const double omega = 2.0 * std::numbers::pi * 50.0;  // f = 50
  const Operator h = 0.5 * omega * px();
  const double f_max = omega / (2.0 * std::numbers::pi);
  EvolutionSpec s = two_dim_spec(1.0 / (1000.0 * f_max), 0.2);
  State end_rk, end_exact;
  rk4_evolve(pseudo_basis(0), [&](double) { return h; }, s, omega, &end_rk);
  evolve_const(pseudo_basis(0), h, s, &end_exact);
  CHECK((end_rk - end_exact).norm() <= 1e-8);

  State id;
  rk4_evolve(ramsey_state(), [](double) { return Operator::Zero(2, 2); }, s, 1.0, &id);
  CHECK((id - ramsey_state()).norm() == 0.0);
}

TEST_CASE("rk4 refuses coarse steps with the bound in the message") {
  const double omega = 1e3;
  EvolutionSpec s = two_dim_spec(1.0, 10.0);
  try {
    rk4_evolve(pseudo_basis(0), [](double) { return Operator::Zero(2, 2); }, s, omega);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("1/(20 f_max)") != std::string::npos);
  }
  CHECK(rk4_max_dt(omega) == doctest::Approx(2.0 * std::numbers::pi / (20.0 * omega)));
}

TEST_CASE("rk4 order check on a driven two-level system") {
  const double w0 = 10.0, rabi = 2.0, wd = 9.5;
  const Generator gen = [&](double t) {
    return Operator(0.5 * w0 * pz() + rabi * std::cos(wd * t) * px());
  };
  EvolutionSpec s = two_dim_spec(0.02, 5.0);
  const OrderCheck c = rk4_order_check(pseudo_basis(0), gen, s, w0 + 2 * rabi);
  MESSAGE("Richardson ratio " << c.ratio);
  CHECK(c.ratio >= 12.0);
  CHECK(c.ratio <= 20.0);
}

TEST_CASE("evolve_noisy: noiseless limit equals evolve_const") {
  const Operator h = 0.5 * 2e3 * px();
  const EvolutionSpec s = two_dim_spec(1e-6, 1e-3, 10);
  const ObservableSeries a = evolve_noisy(pseudo_basis(0), h, electron_noise(0.0, 1e-2), s, 5);
  const ObservableSeries b = evolve_const(pseudo_basis(0), h, s);
  CHECK(a.mean == b.mean);
}

TEST_CASE("evolve_noisy: pure dephasing equals the phase integral of the sampled field") {
  const double b = 2e3, tau = 1e-3;
  EvolutionSpec s = two_dim_spec(1e-6, 2e-3, 1);
  NoiseSetup n = electron_noise(b, tau);
  n.noise_dt = 1e-5;
  const std::uint64_t seed = 1234;
  const ObservableSeries r = evolve_noisy(ramsey_state(), Operator::Zero(2, 2), n, s, seed);

  // Re-draw the field with the documented draw order: four stationary values,
  // then one OU step per field per segment.
  NormalRng rng(seed);
  std::array<double, 4> x{};
  for (int j = 0; j < 4; ++j) x[j] = n.fields[j].sigma * rng();
  const std::size_t seg = 10;
  double phase = 0.0;
  std::vector<double> phases(s.steps() + 1, 0.0);
  for (std::size_t lo = 0; lo < s.steps(); lo += seg) {
    for (std::size_t k = lo + 1; k <= std::min(s.steps(), lo + seg); ++k) {
      phase += x[0] * s.step();
      phases[k] = phase;
    }
    for (int j = 0; j < 4; ++j) {
      const double rho = std::exp(-seg * s.step() / n.fields[j].tau);
      x[j] = x[j] * rho + std::sqrt(n.fields[j].sigma * n.fields[j].sigma * (1 - rho * rho)) * rng();
    }
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < r.times.size(); ++k) worst = std::max(worst, std::abs(r.values("sx")[k] - std::cos(phases[k])));
  CHECK(worst <= 1e-9);
  const ObservableSeries again = evolve_noisy(ramsey_state(), Operator::Zero(2, 2), n, s, seed);
  CHECK(again.mean == r.mean);
}

TEST_CASE("evolve_noisy preconditions") {
  EvolutionSpec s = two_dim_spec(1e-6, 1e-3);
  NoiseSetup n = electron_noise(1e3, 1e-3);
  n.noise_dt = 1e-4;  // > tau/100
  CHECK_THROWS_AS(evolve_noisy(ramsey_state(), Operator::Zero(2, 2), n, s, 1), NumericalError);
  n.noise_dt = 1e-7;  // < dt
  CHECK_THROWS_AS(evolve_noisy(ramsey_state(), Operator::Zero(2, 2), n, s, 1), NumericalError);
}

TEST_CASE("mc_average: zero-noise stderr, CLT scaling, worker independence") {
  const EvolutionSpec s = two_dim_spec(1e-5, 2e-3, 10);
  const ObservableSeries quiet =
      mc_average(ramsey_state(), Operator::Zero(2, 2), electron_noise(0.0, 1e-2), s, 2, 3);
  for (double v : quiet.stderr_[0]) CHECK(v == 0.0);
  CHECK_THROWS_AS(mc_average(ramsey_state(), Operator::Zero(2, 2), electron_noise(0.0, 1e-2), s, 1, 3),
                  NumericalError);

  NoiseSetup n = electron_noise(1e3, 1e-2);
  n.noise_dt = 1e-4;
  auto median_se = [](const ObservableSeries& r) {
    std::vector<double> v(r.stderr_[0].begin() + 1, r.stderr_[0].end());
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const ObservableSeries a = mc_average(ramsey_state(), Operator::Zero(2, 2), n, s, 400, 11);
  const ObservableSeries b = mc_average(ramsey_state(), Operator::Zero(2, 2), n, s, 800, 11);
  const double ratio = median_se(a) / median_se(b);
  CHECK(ratio >= std::sqrt(2.0) * 0.8);
  CHECK(ratio <= std::sqrt(2.0) * 1.2);

  const ObservableSeries w1 = mc_average(ramsey_state(), Operator::Zero(2, 2), n, s, 64, 21, 1);
  const ObservableSeries w4 = mc_average(ramsey_state(), Operator::Zero(2, 2), n, s, 64, 21, 4);
  const ObservableSeries ser = mc_average_serial(ramsey_state(), Operator::Zero(2, 2), n, s, 64, 21);
  CHECK(w1.mean == w4.mean);
  CHECK(w1.stderr_ == w4.stderr_);
  CHECK(w1.mean == ser.mean);
  CHECK(w1.stderr_ == ser.stderr_);
}

TEST_CASE("pairwise sum") {
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  CHECK(pairwise_sum(x.data(), x.size()) == 499500.0);
  CHECK(pairwise_sum(x.data(), 0) == 0.0);
}
