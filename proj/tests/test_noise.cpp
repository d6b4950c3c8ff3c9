#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "nvsim/error.hpp"
#include "nvsim/noise.hpp"

using namespace nvsim;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Kolmogorov-Smirnov statistic against N(0, s^2).
double ks_statistic(std::vector<double> x, double s) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf(x[i] / s);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

}  // namespace

TEST_CASE("OU parameter checks") {
  OUParams p{1e3, 10e-3};
  CHECK(p.diffusion() == doctest::Approx(2e6 / 10e-3));
  CHECK(p.diffusion() * p.tau / 2.0 == doctest::Approx(p.sigma * p.sigma));
  CHECK_THROWS_AS((OUParams{-1.0, 1.0}.check()), ConfigError);
  CHECK_THROWS_AS((OUParams{1.0, 0.0}.check()), ConfigError);
}

TEST_CASE("Box-Muller normals have unit moments") {
  NormalRng rng(5);
  const int n = 200000;
  double s1 = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng();
    s1 += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  CHECK(std::abs(s1 / n) <= 3.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) <= 3.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(s4 / n - 3.0) <= 3.0 * std::sqrt(96.0 / n));
}

TEST_CASE("seed derivation is deterministic and spreads indices") {
  CHECK(derive_seed(42, 0) == derive_seed(42, 0));
  CHECK(derive_seed(42, 0) != derive_seed(42, 1));
  CHECK(derive_seed(42, 1) != derive_seed(43, 1));
  NormalRng a(derive_seed(7, 3)), b(derive_seed(7, 3));
  for (int i = 0; i < 5; ++i) CHECK(a() == b());
}

TEST_CASE("ou_step edge cases") {
  NormalRng rng(1);
  const OUParams p{1e3, 1e-3};
  CHECK(ou_step(3.5, 0.0, p, rng) == 3.5);
  const OUParams quiet{0.0, 1e-3};
  CHECK(ou_step(2.0, 1e-3, quiet, rng) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-15));
  CHECK_THROWS_AS(ou_step(1.0, -1.0, p, rng), NumericalError);
}

TEST_CASE("iterated OU steps: stationary variance and lag-1 autocorrelation") {
  const OUParams p{1e3, 10e-3};
  const double dt = p.tau / 10.0;
  const std::size_t n = 100000;
  const OUTrajectory t = sample_trajectory(p, n - 1, dt, 2024);
  const double rho = std::exp(-dt / p.tau);
  double mean = 0.0;
  for (double x : t.values) mean += x;
  mean /= n;
  double var = 0.0, lag = 0.0;
  for (std::size_t k = 0; k < n; ++k) var += (t.values[k] - mean) * (t.values[k] - mean);
  for (std::size_t k = 0; k + 1 < n; ++k) lag += (t.values[k] - mean) * (t.values[k + 1] - mean);
  const double r1 = lag / var;
  var /= static_cast<double>(n - 1);
  const double s2 = p.sigma * p.sigma;
  // AR(1) sampling errors.
  const double se_var = s2 * std::sqrt(2.0 / n * (1 + rho * rho) / (1 - rho * rho));
  const double se_rho = std::sqrt((1 - rho * rho) / n);
  CHECK(std::abs(var - s2) <= 3.0 * se_var);
  CHECK(std::abs(r1 - rho) <= 3.0 * se_rho);
}

TEST_CASE("sample_trajectory: zero noise and determinism") {
  const OUTrajectory z = sample_trajectory({0.0, 1e-3}, 50, 1e-5, 9);
  CHECK(z.values.size() == 51);
  CHECK(z.times.size() == z.values.size());
  for (double v : z.values) CHECK(v == 0.0);
  for (std::size_t k = 1; k < z.times.size(); ++k) CHECK(z.times[k] > z.times[k - 1]);
  const OUTrajectory a = sample_trajectory({1e3, 1e-3}, 100, 1e-5, 77);
  const OUTrajectory b = sample_trajectory({1e3, 1e-3}, 100, 1e-5, 77);
  CHECK(a.values == b.values);
  CHECK_THROWS_AS(sample_trajectory({1e3, 1e-3}, 0, 1e-5, 1), NumericalError);
}

TEST_CASE("ensemble autocorrelation follows sigma^2 exp(-t/tau)") {
  const OUParams p{1e3, 1e-3};
  const std::size_t n_traj = 20000, n_steps = 20;
  const double dt = 2.0 * p.tau / n_steps;
  std::vector<double> c(n_steps + 1, 0.0);
  for (std::size_t i = 0; i < n_traj; ++i) {
    const OUTrajectory t = sample_trajectory(p, n_steps, dt, derive_seed(99, i));
    for (std::size_t k = 0; k <= n_steps; ++k) c[k] += t.values[k] * t.values[0];
  }
  // Linear fit of ln C(t) = ln(s^2) - t / tau.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k <= n_steps; ++k) {
    const double x = static_cast<double>(k) * dt, y = std::log(c[k] / n_traj);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(n_steps + 1);
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / m;
  CHECK(std::abs(-1.0 / slope - p.tau) <= 0.05 * p.tau);
  CHECK(std::abs(std::exp(icpt) - p.sigma * p.sigma) <= 0.05 * p.sigma * p.sigma);
}

TEST_CASE("stationary marginals pass Kolmogorov-Smirnov at the 1% level") {
  const OUParams p{2e3, 1e-3};
  const std::size_t n = 10000;
  std::vector<double> first(n), later(n);
  for (std::size_t i = 0; i < n; ++i) {
    const OUTrajectory t = sample_trajectory(p, 7, 3e-4, derive_seed(5, i));
    first[i] = t.values[0];
    later[i] = t.values[7];
  }
  const double crit = 1.628 / std::sqrt(static_cast<double>(n));
  CHECK(ks_statistic(first, p.sigma) < crit);
  CHECK(ks_statistic(later, p.sigma) < crit);
}

TEST_CASE("Markov composition of conditional variances") {
  const OUParams p{1.7e3, 2e-3};
  for (double dt : {1e-6, 1e-4, 3e-3}) {
    const double one = ou_conditional_variance(dt, p);
    const double two = std::exp(-2.0 * (dt / 2) / p.tau) * ou_conditional_variance(dt / 2, p) +
                       ou_conditional_variance(dt / 2, p);
    CHECK(std::abs(one - two) <= 1e-12 * p.sigma * p.sigma);
  }
}

TEST_CASE("trajectory CSV dump") {
  const OUTrajectory t = sample_trajectory({1.0, 1.0}, 2, 0.5, 3);
  std::ostringstream out;
  write_trajectory_csv(t, out);
  const std::string s = out.str();
  CHECK(s.rfind("t_s,value_rad_s\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 4);
}
