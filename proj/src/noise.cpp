#include "nvsim/noise.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "nvsim/error.hpp"

namespace nvsim {

void OUParams::check() const {
  if (!std::isfinite(sigma) || sigma < 0.0) {
    throw ConfigError("OU sigma must be finite and non-negative");
  }
  if (!std::isfinite(tau) || !(tau > 0.0)) {
    throw ConfigError("OU tau must be finite and positive");
  }
}

NormalRng::NormalRng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

double NormalRng::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  const double u1 = 1.0 - static_cast<double>(engine_() >> 11) * kScale;  // (0, 1]
  const double u2 = static_cast<double>(engine_() >> 11) * kScale;        // [0, 1)
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(master) ^ index);
}

double ou_conditional_variance(double dt, const OUParams& p) {
  return p.sigma * p.sigma * -std::expm1(-2.0 * dt / p.tau);
}

double ou_step(double x, double dt, const OUParams& p, NormalRng& rng) {
  if (dt < 0.0) {
    throw NumericalError("ou_step: dt must be non-negative");
  }
  const double n = rng();
  return x * std::exp(-dt / p.tau) + std::sqrt(ou_conditional_variance(dt, p)) * n;
}

double ou_stationary(const OUParams& p, NormalRng& rng) { return p.sigma * rng(); }

OUTrajectory sample_trajectory(const OUParams& p, std::size_t n_steps, double dt, std::uint64_t seed) {
  p.check();
  if (n_steps < 1) {
    throw NumericalError("sample_trajectory: n_steps must be at least 1");
  }
  if (!(dt > 0.0)) {
    throw NumericalError("sample_trajectory: dt must be positive");
  }
  NormalRng rng(seed);
  OUTrajectory t;
  t.seed = seed;
  t.times.resize(n_steps + 1);
  t.values.resize(n_steps + 1);
  double x = ou_stationary(p, rng);
  for (std::size_t k = 0; k <= n_steps; ++k) {
    if (k > 0) x = ou_step(x, dt, p, rng);
    t.times[k] = static_cast<double>(k) * dt;
    t.values[k] = x;
  }
  return t;
}

void write_trajectory_csv(const OUTrajectory& traj, std::ostream& out) {
  out << "t_s,value_rad_s\n" << std::setprecision(17);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    out << traj.times[k] << ',' << traj.values[k] << '\n';
  }
}

}  // namespace nvsim
