#pragma once

// Ornstein-Uhlenbeck dephasing fields.
//
// Random numbers: std::mt19937_64 (output fully specified by the C++
// standard) feeding a Box-Muller transform implemented here, so a seed
// produces the same normals with every standard library. Trajectory i of a
// Monte-Carlo run is seeded with derive_seed(master, i).

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

namespace nvsim {

struct OUParams {
  double sigma = 0.0;   // stationary standard deviation (rad/s)
  double tau = 10e-3;   // correlation time (s)

  double diffusion() const { return 2.0 * sigma * sigma / tau; }
  // Throws ConfigError unless sigma >= 0 and tau > 0, both finite.
  void check() const;

  bool operator==(const OUParams&) const = default;
};

struct OUTrajectory {
  std::vector<double> times;
  std::vector<double> values;
  std::uint64_t seed = 0;
};

class NormalRng {
 public:
  explicit NormalRng(std::uint64_t seed);

  double operator()();
  std::uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// splitmix64 finalizer over (master, index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Variance of x(t + dt) given x(t): sigma^2 (1 - exp(-2 dt / tau)).
double ou_conditional_variance(double dt, const OUParams& p);

// x e^{-dt/tau} + sqrt(sigma^2 (1 - e^{-2 dt/tau})) n
double ou_step(double x, double dt, const OUParams& p, NormalRng& rng);

// Draw from the stationary law N(0, sigma^2).
double ou_stationary(const OUParams& p, NormalRng& rng);

// n_steps + 1 samples on t_k = k dt, x_0 stationary.
OUTrajectory sample_trajectory(const OUParams& p, std::size_t n_steps, double dt, std::uint64_t seed);

// CSV with header `t_s,value_rad_s`.
void write_trajectory_csv(const OUTrajectory& traj, std::ostream& out);

}  // namespace nvsim
