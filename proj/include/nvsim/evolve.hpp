#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nvsim/noise.hpp"
#include "nvsim/operators.hpp"
#include "nvsim/spinalg.hpp"

namespace nvsim {

enum class Frame {
  full_static,          // 81: static lab frame
  interaction_picture,  // 81: exact interaction-picture generator
  rwa81,                // 81: RWA spin-1
  two_level16,          // 16: pseudospin-1/2 reduction
  effective_xx9,        // 9:  nuclear flip-flop model
  effective_zz4,        // 4:  nuclear Ising model
  single2,              // 2:  one electron pseudospin (Ramsey)
};

std::size_t frame_dim(Frame f);
std::string to_string(Frame f);
Frame frame_from_string(const std::string& s);

struct Observable {
  std::string name;
  Operator op;
};

// Instantaneous unitary applied at `time` (which must lie on the grid).
struct TimedUnitary {
  double time;
  Operator unitary;
};

struct EvolutionSpec {
  Frame frame = Frame::two_level16;
  double dt = 1e-6;
  double t_final = 1e-3;
  std::vector<Observable> taps;
  std::size_t stride = 1;  // sample every `stride` grid steps; the last point is always kept
  std::vector<TimedUnitary> pulses;

  // Number of grid steps: round(t_final / dt), at least 1. The effective step
  // is t_final / steps().
  std::size_t steps() const;
  double step() const { return t_final / static_cast<double>(steps()); }
  // Grid indices that are sampled.
  std::vector<std::size_t> sample_indices() const;

  // Throws unless dt > 0, t_final >= dt, stride >= 1, each tap matches the
  // frame dimension and is Hermitian, pulses are unitary and on the grid.
  void check() const;
};

struct ObservableSeries {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<double>> mean;    // [observable][sample]
  std::vector<std::vector<double>> stderr_;  // [observable][sample]
  std::string frame;
  std::string params_digest;
  std::uint64_t seed = 0;
  std::size_t n_traj = 1;
  std::size_t renormalizations = 0;
  double max_norm_drift = 0.0;

  std::size_t index_of(const std::string& name) const;
  const std::vector<double>& values(const std::string& name) const { return mean[index_of(name)]; }
};

// Exact propagation of a time-independent Hamiltonian with one
// eigendecomposition; pulses split the evolution.
ObservableSeries evolve_const(const State& psi0, const Operator& h, const EvolutionSpec& spec,
                              State* final_state = nullptr);

using Generator = std::function<Operator(double)>;

inline constexpr double kRk4RenormThreshold = 1e-8;

// Largest admissible RK4 step for a generator whose fastest angular Bohr
// frequency is `omega_max`: 1 / (20 f_max) with f_max = omega_max / 2 pi.
double rk4_max_dt(double omega_max);

// Classic RK4 on i d/dt psi = H(t) psi. Refuses dt > rk4_max_dt(omega_max).
// Renormalizes only when the norm drifts by more than kRk4RenormThreshold.
ObservableSeries rk4_evolve(const State& psi0, const Generator& h, const EvolutionSpec& spec, double omega_max,
                            State* final_state = nullptr);

struct OrderCheck {
  double ratio = 0.0;         // |psi_dt - psi_dt/2| / |psi_dt/2 - psi_dt/4|
  double diff_coarse = 0.0;   // |psi_dt - psi_dt/2|
  double diff_fine = 0.0;     // |psi_dt/2 - psi_dt/4|
  State psi_dt, psi_half, psi_quarter;
};

// Richardson order diagnostic at a common t_final with n, 2n and 4n steps.
OrderCheck rk4_order_check(const State& psi0, const Generator& h, const EvolutionSpec& spec, double omega_max);

// Four independent fields in the order b1, b2, bn1, bn2.
using NoiseFields = std::array<OUParams, 4>;

struct NoiseSetup {
  NoiseFields fields;
  TensorLayout layout = TensorLayout::reduced();
  double noise_dt = 0.0;  // 0 selects min(tau_min / 100, t_final / 1000)

  double resolved_noise_dt(const EvolutionSpec& spec) const;
};

// One trajectory: fields held constant on each noise segment, exact OU
// updates between segments, exact exponentiation within.
ObservableSeries evolve_noisy(const State& psi0, const Operator& base_h, const NoiseSetup& noise,
                              const EvolutionSpec& spec, std::uint64_t seed, State* final_state = nullptr);

// Ensemble mean and standard error over n_traj trajectories seeded with
// derive_seed(master_seed, i). OpenMP-parallel over trajectories with a
// fixed-order pairwise reduction, so the output is bit-identical for every
// worker count. workers = 0 uses the OpenMP default.
ObservableSeries mc_average(const State& psi0, const Operator& base_h, const NoiseSetup& noise,
                            const EvolutionSpec& spec, std::size_t n_traj, std::uint64_t master_seed,
                            int workers = 0);

// Single-threaded reference with identical arithmetic.
ObservableSeries mc_average_serial(const State& psi0, const Operator& base_h, const NoiseSetup& noise,
                                   const EvolutionSpec& spec, std::size_t n_traj, std::uint64_t master_seed);

// Pairwise (cascade) summation in index order.
double pairwise_sum(const double* x, std::size_t n);

}  // namespace nvsim
