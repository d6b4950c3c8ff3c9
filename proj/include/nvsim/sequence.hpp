#pragma once

// Ideal pulses, initial states and the named experiments built on them.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nvsim/evolve.hpp"
#include "nvsim/model.hpp"
#include "nvsim/noise.hpp"

namespace nvsim {

enum class Species { electron, nucleus };
enum class PulseAxis { x, y };

PulseAxis pulse_axis_from_string(const std::string& s);
std::string to_string(PulseAxis a);

// exp(+i angle P / 2) with P the axis Pauli matrix on the target's {0, -1}
// block; identity on every other factor (and on |+1> for spin-1 sites).
struct PulseSpec {
  int nv = 1;  // 1 or 2
  Species species = Species::nucleus;
  PulseAxis axis = PulseAxis::x;
  double angle = 0.0;
  double time = 0.0;
};

Operator pulse_unitary(const PulseSpec& pulse, const TensorLayout& layout);
State apply_pulse(const State& psi, const PulseSpec& pulse, const TensorLayout& layout);

// Initial-state labels:
//   "xx-start"    |0,0>_e (x) |0,+1>_n          (spin-1 layouts)
//   "zz-start"    |--> _e (x) |-+>_n
//   "bell-start"  |--> _e (x) |-_y +_y>_n
//   "ramsey"      (|0> + |-1>)/sqrt(2)          (single electron)
// with |+-> = (|0> +- |-1>)/sqrt(2) and |+-_y> = (|0> +- i|-1>)/sqrt(2),
// each prepared from |0> by an exact pi/2 pulse. Nuclear-only layouts drop
// the electron factor.
State prepare(const std::string& label, const TensorLayout& layout);

struct Schedule {
  std::string initial;
  TensorLayout layout = TensorLayout::reduced();
  double t_final = 0.0;
  std::vector<PulseSpec> pulses;  // times non-decreasing, within [0, t_final]
  std::vector<Observable> taps;

  void check() const;
  std::vector<TimedUnitary> timed_unitaries() const;
  EvolutionSpec evolution_spec(Frame frame, double dt, std::size_t stride) const;
};

// Layout used by each frame.
TensorLayout layout_of(Frame f);

// Nuclear tau^x on site j (1 or 2) in a layout that contains "n1", "n2".
Operator nuclear_tau_x(int j, const TensorLayout& layout);

// ---------------------------------------------------------------- XX gate

struct XxOptions {
  Frame frame = Frame::full_static;  // or effective_xx9
  double t_final = 0.0;              // 0 selects one exchange period pi / (2 J_eff^xx)
  std::size_t samples = 400;
};

// Taps: I1z, I2z and, in the full frame, Sz_tot.
ObservableSeries run_xx_gate(const NVPairParams& p, const XxOptions& opt = {});

// Exchange period of <I1z> = sin^2(2 J t): pi / (2 J_eff^xx).
double xx_exchange_period(const NVPairParams& p);
// Time of the first complete transfer: pi / (4 J_eff^xx).
double xx_transfer_time(const NVPairParams& p);

// ---------------------------------------------------------------- ZZ echo

// t_f = pi / (2 |J_eff^zz|) and t_zz = t_f / 2.
double zz_gate_time(const NVPairParams& p, const DriveParams& d);
double zz_half_time(const NVPairParams& p, const DriveParams& d);

struct EchoNoise {
  NoiseSetup setup;
  std::size_t n_traj = 200;
  std::uint64_t seed = 0;
  int workers = 0;
};

struct ZzOptions {
  Frame frame = Frame::two_level16;  // or effective_zz4
  double t_final = 0.0;               // longest echo period; 0 selects zz_gate_time
  PulseAxis echo_axis = PulseAxis::x;
  std::size_t points = 200;           // echo periods k t_final / points, k = 1..points
  std::size_t half_steps = 0;         // noisy grid steps per echo half; 0 derives them from the noise step
  std::string initial = "zz-start";
  std::optional<EchoNoise> noise;     // two-level frame only
};

// One complete echo per period t: evolve t/2, pi pulse on both nuclei, evolve
// t/2. The series is indexed by the echo period (row 0 is t = 0) with columns
// dtau1x, dtau2x (<tau_j^x> after the echo minus its initial value) and
// contrast = (dtau1x - dtau2x) / 4. Noisy rows use trajectory seeds
// derive_seed(seed, k).
ObservableSeries run_zz_echo(const NVPairParams& p, const DriveParams& d, const ZzOptions& opt = {});

// Sets noise fields b1 = b2 = b, bn1 = bn2 = nuclear_ratio * b, all with
// correlation time tau, on the reduced layout.
NoiseSetup echo_noise(double b, double tau, double nuclear_ratio = 0.1);

// ---------------------------------------------------------------- Bell

inline constexpr double kBellElectronOverlapMin = 0.99;

struct BellResult {
  // Nuclear-state fidelity with (a + e^{i phi} b)/sqrt2, a = |-_y +_y>,
  // b = |+_y -_y>, maximized over phi: (rho_aa + rho_bb)/2 + |rho_ab|.
  double fidelity = 0.0;
  double literal_fidelity = 0.0;  // phi = 0 target (|-_y +_y> + |+_y -_y>)/sqrt2
  double relative_phase = 0.0;    // maximizing phi = arg rho_ba
  double fidelity_t0 = 0.0;
  double electron_overlap = 1.0;  // <--|rho_e|-->
  bool electron_ok = true;        // electron_overlap >= kBellElectronOverlapMin
  double t_gate = 0.0;
};

// Bell-start state, y echo, total time t_zz.
BellResult run_bell(const NVPairParams& p, const DriveParams& d, Frame frame = Frame::two_level16,
                    std::size_t half_steps = 200);

// ---------------------------------------------------------------- FID

struct FidResult {
  ObservableSeries series;  // column sx
  double b_fit = 0.0;       // rad/s
  double log_amplitude = 0.0;
  std::size_t fit_points = 0;
  std::optional<double> t_half;  // first time mean <= e^{-1/2}, linear interpolation
};

struct FidOptions {
  OUParams ou{1e3, 10e-3};
  std::size_t n_traj = 5000;
  double t_max = 4e-3;
  std::size_t steps = 400;
  std::uint64_t seed = 1;
  int workers = 0;
};

// Pure-dephasing Ramsey on one electron pseudospin, followed by a Gaussian
// fit ln m(t) = c0 - b^2 t^2 / 2 weighted by m / se over the leading region
// where the mean exceeds three standard errors.
FidResult run_fid(const FidOptions& opt);

struct GaussianFit {
  double b = 0.0;
  double log_amplitude = 0.0;
  std::size_t points = 0;
};

// Throws NumericalError when fewer than three leading points qualify.
GaussianFit fit_gaussian_decay(const std::vector<double>& t, const std::vector<double>& mean,
                               const std::vector<double>& se);

// ---------------------------------------------------------------- RWA check

struct RwaCheckOptions {
  double dt = 1e-10;
  double t_max = 0.0;  // 0 selects 2 pi / A_par1
  std::size_t samples = 200;
  bool order_check = true;
};

struct RwaCheckResult {
  ObservableSeries exact;  // tau1x, tau2x
  ObservableSeries rwa;
  double max_deviation = 0.0;
  double max_bohr_frequency = 0.0;
  std::optional<OrderCheck> order;
};

RwaCheckResult run_rwa_check(const NVPairParams& p, const DriveParams& d, const RwaCheckOptions& opt = {});

// ---------------------------------------------------------------- noise sweep

struct SweepRow {
  double b = 0.0;
  double t2e = 0.0;
  double contrast_mean = 0.0;
  double contrast_stderr = 0.0;
};

struct SweepOptions {
  std::vector<double> b_list{5e3, 15e3, 25e3, 35e3, 50e3, 55e3};
  double tau = 10e-3;
  double nuclear_ratio = 0.1;
  std::size_t n_traj = 200;
  std::uint64_t seed = 1;
  int workers = 0;
  std::size_t half_steps = 0;  // 0 picks the grid from the noise step
};

// Contrast of the noisy x-echo at t_f for each b; trajectory seeds of row i
// derive from derive_seed(seed, i).
std::vector<SweepRow> run_noise_sweep(const NVPairParams& p, const DriveParams& d, const SweepOptions& opt);

}  // namespace nvsim
