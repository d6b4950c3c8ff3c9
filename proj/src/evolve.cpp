#include "nvsim/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <omp.h>

#include "nvsim/error.hpp"
#include "nvsim/model.hpp"

namespace nvsim {

std::size_t frame_dim(Frame f) {
  switch (f) {
    case Frame::full_static:
    case Frame::interaction_picture:
    case Frame::rwa81:
      return 81;
    case Frame::two_level16:
      return 16;
    case Frame::effective_xx9:
      return 9;
    case Frame::effective_zz4:
      return 4;
    case Frame::single2:
      return 2;
  }
  return 0;
}

namespace {
const std::map<Frame, std::string>& frame_names() {
  static const std::map<Frame, std::string> names = {
      {Frame::full_static, "full-static"},     {Frame::interaction_picture, "interaction-picture-exact"},
      {Frame::rwa81, "rwa-81"},                {Frame::two_level16, "two-level-16"},
      {Frame::effective_xx9, "effective-xx-9"}, {Frame::effective_zz4, "effective-zz-4"},
      {Frame::single2, "single-2"},
  };
  return names;
}
}  // namespace

std::string to_string(Frame f) { return frame_names().at(f); }

Frame frame_from_string(const std::string& s) {
  for (const auto& [f, name] : frame_names()) {
    if (name == s) return f;
  }
  throw ConfigError("unknown frame '" + s + "'");
}

std::size_t EvolutionSpec::steps() const {
  const double r = std::round(t_final / dt);
  return static_cast<std::size_t>(std::max(1.0, r));
}

std::vector<std::size_t> EvolutionSpec::sample_indices() const {
  const std::size_t n = steps();
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k <= n; k += stride) idx.push_back(k);
  if (idx.back() != n) idx.push_back(n);
  return idx;
}

void EvolutionSpec::check() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw NumericalError("evolution: dt must be positive and finite");
  }
  if (!(t_final >= dt) || !std::isfinite(t_final)) {
    std::ostringstream msg;
    msg << "evolution: t_final (" << t_final << ") must be at least dt (" << dt << ")";
    throw NumericalError(msg.str());
  }
  if (stride < 1) {
    throw NumericalError("evolution: stride must be at least 1");
  }
  const auto dim = static_cast<Eigen::Index>(frame_dim(frame));
  for (const Observable& o : taps) {
    if (o.op.rows() != dim || o.op.cols() != dim) {
      std::ostringstream msg;
      msg << "observable '" << o.name << "' is " << o.op.rows() << "x" << o.op.cols() << " but frame "
          << to_string(frame) << " has dimension " << dim;
      throw DimensionError(msg.str());
    }
    require_hermitian(o.op, "observable '" + o.name + "'");
  }
  const double h = step();
  for (const TimedUnitary& p : pulses) {
    if (p.unitary.rows() != dim || p.unitary.cols() != dim) {
      throw DimensionError("pulse unitary does not match the frame dimension");
    }
    if (unitarity_defect(p.unitary) > kUnitarityTol) {
      throw NumericalError("pulse operator is not unitary");
    }
    const double k = p.time / h;
    if (p.time < 0.0 || p.time > t_final * (1 + 1e-12) || std::abs(k - std::round(k)) > 1e-6) {
      std::ostringstream msg;
      msg << "pulse at t = " << p.time << " is not on the evolution grid (step " << h << ")";
      throw NumericalError(msg.str());
    }
  }
}

std::size_t ObservableSeries::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw DimensionError("series has no observable named '" + name + "'");
}

namespace {

// Grid indices -> pulses applied there, in order of appearance.
std::multimap<std::size_t, const Operator*> pulse_map(const EvolutionSpec& spec) {
  std::multimap<std::size_t, const Operator*> m;
  const double h = spec.step();
  for (const TimedUnitary& p : spec.pulses) {
    m.emplace(static_cast<std::size_t>(std::llround(p.time / h)), &p.unitary);
  }
  return m;
}

ObservableSeries empty_series(const EvolutionSpec& spec) {
  ObservableSeries s;
  s.frame = to_string(spec.frame);
  for (const Observable& o : spec.taps) s.names.push_back(o.name);
  s.mean.assign(spec.taps.size(), {});
  s.stderr_.assign(spec.taps.size(), {});
  return s;
}

void record(ObservableSeries& s, const EvolutionSpec& spec, double t, const State& psi) {
  s.times.push_back(t);
  for (std::size_t i = 0; i < spec.taps.size(); ++i) {
    s.mean[i].push_back(expect(psi, spec.taps[i].op));
    s.stderr_[i].push_back(0.0);
  }
}

State apply_pulses(const std::multimap<std::size_t, const Operator*>& pulses, std::size_t k, State psi) {
  auto [lo, hi] = pulses.equal_range(k);
  for (auto it = lo; it != hi; ++it) psi = (*it->second) * psi;
  return psi;
}

// exp(-i H t) for a fixed H, with a shortcut when H is diagonal.
class ConstPropagator {
 public:
  explicit ConstPropagator(const Operator& h) : diagonal_(is_diagonal(h)) {
    if (diagonal_) {
      require_hermitian(h, "Hamiltonian");
      levels_ = h.diagonal().real();
    } else {
      es_ = eigh(h);
    }
  }

  State apply(const State& psi, double t) const {
    if (!diagonal_) return evolve(es_, psi, t);
    State out = psi;
    for (Eigen::Index k = 0; k < out.size(); ++k) out(k) *= std::polar(1.0, -levels_(k) * t);
    return out;
  }

 private:
  bool diagonal_;
  RealVector levels_;
  Eigensystem es_;
};

// Event indices (samples, pulses) in (lo, hi], ascending, plus hi itself.
std::vector<std::size_t> events_between(const std::set<std::size_t>& events, std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> out;
  for (auto it = events.upper_bound(lo); it != events.end() && *it <= hi; ++it) out.push_back(*it);
  if (out.empty() || out.back() != hi) out.push_back(hi);
  return out;
}

void check_state(const State& psi0, const EvolutionSpec& spec) {
  if (static_cast<std::size_t>(psi0.size()) != frame_dim(spec.frame)) {
    std::ostringstream msg;
    msg << "initial state has dimension " << psi0.size() << " but frame " << to_string(spec.frame)
        << " has dimension " << frame_dim(spec.frame);
    throw DimensionError(msg.str());
  }
}

}  // namespace

ObservableSeries evolve_const(const State& psi0, const Operator& h, const EvolutionSpec& spec, State* final_state) {
  spec.check();
  check_state(psi0, spec);
  if (h.rows() != psi0.size()) {
    throw DimensionError("evolve_const: Hamiltonian and state dimensions differ");
  }
  const ConstPropagator prop(h);
  const auto pulses = pulse_map(spec);
  const auto samples = spec.sample_indices();
  const std::set<std::size_t> sample_set(samples.begin(), samples.end());
  std::set<std::size_t> events(sample_set);
  for (const auto& [k, u] : pulses) events.insert(k);

  const double step = spec.step();
  ObservableSeries out = empty_series(spec);
  State anchor = apply_pulses(pulses, 0, psi0);
  std::size_t anchor_k = 0;
  if (sample_set.count(0)) record(out, spec, 0.0, anchor);
  State psi = anchor;
  for (std::size_t k : events) {
    if (k == 0) continue;
    psi = prop.apply(anchor, static_cast<double>(k - anchor_k) * step);
    if (pulses.count(k)) {
      psi = apply_pulses(pulses, k, psi);
      anchor = psi;
      anchor_k = k;
    }
    if (sample_set.count(k)) record(out, spec, static_cast<double>(k) * step, psi);
  }
  if (final_state) *final_state = psi;
  return out;
}

double rk4_max_dt(double omega_max) {
  if (!(omega_max > 0.0)) return std::numeric_limits<double>::infinity();
  const double f_max = omega_max / (2.0 * std::numbers::pi);
  return 1.0 / (20.0 * f_max);
}

namespace {

State rk4_run(const State& psi0, const Generator& gen, const EvolutionSpec& spec, ObservableSeries* series) {
  const std::size_t n = spec.steps();
  const double h = spec.step();
  const auto pulses = pulse_map(spec);
  const auto samples = spec.sample_indices();
  const std::set<std::size_t> sample_set(samples.begin(), samples.end());
  const Complex mi(0.0, -1.0);

  State psi = apply_pulses(pulses, 0, psi0);
  if (series && sample_set.count(0)) record(*series, spec, 0.0, psi);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * h;
    const Operator h1 = gen(t);
    const Operator h2 = gen(t + 0.5 * h);
    const Operator h3 = gen(t + h);
    const State k1 = mi * (h1 * psi);
    const State k2 = mi * (h2 * (psi + (0.5 * h) * k1));
    const State k3 = mi * (h2 * (psi + (0.5 * h) * k2));
    const State k4 = mi * (h3 * (psi + h * k3));
    psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double drift = std::abs(psi.norm() - 1.0);
    if (series) series->max_norm_drift = std::max(series->max_norm_drift, drift);
    if (drift > kRk4RenormThreshold) {
      psi /= psi.norm();
      if (series) ++series->renormalizations;
    }
    if (pulses.count(k + 1)) psi = apply_pulses(pulses, k + 1, psi);
    if (series && sample_set.count(k + 1)) record(*series, spec, static_cast<double>(k + 1) * h, psi);
  }
  return psi;
}

void check_rk4_step(const EvolutionSpec& spec, double omega_max) {
  const double bound = rk4_max_dt(omega_max);
  if (spec.step() > bound * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "rk4: step " << spec.step() << " s exceeds the bound 1/(20 f_max) = " << bound
        << " s for f_max = " << omega_max / (2.0 * std::numbers::pi) << " Hz";
    throw NumericalError(msg.str());
  }
}

}  // namespace

ObservableSeries rk4_evolve(const State& psi0, const Generator& h, const EvolutionSpec& spec, double omega_max,
                            State* final_state) {
  spec.check();
  check_state(psi0, spec);
  check_rk4_step(spec, omega_max);
  ObservableSeries out = empty_series(spec);
  State psi = rk4_run(psi0, h, spec, &out);
  if (final_state) *final_state = psi;
  return out;
}

OrderCheck rk4_order_check(const State& psi0, const Generator& h, const EvolutionSpec& spec, double omega_max) {
  spec.check();
  check_state(psi0, spec);
  check_rk4_step(spec, omega_max);
  EvolutionSpec s = spec;
  s.taps.clear();
  const std::size_t n = spec.steps();
  OrderCheck out;
  s.dt = spec.t_final / static_cast<double>(n);
  out.psi_dt = rk4_run(psi0, h, s, nullptr);
  s.dt = spec.t_final / static_cast<double>(2 * n);
  out.psi_half = rk4_run(psi0, h, s, nullptr);
  s.dt = spec.t_final / static_cast<double>(4 * n);
  out.psi_quarter = rk4_run(psi0, h, s, nullptr);
  out.diff_coarse = (out.psi_dt - out.psi_half).norm();
  out.diff_fine = (out.psi_half - out.psi_quarter).norm();
  out.ratio = out.diff_coarse / out.diff_fine;
  return out;
}

double NoiseSetup::resolved_noise_dt(const EvolutionSpec& spec) const {
  if (noise_dt > 0.0) return noise_dt;
  double tau_min = std::numeric_limits<double>::infinity();
  for (const OUParams& f : fields) {
    if (f.sigma > 0.0) tau_min = std::min(tau_min, f.tau);
  }
  return std::min(tau_min / 100.0, spec.t_final / 1000.0);
}

namespace {

bool noiseless(const NoiseFields& f) {
  return std::all_of(f.begin(), f.end(), [](const OUParams& p) { return p.sigma == 0.0; });
}

}  // namespace

ObservableSeries evolve_noisy(const State& psi0, const Operator& base_h, const NoiseSetup& noise,
                              const EvolutionSpec& spec, std::uint64_t seed, State* final_state) {
  spec.check();
  check_state(psi0, spec);
  for (const OUParams& f : noise.fields) f.check();
  if (noise.layout.dim() != static_cast<std::size_t>(psi0.size())) {
    throw DimensionError("evolve_noisy: noise layout does not match the state dimension");
  }
  if (noiseless(noise.fields)) {
    ObservableSeries s = evolve_const(psi0, base_h, spec, final_state);
    s.seed = seed;
    return s;
  }

  const double step = spec.step();
  const double ndt = noise.resolved_noise_dt(spec);
  double tau_min = std::numeric_limits<double>::infinity();
  for (const OUParams& f : noise.fields) {
    if (f.sigma > 0.0) tau_min = std::min(tau_min, f.tau);
  }
  if (ndt > tau_min / 100.0 * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "evolve_noisy: noise_dt = " << ndt << " exceeds tau_min/100 = " << tau_min / 100.0;
    throw NumericalError(msg.str());
  }
  if (ndt < step * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "evolve_noisy: noise_dt = " << ndt << " is shorter than the evolution step " << step;
    throw NumericalError(msg.str());
  }
  const std::size_t seg = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ndt / step)));
  const double seg_dt = static_cast<double>(seg) * step;

  const std::size_t n = spec.steps();
  const auto pulses = pulse_map(spec);
  const auto samples = spec.sample_indices();
  const std::set<std::size_t> sample_set(samples.begin(), samples.end());
  std::set<std::size_t> events(sample_set);
  for (const auto& [k, u] : pulses) events.insert(k);

  NormalRng rng(seed);
  std::array<double, 4> x{};
  for (std::size_t j = 0; j < 4; ++j) x[j] = ou_stationary(noise.fields[j], rng);

  ObservableSeries out = empty_series(spec);
  out.seed = seed;
  State psi = apply_pulses(pulses, 0, psi0);
  if (sample_set.count(0)) record(out, spec, 0.0, psi);

  for (std::size_t lo = 0; lo < n; lo += seg) {
    const std::size_t hi = std::min(n, lo + seg);
    const Operator h = base_h + noise_hamiltonian(x[0], x[1], x[2], x[3], noise.layout);
    const ConstPropagator prop(h);
    State anchor = psi;
    std::size_t anchor_k = lo;
    for (std::size_t k : events_between(events, lo, hi)) {
      psi = prop.apply(anchor, static_cast<double>(k - anchor_k) * step);
      if (pulses.count(k)) {
        psi = apply_pulses(pulses, k, psi);
        anchor = psi;
        anchor_k = k;
      }
      if (sample_set.count(k)) record(out, spec, static_cast<double>(k) * step, psi);
    }
    for (std::size_t j = 0; j < 4; ++j) x[j] = ou_step(x[j], seg_dt, noise.fields[j], rng);
  }
  if (final_state) *final_state = psi;
  return out;
}

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

namespace {

ObservableSeries reduce(const std::vector<ObservableSeries>& runs, const EvolutionSpec& spec, std::uint64_t seed) {
  ObservableSeries out = empty_series(spec);
  out.seed = seed;
  out.n_traj = runs.size();
  out.times = runs.front().times;
  const std::size_t n = runs.size();
  std::vector<double> buf(n);
  for (std::size_t o = 0; o < out.names.size(); ++o) {
    const std::size_t m = runs.front().mean[o].size();
    out.mean[o].resize(m);
    out.stderr_[o].resize(m);
    for (std::size_t s = 0; s < m; ++s) {
      for (std::size_t i = 0; i < n; ++i) buf[i] = runs[i].mean[o][s];
      const double mean = pairwise_sum(buf.data(), n) / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) buf[i] = (buf[i] - mean) * (buf[i] - mean);
      const double var = pairwise_sum(buf.data(), n) / static_cast<double>(n - 1);
      out.mean[o][s] = mean;
      out.stderr_[o][s] = std::sqrt(var / static_cast<double>(n));
    }
  }
  return out;
}

void check_ensemble(std::size_t n_traj) {
  if (n_traj < 2) {
    throw NumericalError("mc_average: need at least 2 trajectories");
  }
}

}  // namespace

ObservableSeries mc_average(const State& psi0, const Operator& base_h, const NoiseSetup& noise,
                            const EvolutionSpec& spec, std::size_t n_traj, std::uint64_t master_seed, int workers) {
  check_ensemble(n_traj);
  std::vector<ObservableSeries> runs(n_traj);
  std::exception_ptr failure;
  const int threads = workers > 0 ? workers : omp_get_max_threads();
  const auto count = static_cast<std::int64_t>(n_traj);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      runs[static_cast<std::size_t>(i)] =
          evolve_noisy(psi0, base_h, noise, spec, derive_seed(master_seed, static_cast<std::uint64_t>(i)));
    } catch (...) {
#pragma omp critical(nvsim_mc_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return reduce(runs, spec, master_seed);
}

ObservableSeries mc_average_serial(const State& psi0, const Operator& base_h, const NoiseSetup& noise,
                                   const EvolutionSpec& spec, std::size_t n_traj, std::uint64_t master_seed) {
  check_ensemble(n_traj);
  std::vector<ObservableSeries> runs(n_traj);
  for (std::size_t i = 0; i < n_traj; ++i) {
    runs[i] = evolve_noisy(psi0, base_h, noise, spec, derive_seed(master_seed, i));
  }
  return reduce(runs, spec, master_seed);
}

}  // namespace nvsim
