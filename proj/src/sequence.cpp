#include "nvsim/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "nvsim/effective.hpp"
#include "nvsim/error.hpp"

namespace nvsim {

PulseAxis pulse_axis_from_string(const std::string& s) {
  if (s == "x") return PulseAxis::x;
  if (s == "y") return PulseAxis::y;
  throw ConfigError("pulse axis must be \"x\" or \"y\", got \"" + s + "\"");
}

std::string to_string(PulseAxis a) { return a == PulseAxis::x ? "x" : "y"; }

namespace {

Operator local_pulse(PulseAxis axis, double angle) {
  const PauliOps s = pauli_subspace_ops();
  const Operator& p = axis == PulseAxis::x ? s.px : s.py;
  return std::cos(angle / 2) * Operator::Identity(2, 2) + Complex(0.0, std::sin(angle / 2)) * p;
}

Operator fit_to_site(const Operator& pseudo, std::size_t local_dim, Complex plus_one_entry) {
  if (local_dim == 2) return pseudo;
  if (local_dim == 3) return lift_to_spin1(pseudo, plus_one_entry);
  throw DimensionError("pulse target site has unsupported dimension");
}

std::size_t target_site(const PulseSpec& pulse, const TensorLayout& layout) {
  if (pulse.nv != 1 && pulse.nv != 2) {
    throw ConfigError("pulse target nv must be 1 or 2");
  }
  const std::string prefix = pulse.species == Species::electron ? "e" : "n";
  if (layout.num_sites() == 1 && layout.name(0) == prefix && pulse.nv == 1) return 0;
  try {
    return layout.site_index(prefix + std::to_string(pulse.nv));
  } catch (const Error&) {
    throw DimensionError("pulse target " + prefix + std::to_string(pulse.nv) + " is not part of this layout");
  }
}

State lift_state(const State& pseudo, std::size_t local_dim) {
  if (local_dim == 2) return pseudo;
  State s = State::Zero(3);
  s(1) = pseudo(0);
  s(2) = pseudo(1);
  return s;
}

}  // namespace

Operator pulse_unitary(const PulseSpec& pulse, const TensorLayout& layout) {
  if (!std::isfinite(pulse.angle)) throw ConfigError("pulse angle must be finite");
  const std::size_t site = target_site(pulse, layout);
  return layout.embed(fit_to_site(local_pulse(pulse.axis, pulse.angle), layout.local_dim(site), 1.0), site);
}

State apply_pulse(const State& psi, const PulseSpec& pulse, const TensorLayout& layout) {
  if (static_cast<std::size_t>(psi.size()) != layout.dim()) {
    throw DimensionError("apply_pulse: state dimension does not match the layout");
  }
  return pulse_unitary(pulse, layout) * psi;
}

State prepare(const std::string& label, const TensorLayout& layout) {
  const State zero = pseudo_basis(0);
  const State minus = local_pulse(PulseAxis::y, std::numbers::pi / 2) * zero;
  const State plus = local_pulse(PulseAxis::y, -std::numbers::pi / 2) * zero;
  const State plus_y = local_pulse(PulseAxis::x, std::numbers::pi / 2) * zero;
  const State minus_y = local_pulse(PulseAxis::x, -std::numbers::pi / 2) * zero;

  std::map<std::string, State> locals;
  bool spin1_only = false;
  if (label == "xx-start") {
    locals = {{"e1", spin1_basis(0)}, {"n1", spin1_basis(0)}, {"e2", spin1_basis(0)}, {"n2", spin1_basis(1)}};
    spin1_only = true;
  } else if (label == "zz-start") {
    locals = {{"e1", minus}, {"n1", minus}, {"e2", minus}, {"n2", plus}};
  } else if (label == "bell-start") {
    locals = {{"e1", minus}, {"n1", minus_y}, {"e2", minus}, {"n2", plus_y}};
  } else if (label == "ramsey") {
    locals = {{"e", plus}};
  } else {
    throw ConfigError("unknown initial state label \"" + label + "\"");
  }

  std::vector<State> factors;
  for (std::size_t k = 0; k < layout.num_sites(); ++k) {
    const auto it = locals.find(layout.name(k));
    if (it == locals.end()) {
      throw DimensionError("initial state \"" + label + "\" does not define site " + layout.name(k));
    }
    const std::size_t d = layout.local_dim(k);
    if (spin1_only) {
      if (d != 3) throw DimensionError("initial state \"" + label + "\" needs spin-1 sites");
      factors.push_back(it->second);
    } else {
      factors.push_back(lift_state(it->second, d));
    }
  }
  return layout.product_state(factors);
}

void Schedule::check() const {
  if (!(t_final > 0.0) || !std::isfinite(t_final)) throw NumericalError("schedule: t_final must be positive");
  double last = 0.0;
  for (const PulseSpec& p : pulses) {
    if (p.time < last || p.time > t_final) {
      throw NumericalError("schedule: pulse times must be non-decreasing within [0, t_final]");
    }
    last = p.time;
  }
  for (const Observable& o : taps) {
    if (static_cast<std::size_t>(o.op.rows()) != layout.dim()) {
      throw DimensionError("schedule: observable " + o.name + " does not match the layout");
    }
  }
}

std::vector<TimedUnitary> Schedule::timed_unitaries() const {
  std::vector<TimedUnitary> out;
  for (const PulseSpec& p : pulses) out.push_back({p.time, pulse_unitary(p, layout)});
  return out;
}

EvolutionSpec Schedule::evolution_spec(Frame frame, double dt, std::size_t stride) const {
  check();
  if (frame_dim(frame) != layout.dim()) throw DimensionError("schedule layout does not match the frame");
  EvolutionSpec s;
  s.frame = frame;
  s.dt = dt;
  s.t_final = t_final;
  s.stride = stride;
  s.taps = taps;
  s.pulses = timed_unitaries();
  return s;
}

TensorLayout layout_of(Frame f) {
  switch (f) {
    case Frame::full_static:
    case Frame::interaction_picture:
    case Frame::rwa81:
      return TensorLayout::full();
    case Frame::two_level16:
      return TensorLayout::reduced();
    case Frame::effective_xx9:
      return TensorLayout::nuclear_spin1();
    case Frame::effective_zz4:
      return TensorLayout::nuclear_pseudo();
    case Frame::single2:
      return TensorLayout::single_pseudo();
  }
  throw ConfigError("unknown frame");
}

Operator nuclear_tau_x(int j, const TensorLayout& layout) {
  const std::size_t site = layout.site_index(j == 1 ? "n1" : "n2");
  return layout.embed(fit_to_site(pauli_subspace_ops().px, layout.local_dim(site), 0.0), site);
}

// ---------------------------------------------------------------- XX gate

double xx_exchange_period(const NVPairParams& p) { return std::numbers::pi / (2.0 * std::abs(jeff_xx(p))); }
double xx_transfer_time(const NVPairParams& p) { return std::numbers::pi / (4.0 * std::abs(jeff_xx(p))); }

ObservableSeries run_xx_gate(const NVPairParams& p, const XxOptions& opt) {
  if (opt.frame != Frame::full_static && opt.frame != Frame::effective_xx9) {
    throw ConfigError("xx gate runs in the full-static or effective-xx-9 frame");
  }
  if (opt.samples < 1) throw ConfigError("xx gate needs at least one sample");
  const double t_final = opt.t_final > 0.0 ? opt.t_final : xx_exchange_period(p);
  const TensorLayout L = layout_of(opt.frame);
  const SpinOps s = spin1_ops();

  Schedule sch;
  sch.initial = "xx-start";
  sch.layout = L;
  sch.t_final = t_final;
  sch.taps = {{"I1z", L.embed(s.sz, L.site_index("n1"))}, {"I2z", L.embed(s.sz, L.site_index("n2"))}};
  Operator h;
  if (opt.frame == Frame::full_static) {
    sch.taps.push_back({"Sz_tot", L.embed(s.sz, Site::e1) + L.embed(s.sz, Site::e2)});
    h = build_static(p);
  } else {
    h = build_heff_xx(p);
  }
  const EvolutionSpec spec = sch.evolution_spec(opt.frame, t_final / static_cast<double>(opt.samples), 1);
  ObservableSeries r = evolve_const(prepare(sch.initial, L), h, spec);
  return r;
}

// ---------------------------------------------------------------- ZZ echo

double zz_gate_time(const NVPairParams& p, const DriveParams& d) {
  return std::numbers::pi / (2.0 * std::abs(jeff_zz(p, d).value));
}

double zz_half_time(const NVPairParams& p, const DriveParams& d) { return 0.5 * zz_gate_time(p, d); }

NoiseSetup echo_noise(double b, double tau, double nuclear_ratio) {
  NoiseSetup n;
  n.fields = {OUParams{b, tau}, OUParams{b, tau}, OUParams{nuclear_ratio * b, tau},
              OUParams{nuclear_ratio * b, tau}};
  n.layout = TensorLayout::reduced();
  return n;
}

namespace {

Operator echo_frame_hamiltonian(const NVPairParams& p, const DriveParams& d, Frame frame) {
  if (frame == Frame::two_level16) return build_two_level(p, d).total();
  if (frame == Frame::effective_zz4) return build_heff_zz(p, d);
  throw ConfigError("zz echo runs in the two-level-16 or effective-zz-4 frame");
}

Schedule echo_schedule(const std::string& initial, Frame frame, double t_final, PulseAxis axis) {
  Schedule sch;
  sch.initial = initial;
  sch.layout = layout_of(frame);
  sch.t_final = t_final;
  for (int j : {1, 2}) sch.pulses.push_back({j, Species::nucleus, axis, std::numbers::pi, t_final / 2});
  const Operator t1 = nuclear_tau_x(1, sch.layout), t2 = nuclear_tau_x(2, sch.layout);
  sch.taps = {{"dtau1x", t1}, {"dtau2x", t2}, {"contrast", 0.25 * (t1 - t2)}};
  return sch;
}

}  // namespace

ObservableSeries run_zz_echo(const NVPairParams& p, const DriveParams& d, const ZzOptions& opt) {
  if (opt.points < 1) throw ConfigError("zz echo needs at least one echo period");
  const double t_f = opt.t_final > 0.0 ? opt.t_final : zz_gate_time(p, d);
  const Operator h = echo_frame_hamiltonian(p, d, opt.frame);
  if (opt.noise && opt.frame != Frame::two_level16) {
    throw ConfigError("noisy zz echo requires the two-level-16 frame");
  }
  double noise_dt = 0.0;
  if (opt.noise) {
    double tau_min = 0.0;
    for (const OUParams& f : opt.noise->setup.fields)
      if (f.sigma > 0.0) tau_min = tau_min == 0.0 ? f.tau : std::min(tau_min, f.tau);
    noise_dt = opt.noise->setup.noise_dt > 0.0 ? opt.noise->setup.noise_dt
                                                : (tau_min > 0.0 ? std::min(tau_min / 100.0, t_f / 1000.0) : t_f);
  }

  const Schedule proto = echo_schedule(opt.initial, opt.frame, t_f, opt.echo_axis);
  const State psi0 = prepare(proto.initial, proto.layout);
  std::vector<double> v0;
  for (const Observable& o : proto.taps) v0.push_back(expect(psi0, o.op));

  ObservableSeries out;
  out.frame = to_string(opt.frame);
  for (const Observable& o : proto.taps) out.names.push_back(o.name);
  out.mean.assign(proto.taps.size(), {});
  out.stderr_.assign(proto.taps.size(), {});
  out.times.push_back(0.0);
  for (std::size_t j = 0; j < proto.taps.size(); ++j) {
    out.mean[j].push_back(0.0);
    out.stderr_[j].push_back(0.0);
  }
  if (opt.noise) {
    out.seed = opt.noise->seed;
    out.n_traj = opt.noise->n_traj;
  }

  for (std::size_t k = 1; k <= opt.points; ++k) {
    const double t = t_f * static_cast<double>(k) / static_cast<double>(opt.points);
    const Schedule sch = echo_schedule(opt.initial, opt.frame, t, opt.echo_axis);
    ObservableSeries r;
    if (opt.noise) {
      std::size_t half = opt.half_steps;
      if (half == 0) half = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t / (2.0 * noise_dt) - 1e-9)));
      const EvolutionSpec spec = sch.evolution_spec(opt.frame, t / (2.0 * static_cast<double>(half)), 2 * half);
      NoiseSetup ns = opt.noise->setup;
      ns.layout = sch.layout;
      ns.noise_dt = spec.step();
      r = mc_average(psi0, h, ns, spec, opt.noise->n_traj, derive_seed(opt.noise->seed, k), opt.noise->workers);
    } else {
      r = evolve_const(psi0, h, sch.evolution_spec(opt.frame, t / 2.0, 2));
    }
    out.times.push_back(t);
    for (std::size_t j = 0; j < proto.taps.size(); ++j) {
      out.mean[j].push_back(r.mean[j].back() - v0[j]);
      out.stderr_[j].push_back(r.stderr_[j].back());
    }
    out.renormalizations += r.renormalizations;
    out.max_norm_drift = std::max(out.max_norm_drift, r.max_norm_drift);
  }
  return out;
}

// ---------------------------------------------------------------- Bell

BellResult run_bell(const NVPairParams& p, const DriveParams& d, Frame frame, std::size_t half_steps) {
  if (half_steps < 1) throw ConfigError("bell run needs half_steps >= 1");
  const double t_gate = zz_half_time(p, d);
  const Operator h = echo_frame_hamiltonian(p, d, frame);
  Schedule sch = echo_schedule("bell-start", frame, t_gate, PulseAxis::y);
  sch.taps.clear();
  const EvolutionSpec spec = sch.evolution_spec(frame, t_gate / (2.0 * static_cast<double>(half_steps)), half_steps);
  const State psi0 = prepare(sch.initial, sch.layout);
  State psi;
  evolve_const(psi0, h, spec, &psi);

  // Amplitude matrix M(electrons, nuclei) and the two reduced states.
  auto split = [&](const State& v) {
    Operator m = Operator::Zero(frame == Frame::two_level16 ? 4 : 1, 4);
    if (frame == Frame::two_level16) {
      for (int e1 = 0; e1 < 2; ++e1)
        for (int n1 = 0; n1 < 2; ++n1)
          for (int e2 = 0; e2 < 2; ++e2)
            for (int n2 = 0; n2 < 2; ++n2) m(e1 * 2 + e2, n1 * 2 + n2) = v(((e1 * 2 + n1) * 2 + e2) * 2 + n2);
    } else {
      m.row(0) = v.transpose();
    }
    return m;
  };

  const State zero = pseudo_basis(0);
  const State plus_y = local_pulse(PulseAxis::x, std::numbers::pi / 2) * zero;
  const State minus_y = local_pulse(PulseAxis::x, -std::numbers::pi / 2) * zero;
  const State minus = local_pulse(PulseAxis::y, std::numbers::pi / 2) * zero;
  const State a = kron(minus_y, plus_y), b = kron(plus_y, minus_y);

  auto score = [&](const State& v, BellResult& out) {
    const Operator m = split(v);
    const Operator rho_n = m.transpose() * m.conjugate();
    const Complex raa = a.dot(rho_n * a), rbb = b.dot(rho_n * b), rab = a.dot(rho_n * b);
    out.fidelity = 0.5 * (raa.real() + rbb.real()) + std::abs(rab);
    out.literal_fidelity = 0.5 * (raa.real() + rbb.real()) + rab.real();
    out.relative_phase = std::arg(std::conj(rab));
    if (frame == Frame::two_level16) {
      const Operator rho_e = m * m.adjoint();
      const State mm = kron(minus, minus);
      out.electron_overlap = mm.dot(rho_e * mm).real();
    }
  };

  BellResult at_start, out;
  score(psi0, at_start);
  score(psi, out);
  out.fidelity_t0 = at_start.literal_fidelity;
  out.electron_ok = out.electron_overlap >= kBellElectronOverlapMin;
  out.t_gate = t_gate;
  return out;
}

// ---------------------------------------------------------------- FID

GaussianFit fit_gaussian_decay(const std::vector<double>& t, const std::vector<double>& mean,
                               const std::vector<double>& se) {
  if (t.size() != mean.size() || t.size() != se.size()) throw DimensionError("fit: column lengths differ");
  std::size_t n = 0;
  while (n < t.size() && (mean[n] > 3.0 * se[n] || (n == 0 && mean[0] > 0.0)) && mean[n] > 0.0) ++n;
  if (n < 3) {
    std::ostringstream msg;
    msg << "Gaussian fit failed: only " << n << " leading samples have a mean above three standard errors";
    throw NumericalError(msg.str());
  }
  double se_floor = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (se[k] > 0.0 && (se_floor == 0.0 || se[k] < se_floor)) se_floor = se[k];

  // Weighted least squares for y = c0 + c1 x with x = -t^2 / 2.
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double s = se_floor > 0.0 ? std::max(se[k], se_floor) : 1.0;
    const double w = se_floor > 0.0 ? (mean[k] / s) * (mean[k] / s) : 1.0;
    const double x = -0.5 * t[k] * t[k], y = std::log(mean[k]);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
  }
  const double det = sw * sxx - sx * sx;
  if (!(det > 0.0)) throw NumericalError("Gaussian fit failed: singular normal equations");
  const double c1 = (sw * sxy - sx * sy) / det;
  const double c0 = (sy - c1 * sx) / sw;
  return {std::sqrt(std::max(c1, 0.0)), c0, n};
}

FidResult run_fid(const FidOptions& opt) {
  opt.ou.check();
  if (opt.n_traj < 2) throw ConfigError("fid needs n_traj >= 2");
  if (opt.steps < 3) throw ConfigError("fid needs at least 3 steps");
  const TensorLayout L = TensorLayout::single_pseudo();
  EvolutionSpec spec;
  spec.frame = Frame::single2;
  spec.t_final = opt.t_max;
  spec.dt = opt.t_max / static_cast<double>(opt.steps);
  spec.taps = {{"sx", pauli_subspace_ops().px}};
  NoiseSetup ns;
  ns.fields = {opt.ou, OUParams{0.0, opt.ou.tau}, OUParams{0.0, opt.ou.tau}, OUParams{0.0, opt.ou.tau}};
  ns.layout = L;
  ns.noise_dt = spec.step();

  FidResult out;
  out.series = mc_average(prepare("ramsey", L), Operator::Zero(2, 2), ns, spec, opt.n_traj, opt.seed, opt.workers);
  const auto& t = out.series.times;
  const auto& m = out.series.mean[0];
  const GaussianFit fit = fit_gaussian_decay(t, m, out.series.stderr_[0]);
  out.b_fit = fit.b;
  out.log_amplitude = fit.log_amplitude;
  out.fit_points = fit.points;
  const double level = std::exp(-0.5);
  for (std::size_t k = 1; k < m.size(); ++k) {
    if (m[k] <= level) {
      out.t_half = t[k - 1] + (m[k - 1] - level) / (m[k - 1] - m[k]) * (t[k] - t[k - 1]);
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------- RWA check

RwaCheckResult run_rwa_check(const NVPairParams& p, const DriveParams& d, const RwaCheckOptions& opt) {
  const double t_max = opt.t_max > 0.0 ? opt.t_max : 2.0 * std::numbers::pi / p.a_par1;
  const TensorLayout L = TensorLayout::full();
  const InteractionPicture ip(build_rotating_frame_parts(p, d));
  const Operator h_rwa = build_rwa(p, d).total();

  EvolutionSpec spec;
  spec.frame = Frame::interaction_picture;
  spec.dt = opt.dt;
  spec.t_final = t_max;
  spec.stride = std::max<std::size_t>(1, spec.steps() / std::max<std::size_t>(1, opt.samples));
  spec.taps = {{"tau1x", nuclear_tau_x(1, L)}, {"tau2x", nuclear_tau_x(2, L)}};
  const State psi0 = prepare("zz-start", L);
  const Generator gen = [&ip](double t) { return ip(t); };

  RwaCheckResult out;
  out.max_bohr_frequency = ip.max_bohr_frequency();
  out.exact = rk4_evolve(psi0, gen, spec, out.max_bohr_frequency);
  EvolutionSpec rspec = spec;
  rspec.frame = Frame::rwa81;
  out.rwa = evolve_const(psi0, h_rwa, rspec);
  for (std::size_t j = 0; j < out.exact.mean.size(); ++j)
    for (std::size_t k = 0; k < out.exact.times.size(); ++k)
      out.max_deviation = std::max(out.max_deviation, std::abs(out.exact.mean[j][k] - out.rwa.mean[j][k]));
  if (opt.order_check) out.order = rk4_order_check(psi0, gen, spec, out.max_bohr_frequency);
  return out;
}

// ---------------------------------------------------------------- noise sweep

std::vector<SweepRow> run_noise_sweep(const NVPairParams& p, const DriveParams& d, const SweepOptions& opt) {
  if (opt.b_list.empty()) throw ConfigError("noise sweep needs a nonempty b_list");
  const double t_f = zz_gate_time(p, d);
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < opt.b_list.size(); ++i) {
    const double b = opt.b_list[i];
    if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("noise sweep: b values must be finite and non-negative");
    ZzOptions zo;
    zo.t_final = t_f;
    zo.points = 1;
    zo.half_steps = opt.half_steps;
    zo.noise = EchoNoise{echo_noise(b, opt.tau, opt.nuclear_ratio), opt.n_traj, derive_seed(opt.seed, i), opt.workers};
    const ObservableSeries r = run_zz_echo(p, d, zo);
    const std::size_t c = r.index_of("contrast");
    rows.push_back({b, 1.0 / b, r.mean[c].back(), r.stderr_[c].back()});
  }
  return rows;
}

}  // namespace nvsim
