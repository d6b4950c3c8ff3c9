// Parallel vs serial Monte-Carlo ensemble on the 16-dim echo model.
#include <benchmark/benchmark.h>

#include "nvsim/model.hpp"
#include "nvsim/sequence.hpp"

namespace {

struct Problem {
  nvsim::State psi0;
  nvsim::Operator h;
  nvsim::NoiseSetup noise;
  nvsim::EvolutionSpec spec;
};

const Problem& problem() {
  static const Problem p = [] {
    const nvsim::NVPairParams m;
    const nvsim::DriveParams d = nvsim::DriveParams::resonant(m);
    Problem out;
    out.h = nvsim::build_two_level(m, d).total();
    out.noise = nvsim::echo_noise(5e3, 10e-3);
    nvsim::Schedule s;
    s.initial = "zz-start";
    s.layout = nvsim::layout_of(nvsim::Frame::two_level16);
    s.t_final = 1e-3;
    s.taps = {{"tau1x", nvsim::nuclear_tau_x(1, s.layout)}};
    out.psi0 = nvsim::prepare(s.initial, s.layout);
    out.spec = s.evolution_spec(nvsim::Frame::two_level16, 1e-5, 10);
    out.noise.noise_dt = out.spec.step();
    return out;
  }();
  return p;
}

void BM_mc_parallel(benchmark::State& state) {
  const Problem& p = problem();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        nvsim::mc_average(p.psi0, p.h, p.noise, p.spec, static_cast<std::size_t>(state.range(0)), 7));
  }
}

void BM_mc_serial(benchmark::State& state) {
  const Problem& p = problem();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        nvsim::mc_average_serial(p.psi0, p.h, p.noise, p.spec, static_cast<std::size_t>(state.range(0)), 7));
  }
}

}  // namespace

BENCHMARK(BM_mc_parallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mc_serial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
