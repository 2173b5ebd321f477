#include <benchmark/benchmark.h>

#include <cmath>

#include "nullcollapse/bondi.hpp"
#include "nullcollapse/diagnostics.hpp"
#include "nullcollapse/exterior.hpp"
#include "nullcollapse/initial_data.hpp"

using namespace nullcollapse;

namespace {

BVFunction pulse() { return gaussian_pulse(Domain::r_half_line, 0.3, 0.5, 0.1, 1.0, 4096); }

bondi::RunConfig config(int n, double u_max) {
  bondi::RunConfig c;
  c.resolution = n;
  c.u_max = u_max;
  return c;
}

void BM_Hypersurface(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto slice = bondi::initial_slice(pulse(), config(n, 0.1));
  const bondi::HypersurfaceOptions opts;
  for (auto _ : state) {
    auto status = bondi::integrate_hypersurface(slice, opts);
    benchmark::DoNotOptimize(status);
    benchmark::DoNotOptimize(slice.zeta.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_Hypersurface)->RangeMultiplier(2)->Range(256, 8192)->Complexity(benchmark::oN);

// Whole evolution; steps scale with n, so cost is about n^2.
void BM_BondiRun(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto data = pulse();
  const auto cfg = config(n, 0.5);
  for (auto _ : state) {
    auto res = bondi::run(data, cfg);
    benchmark::DoNotOptimize(res.archive.size());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_BondiRun)->RangeMultiplier(2)->Range(128, 1024)->Unit(benchmark::kMillisecond)->Complexity(benchmark::oNSquared);

void BM_BoundaryEvolve(benchmark::State& state) {
  const double t_end = static_cast<double>(state.range(0));
  auto zeta = [](double t) { return -0.05 * std::exp(-t); };
  for (auto _ : state) {
    auto tr = exterior::boundary_evolve(1.05, 0.2, zeta, t_end);
    benchmark::DoNotOptimize(tr.t.size());
  }
}
BENCHMARK(BM_BoundaryEvolve)->Arg(2)->Arg(10)->Arg(40);

void BM_Classify(benchmark::State& state) {
  // I -> 1 with gamma = t; theta0(0) = 2 means the limit is not hit
  auto tr = exterior::manufactured_trace([](double t) { return t; }, [](double) { return 1.0; },
                                         [](double t) { return 1.0 - std::exp(-t); },
                                         [](double t) { return std::exp(-t); }, 2.0, 30.0, 1e-3);
  for (auto _ : state) {
    auto v = diagnostics::classify(tr, 2.0);
    benchmark::DoNotOptimize(v.case_id);
  }
}
BENCHMARK(BM_Classify);

}  // namespace

BENCHMARK_MAIN();
