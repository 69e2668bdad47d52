#include <benchmark/benchmark.h>

#include <vector>

#include "spindiff/crystal.hpp"
#include "spindiff/dipolar.hpp"
#include "spindiff/linewidth.hpp"
#include "spindiff/oracle.hpp"
#include "spindiff/particle.hpp"

using namespace spindiff;

namespace {

const CubicStructure kDiamond(LatticeKind::Diamond, 5.431);

void BM_Occupy(benchmark::State& state) {
  const int extent = static_cast<int>(state.range(0));
  const auto positions = build_lattice(kDiamond, extent);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto lat = occupy(kDiamond, extent, positions, 0.047, seed++);
    benchmark::DoNotOptimize(lat.sites.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(positions.size()));
}
BENCHMARK(BM_Occupy)->Arg(10)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_CumulativeProfile(benchmark::State& state) {
  const auto lat = occupy(kDiamond, static_cast<int>(state.range(0)), 0.047, 1);
  for (auto _ : state) {
    auto p = cumulative_profile(lat, WeightKind::DSquaredRSquared, {0, 0, 1});
    benchmark::DoNotOptimize(p.data());
  }
}
BENCHMARK(BM_CumulativeProfile)->Arg(10)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_PowderLinewidth(benchmark::State& state) {
  LinewidthRequest r;
  r.abundance = 0.047;
  r.ensemble_size = static_cast<std::size_t>(state.range(0));
  r.n_orientations = 144;
  r.cutoff = 12.37;
  for (auto _ : state) benchmark::DoNotOptimize(powder_linewidths(r).fwhm_zq);
}
BENCHMARK(BM_PowderLinewidth)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_ExactMoments(benchmark::State& state) {
  const auto systems = random_systems(16, static_cast<std::size_t>(state.range(0)), 8.0, 2.35, 1);
  for (auto _ : state) {
    for (const auto& s : systems) benchmark::DoNotOptimize(exact_transition_moments(s).m2_zq);
  }
}
BENCHMARK(BM_ExactMoments)->Arg(3)->Arg(4);

void BM_ParticleDecay(benchmark::State& state) {
  ParticleGeometry g;
  g.n_elements = static_cast<std::size_t>(state.range(0));
  std::vector<double> t(73);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 300.0 * i;
  SolverOptions o;
  o.scheme = state.range(1) ? TimeScheme::BackwardEuler : TimeScheme::Spectral;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_decay(g, 3.6, 3.0, 0.3, 1.0, t, o).trace.values.back());
}
BENCHMARK(BM_ParticleDecay)->Args({1000, 0})->Args({1000, 1})->Args({2000, 0})->Unit(benchmark::kMillisecond);

void BM_FitT1(benchmark::State& state) {
  ParticleGeometry g;
  std::vector<double> t(37);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 600.0 * i;
  const auto truth = simulate_decay(g, 3.6, 3.0, 0.3, 1.0, t).trace;
  GridSpec grid;
  grid.t1_in.count = grid.t1_out.count = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_t1(truth, g, 3.6, grid).residue);
}
BENCHMARK(BM_FitT1)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
