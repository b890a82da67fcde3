#include "popshift/hotspot.hpp"
#include "popshift/reference.hpp"
#include "popshift/synth.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

using namespace popshift;

namespace {

struct Fixture {
  SpaceTimeCube z;
  Neighborhood nb;
  std::vector<Section> sections;
  std::vector<double> x0;
  std::vector<std::uint8_t> p0;
};

const Fixture& fixture()
{
  static const Fixture f = [] {
    const ScenarioConfig sc = default_scenario(7);
    const Scenario s = generate(sc);
    SpaceTimeCube z = build_cube(s.slices, CubeVariable::z_score);
    Neighborhood nb = build_neighborhood(sc.grid, NeighborScheme{});
    std::vector<Section> sections = section_by_events(z, sc.events).sections;
    std::vector<double> x0(z.cell_count());
    std::vector<std::uint8_t> p0(z.cell_count());
    for (std::size_t i = 0; i < z.cell_count(); ++i) {
      x0[i] = z.value(i, 0);
      p0[i] = z.present(i, 0);
    }
    return Fixture{std::move(z), std::move(nb), std::move(sections), std::move(x0), std::move(p0)};
  }();
  return f;
}

void BM_gi_star_serial(benchmark::State& state)
{
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(reference::gi_star(f.x0, f.p0, f.nb));
}

void BM_gi_star_omp(benchmark::State& state)
{
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(gi_star(f.x0, f.p0, f.nb));
}

void BM_gi_star_cube_serial(benchmark::State& state)
{
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(reference::gi_star_cube(f.z, f.nb));
}

void BM_gi_star_cube_omp(benchmark::State& state)
{
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(gi_star_cube(f.z, f.nb));
}

void BM_section_trends_serial(benchmark::State& state)
{
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(reference::cell_section_trends(f.z, f.sections));
}

void BM_section_trends_omp(benchmark::State& state)
{
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(cell_section_trends(f.z, f.sections));
}

} // namespace

BENCHMARK(BM_gi_star_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gi_star_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gi_star_cube_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gi_star_cube_omp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_section_trends_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_section_trends_omp)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv)
{
  benchmark::Initialize(&argc, argv);
  benchmark::AddCustomContext("omp_max_threads", std::to_string(omp_get_max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
