#include <benchmark/benchmark.h>

#include "vergepipe/pano.hpp"
#include "vergepipe/synthetic.hpp"

using namespace vergepipe;

namespace {

// Snapping a section whose road is state.range(0) metres long.
void BM_SnapStraightRoad(benchmark::State& state) {
  synthetic::RoadSpec spec;
  spec.length_m = static_cast<double>(state.range(0));
  spec.scores = {{CompassOctant::E, 6}};
  const auto road = synthetic::straight_road(spec);
  const PanoIndex index(road.panoramas);
  for (auto _ : state) benchmark::DoNotOptimize(snap_section(road.section, index));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(road.section.points.size()));
}
BENCHMARK(BM_SnapStraightRoad)->Arg(300)->Arg(3000)->Arg(30000);

void BM_IndexBuild(benchmark::State& state) {
  synthetic::RoadSpec spec;
  spec.length_m = static_cast<double>(state.range(0));
  const auto road = synthetic::straight_road(spec);
  for (auto _ : state) benchmark::DoNotOptimize(PanoIndex(road.panoramas));
}
BENCHMARK(BM_IndexBuild)->Arg(3000)->Arg(30000);

}  // namespace
