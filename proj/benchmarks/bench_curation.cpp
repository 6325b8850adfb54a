#include <benchmark/benchmark.h>

#include "vergepipe/curation.hpp"
#include "vergepipe/synthetic.hpp"

using namespace vergepipe;

namespace {

DatasetManifest paper_scale_manifest() {
  const auto fx = synthetic::curation_fixture(5993, 44, 889, 0);
  return build_manifest(fx.plans, ScoreScheme::FourClass);
}

void BM_Dedup(benchmark::State& state) {
  const auto m = paper_scale_manifest();
  for (auto _ : state) benchmark::DoNotOptimize(dedup(m));
}
BENCHMARK(BM_Dedup);

void BM_Split(benchmark::State& state) {
  const auto m = dedup(paper_scale_manifest());
  SplitOptions opt;
  opt.group_by_pano = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(split(m, opt));
}
BENCHMARK(BM_Split)->Arg(0)->Arg(1);

void BM_Folds(benchmark::State& state) {
  const auto m = dedup(paper_scale_manifest());
  for (auto _ : state) benchmark::DoNotOptimize(make_folds(m));
}
BENCHMARK(BM_Folds);

}  // namespace
