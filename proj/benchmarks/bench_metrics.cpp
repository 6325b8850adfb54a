#include <benchmark/benchmark.h>

#include <random>

#include "vergepipe/metrics.hpp"
#include "vergepipe/synthetic.hpp"

using namespace vergepipe;

namespace {

void BM_Report(benchmark::State& state) {
  const auto cm = ConfusionMatrix::from_rows(synthetic::table5_confusion());
  for (auto _ : state) benchmark::DoNotOptimize(report(cm));
}
BENCHMARK(BM_Report);

void BM_ConfusionFromLabels(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> lab(1, 4);
  std::vector<int> yt(static_cast<std::size_t>(state.range(0)));
  std::vector<int> yp(yt.size());
  for (auto& v : yt) v = lab(rng);
  for (auto& v : yp) v = lab(rng);
  for (auto _ : state) benchmark::DoNotOptimize(confusion(yt, yp, 4));
}
BENCHMARK(BM_ConfusionFromLabels)->Arg(1189)->Arg(100000);

void BM_PrPoints(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> lab(1, 4);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<int> y(n);
  std::vector<std::vector<double>> scores(n, std::vector<double>(4));
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = lab(rng);
    for (auto& s : scores[i]) s = score(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(pr_points(y, scores));
}
BENCHMARK(BM_PrPoints)->Arg(1189)->Arg(20000);

void BM_ExportText(benchmark::State& state) {
  const auto r = report(ConfusionMatrix::from_rows(synthetic::table5_confusion()));
  for (auto _ : state) benchmark::DoNotOptimize(export_report(r, ReportFormat::Text));
}
BENCHMARK(BM_ExportText);

}  // namespace
