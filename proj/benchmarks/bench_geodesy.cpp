#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "vergepipe/geodesy.hpp"

using namespace vergepipe;

namespace {

std::vector<GeoPoint> random_points(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lat(49.0, 59.0);
  std::uniform_real_distribution<double> lon(-6.0, 2.0);
  std::vector<GeoPoint> out(n);
  for (auto& p : out) p = {lat(rng), lon(rng)};
  return out;
}

void BM_Haversine(benchmark::State& state) {
  const auto pts = random_points(1024);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(haversine_distance(pts[i & 1023], pts[(i + 1) & 1023]));
    ++i;
  }
}
BENCHMARK(BM_Haversine);

void BM_ForwardBearing(benchmark::State& state) {
  const auto pts = random_points(1024);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_bearing(pts[i & 1023], pts[(i + 1) & 1023]));
    ++i;
  }
}
BENCHMARK(BM_ForwardBearing);

void BM_OctantOf(benchmark::State& state) {
  double deg = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(octant_of(Bearing(deg)));
    deg += 0.37;
    if (deg >= 360.0) deg -= 360.0;
  }
}
BENCHMARK(BM_OctantOf);

}  // namespace
