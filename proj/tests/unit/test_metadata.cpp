#include <gtest/gtest.h>

#include <fstream>

#include "oracles.hpp"
#include "temp_dir.hpp"
#include "vergepipe/metadata.hpp"
#include "vergepipe/pano.hpp"

using namespace vergepipe;
using testing_support::TempDir;

namespace {

RetryPolicy instant_retry() {
  RetryPolicy p;
  p.base_delay = std::chrono::milliseconds{0};
  return p;
}

PanoramaRecord p001() {
  return {"P001", destination_point({53.3, -0.2}, Bearing(63.0), 12.3), {2009, 7}, {"P002"}};
}

}  // namespace

TEST(MockBackend, NearestWithinRadius) {
  MockMetadataBackend backend({p001()});
  const auto hit = backend.lookup({53.3, -0.2}, "");
  ASSERT_TRUE(hit);
  EXPECT_EQ(*hit, p001());
  EXPECT_FALSE(backend.lookup({53.4, -0.2}, ""));
  EXPECT_EQ(backend.calls(), 2u);
}

TEST(MockBackend, FixtureDistanceFeedsSnapResult) {
  MockMetadataBackend backend({p001()});
  const GeoPoint query{53.3, -0.2};
  auto hit = backend.lookup(query, "");
  ASSERT_TRUE(hit);
  SurveySection s;
  s.points.push_back({query, {{CompassOctant::N, 1}}});
  const auto snaps = snap_section(s, PanoIndex({*hit}));
  ASSERT_TRUE(snaps[0].accepted);
  const double ref = oracle::distance_m(query.lat, query.lon, hit->location.lat, hit->location.lon);
  EXPECT_NEAR(snaps[0].distance_m, ref, 1e-9);
  EXPECT_NEAR(snaps[0].distance_m, 12.3, 1e-6);
}

TEST(MockBackend, ReadsJsonLines) {
  const auto backend = MockMetadataBackend::from_jsonl(
      "{\"pano_id\":\"A\",\"lat\":53.0,\"lon\":-0.4,\"year\":2021,\"month\":6,\"neighbours\":[\"B\"]}\n\n"
      "{\"pano_id\":\"B\",\"lat\":53.0001,\"lon\":-0.4,\"year\":2021,\"month\":6}\n");
  EXPECT_EQ(backend->lookup({53.0001, -0.4}, "")->pano_id, "B");
  EXPECT_THROW(MockMetadataBackend::from_jsonl("{\"pano_id\":\"A\"}\n"), std::runtime_error);
}

TEST(MetadataCache, KeysRoundToSixDecimals) {
  EXPECT_EQ(MetadataCache::key_for({53.1234564, -0.0000004}), "53.123456,-0.000000");
  EXPECT_EQ(MetadataCache::key_for({53.1234566, 1.5}), "53.123457,1.500000");
  EXPECT_EQ(MetadataCache::tile_file_for({53.1234564, -0.2}), MetadataCache::tile_file_for({53.1234561, -0.2}));
}

TEST(MetadataCache, PersistsPositiveAndNegativeAnswers) {
  TempDir dir;
  {
    MetadataCache cache(dir.path());
    EXPECT_FALSE(cache.get({53.3, -0.2}));
    cache.put({53.3, -0.2}, p001());
    cache.put({10.0, 10.0}, std::nullopt);
  }
  MetadataCache reopened(dir.path());
  const auto pos = reopened.get({53.3000001, -0.2});
  ASSERT_TRUE(pos);
  EXPECT_EQ(*pos, p001());
  const auto neg = reopened.get({10.0, 10.0});
  ASSERT_TRUE(neg);
  EXPECT_FALSE(neg->has_value());
}

TEST(MetadataCache, NegativeEntriesExpireAfterTtl) {
  TempDir dir;
  const GeoPoint gap{10.0, 10.0};
  {
    std::ofstream out(dir.path() / MetadataCache::tile_file_for(gap));
    out << R"({"key":")" << MetadataCache::key_for(gap) << R"(","pano":null,"fetched_at":1000})" << "\n";
    out << "{\"key\":\"torn";  // interrupted write
  }
  MetadataCache forever(dir.path());
  EXPECT_TRUE(forever.get(gap));
  MetadataCache hourly(dir.path(), std::chrono::seconds{3600});
  EXPECT_FALSE(hourly.get(gap));
}

TEST(MetadataClient, CacheHitMakesNoNetworkCall) {
  TempDir dir;
  MockMetadataBackend backend({p001()});
  MetadataCache cache(dir.path());
  MetadataClient client(backend, &cache, nullptr);
  const auto first = fetch_metadata({53.3, -0.2}, client);
  const auto second = fetch_metadata({53.3, -0.2}, client);
  EXPECT_EQ(first, second);
  EXPECT_EQ(backend.calls(), 1u);
  EXPECT_EQ(client.network_calls(), 1u);
  EXPECT_EQ(client.cache_hits(), 1u);

  // A fresh client over the same directory is served from disk.
  MockMetadataBackend cold({});
  MetadataCache cache2(dir.path());
  MetadataClient client2(cold, &cache2, nullptr);
  EXPECT_EQ(fetch_metadata({53.3, -0.2}, client2), first);
  EXPECT_EQ(cold.calls(), 0u);
}

TEST(MetadataClient, NoCoverageCachedAsNegative) {
  TempDir dir;
  MockMetadataBackend backend({});
  MetadataCache cache(dir.path());
  MetadataClient client(backend, &cache, nullptr);
  EXPECT_FALSE(client.fetch({1.0, 1.0}));
  EXPECT_FALSE(client.fetch({1.0, 1.0}));
  EXPECT_EQ(backend.calls(), 1u);
  const auto entry = cache.get({1.0, 1.0});
  ASSERT_TRUE(entry);
  EXPECT_FALSE(*entry);
}

TEST(MetadataClient, TransientFailuresRetriedFiveTimesAtMost) {
  MockMetadataBackend backend({p001()});
  MetadataClientOptions opt;
  opt.retry = instant_retry();
  MetadataClient client(backend, nullptr, nullptr, opt);
  backend.fail_next(4);
  EXPECT_TRUE(client.fetch({53.3, -0.2}));
  EXPECT_EQ(backend.calls(), 5u);
  backend.fail_next(5);
  EXPECT_THROW(client.fetch({53.3, -0.2}), FetchError);
  EXPECT_EQ(backend.calls(), 10u);
}

TEST(MetadataClient, AuthFailureIsTerminalAndNamesCredential) {
  MockMetadataBackend backend({p001()});
  MetadataClientOptions opt;
  opt.retry = instant_retry();
  MetadataClient client(backend, nullptr, nullptr, opt);
  backend.fail_next(1, FetchError::Kind::Auth);
  try {
    client.fetch({53.3, -0.2});
    FAIL();
  } catch (const FetchError& e) {
    EXPECT_EQ(e.kind(), FetchError::Kind::Auth);
    EXPECT_NE(std::string(e.what()).find("SV_API_KEY"), std::string::npos);
  }
  EXPECT_EQ(backend.calls(), 1u);
}

TEST(MetadataClient, FetchAllPreservesOrderAcrossWorkers) {
  std::vector<PanoramaRecord> records;
  std::vector<GeoPoint> points;
  for (int i = 0; i < 50; ++i) {
    const GeoPoint at{53.0 + 0.001 * i, -0.4};
    records.push_back({"pano" + std::to_string(i), at, {2020, 1}, {}});
    points.push_back(at);
  }
  points.push_back({0.0, 0.0});
  MockMetadataBackend backend(records);
  MetadataClientOptions opt;
  opt.workers = 4;
  MetadataClient client(backend, nullptr, nullptr, opt);
  const auto got = client.fetch_all(points);
  ASSERT_EQ(got.size(), points.size());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(got[static_cast<std::size_t>(i)]->pano_id, "pano" + std::to_string(i));
  EXPECT_FALSE(got.back());
}

TEST(MetadataClient, FetchAllStopsOnTerminalError) {
  std::vector<GeoPoint> points(40, GeoPoint{53.3, -0.2});
  MockMetadataBackend backend({p001()});
  MetadataClientOptions opt;
  opt.workers = 3;
  opt.retry = instant_retry();
  MetadataClient client(backend, nullptr, nullptr, opt);
  backend.fail_next(1, FetchError::Kind::Auth);
  EXPECT_THROW(client.fetch_all(points), FetchError);
  EXPECT_LT(backend.calls(), 40u);
}
