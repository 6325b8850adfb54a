#include <gtest/gtest.h>

#include <fstream>

#include "temp_dir.hpp"
#include "vergepipe/download.hpp"
#include "vergepipe/hashing.hpp"
#include "vergepipe/io.hpp"
#include "vergepipe/synthetic.hpp"

using namespace vergepipe;
using testing_support::TempDir;

namespace {

DatasetManifest ten_samples() {
  const auto fx = synthetic::curation_fixture(10, 0, 0, 3);
  return build_manifest(fx.plans, ScoreScheme::FourClass);
}

DownloadOptions options_for(const TempDir& dir) {
  DownloadOptions opt;
  opt.output_dir = dir.path();
  opt.credential = "test";
  opt.retry.base_delay = std::chrono::milliseconds{0};
  opt.workers = 3;
  return opt;
}

}  // namespace

TEST(Hashing, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(ImagePath, ContentAddressed) {
  const auto h = sha256_hex("pano|90.00|45|20");
  EXPECT_EQ(image_relpath("pano|90.00|45|20"), "images/" + h.substr(0, 2) + "/" + h + ".img");
}

TEST(RequestFor, RoundTripsPlannedRequest) {
  const auto fx = synthetic::curation_fixture(6, 0, 0, 1);
  const auto m = build_manifest(fx.plans, ScoreScheme::FourClass);
  std::size_t i = 0;
  for (const auto& p : fx.plans) {
    for (const auto& r : p.requests) EXPECT_EQ(request_for(m.samples[i++]), r);
  }
}

TEST(MockImages, DeterministicPpm) {
  const auto a = MockImageBackend::image_bytes("k1");
  EXPECT_EQ(a, MockImageBackend::image_bytes("k1"));
  EXPECT_NE(a, MockImageBackend::image_bytes("k2"));
  EXPECT_EQ(a.rfind("P6\n16 16\n255\n", 0), 0u);
  EXPECT_EQ(a.size(), std::string("P6\n16 16\n255\n").size() + 16 * 16 * 3);
}

TEST(Download, WritesEveryActiveImage) {
  TempDir dir("dl");
  auto m = ten_samples();
  m.samples[0].status = SampleStatus::Purged;
  MockImageBackend backend;
  const auto summary = download_images(m, backend, nullptr, options_for(dir));
  EXPECT_EQ(summary.fetched, 9u);
  EXPECT_EQ(summary.cached, 0u);
  EXPECT_EQ(summary.failed, 0u);
  EXPECT_EQ(backend.calls(), 9u);
  EXPECT_EQ(m.samples[0].fetch, FetchStatus::Pending);
  EXPECT_TRUE(m.samples[0].image_path.empty());
  for (std::size_t i = 1; i < m.samples.size(); ++i) {
    const auto& s = m.samples[i];
    EXPECT_EQ(s.fetch, FetchStatus::Fetched);
    EXPECT_EQ(s.image_path, image_relpath(s.identity_key));
    EXPECT_EQ(read_file(dir.path() / s.image_path), MockImageBackend::image_bytes(s.identity_key));
  }
}

TEST(Download, RerunMakesNoRequests) {
  TempDir dir("dl");
  auto m = ten_samples();
  MockImageBackend first;
  download_images(m, first, nullptr, options_for(dir));
  auto again = ten_samples();
  MockImageBackend second;
  const auto summary = download_images(again, second, nullptr, options_for(dir));
  EXPECT_EQ(second.calls(), 0u);
  EXPECT_EQ(summary.cached, 10u);
  EXPECT_EQ(again, m);
}

TEST(Download, OneFailureLeavesTheRest) {
  TempDir dir("dl");
  auto m = ten_samples();
  MockImageBackend backend;
  backend.fail_keys({m.samples[4].identity_key});
  const auto summary = download_images(m, backend, nullptr, options_for(dir));
  EXPECT_EQ(summary.fetched, 9u);
  EXPECT_EQ(summary.failed, 1u);
  EXPECT_EQ(m.samples[4].fetch, FetchStatus::Failed);
  EXPECT_FALSE(m.samples[4].fetch_error.empty());
  EXPECT_FALSE(std::filesystem::exists(dir.path() / image_relpath(m.samples[4].identity_key)));
  // Nine successes plus five attempts at the failing image.
  EXPECT_EQ(backend.calls(), 14u);

  // Once the image becomes available a rerun only fetches that one.
  MockImageBackend healed;
  const auto retry = download_images(m, healed, nullptr, options_for(dir));
  EXPECT_EQ(healed.calls(), 1u);
  EXPECT_EQ(retry.fetched, 1u);
  EXPECT_EQ(retry.cached, 9u);
  EXPECT_EQ(m.samples[4].fetch, FetchStatus::Fetched);
  EXPECT_TRUE(m.samples[4].fetch_error.empty());
}

TEST(Download, AuthFailureStopsAndRethrows) {
  TempDir dir("dl");
  auto m = ten_samples();
  MockImageBackend backend;
  std::set<std::string> all;
  for (const auto& s : m.samples) all.insert(s.identity_key);
  backend.fail_keys(all, FetchError::Kind::Auth);
  auto opt = options_for(dir);
  opt.workers = 1;
  EXPECT_THROW(download_images(m, backend, nullptr, opt), FetchError);
  EXPECT_EQ(backend.calls(), 1u);
  EXPECT_EQ(m.samples[0].fetch, FetchStatus::Failed);
  EXPECT_EQ(m.samples[1].fetch, FetchStatus::Pending);
}

TEST(Download, StrayFileReusedAsCache) {
  TempDir dir("dl");
  auto m = ten_samples();
  const auto target = dir.path() / image_relpath(m.samples[2].identity_key);
  std::filesystem::create_directories(target.parent_path());
  std::ofstream(target) << "already here";
  MockImageBackend backend;
  const auto summary = download_images(m, backend, nullptr, options_for(dir));
  EXPECT_EQ(summary.cached, 1u);
  EXPECT_EQ(read_file(target), "already here");
}
