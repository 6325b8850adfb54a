#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vergepipe/pano.hpp"
#include "vergepipe/throttle.hpp"

namespace vergepipe {

/// Environment variable holding the street-view API key.
inline constexpr std::string_view kCredentialEnvVar = "SV_API_KEY";

/// Nearest-panorama lookup against a street-view metadata service.
///
/// Implementations return nullopt when the service reports no panorama and
/// throw FetchError for failures.
class MetadataBackend {
 public:
  virtual ~MetadataBackend() = default;
  virtual std::optional<PanoramaRecord> lookup(const GeoPoint& point,
                                               const std::string& credential) = 0;
};

/// File-backed stand-in for the service: answers with the nearest fixture
/// panorama within `radius_m`. Counts calls and can inject failures.
class MockMetadataBackend final : public MetadataBackend {
 public:
  explicit MockMetadataBackend(std::vector<PanoramaRecord> panoramas, double radius_m = 50.0);

  /// One PanoramaRecord JSON object per line (see docs/formats.md).
  static std::unique_ptr<MockMetadataBackend> from_jsonl(std::string_view text,
                                                         double radius_m = 50.0);

  std::optional<PanoramaRecord> lookup(const GeoPoint& point, const std::string& credential) override;

  std::size_t calls() const { return calls_.load(); }
  void fail_next(std::size_t n, FetchError::Kind kind = FetchError::Kind::Transient);

 private:
  PanoIndex index_;
  double radius_m_;
  std::atomic<std::size_t> calls_{0};
  std::mutex mutex_;
  std::size_t pending_failures_ = 0;
  FetchError::Kind failure_kind_ = FetchError::Kind::Transient;
};

/// On-disk metadata cache: one JSON-lines file per 0.01 x 0.01 degree tile,
/// keyed by the query point rounded to six decimals. Negative answers are
/// cached too; they expire after `negative_ttl` when one is given.
class MetadataCache {
 public:
  explicit MetadataCache(std::filesystem::path dir,
                         std::optional<std::chrono::seconds> negative_ttl = std::nullopt);

  /// Outer optional: cache hit. Inner optional: the service's answer.
  std::optional<std::optional<PanoramaRecord>> get(const GeoPoint& point);
  void put(const GeoPoint& point, const std::optional<PanoramaRecord>& answer);

  static std::string key_for(const GeoPoint& point);
  static std::string tile_file_for(const GeoPoint& point);

  const std::filesystem::path& directory() const { return dir_; }

 private:
  struct Entry {
    std::optional<PanoramaRecord> answer;
    std::int64_t fetched_at = 0;  // unix seconds
  };

  void load_tile(const std::string& tile);

  std::filesystem::path dir_;
  std::optional<std::chrono::seconds> negative_ttl_;
  std::mutex mutex_;
  std::set<std::string> loaded_tiles_;
  std::map<std::string, Entry> entries_;
};

struct MetadataClientOptions {
  std::string credential;
  RetryPolicy retry;
  int workers = 4;
};

/// Cache-first metadata fetching with retry, shared pacing and a bounded
/// worker pool.
class MetadataClient {
 public:
  MetadataClient(MetadataBackend& backend, MetadataCache* cache,
                 std::shared_ptr<RateLimiter> limiter, MetadataClientOptions options = {});

  /// Nearest panorama to `point`, or nullopt when the service has none.
  /// Throws FetchError once retries are exhausted or on terminal failures.
  std::optional<PanoramaRecord> fetch(const GeoPoint& point);

  /// Fetches every point, preserving order. The first terminal error stops
  /// the pool and is rethrown.
  std::vector<std::optional<PanoramaRecord>> fetch_all(std::span<const GeoPoint> points);

  std::size_t network_calls() const { return network_calls_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }

 private:
  MetadataBackend& backend_;
  MetadataCache* cache_;
  std::shared_ptr<RateLimiter> limiter_;
  MetadataClientOptions options_;
  std::atomic<std::size_t> network_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

/// Single-point lookup through `client`.
inline std::optional<PanoramaRecord> fetch_metadata(const GeoPoint& point, MetadataClient& client) {
  return client.fetch(point);
}

}  // namespace vergepipe
