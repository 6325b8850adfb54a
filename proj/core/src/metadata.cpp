#include "vergepipe/metadata.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "json_codec.hpp"

namespace vergepipe {
namespace {

std::int64_t unix_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

MockMetadataBackend::MockMetadataBackend(std::vector<PanoramaRecord> panoramas, double radius_m)
    : index_(std::move(panoramas)), radius_m_(radius_m) {}

std::unique_ptr<MockMetadataBackend> MockMetadataBackend::from_jsonl(std::string_view text,
                                                                     double radius_m) {
  std::vector<PanoramaRecord> records;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(detail::pano_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(fmt::format("panorama fixture line {}: {}", lineno, e.what()));
    }
  }
  return std::make_unique<MockMetadataBackend>(std::move(records), radius_m);
}

void MockMetadataBackend::fail_next(std::size_t n, FetchError::Kind kind) {
  std::lock_guard lock(mutex_);
  pending_failures_ = n;
  failure_kind_ = kind;
}

std::optional<PanoramaRecord> MockMetadataBackend::lookup(const GeoPoint& point,
                                                          const std::string& /*credential*/) {
  ++calls_;
  {
    std::lock_guard lock(mutex_);
    if (pending_failures_ > 0) {
      --pending_failures_;
      if (failure_kind_ == FetchError::Kind::Auth) {
        throw FetchError(failure_kind_, fmt::format("mock: request denied; check {}", kCredentialEnvVar));
      }
      throw FetchError(failure_kind_, "mock: injected failure");
    }
  }
  auto hits = index_.within(point, radius_m_);
  if (hits.empty()) return std::nullopt;
  return *hits.front().pano;
}

MetadataCache::MetadataCache(std::filesystem::path dir, std::optional<std::chrono::seconds> negative_ttl)
    : dir_(std::move(dir)), negative_ttl_(negative_ttl) {
  std::filesystem::create_directories(dir_);
}

std::string MetadataCache::key_for(const GeoPoint& point) {
  return fmt::format("{:.6f},{:.6f}", point.lat, point.lon);
}

std::string MetadataCache::tile_file_for(const GeoPoint& point) {
  // Tile from the rounded key so a key always lives in exactly one tile.
  const double lat = std::round(point.lat * 1e6) / 1e6;
  const double lon = std::round(point.lon * 1e6) / 1e6;
  const auto row = static_cast<long long>(std::floor(lat / 0.01 + 1e-9));
  const auto col = static_cast<long long>(std::floor(lon / 0.01 + 1e-9));
  return fmt::format("tile_{}_{}.jsonl", row, col);
}

void MetadataCache::load_tile(const std::string& tile) {
  if (!loaded_tiles_.insert(tile).second) return;
  std::ifstream in(dir_ / tile);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      Entry e;
      if (!j.at("pano").is_null()) e.answer = detail::pano_from_json(j.at("pano"));
      e.fetched_at = j.value("fetched_at", std::int64_t{0});
      entries_[j.at("key").get<std::string>()] = std::move(e);
    } catch (const nlohmann::json::exception&) {
      // A torn trailing line from an interrupted run is ignored; the point
      // is simply fetched again.
    }
  }
}

std::optional<std::optional<PanoramaRecord>> MetadataCache::get(const GeoPoint& point) {
  const auto key = key_for(point);
  std::lock_guard lock(mutex_);
  load_tile(tile_file_for(point));
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  if (!it->second.answer && negative_ttl_ &&
      unix_now() - it->second.fetched_at > negative_ttl_->count()) {
    return std::nullopt;
  }
  return it->second.answer;
}

void MetadataCache::put(const GeoPoint& point, const std::optional<PanoramaRecord>& answer) {
  const auto key = key_for(point);
  const auto tile = tile_file_for(point);
  nlohmann::json j;
  j["key"] = key;
  j["pano"] = answer ? detail::to_json(*answer) : nlohmann::json(nullptr);
  j["fetched_at"] = unix_now();

  std::lock_guard lock(mutex_);
  load_tile(tile);
  std::ofstream out(dir_ / tile, std::ios::app);
  out << j.dump() << '\n';
  entries_[key] = Entry{answer, j["fetched_at"].get<std::int64_t>()};
}

MetadataClient::MetadataClient(MetadataBackend& backend, MetadataCache* cache,
                               std::shared_ptr<RateLimiter> limiter, MetadataClientOptions options)
    : backend_(backend),
      cache_(cache),
      limiter_(limiter ? std::move(limiter) : std::make_shared<RateLimiter>(0.0)),
      options_(std::move(options)) {}

std::optional<PanoramaRecord> MetadataClient::fetch(const GeoPoint& point) {
  if (cache_ != nullptr) {
    if (auto hit = cache_->get(point)) {
      ++cache_hits_;
      return *hit;
    }
  }
  auto answer = with_retry(options_.retry, [&] {
    limiter_->acquire();
    ++network_calls_;
    return backend_.lookup(point, options_.credential);
  });
  if (cache_ != nullptr) cache_->put(point, answer);
  return answer;
}

std::vector<std::optional<PanoramaRecord>> MetadataClient::fetch_all(std::span<const GeoPoint> points) {
  std::vector<std::optional<PanoramaRecord>> out(points.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      try {
        out[i] = fetch(points[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        stop = true;
      }
    }
  };

  const int workers = std::max(1, std::min<int>(options_.workers, static_cast<int>(points.size())));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace vergepipe
