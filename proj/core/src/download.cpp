#include "vergepipe/download.hpp"

#include <fstream>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "vergepipe/hashing.hpp"

namespace vergepipe {
namespace {

struct Outcome {
  enum class Kind { Skipped, Cached, Fetched, Failed } kind = Kind::Skipped;
  std::string relpath;
  std::string error;
};

void write_atomically(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += fmt::format(".tmp{}", std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string MockImageBackend::image_bytes(std::string_view identity_key) {
  const std::string digest = sha256_hex(identity_key);
  std::string out = "P6\n16 16\n255\n";
  for (int px = 0; px < 16 * 16; ++px) {
    for (int ch = 0; ch < 3; ++ch) {
      const auto hex = digest.substr(static_cast<std::size_t>((px * 3 + ch) % 32) * 2, 2);
      out.push_back(static_cast<char>(std::stoi(hex, nullptr, 16)));
    }
  }
  return out;
}

void MockImageBackend::fail_keys(std::set<std::string> keys, FetchError::Kind kind) {
  std::lock_guard lock(mutex_);
  failing_ = std::move(keys);
  failure_kind_ = kind;
}

std::string MockImageBackend::fetch(const ImageRequest& request, const std::string& /*credential*/) {
  ++calls_;
  const auto key = identity_key(request);
  {
    std::lock_guard lock(mutex_);
    if (failing_.contains(key)) throw FetchError(failure_kind_, "mock: injected image failure for " + key);
  }
  return image_bytes(key);
}

ImageRequest request_for(const Sample& sample) {
  ImageRequest r;
  r.pano_id = sample.pano_id;
  r.heading = sample.heading;
  r.camera = sample.camera;
  r.label = sample.label;
  r.raw_score = sample.raw_score;
  r.octant = sample.octant;
  r.section_id = sample.section_id;
  r.side = sample.side;
  return r;
}

std::string image_relpath(std::string_view identity_key) {
  const auto h = sha256_hex(identity_key);
  return fmt::format("images/{}/{}.img", h.substr(0, 2), h);
}

DownloadSummary download_images(DatasetManifest& manifest, ImageBackend& backend,
                                std::shared_ptr<RateLimiter> limiter, const DownloadOptions& options) {
  if (!limiter) limiter = std::make_shared<RateLimiter>(0.0);
  std::vector<Outcome> outcomes(manifest.samples.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr terminal;
  std::mutex terminal_mutex;

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= manifest.samples.size()) return;
      const Sample& s = manifest.samples[i];
      if (s.status != SampleStatus::Active) continue;
      Outcome& out = outcomes[i];
      out.relpath = image_relpath(s.identity_key);
      const auto full = options.output_dir / out.relpath;
      if (std::filesystem::exists(full)) {
        out.kind = Outcome::Kind::Cached;
        continue;
      }
      try {
        const auto request = request_for(s);
        auto bytes = with_retry(options.retry, [&] {
          limiter->acquire();
          return backend.fetch(request, options.credential);
        });
        write_atomically(full, bytes);
        out.kind = Outcome::Kind::Fetched;
      } catch (const FetchError& e) {
        out.kind = Outcome::Kind::Failed;
        out.error = e.what();
        if (!e.retryable() && e.kind() == FetchError::Kind::Auth) {
          std::lock_guard lock(terminal_mutex);
          if (!terminal) terminal = std::current_exception();
          stop = true;
        }
      } catch (const std::exception& e) {
        out.kind = Outcome::Kind::Failed;
        out.error = e.what();
      }
    }
  };

  const int workers = std::max(1, options.workers);
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  DownloadSummary summary;
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    Sample& s = manifest.samples[i];
    const Outcome& o = outcomes[i];
    switch (o.kind) {
      case Outcome::Kind::Skipped:
        break;
      case Outcome::Kind::Cached:
        ++summary.cached;
        s.fetch = FetchStatus::Fetched;
        s.image_path = o.relpath;
        s.fetch_error.clear();
        break;
      case Outcome::Kind::Fetched:
        ++summary.fetched;
        s.fetch = FetchStatus::Fetched;
        s.image_path = o.relpath;
        s.fetch_error.clear();
        break;
      case Outcome::Kind::Failed:
        ++summary.failed;
        s.fetch = FetchStatus::Failed;
        s.image_path.clear();
        s.fetch_error = o.error;
        break;
    }
  }
  if (terminal) std::rethrow_exception(terminal);
  return summary;
}

}  // namespace vergepipe
