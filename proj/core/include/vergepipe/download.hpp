#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <set>
#include <string>

#include "vergepipe/curation.hpp"
#include "vergepipe/planner.hpp"
#include "vergepipe/throttle.hpp"

namespace vergepipe {

/// Static street-view image source. Returns the encoded image bytes or
/// throws FetchError.
class ImageBackend {
 public:
  virtual ~ImageBackend() = default;
  virtual std::string fetch(const ImageRequest& request, const std::string& credential) = 0;
};

/// Serves small deterministic PPM images derived from the identity key.
class MockImageBackend final : public ImageBackend {
 public:
  std::string fetch(const ImageRequest& request, const std::string& credential) override;

  /// Requests whose identity key is listed always fail with `kind`.
  void fail_keys(std::set<std::string> keys, FetchError::Kind kind = FetchError::Kind::Transient);
  std::size_t calls() const { return calls_.load(); }

  static std::string image_bytes(std::string_view identity_key);

 private:
  std::atomic<std::size_t> calls_{0};
  std::mutex mutex_;
  std::set<std::string> failing_;
  FetchError::Kind failure_kind_ = FetchError::Kind::Transient;
};

/// Rebuilds the image request recorded in a manifest sample.
ImageRequest request_for(const Sample& sample);

/// Content-addressed location (relative to the output directory) for an
/// identity key: images/<h0h1>/<sha256>.img
std::string image_relpath(std::string_view identity_key);

struct DownloadOptions {
  std::filesystem::path output_dir;
  std::string credential;
  RetryPolicy retry;
  int workers = 4;
};

struct DownloadSummary {
  std::size_t fetched = 0;
  std::size_t cached = 0;
  std::size_t failed = 0;
};

/// Materializes every Active sample's image under the output directory.
/// Files already present are reused without a request. Per-image failures
/// mark the sample Failed and the batch carries on; an auth/quota failure
/// stops the batch and is rethrown after the manifest is updated with what
/// completed.
DownloadSummary download_images(DatasetManifest& manifest, ImageBackend& backend,
                                std::shared_ptr<RateLimiter> limiter, const DownloadOptions& options);

}  // namespace vergepipe
