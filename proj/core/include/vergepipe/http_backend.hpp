#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

#include "vergepipe/download.hpp"
#include "vergepipe/metadata.hpp"

namespace vergepipe {

/// Endpoint settings for the live street-view service. `base_url` is
/// scheme://host[:port]; tests point it at a local server.
struct HttpEndpoint {
  std::string base_url = "https://maps.googleapis.com";
  std::string metadata_path = "/maps/api/streetview/metadata";
  std::string image_path = "/maps/api/streetview";
  int search_radius_m = 50;
  std::chrono::seconds timeout{30};
};

/// Decodes a metadata response. OK gives a record; ZERO_RESULTS/NOT_FOUND
/// give nullopt; denial or quota statuses throw an Auth FetchError naming the
/// credential variable; anything unparseable throws Malformed.
std::optional<PanoramaRecord> parse_metadata_response(int http_status, std::string_view body);

/// Classifies a non-200 HTTP status into a FetchError.
FetchError error_for_status(int http_status, std::string_view body);

class HttpMetadataBackend final : public MetadataBackend {
 public:
  explicit HttpMetadataBackend(HttpEndpoint endpoint = {});
  std::optional<PanoramaRecord> lookup(const GeoPoint& point, const std::string& credential) override;

 private:
  HttpEndpoint endpoint_;
};

class HttpImageBackend final : public ImageBackend {
 public:
  explicit HttpImageBackend(HttpEndpoint endpoint = {});
  std::string fetch(const ImageRequest& request, const std::string& credential) override;

 private:
  HttpEndpoint endpoint_;
};

}  // namespace vergepipe
