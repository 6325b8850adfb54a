#include "vergepipe/http_backend.hpp"

#include <cstdio>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

namespace vergepipe {
namespace {

std::string excerpt(std::string_view body) {
  constexpr std::size_t kMax = 120;
  std::string out(body.substr(0, kMax));
  for (char& c : out) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  if (body.size() > kMax) out += "...";
  return out;
}

FetchError auth_error(std::string_view detail) {
  return FetchError(FetchError::Kind::Auth,
                    fmt::format("street-view service refused the request ({}); check {}", detail,
                                kCredentialEnvVar));
}

std::string get(const HttpEndpoint& endpoint, const std::string& path_and_query) {
  httplib::Client client(endpoint.base_url);
  client.set_connection_timeout(endpoint.timeout);
  client.set_read_timeout(endpoint.timeout);
  client.set_follow_location(true);
  auto res = client.Get(path_and_query);
  if (!res) {
    throw FetchError(FetchError::Kind::Transient,
                     fmt::format("request to {} failed: {}", endpoint.base_url, httplib::to_string(res.error())));
  }
  if (res->status != 200) throw error_for_status(res->status, res->body);
  return res->body;
}

}  // namespace

FetchError error_for_status(int http_status, std::string_view body) {
  if (http_status == 401 || http_status == 403) return auth_error(fmt::format("HTTP {}", http_status));
  if (http_status == 429 || http_status >= 500) {
    return FetchError(FetchError::Kind::Transient, fmt::format("HTTP {}", http_status));
  }
  return FetchError(FetchError::Kind::Malformed,
                    fmt::format("unexpected HTTP {}: {}", http_status, excerpt(body)));
}

std::optional<PanoramaRecord> parse_metadata_response(int http_status, std::string_view body) {
  if (http_status != 200) throw error_for_status(http_status, body);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw FetchError(FetchError::Kind::Malformed, "metadata response is not JSON: " + excerpt(body));
  }
  if (!j.is_object() || !j.contains("status") || !j["status"].is_string()) {
    throw FetchError(FetchError::Kind::Malformed, "metadata response has no status: " + excerpt(body));
  }
  const auto status = j["status"].get<std::string>();
  if (status == "ZERO_RESULTS" || status == "NOT_FOUND") return std::nullopt;
  if (status == "REQUEST_DENIED" || status == "OVER_QUERY_LIMIT") throw auth_error(status);
  if (status == "UNKNOWN_ERROR") throw FetchError(FetchError::Kind::Transient, "metadata service UNKNOWN_ERROR");
  if (status != "OK") {
    throw FetchError(FetchError::Kind::Malformed, "unexpected metadata status " + status + ": " + excerpt(body));
  }
  try {
    PanoramaRecord rec;
    rec.pano_id = j.at("pano_id").get<std::string>();
    rec.location = {j.at("location").at("lat").get<double>(), j.at("location").at("lng").get<double>()};
    // "YYYY-MM"; some panoramas carry no date at all.
    if (j.contains("date") && j["date"].is_string()) {
      const auto date = j["date"].get<std::string>();
      int year = 0;
      int month = 1;
      if (std::sscanf(date.c_str(), "%d-%d", &year, &month) < 1 || month < 1 || month > 12) {
        throw FetchError(FetchError::Kind::Malformed, "unparseable capture date '" + date + "'");
      }
      rec.capture_date = {year, month};
    }
    if (rec.pano_id.empty()) throw FetchError(FetchError::Kind::Malformed, "empty pano_id");
    return rec;
  } catch (const nlohmann::json::exception&) {
    throw FetchError(FetchError::Kind::Malformed, "metadata response missing fields: " + excerpt(body));
  }
}

HttpMetadataBackend::HttpMetadataBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::optional<PanoramaRecord> HttpMetadataBackend::lookup(const GeoPoint& point, const std::string& credential) {
  if (credential.empty()) throw auth_error("no API key");
  std::string query = fmt::format("{}?location={:.6f},{:.6f}&radius={}&source=outdoor", endpoint_.metadata_path,
                                  point.lat, point.lon, endpoint_.search_radius_m);
  query += "&key=" + httplib::detail::encode_query_param(credential);
  return parse_metadata_response(200, get(endpoint_, query));
}

HttpImageBackend::HttpImageBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::string HttpImageBackend::fetch(const ImageRequest& request, const std::string& credential) {
  if (credential.empty()) throw auth_error("no API key");
  auto body = get(endpoint_, endpoint_.image_path + "?" + image_query(request, credential));
  if (body.empty()) throw FetchError(FetchError::Kind::Malformed, "empty image body");
  return body;
}

}  // namespace vergepipe
