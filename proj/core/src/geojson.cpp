#include "vergepipe/geojson.hpp"

#include <json.hpp>

namespace vergepipe {
namespace {

using nlohmann::json;

json point_feature(const GeoPoint& p, json properties) {
  return {{"type", "Feature"},
          {"geometry", {{"type", "Point"}, {"coordinates", {p.lon, p.lat}}}},
          {"properties", std::move(properties)}};
}

std::string collection(json features) {
  return json{{"type", "FeatureCollection"}, {"features", std::move(features)}}.dump() + '\n';
}

}  // namespace

std::string export_geojson(const DatasetManifest& manifest) {
  json features = json::array();
  for (const auto& s : manifest.samples) {
    features.push_back(point_feature(
        s.location, {{"sample_id", s.sample_id},
                     {"label", s.label.ordinal},
                     {"class_name", class_name(s.label.ordinal, s.label.scheme)},
                     {"score", s.raw_score},
                     {"status", std::string(to_string(s.status))},
                     {"split", s.split ? json(std::string(to_string(*s.split))) : json(nullptr)},
                     {"section_id", s.section_id},
                     {"pano_id", s.pano_id},
                     {"octant", std::string(to_string(s.octant))},
                     {"heading", s.heading.degrees()}}));
  }
  return collection(std::move(features));
}

std::string export_geojson(const std::vector<SectionSnaps>& snaps) {
  json features = json::array();
  for (const auto& section : snaps) {
    for (std::size_t i = 0; i < section.snaps.size(); ++i) {
      const auto& r = section.snaps[i];
      features.push_back(point_feature(
          r.source,
          {{"section_id", section.section_id},
           {"point_index", i},
           {"accepted", r.accepted},
           {"pano_id", r.pano ? json(r.pano->pano_id) : json(nullptr)},
           {"distance_m", r.distance_m},
           {"reject_reason", r.reject_reason ? json(std::string(to_string(*r.reject_reason))) : json(nullptr)}}));
    }
  }
  return collection(std::move(features));
}

}  // namespace vergepipe
