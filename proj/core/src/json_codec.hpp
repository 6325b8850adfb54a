#pragma once

// JSON encodings shared by the on-disk formats. Field names here are the
// file schemas documented in docs/formats.md.

#include <algorithm>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "vergepipe/curation.hpp"
#include "vergepipe/pano.hpp"
#include "vergepipe/planner.hpp"
#include "vergepipe/types.hpp"

namespace vergepipe::detail {

using nlohmann::json;

template <typename T, typename Parse>
T parse_enum(const json& j, const char* field, Parse parse) {
  const auto text = j.at(field).get<std::string>();
  auto v = parse(text);
  if (!v) throw std::invalid_argument(std::string("invalid ") + field + " '" + text + "'");
  return *v;
}

inline VergeSide parse_side(const json& j, const char* field) {
  const auto text = j.at(field).get<std::string>();
  if (text == to_string(VergeSide::Left)) return VergeSide::Left;
  if (text == to_string(VergeSide::Right)) return VergeSide::Right;
  throw std::invalid_argument(std::string("invalid ") + field + " '" + text + "'");
}

inline json to_json(const GeoPoint& p) { return json{{"lat", p.lat}, {"lon", p.lon}}; }

inline GeoPoint point_from_json(const json& j) {
  return {j.at("lat").get<double>(), j.at("lon").get<double>()};
}

inline json to_json(const SurveySection& s) {
  json points = json::array();
  for (const auto& p : s.points) {
    json scores = json::object();
    for (const auto& sc : p.scores) scores[std::string(to_string(sc.octant))] = sc.species_count;
    points.push_back({{"lat", p.location.lat}, {"lon", p.location.lon}, {"scores", scores}});
  }
  return json{{"section_id", s.section_id},
              {"locality", std::string(to_string(s.locality))},
              {"rnr", s.rnr},
              {"points", points}};
}

inline SurveySection section_from_json(const json& j) {
  SurveySection s;
  s.section_id = j.at("section_id").get<std::string>();
  s.locality = parse_enum<Locality>(j, "locality", parse_locality);
  s.rnr = j.value("rnr", false);
  for (const auto& pj : j.at("points")) {
    SurveyPoint p;
    p.location = point_from_json(pj);
    for (const auto& [name, count] : pj.at("scores").items()) {
      auto octant = parse_octant(name);
      if (!octant) throw std::invalid_argument("invalid octant '" + name + "'");
      p.scores.push_back({*octant, count.get<int>()});
    }
    std::sort(p.scores.begin(), p.scores.end(),
              [](const VergeScore& a, const VergeScore& b) { return a.octant < b.octant; });
    s.points.push_back(std::move(p));
  }
  return s;
}

inline json to_json(const PanoramaRecord& p) {
  return json{{"pano_id", p.pano_id},       {"lat", p.location.lat},
              {"lon", p.location.lon},      {"year", p.capture_date.year},
              {"month", p.capture_date.month}, {"neighbours", p.neighbours}};
}

inline PanoramaRecord pano_from_json(const json& j) {
  PanoramaRecord p;
  p.pano_id = j.at("pano_id").get<std::string>();
  p.location = point_from_json(j);
  p.capture_date.year = j.at("year").get<int>();
  p.capture_date.month = j.at("month").get<int>();
  if (j.contains("neighbours")) p.neighbours = j.at("neighbours").get<std::vector<std::string>>();
  return p;
}

inline json to_json(const SnapResult& r) {
  json passed = json::array();
  for (const auto& c : r.passed_over) {
    passed.push_back({{"pano_id", c.pano_id},
                      {"distance_m", c.distance_m},
                      {"reason", std::string(to_string(c.reason))}});
  }
  return json{{"source", to_json(r.source)},
              {"pano", r.pano ? to_json(*r.pano) : json(nullptr)},
              {"distance_m", r.distance_m},
              {"accepted", r.accepted},
              {"reject_reason", r.reject_reason ? json(std::string(to_string(*r.reject_reason)))
                                                : json(nullptr)},
              {"passed_over", passed}};
}

inline SnapRejection parse_rejection(const std::string& text) {
  for (auto r : {SnapRejection::TooFar, SnapRejection::RoadDiscontinuity, SnapRejection::NoCandidates}) {
    if (text == to_string(r)) return r;
  }
  throw std::invalid_argument("invalid snap rejection '" + text + "'");
}

inline SnapResult snap_from_json(const json& j) {
  SnapResult r;
  r.source = point_from_json(j.at("source"));
  if (!j.at("pano").is_null()) r.pano = pano_from_json(j.at("pano"));
  r.distance_m = j.at("distance_m").get<double>();
  r.accepted = j.at("accepted").get<bool>();
  if (!j.at("reject_reason").is_null()) {
    r.reject_reason = parse_rejection(j.at("reject_reason").get<std::string>());
  }
  for (const auto& c : j.at("passed_over")) {
    r.passed_over.push_back({c.at("pano_id").get<std::string>(), c.at("distance_m").get<double>(),
                             parse_rejection(c.at("reason").get<std::string>())});
  }
  return r;
}

inline json to_json(const CameraParams& c) {
  return json{{"fov", c.fov}, {"pitch", c.pitch}, {"width", c.width}, {"height", c.height}};
}

inline CameraParams camera_from_json(const json& j) {
  return {j.at("fov").get<double>(), j.at("pitch").get<double>(), j.at("width").get<int>(),
          j.at("height").get<int>()};
}

inline json to_json(const ImageRequest& r) {
  return json{{"pano_id", r.pano_id},
              {"heading", r.heading.degrees()},
              {"camera", to_json(r.camera)},
              {"label", r.label.ordinal},
              {"scheme", std::string(to_string(r.label.scheme))},
              {"raw_score", r.raw_score},
              {"octant", std::string(to_string(r.octant))},
              {"section_id", r.section_id},
              {"side", std::string(to_string(r.side))}};
}

inline ImageRequest request_from_json(const json& j) {
  ImageRequest r;
  r.pano_id = j.at("pano_id").get<std::string>();
  r.heading = Bearing(j.at("heading").get<double>());
  r.camera = camera_from_json(j.at("camera"));
  r.label = {j.at("label").get<int>(), parse_enum<ScoreScheme>(j, "scheme", parse_scheme)};
  r.raw_score = j.at("raw_score").get<int>();
  r.octant = parse_enum<CompassOctant>(j, "octant", parse_octant);
  r.section_id = j.at("section_id").get<std::string>();
  r.side = parse_side(j, "side");
  return r;
}

inline json to_json(const ExtractionPlan& p) {
  json requests = json::array();
  for (const auto& r : p.requests) requests.push_back(to_json(r));
  json skipped = json::array();
  for (const auto& s : p.skipped) {
    skipped.push_back({{"pano_id", s.pano_id},
                       {"octant", std::string(to_string(s.octant))},
                       {"side", std::string(to_string(s.side))},
                       {"reason", s.reason}});
  }
  return json{{"section_id", p.section_id},
              {"locality", std::string(to_string(p.locality))},
              {"pano", to_json(p.pano)},
              {"requests", requests},
              {"skipped", skipped}};
}

inline ExtractionPlan plan_from_json(const json& j) {
  ExtractionPlan p;
  p.section_id = j.at("section_id").get<std::string>();
  p.locality = parse_enum<Locality>(j, "locality", parse_locality);
  p.pano = pano_from_json(j.at("pano"));
  for (const auto& r : j.at("requests")) p.requests.push_back(request_from_json(r));
  for (const auto& s : j.at("skipped")) {
    p.skipped.push_back({s.at("pano_id").get<std::string>(),
                         parse_enum<CompassOctant>(s, "octant", parse_octant), parse_side(s, "side"),
                         s.at("reason").get<std::string>()});
  }
  return p;
}

template <typename T>
json optional_string(const std::optional<T>& v) {
  return v ? json(std::string(to_string(*v))) : json(nullptr);
}

inline json to_json(const Sample& s) {
  return json{{"sample_id", s.sample_id},
              {"image_path", s.image_path},
              {"identity_key", s.identity_key},
              {"label", s.label.ordinal},
              {"class_index", s.label.ordinal - 1},
              {"class_name", class_name(s.label.ordinal, s.label.scheme)},
              {"raw_score", s.raw_score},
              {"section_id", s.section_id},
              {"locality", std::string(to_string(s.locality))},
              {"pano_id", s.pano_id},
              {"lat", s.location.lat},
              {"lon", s.location.lon},
              {"capture_year", s.capture_date.year},
              {"capture_month", s.capture_date.month},
              {"octant", std::string(to_string(s.octant))},
              {"side", std::string(to_string(s.side))},
              {"heading", s.heading.degrees()},
              {"fov", s.camera.fov},
              {"pitch", s.camera.pitch},
              {"width", s.camera.width},
              {"height", s.camera.height},
              {"status", std::string(to_string(s.status))},
              {"purge_reason", optional_string(s.purge_reason)},
              {"split", optional_string(s.split)},
              {"fold", s.fold ? json(*s.fold) : json(nullptr)},
              {"fetch", std::string(to_string(s.fetch))},
              {"fetch_error", s.fetch_error}};
}

inline Sample sample_from_json(const json& j, ScoreScheme scheme) {
  Sample s;
  s.sample_id = j.at("sample_id").get<std::string>();
  s.image_path = j.at("image_path").get<std::string>();
  s.identity_key = j.at("identity_key").get<std::string>();
  s.label = {j.at("label").get<int>(), scheme};
  if (s.label.ordinal < 1 || s.label.ordinal > class_count(scheme)) {
    throw std::invalid_argument("label out of range for sample " + s.sample_id);
  }
  s.raw_score = j.at("raw_score").get<int>();
  s.section_id = j.at("section_id").get<std::string>();
  s.locality = parse_enum<Locality>(j, "locality", parse_locality);
  s.pano_id = j.at("pano_id").get<std::string>();
  s.location = point_from_json(j);
  s.capture_date = {j.at("capture_year").get<int>(), j.at("capture_month").get<int>()};
  s.octant = parse_enum<CompassOctant>(j, "octant", parse_octant);
  s.side = parse_side(j, "side");
  s.heading = Bearing(j.at("heading").get<double>());
  s.camera = {j.at("fov").get<double>(), j.at("pitch").get<double>(), j.at("width").get<int>(),
              j.at("height").get<int>()};
  s.status = parse_enum<SampleStatus>(j, "status", parse_sample_status);
  if (!j.at("purge_reason").is_null()) {
    s.purge_reason = parse_enum<PurgeReason>(j, "purge_reason", parse_purge_reason);
  }
  if (!j.at("split").is_null()) s.split = parse_enum<Split>(j, "split", parse_split);
  if (!j.at("fold").is_null()) s.fold = j.at("fold").get<int>();
  s.fetch = parse_enum<FetchStatus>(j, "fetch", parse_fetch_status);
  s.fetch_error = j.at("fetch_error").get<std::string>();
  return s;
}

}  // namespace vergepipe::detail
