#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vergepipe/geodesy.hpp"
#include "vergepipe/pano.hpp"
#include "vergepipe/types.hpp"

namespace vergepipe {

/// Static street-view image parameters.
struct CameraParams {
  double fov = 45.0;
  double pitch = 20.0;
  int width = 640;
  int height = 640;

  friend bool operator==(const CameraParams&, const CameraParams&) = default;
};

/// How the three images per matched verge are aimed.
enum class HeadingPolicy : std::uint8_t {
  OctantCenters,         // matched octant center and its two neighbouring centers
  PerpendicularOffsets,  // perpendicular bearing and +-45 degrees around it
};

std::string_view to_string(HeadingPolicy p);
std::optional<HeadingPolicy> parse_heading_policy(std::string_view name);

struct ImageRequest {
  std::string pano_id;
  Bearing heading;
  CameraParams camera;
  ScoreClass label;
  int raw_score = 0;
  CompassOctant octant = CompassOctant::N;  // matched verge octant
  std::string section_id;
  VergeSide side = VergeSide::Right;

  friend bool operator==(const ImageRequest&, const ImageRequest&) = default;
};

/// Deduplication identity: "pano|heading|fov|pitch" with the heading to two
/// decimals and fov/pitch in shortest form.
std::string identity_key(std::string_view pano_id, Bearing heading, double fov, double pitch);
std::string identity_key(const ImageRequest& r);

/// Query string for the static image endpoint. Parameter order is fixed:
///   pano, heading (2 decimals), fov, pitch, size=WxH[, key]
/// The credential is appended only when non-empty, so the key-less form is a
/// stable cache key.
std::string image_query(const ImageRequest& r, std::string_view credential = {});

struct PlanSkip {
  std::string pano_id;
  CompassOctant octant = CompassOctant::N;  // perpendicular octant that had no score
  VergeSide side = VergeSide::Right;
  std::string reason;

  friend bool operator==(const PlanSkip&, const PlanSkip&) = default;
};

/// Image requests for one panorama within one survey section.
struct ExtractionPlan {
  std::string section_id;
  Locality locality = Locality::Wolds;
  PanoramaRecord pano;
  std::vector<ImageRequest> requests;
  std::vector<PlanSkip> skipped;

  friend bool operator==(const ExtractionPlan&, const ExtractionPlan&) = default;
};

struct VergeMatch {
  VergeSide side = VergeSide::Right;
  VergeScore score;

  friend bool operator==(const VergeMatch&, const VergeMatch&) = default;
};

struct MatchResult {
  std::vector<VergeMatch> matches;  // Right before Left
  std::vector<PlanSkip> skipped;
};

/// Pairs each verge (perpendicular to `road`) with the survey score of the
/// octant it faces.
MatchResult match_octant_scores(const PanoramaRecord& pano, Bearing road,
                                std::span<const VergeScore> scores);

struct PlanContext {
  std::string section_id;
  Locality locality = Locality::Wolds;
  ScoreScheme scheme = ScoreScheme::FourClass;
  bool rnr = false;
  HeadingPolicy heading_policy = HeadingPolicy::OctantCenters;
  CameraParams camera;
};

/// Three requests per match, all labelled with the matched octant's class,
/// sorted by (pano_id, heading) with identity-key duplicates dropped.
ExtractionPlan plan_images(const PanoramaRecord& pano, Bearing road,
                           std::span<const VergeMatch> matches, const PlanContext& context);

/// Known panoramas along a road polyline, for duplication experiments.
struct RoadLayout {
  std::vector<GeoPoint> road;  // polyline in travel order
  std::vector<PanoramaRecord> panoramas;
};

/// Fraction of requests that repeat an earlier identity key.
double duplication_rate(std::span<const ImageRequest> requests);

/// Requests one image every `grid_spacing_m` along the road, snapping each
/// position to its nearest panorama the way the image service does, and
/// returns the duplicated fraction. Throws std::invalid_argument on an empty
/// layout or non-positive spacing.
double simulate_grid_sampling(const RoadLayout& layout, double grid_spacing_m,
                              const CameraParams& camera = {});

/// Same measurement when one request is issued per panorama instead.
double simulate_panorama_sampling(const RoadLayout& layout, const CameraParams& camera = {});

/// The grid positions used by simulate_grid_sampling.
std::vector<GeoPoint> grid_positions(const RoadLayout& layout, double grid_spacing_m);

}  // namespace vergepipe
