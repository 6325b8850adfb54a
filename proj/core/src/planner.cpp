#include "vergepipe/planner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>

#include "vergepipe/survey.hpp"

namespace vergepipe {
namespace {

std::string heading_text(Bearing heading) {
  double h = std::round(heading.degrees() * 100.0) / 100.0;
  if (h >= 360.0) h = 0.0;
  return fmt::format("{:.2f}", h);
}

std::string percent_encode(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out += fmt::format("%{:02X}", c);
    }
  }
  return out;
}

// Panoramas of a layout ordered by position along the road polyline.
std::vector<PanoramaRecord> chain_order(const RoadLayout& layout) {
  std::vector<double> cumulative{0.0};
  for (std::size_t i = 1; i < layout.road.size(); ++i) {
    cumulative.push_back(cumulative.back() + haversine_distance(layout.road[i - 1], layout.road[i]));
  }
  auto position = [&](const GeoPoint& p) {
    if (layout.road.size() < 2) return 0.0;
    double best_dist = std::numeric_limits<double>::infinity();
    double best_pos = 0.0;
    for (std::size_t i = 1; i < layout.road.size(); ++i) {
      const double seg = cumulative[i] - cumulative[i - 1];
      const double along =
          std::clamp(along_track_distance(layout.road[i - 1], layout.road[i], p), 0.0, seg);
      const GeoPoint foot =
          seg > 0.0 ? intermediate_point(layout.road[i - 1], layout.road[i], along / seg)
                    : layout.road[i - 1];
      const double d = haversine_distance(foot, p);
      if (d < best_dist) {
        best_dist = d;
        best_pos = cumulative[i - 1] + along;
      }
    }
    return best_pos;
  };
  std::vector<std::pair<double, const PanoramaRecord*>> keyed;
  for (const auto& p : layout.panoramas) keyed.emplace_back(position(p.location), &p);
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second->pano_id < b.second->pano_id;
  });
  std::vector<PanoramaRecord> out;
  for (const auto& k : keyed) out.push_back(*k.second);
  return out;
}

ImageRequest verge_request(const PanoramaRecord& pano, std::span<const PanoramaRecord> chain,
                           const CameraParams& camera) {
  ImageRequest r;
  r.pano_id = pano.pano_id;
  const Bearing road = chain.size() >= 2 ? road_bearing_at(pano, chain) : Bearing(0.0);
  r.heading = perpendicular_bearing(road, VergeSide::Right);
  r.camera = camera;
  r.octant = octant_of(r.heading);
  r.side = VergeSide::Right;
  return r;
}

}  // namespace

std::string_view to_string(HeadingPolicy p) {
  return p == HeadingPolicy::OctantCenters ? "octant_centers" : "perpendicular_offsets";
}

std::optional<HeadingPolicy> parse_heading_policy(std::string_view name) {
  if (name == "octant_centers" || name == "OctantCenters") return HeadingPolicy::OctantCenters;
  if (name == "perpendicular_offsets" || name == "PerpendicularOffsets")
    return HeadingPolicy::PerpendicularOffsets;
  return std::nullopt;
}

std::string identity_key(std::string_view pano_id, Bearing heading, double fov, double pitch) {
  return fmt::format("{}|{}|{}|{}", pano_id, heading_text(heading), fov, pitch);
}

std::string identity_key(const ImageRequest& r) {
  return identity_key(r.pano_id, r.heading, r.camera.fov, r.camera.pitch);
}

std::string image_query(const ImageRequest& r, std::string_view credential) {
  std::string q = fmt::format("pano={}&heading={}&fov={}&pitch={}&size={}x{}",
                              percent_encode(r.pano_id), heading_text(r.heading), r.camera.fov,
                              r.camera.pitch, r.camera.width, r.camera.height);
  if (!credential.empty()) q += "&key=" + percent_encode(credential);
  return q;
}

MatchResult match_octant_scores(const PanoramaRecord& pano, Bearing road,
                                std::span<const VergeScore> scores) {
  MatchResult result;
  for (VergeSide side : {VergeSide::Right, VergeSide::Left}) {
    const CompassOctant facing = octant_of(perpendicular_bearing(road, side));
    auto it = std::find_if(scores.begin(), scores.end(),
                           [facing](const VergeScore& s) { return s.octant == facing; });
    if (it != scores.end()) {
      result.matches.push_back({side, *it});
    } else {
      result.skipped.push_back({pano.pano_id, facing, side, "no score in perpendicular octant"});
    }
  }
  return result;
}

ExtractionPlan plan_images(const PanoramaRecord& pano, Bearing road,
                           std::span<const VergeMatch> matches, const PlanContext& context) {
  ExtractionPlan plan;
  plan.section_id = context.section_id;
  plan.locality = context.locality;
  plan.pano = pano;

  std::unordered_set<std::string> keys;
  for (const auto& m : matches) {
    const Bearing center = context.heading_policy == HeadingPolicy::OctantCenters
                               ? Bearing(center_bearing(m.score.octant))
                               : perpendicular_bearing(road, m.side);
    const ScoreClass label = quantize_score(m.score.species_count, context.scheme, context.rnr);
    for (double offset : {-45.0, 0.0, 45.0}) {
      ImageRequest r;
      r.pano_id = pano.pano_id;
      r.heading = center + offset;
      r.camera = context.camera;
      r.label = label;
      r.raw_score = m.score.species_count;
      r.octant = m.score.octant;
      r.section_id = context.section_id;
      r.side = m.side;
      if (keys.insert(identity_key(r)).second) plan.requests.push_back(std::move(r));
    }
  }
  std::sort(plan.requests.begin(), plan.requests.end(),
            [](const ImageRequest& a, const ImageRequest& b) {
              if (a.pano_id != b.pano_id) return a.pano_id < b.pano_id;
              return a.heading.degrees() < b.heading.degrees();
            });
  return plan;
}

double duplication_rate(std::span<const ImageRequest> requests) {
  if (requests.empty()) return 0.0;
  std::unordered_set<std::string> keys;
  std::size_t duplicates = 0;
  for (const auto& r : requests) {
    if (!keys.insert(identity_key(r)).second) ++duplicates;
  }
  return static_cast<double>(duplicates) / static_cast<double>(requests.size());
}

std::vector<GeoPoint> grid_positions(const RoadLayout& layout, double grid_spacing_m) {
  if (layout.road.empty() || layout.panoramas.empty()) {
    throw std::invalid_argument("road layout is empty");
  }
  if (!(grid_spacing_m > 0.0)) throw std::invalid_argument("grid spacing must be positive");
  std::vector<GeoPoint> out{layout.road.front()};
  double carried = 0.0;  // distance travelled since the last grid point
  for (std::size_t i = 1; i < layout.road.size(); ++i) {
    const GeoPoint& a = layout.road[i - 1];
    const GeoPoint& b = layout.road[i];
    const double seg = haversine_distance(a, b);
    double at = grid_spacing_m - carried;
    while (at <= seg + 1e-6) {
      out.push_back(intermediate_point(a, b, std::min(1.0, at / seg)));
      at += grid_spacing_m;
    }
    carried = seg - (at - grid_spacing_m);
  }
  return out;
}

double simulate_grid_sampling(const RoadLayout& layout, double grid_spacing_m,
                              const CameraParams& camera) {
  const auto positions = grid_positions(layout, grid_spacing_m);
  const PanoIndex index(layout.panoramas);
  const auto chain = chain_order(layout);
  std::vector<ImageRequest> requests;
  requests.reserve(positions.size());
  for (const auto& p : positions) {
    const auto hit = index.nearest(p);
    requests.push_back(verge_request(*hit->pano, chain, camera));
  }
  return duplication_rate(requests);
}

double simulate_panorama_sampling(const RoadLayout& layout, const CameraParams& camera) {
  if (layout.road.empty() || layout.panoramas.empty()) {
    throw std::invalid_argument("road layout is empty");
  }
  const auto chain = chain_order(layout);
  std::vector<ImageRequest> requests;
  for (const auto& p : chain) requests.push_back(verge_request(p, chain, camera));
  return duplication_rate(requests);
}

}  // namespace vergepipe
