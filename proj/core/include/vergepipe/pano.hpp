#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vergepipe/geodesy.hpp"
#include "vergepipe/types.hpp"

namespace vergepipe {

/// One street-view panorama. `neighbours` lists adjacent panoramas along the
/// capture vehicle's path and may be empty when the service omits links.
struct PanoramaRecord {
  std::string pano_id;
  GeoPoint location;
  CaptureDate capture_date;
  std::vector<std::string> neighbours;

  friend bool operator==(const PanoramaRecord&, const PanoramaRecord&) = default;
};

/// Immutable panorama set with id lookup and radius queries.
///
/// Records are bucketed on a fixed lat/lon grid so radius queries only scan
/// nearby cells. Duplicate ids and invalid records are rejected on insert.
class PanoIndex {
 public:
  PanoIndex() = default;
  explicit PanoIndex(std::vector<PanoramaRecord> records);

  /// Throws std::invalid_argument on an empty or duplicate id or month outside 1..12.
  void add(PanoramaRecord record);

  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }
  std::span<const PanoramaRecord> records() const { return records_; }

  const PanoramaRecord* find(std::string_view pano_id) const;

  /// True if any record carries neighbour links.
  bool has_adjacency() const { return has_adjacency_; }

  /// True if `pano_id` links to, or is linked from, another panorama.
  bool has_links(std::string_view pano_id) const;

  struct Candidate {
    const PanoramaRecord* pano = nullptr;
    double distance_m = 0.0;
  };

  /// Records within `radius_m`, nearest first, ties broken by pano_id.
  std::vector<Candidate> within(const GeoPoint& p, double radius_m) const;

  /// Nearest record overall (same tie-break). Empty index gives nullopt.
  std::optional<Candidate> nearest(const GeoPoint& p) const;

  /// Fewest neighbour hops from `from` to `to`, searching at most `max_hops`.
  std::optional<int> hop_distance(std::string_view from, std::string_view to, int max_hops) const;

  /// Shortest neighbour path from `from` to `to` inclusive of both ends.
  /// Empty if unreachable within `max_hops`.
  std::vector<const PanoramaRecord*> path(std::string_view from, std::string_view to,
                                          int max_hops) const;

 private:
  using CellKey = std::int64_t;
  static CellKey cell_key(std::int64_t row, std::int64_t col);
  static std::int64_t row_of(double lat);
  static std::int64_t col_of(double lon);

  std::vector<PanoramaRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<CellKey, std::vector<std::size_t>> cells_;
  std::unordered_map<std::string, std::vector<std::string>> reverse_links_;
  bool has_adjacency_ = false;
};

enum class SnapRejection : std::uint8_t { TooFar, RoadDiscontinuity, NoCandidates };

std::string_view to_string(SnapRejection r);

struct SnapOptions {
  double threshold_m = 25.0;
  int max_hops = 8;             // chain rule when adjacency is known
  double spacing_factor = 2.0;  // chain rule otherwise: factor x mean GT point spacing
};

/// A candidate that was nearer than the chosen panorama but broke road
/// continuity with the previous accepted snap.
struct PassedOverCandidate {
  std::string pano_id;
  double distance_m = 0.0;
  SnapRejection reason = SnapRejection::RoadDiscontinuity;

  friend bool operator==(const PassedOverCandidate&, const PassedOverCandidate&) = default;
};

struct SnapResult {
  GeoPoint source;
  std::optional<PanoramaRecord> pano;  // absent only for NoCandidates
  double distance_m = 0.0;
  bool accepted = false;
  std::optional<SnapRejection> reject_reason;
  std::vector<PassedOverCandidate> passed_over;

  friend bool operator==(const SnapResult&, const SnapResult&) = default;
};

/// Maps each survey point onto its governing panorama, in point order.
///
/// The first accepted snap is the nearest panorama within the threshold.
/// Later points must stay on the same road as the previous accepted snap:
/// within `max_hops` neighbour hops when adjacency is available, otherwise
/// within `spacing_factor` times the section's mean point spacing. Nearer
/// candidates that fail this are recorded in `passed_over`; if no candidate
/// within the threshold passes, the point is rejected as RoadDiscontinuity.
std::vector<SnapResult> snap_section(const SurveySection& section, const PanoIndex& index,
                                     const SnapOptions& options = {});

struct InterpolationOptions {
  double step_m = 10.0;
  double snap_threshold_m = 25.0;
  int max_chain_hops = 256;
};

/// Panoramas strictly between two accepted snaps, in along-road order.
/// Uses the neighbour chain when one connects them, otherwise samples the
/// great-circle segment every `step_m` and snaps each sample.
std::vector<PanoramaRecord> interpolate_panoramas(const SnapResult& a, const SnapResult& b,
                                                  const PanoIndex& index,
                                                  const InterpolationOptions& options = {});

/// Road direction at `pano` within an ordered chain: previous->next for
/// interior panoramas, one-sided at either end.
/// Throws std::invalid_argument when the chain has fewer than two entries or
/// does not contain `pano`.
Bearing road_bearing_at(const PanoramaRecord& pano, std::span<const PanoramaRecord> ordered_chain);

}  // namespace vergepipe
