#include "vergepipe/pano.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <unordered_set>

namespace vergepipe {
namespace {

constexpr double kCellDeg = 0.001;
constexpr double kMetresPerDegLat = kEarthRadiusM * 3.14159265358979323846 / 180.0;

bool candidate_less(const PanoIndex::Candidate& a, const PanoIndex::Candidate& b) {
  if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
  return a.pano->pano_id < b.pano->pano_id;
}

}  // namespace

std::string_view to_string(SnapRejection r) {
  switch (r) {
    case SnapRejection::TooFar: return "TooFar";
    case SnapRejection::RoadDiscontinuity: return "RoadDiscontinuity";
    case SnapRejection::NoCandidates: return "NoCandidates";
  }
  return "NoCandidates";
}

PanoIndex::PanoIndex(std::vector<PanoramaRecord> records) {
  records_.reserve(records.size());
  for (auto& r : records) add(std::move(r));
}

PanoIndex::CellKey PanoIndex::cell_key(std::int64_t row, std::int64_t col) {
  return (row << 32) ^ (col & 0xffffffff);
}

std::int64_t PanoIndex::row_of(double lat) {
  return static_cast<std::int64_t>(std::floor(lat / kCellDeg));
}

std::int64_t PanoIndex::col_of(double lon) {
  return static_cast<std::int64_t>(std::floor(lon / kCellDeg));
}

void PanoIndex::add(PanoramaRecord record) {
  if (record.pano_id.empty()) throw std::invalid_argument("panorama id must not be empty");
  if (record.capture_date.month < 1 || record.capture_date.month > 12) {
    throw std::invalid_argument("panorama " + record.pano_id + " has capture month " +
                                std::to_string(record.capture_date.month));
  }
  if (!is_valid(record.location)) {
    throw std::invalid_argument("panorama " + record.pano_id + " has an out-of-range location");
  }
  if (by_id_.contains(record.pano_id)) {
    throw std::invalid_argument("duplicate panorama id " + record.pano_id);
  }
  const std::size_t idx = records_.size();
  by_id_.emplace(record.pano_id, idx);
  cells_[cell_key(row_of(record.location.lat), col_of(record.location.lon))].push_back(idx);
  if (!record.neighbours.empty()) has_adjacency_ = true;
  for (const auto& n : record.neighbours) reverse_links_[n].push_back(record.pano_id);
  records_.push_back(std::move(record));
}

const PanoramaRecord* PanoIndex::find(std::string_view pano_id) const {
  auto it = by_id_.find(std::string(pano_id));
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

std::vector<PanoIndex::Candidate> PanoIndex::within(const GeoPoint& p, double radius_m) const {
  std::vector<Candidate> out;
  if (records_.empty() || radius_m < 0.0) return out;
  const double dlat = radius_m / kMetresPerDegLat;
  const double coslat = std::max(0.01, std::cos(p.lat * 3.14159265358979323846 / 180.0));
  const double dlon = dlat / coslat;
  const auto r0 = row_of(p.lat - dlat) - 1;
  const auto r1 = row_of(p.lat + dlat) + 1;
  const auto c0 = col_of(p.lon - dlon) - 1;
  const auto c1 = col_of(p.lon + dlon) + 1;
  if ((r1 - r0 + 1) * (c1 - c0 + 1) > static_cast<std::int64_t>(records_.size())) {
    for (const auto& r : records_) {
      const double d = haversine_distance(p, r.location);
      if (d <= radius_m) out.push_back({&r, d});
    }
  } else {
    for (auto row = r0; row <= r1; ++row) {
      for (auto col = c0; col <= c1; ++col) {
        auto it = cells_.find(cell_key(row, col));
        if (it == cells_.end()) continue;
        for (std::size_t idx : it->second) {
          const double d = haversine_distance(p, records_[idx].location);
          if (d <= radius_m) out.push_back({&records_[idx], d});
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), candidate_less);
  return out;
}

std::optional<PanoIndex::Candidate> PanoIndex::nearest(const GeoPoint& p) const {
  std::optional<Candidate> best;
  for (const auto& r : records_) {
    Candidate c{&r, haversine_distance(p, r.location)};
    if (!best || candidate_less(c, *best)) best = c;
  }
  return best;
}

bool PanoIndex::has_links(std::string_view pano_id) const {
  const auto* rec = find(pano_id);
  if (rec != nullptr && !rec->neighbours.empty()) return true;
  auto it = reverse_links_.find(std::string(pano_id));
  return it != reverse_links_.end() && !it->second.empty();
}

std::vector<const PanoramaRecord*> PanoIndex::path(std::string_view from, std::string_view to,
                                                   int max_hops) const {
  const PanoramaRecord* start = find(from);
  const PanoramaRecord* goal = find(to);
  if (start == nullptr || goal == nullptr) return {};
  if (start == goal) return {start};

  // Links are treated as undirected.
  std::unordered_map<std::string_view, std::string_view> parent;
  std::deque<std::pair<std::string_view, int>> queue;
  parent.emplace(start->pano_id, std::string_view{});
  queue.emplace_back(start->pano_id, 0);
  while (!queue.empty()) {
    auto [id, depth] = queue.front();
    queue.pop_front();
    if (id == goal->pano_id) break;
    if (depth >= max_hops) continue;
    std::vector<std::string_view> next;
    if (const auto* rec = find(id)) {
      for (const auto& n : rec->neighbours) next.push_back(n);
    }
    if (auto it = reverse_links_.find(std::string(id)); it != reverse_links_.end()) {
      next.insert(next.end(), it->second.begin(), it->second.end());
    }
    std::sort(next.begin(), next.end());
    for (auto n : next) {
      if (find(n) == nullptr || parent.contains(n)) continue;
      parent.emplace(n, id);
      queue.emplace_back(n, depth + 1);
    }
  }
  if (!parent.contains(goal->pano_id)) return {};
  std::vector<const PanoramaRecord*> out;
  for (std::string_view id = goal->pano_id; !id.empty(); id = parent[id]) out.push_back(find(id));
  std::reverse(out.begin(), out.end());
  return out;
}

std::optional<int> PanoIndex::hop_distance(std::string_view from, std::string_view to,
                                           int max_hops) const {
  auto p = path(from, to, max_hops);
  if (p.empty()) return std::nullopt;
  return static_cast<int>(p.size()) - 1;
}

std::vector<SnapResult> snap_section(const SurveySection& section, const PanoIndex& index,
                                     const SnapOptions& options) {
  std::vector<SnapResult> results;
  results.reserve(section.points.size());

  double mean_spacing = 0.0;
  if (section.points.size() >= 2) {
    for (std::size_t i = 1; i < section.points.size(); ++i) {
      mean_spacing += haversine_distance(section.points[i - 1].location, section.points[i].location);
    }
    mean_spacing /= static_cast<double>(section.points.size() - 1);
  }

  auto linked = [&](const PanoramaRecord& p) {
    return !p.neighbours.empty() || index.has_links(p.pano_id);
  };

  const PanoramaRecord* previous = nullptr;
  for (const auto& point : section.points) {
    SnapResult res;
    res.source = point.location;
    if (index.empty()) {
      res.reject_reason = SnapRejection::NoCandidates;
      results.push_back(std::move(res));
      continue;
    }
    auto candidates = index.within(point.location, options.threshold_m);
    if (candidates.empty()) {
      auto nearest = index.nearest(point.location);
      res.pano = *nearest->pano;
      res.distance_m = nearest->distance_m;
      res.reject_reason = SnapRejection::TooFar;
      results.push_back(std::move(res));
      continue;
    }

    const PanoIndex::Candidate* chosen = nullptr;
    if (previous == nullptr) {
      chosen = &candidates.front();
    } else {
      const bool use_hops = linked(*previous);
      for (const auto& c : candidates) {
        bool consistent = false;
        if (c.pano->pano_id == previous->pano_id) {
          consistent = true;
        } else if (use_hops || linked(*c.pano)) {
          consistent = index.hop_distance(previous->pano_id, c.pano->pano_id, options.max_hops)
                           .has_value();
        } else {
          consistent = haversine_distance(previous->location, c.pano->location) <=
                       options.spacing_factor * mean_spacing;
        }
        if (consistent) {
          chosen = &c;
          break;
        }
        res.passed_over.push_back({c.pano->pano_id, c.distance_m, SnapRejection::RoadDiscontinuity});
      }
    }

    if (chosen != nullptr) {
      res.pano = *chosen->pano;
      res.distance_m = chosen->distance_m;
      res.accepted = true;
      previous = chosen->pano;
    } else {
      res.pano = *candidates.front().pano;
      res.distance_m = candidates.front().distance_m;
      res.reject_reason = SnapRejection::RoadDiscontinuity;
    }
    results.push_back(std::move(res));
  }
  return results;
}

std::vector<PanoramaRecord> interpolate_panoramas(const SnapResult& a, const SnapResult& b,
                                                  const PanoIndex& index,
                                                  const InterpolationOptions& options) {
  if (!a.accepted || !b.accepted || !a.pano || !b.pano) {
    throw std::invalid_argument("interpolation needs two accepted snaps");
  }
  const PanoramaRecord& pa = *a.pano;
  const PanoramaRecord& pb = *b.pano;
  if (pa.pano_id == pb.pano_id) return {};

  if (index.has_adjacency()) {
    auto chain = index.path(pa.pano_id, pb.pano_id, options.max_chain_hops);
    if (chain.size() >= 2) {
      std::vector<PanoramaRecord> out;
      for (std::size_t i = 1; i + 1 < chain.size(); ++i) out.push_back(*chain[i]);
      return out;
    }
  }

  const double total = haversine_distance(pa.location, pb.location);
  std::vector<std::pair<double, const PanoramaRecord*>> found;
  std::unordered_set<std::string_view> seen{pa.pano_id, pb.pano_id};
  for (int i = 1;; ++i) {
    const double along = i * options.step_m;
    if (along >= total) break;
    const GeoPoint sample = intermediate_point(pa.location, pb.location, along / total);
    auto cands = index.within(sample, options.snap_threshold_m);
    if (cands.empty()) continue;
    const PanoramaRecord* hit = cands.front().pano;
    if (!seen.insert(hit->pano_id).second) continue;
    found.emplace_back(along_track_distance(pa.location, pb.location, hit->location), hit);
  }
  std::sort(found.begin(), found.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first < y.first;
    return x.second->pano_id < y.second->pano_id;
  });
  std::vector<PanoramaRecord> out;
  out.reserve(found.size());
  for (const auto& f : found) out.push_back(*f.second);
  return out;
}

Bearing road_bearing_at(const PanoramaRecord& pano, std::span<const PanoramaRecord> ordered_chain) {
  if (ordered_chain.size() < 2) {
    throw std::invalid_argument("road bearing needs a chain of at least two panoramas");
  }
  auto it = std::find_if(ordered_chain.begin(), ordered_chain.end(),
                         [&](const PanoramaRecord& p) { return p.pano_id == pano.pano_id; });
  if (it == ordered_chain.end()) {
    throw std::invalid_argument("panorama " + pano.pano_id + " is not in the chain");
  }
  const auto i = static_cast<std::size_t>(it - ordered_chain.begin());
  if (i == 0) return forward_bearing(ordered_chain[0].location, ordered_chain[1].location);
  if (i + 1 == ordered_chain.size()) {
    return forward_bearing(ordered_chain[i - 1].location, ordered_chain[i].location);
  }
  return forward_bearing(ordered_chain[i - 1].location, ordered_chain[i + 1].location);
}

}  // namespace vergepipe
