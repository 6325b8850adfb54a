#include "vergepipe/synthetic.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "json_codec.hpp"
#include "vergepipe/io.hpp"
#include "vergepipe/survey.hpp"

namespace vergepipe::synthetic {
namespace {

double uniform(SeededShuffle& rng, double lo, double hi) {
  const double u = static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

GeoPoint along(const RoadSpec& spec, double d) {
  return d == 0.0 ? spec.origin : destination_point(spec.origin, Bearing(spec.bearing_deg), d);
}

// Representative raw count inside each class's band.
int score_for_class(int ordinal) {
  static constexpr int kScores[] = {2, 5, 9, 14, 22};
  return kScores[ordinal - 1];
}

}  // namespace

RoadFixture straight_road(const RoadSpec& spec) {
  if (!(spec.pano_spacing_m > 0.0) || !(spec.gt_spacing_m > 0.0) || spec.length_m < 0.0) {
    throw std::invalid_argument("road spacing must be positive");
  }
  RoadFixture out;
  const auto n = static_cast<std::size_t>(std::floor(spec.length_m / spec.pano_spacing_m + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    PanoramaRecord p;
    p.pano_id = fmt::format("{}-p{:03}", spec.id, i);
    p.location = along(spec, static_cast<double>(i) * spec.pano_spacing_m);
    p.capture_date = spec.capture;
    if (spec.linked) {
      if (i > 0) p.neighbours.push_back(fmt::format("{}-p{:03}", spec.id, i - 1));
      if (i + 1 < n) p.neighbours.push_back(fmt::format("{}-p{:03}", spec.id, i + 1));
    }
    out.panoramas.push_back(std::move(p));
  }
  out.section.section_id = spec.id;
  out.section.locality = spec.locality;
  for (double d = spec.gt_start_m; d <= spec.length_m + 1e-9; d += spec.gt_spacing_m) {
    const GeoPoint on_road = along(spec, d);
    const GeoPoint gt = spec.lateral_offset_m == 0.0
                            ? on_road
                            : destination_point(on_road, Bearing(spec.bearing_deg + 90.0),
                                                spec.lateral_offset_m);
    out.section.points.push_back({gt, spec.scores});
  }
  return out;
}

JunctionFixture junction(std::uint64_t seed) {
  SeededShuffle rng(seed);
  JunctionFixture out;

  RoadSpec a;
  a.id = "junction-a";
  a.origin = {53.8 + uniform(rng, 0.0, 0.1), -0.6 + uniform(rng, 0.0, 0.2)};
  a.bearing_deg = uniform(rng, 0.0, 360.0);
  a.length_m = 300.0;
  a.gt_start_m = uniform(rng, 3.0, 6.0);
  for (auto o : kAllOctants) a.scores.push_back({o, 6});
  out.road_a = straight_road(a);

  // Survey point 5 lies just past road A's panorama at 150 m; road B's
  // panorama Q sits epsilon nearer to it, roughly ahead or behind along A.
  out.target_point = 5;
  const GeoPoint g = out.road_a.section.points[out.target_point].location;
  double r_a = std::numeric_limits<double>::infinity();
  for (const auto& p : out.road_a.panoramas) r_a = std::min(r_a, haversine_distance(g, p.location));
  const double epsilon = 0.5;
  const double ahead = (rng.next() & 1U) != 0 ? 0.0 : 180.0;
  const Bearing phi(a.bearing_deg + ahead + uniform(rng, -20.0, 20.0));
  const GeoPoint q = destination_point(g, phi, r_a - epsilon);
  const double beta = a.bearing_deg + 90.0 + uniform(rng, -30.0, 30.0);

  constexpr int kHalf = 10;
  for (int j = -kHalf; j <= kHalf; ++j) {
    PanoramaRecord p;
    p.pano_id = fmt::format("junction-b-p{:03}", j + kHalf);
    p.location = j == 0 ? q : destination_point(q, Bearing(beta), 15.0 * j);
    p.capture_date = a.capture;
    if (j > -kHalf) p.neighbours.push_back(fmt::format("junction-b-p{:03}", j + kHalf - 1));
    if (j < kHalf) p.neighbours.push_back(fmt::format("junction-b-p{:03}", j + kHalf + 1));
    out.road_b.push_back(std::move(p));
  }
  out.wrong_pano_id = out.road_b[kHalf].pano_id;
  return out;
}

RoadLayout grid_duplication_layout() {
  RoadSpec spec;
  spec.id = "grid";
  spec.bearing_deg = 90.0;
  const double length = 255.0;
  RoadLayout layout;
  layout.road = {spec.origin, along(spec, length)};
  // Every grid position has its own panorama except 45/60 and 165/180,
  // which each share a single panorama placed between them.
  const std::set<int> merged = {45, 60, 165, 180};
  std::vector<int> positions;
  for (int d = 0; d <= 255; d += 15) {
    if (!merged.contains(d)) positions.push_back(d);
  }
  positions.push_back(50);
  positions.push_back(170);
  std::sort(positions.begin(), positions.end());
  for (int d : positions) {
    PanoramaRecord p;
    p.pano_id = fmt::format("grid-{:03}m", d);
    p.location = along(spec, d);
    p.capture_date = spec.capture;
    layout.panoramas.push_back(std::move(p));
  }
  return layout;
}

CurationFixture curation_fixture(std::size_t planned, std::size_t duplicates, std::size_t purge,
                                 std::uint64_t seed, ScoreScheme scheme) {
  if (duplicates > planned) throw std::invalid_argument("more duplicates than planned requests");
  SeededShuffle rng(seed);
  const std::vector<double> weights =
      scheme == ScoreScheme::FourClass ? std::vector<double>{690, 326, 109, 64}
                                       : std::vector<double>{690, 326, 109, 44, 20};
  const double weight_total = std::accumulate(weights.begin(), weights.end(), 0.0);
  auto draw_class = [&] {
    double u = uniform(rng, 0.0, weight_total);
    for (std::size_t c = 0; c < weights.size(); ++c) {
      if (u < weights[c]) return static_cast<int>(c) + 1;
      u -= weights[c];
    }
    return static_cast<int>(weights.size());
  };

  constexpr int kPanosPerSection = 4;
  CurationFixture out;
  const std::size_t base = planned - duplicates;
  std::size_t emitted = 0;
  for (std::size_t i = 0; emitted < base; ++i) {
    ExtractionPlan plan;
    plan.section_id = fmt::format("sec-{:04}", i / kPanosPerSection);
    plan.locality = static_cast<Locality>((i / kPanosPerSection) % 3);
    plan.pano.pano_id = fmt::format("pano-{:05}", i);
    plan.pano.location = {53.5 + 0.0005 * static_cast<double>(i / 200),
                          -1.0 + 0.0005 * static_cast<double>(i % 200)};
    plan.pano.capture_date = {2015 + static_cast<int>(i % 7), 1 + static_cast<int>(i % 12)};
    for (VergeSide side : {VergeSide::Right, VergeSide::Left}) {
      const CompassOctant octant = side == VergeSide::Right ? CompassOctant::E : CompassOctant::W;
      const int label = draw_class();
      for (int step = -1; step <= 1 && emitted < base; ++step) {
        ImageRequest r;
        r.pano_id = plan.pano.pano_id;
        r.heading = Bearing(center_bearing(octant) + 45.0 * step);
        r.label = {label, scheme};
        r.raw_score = score_for_class(label);
        r.octant = octant;
        r.section_id = plan.section_id;
        r.side = side;
        plan.requests.push_back(r);
        ++emitted;
      }
    }
    std::sort(plan.requests.begin(), plan.requests.end(), [](const auto& x, const auto& y) {
      return x.heading.degrees() < y.heading.degrees();
    });
    out.plans.push_back(std::move(plan));
  }

  // Revisit whole panoramas from later, overlapping sections.
  std::vector<std::size_t> full;
  for (std::size_t i = 0; i < out.plans.size(); ++i) {
    if (out.plans[i].requests.size() == 6) full.push_back(i);
  }
  rng.shuffle(full);
  std::set<std::string> revisited;
  std::size_t remaining = duplicates;
  std::vector<ExtractionPlan> overlaps;
  for (std::size_t n = 0; remaining > 0; ++n) {
    if (n >= full.size()) throw std::invalid_argument("not enough panoramas to duplicate");
    const ExtractionPlan& src = out.plans[full[n]];
    ExtractionPlan dup = src;
    dup.section_id = src.section_id + "-overlap";
    dup.requests.resize(std::min<std::size_t>(remaining, src.requests.size()));
    for (auto& r : dup.requests) {
      r.section_id = dup.section_id;
      r.label = {draw_class(), scheme};
      r.raw_score = score_for_class(r.label.ordinal);
    }
    remaining -= dup.requests.size();
    revisited.insert(src.pano.pano_id);
    overlaps.push_back(std::move(dup));
  }
  out.plans.insert(out.plans.end(), overlaps.begin(), overlaps.end());

  std::vector<std::string> candidates;
  for (const auto& plan : out.plans) {
    if (revisited.contains(plan.pano.pano_id)) continue;
    for (const auto& r : plan.requests) candidates.push_back(make_sample_id(plan.section_id, identity_key(r)));
  }
  if (candidates.size() < purge) throw std::invalid_argument("not enough samples to purge");
  std::sort(candidates.begin(), candidates.end());
  rng.shuffle(candidates);
  candidates.resize(purge);
  std::sort(candidates.begin(), candidates.end());
  for (auto& id : candidates) {
    out.purge_list.push_back({std::move(id), static_cast<PurgeReason>(rng.below(5))});
  }
  return out;
}

std::string write_kml(const std::vector<SurveySection>& sections) {
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<kml xmlns=\"http://www.opengis.net/kml/2.2\">\n<Document>\n<name>synthetic survey</name>\n";
  for (const auto& s : sections) {
    out += "<Placemark>\n";
    out += fmt::format("  <name>{}</name>\n  <ExtendedData>\n", s.section_id);
    auto data = [&](std::string_view name, std::string_view value) {
      out += fmt::format("    <Data name=\"{}\"><value>{}</value></Data>\n", name, value);
    };
    data("section_id", s.section_id);
    data("locality", to_string(s.locality));
    data("rnr", s.rnr ? "1" : "0");
    if (!s.points.empty()) {
      for (const auto& sc : s.points.front().scores) {
        data(fmt::format("score_{}", to_string(sc.octant)), std::to_string(sc.species_count));
      }
    }
    out += "  </ExtendedData>\n  <LineString><coordinates>\n";
    for (const auto& p : s.points) out += fmt::format("    {},{},0\n", p.location.lon, p.location.lat);
    out += "  </coordinates></LineString>\n</Placemark>\n";
  }
  out += "</Document>\n</kml>\n";
  return out;
}

std::vector<std::vector<std::int64_t>> table5_confusion() {
  // Diagonal from the per-class accuracy column times support, column sums
  // chosen so every precision rounds to the published value; off-diagonal
  // mass sits mostly in adjacent classes.
  return {{651, 25, 10, 4}, {35, 283, 6, 2}, {15, 10, 82, 2}, {6, 7, 4, 47}};
}

std::string table5_predictions_csv() {
  std::string out = "sample_id,true_class,pred_class\n";
  const auto cm = table5_confusion();
  int n = 0;
  for (std::size_t t = 0; t < cm.size(); ++t) {
    for (std::size_t p = 0; p < cm[t].size(); ++p) {
      for (std::int64_t c = 0; c < cm[t][p]; ++c) out += fmt::format("t{:04},{},{}\n", ++n, t + 1, p + 1);
    }
  }
  return out;
}

EndToEndExpectation write_end_to_end_fixture(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<SurveySection> sections;
  std::vector<PanoramaRecord> panoramas;
  auto origin = [](int slot) { return GeoPoint{53.70 + 0.05 * slot, -0.70}; };
  auto add_road = [&](RoadSpec spec) {
    auto road = straight_road(spec);
    panoramas.insert(panoramas.end(), road.panoramas.begin(), road.panoramas.end());
    return road;
  };
  auto keep_points = [](SurveySection s, std::size_t from, std::size_t count, std::string id) {
    s.section_id = std::move(id);
    s.points = {s.points.begin() + static_cast<std::ptrdiff_t>(from),
                s.points.begin() + static_cast<std::ptrdiff_t>(from + count)};
    return s;
  };

  EndToEndExpectation ex;

  // wolds-001 and wolds-003 survey consecutive stretches of one road and
  // both snap to its panorama at 120 m.
  {
    RoadSpec spec;
    spec.id = "wolds-a";
    spec.origin = origin(0);
    spec.bearing_deg = 0.0;
    spec.length_m = 300.0;
    spec.scores = {{CompassOctant::E, 9}, {CompassOctant::W, 2}};
    auto road = add_road(spec);
    sections.push_back(keep_points(road.section, 0, 5, "wolds-001"));
    auto second = keep_points(road.section, 4, 5, "wolds-003");
    sections.push_back(second);
  }
  {
    RoadSpec spec;
    spec.id = "wolds-002";
    spec.origin = origin(1);
    spec.bearing_deg = 90.0;
    spec.length_m = 150.0;
    spec.scores = {{CompassOctant::N, 5}, {CompassOctant::S, 14}};
    sections.push_back(add_road(spec).section);
  }
  {
    RoadSpec spec;
    spec.id = "edge-001";
    spec.origin = origin(2);
    spec.bearing_deg = 45.0;
    spec.length_m = 150.0;
    spec.locality = Locality::NorthernEdge;
    spec.scores = {{CompassOctant::N, 7}, {CompassOctant::SE, 4}, {CompassOctant::NW, 12}};
    sections.push_back(add_road(spec).section);
  }
  {
    RoadSpec spec;
    spec.id = "lime-001";
    spec.origin = origin(3);
    spec.length_m = 150.0;
    spec.locality = Locality::LimestoneGrassland;
    spec.scores = {{CompassOctant::E, 0}};
    sections.push_back(add_road(spec).section);
  }
  {
    RoadSpec spec;
    spec.id = "lime-002";
    spec.origin = origin(4);
    spec.length_m = 150.0;
    spec.locality = Locality::LimestoneGrassland;
    spec.scores = {{CompassOctant::E, 20}, {CompassOctant::W, 8}};
    auto s = add_road(spec).section;
    s.rnr = true;
    sections.push_back(s);
  }
  {
    auto j = junction(7);
    panoramas.insert(panoramas.end(), j.road_a.panoramas.begin(), j.road_a.panoramas.end());
    panoramas.insert(panoramas.end(), j.road_b.begin(), j.road_b.end());
    auto s = j.road_a.section;
    s.section_id = "edge-002";
    s.locality = Locality::NorthernEdge;
    sections.push_back(s);
  }
  {
    // Last survey point lies 40 m off the road.
    RoadSpec spec;
    spec.id = "wolds-004";
    spec.origin = origin(5);
    spec.bearing_deg = 180.0;
    spec.length_m = 150.0;
    spec.scores = {{CompassOctant::W, 3}, {CompassOctant::E, 11}};
    auto s = add_road(spec).section;
    const GeoPoint on_road = destination_point(spec.origin, Bearing(180.0), 127.0);
    s.points.back().location = destination_point(on_road, Bearing(270.0), 40.0);
    sections.push_back(s);
  }
  {
    // Captured outside the configured years; filtered before curation.
    RoadSpec spec;
    spec.id = "lime-003";
    spec.origin = origin(6);
    spec.length_m = 70.0;
    spec.locality = Locality::LimestoneGrassland;
    spec.capture = {2012, 3};
    spec.scores = {{CompassOctant::E, 4}, {CompassOctant::W, 4}};
    sections.push_back(add_road(spec).section);
  }

  ex.sections = sections.size();
  ex.ingest_diagnostics = 1;
  for (const auto& s : sections) ex.gt_points += s.points.size();
  ex.too_far = 1;
  ex.accepted_snaps = ex.gt_points - ex.too_far;
  ex.passed_over = 1;
  // Requests per accepted point: 6 with both verges scored, 3 with one.
  ex.planned = 6 * (5 + 5 + 5 + 5 + 5 + 10 + 4 + 3) + 3 * 5;
  ex.filtered_out = 6 * 3;
  ex.duplicates = 6;
  ex.purged = 6;
  ex.active = ex.planned - ex.filtered_out - ex.duplicates - ex.purged;
  ex.active_per_class = {{1, 15 + 12 + 15 + 12}, {2, 12 + 15 + 60}, {3, 15 + 12 + 15 + 12}, {4, 12 + 15 + 15}};

  // Purge every image of wolds-002's panorama at 30 m.
  std::string purge = "sample_id,reason\n";
  const char* reasons[] = {"car", "house", "cut_verge", "verge_not_visible", "other", "car"};
  int n = 0;
  for (double center : {0.0, 180.0}) {
    for (double step : {-45.0, 0.0, 45.0}) {
      const auto key = identity_key("wolds-002-p002", Bearing(center + step), 45.0, 20.0);
      purge += fmt::format("{},{}\n", make_sample_id("wolds-002", key), reasons[n++]);
    }
  }

  std::string kml = write_kml(sections);
  // One placemark with a single coordinate, reported by ingest and dropped.
  const std::string broken =
      "<Placemark><name>broken-001</name><ExtendedData><Data name=\"score_E\"><value>3</value></Data>"
      "</ExtendedData><LineString><coordinates>-0.7,53.99,0</coordinates></LineString></Placemark>\n";
  kml.insert(kml.rfind("</Document>"), broken);

  std::string panos;
  for (const auto& p : panoramas) panos += detail::to_json(p).dump() + '\n';

  write_file(dir / "survey.kml", kml);
  write_file(dir / "panoramas.jsonl", panos);
  write_file(dir / "purge.csv", purge);
  write_file(dir / "predictions.csv", table5_predictions_csv());
  write_file(dir / "vergepipe.yaml",
             "# Synthetic end-to-end run against the mock street-view backend.\n"
             "seed: 0\n"
             "backend: mock\n"
             "paths:\n"
             "  kml: [survey.kml]\n"
             "  mock_panoramas: panoramas.jsonl\n"
             "  purge_list: purge.csv\n"
             "  predictions: predictions.csv\n"
             "  output_dir: out\n"
             "  cache_dir: out/cache\n"
             "filters:\n"
             "  years: [2015, 2016, 2017, 2018, 2019, 2020, 2021]\n");
  return ex;
}

}  // namespace vergepipe::synthetic
