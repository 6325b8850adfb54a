#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vergepipe/curation.hpp"
#include "vergepipe/pano.hpp"
#include "vergepipe/planner.hpp"

namespace vergepipe::synthetic {

/// A straight road with panoramas at fixed spacing and survey points offset
/// to one side of it.
struct RoadFixture {
  std::vector<PanoramaRecord> panoramas;  // in travel order
  SurveySection section;
};

struct RoadSpec {
  std::string id = "road";
  GeoPoint origin{53.9, -0.5};
  double bearing_deg = 0.0;
  double length_m = 300.0;
  double pano_spacing_m = 15.0;
  double gt_spacing_m = 30.0;
  double gt_start_m = 7.0;
  double lateral_offset_m = 3.0;  // to the right of travel
  bool linked = true;             // emit neighbour links along the road
  CaptureDate capture{2019, 6};
  std::vector<VergeScore> scores;
  Locality locality = Locality::Wolds;
};

RoadFixture straight_road(const RoadSpec& spec);

/// Road A with survey points, crossed by an unlinked road B one of whose
/// panoramas is nearer to survey point `target_point` than any road-A
/// panorama. Geometry is randomized from `seed`.
struct JunctionFixture {
  RoadFixture road_a;
  std::vector<PanoramaRecord> road_b;
  std::size_t target_point = 0;
  std::string wrong_pano_id;
};

JunctionFixture junction(std::uint64_t seed);

/// 18 grid requests at 15 m along a straight road where two pairs of
/// adjacent grid positions share a panorama.
RoadLayout grid_duplication_layout();

/// Plans with exactly `planned` requests of which `duplicates` repeat an
/// identity key from an earlier section, plus a purge list of `purge`
/// distinct samples none of which takes part in a duplicate pair.
struct CurationFixture {
  std::vector<ExtractionPlan> plans;
  std::vector<PurgeEntry> purge_list;
};

CurationFixture curation_fixture(std::size_t planned, std::size_t duplicates, std::size_t purge,
                                 std::uint64_t seed, ScoreScheme scheme = ScoreScheme::FourClass);

/// KML document for sections using the default KmlMapping field names.
/// Scores are taken from each section's first point.
std::string write_kml(const std::vector<SurveySection>& sections);

/// Per-sample predictions whose confusion matrix reproduces the rounded
/// per-class figures of the published best fold (four classes, 1189 samples).
std::vector<std::vector<std::int64_t>> table5_confusion();
std::string table5_predictions_csv();

/// Counts the end-to-end fixture must produce, fixed by construction.
struct EndToEndExpectation {
  std::size_t sections = 0;
  std::size_t ingest_diagnostics = 0;
  std::size_t gt_points = 0;
  std::size_t accepted_snaps = 0;
  std::size_t too_far = 0;
  std::size_t passed_over = 0;
  std::size_t planned = 0;
  std::size_t filtered_out = 0;
  std::size_t duplicates = 0;
  std::size_t purged = 0;
  std::size_t active = 0;
  std::map<int, std::size_t> active_per_class;
};

/// Writes survey.kml, panoramas.jsonl, purge.csv, predictions.csv and
/// vergepipe.yaml (mock backend, output under `dir`/out) into `dir`.
EndToEndExpectation write_end_to_end_fixture(const std::filesystem::path& dir);

}  // namespace vergepipe::synthetic
