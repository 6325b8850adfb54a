#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vergepipe {

/// WGS84 latitude/longitude in decimal degrees.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline bool is_valid(const GeoPoint& p) {
  return p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

/// The eight 45 degree compass sectors used by the survey. The enumerator
/// value times 45 is the sector's center bearing.
enum class CompassOctant : std::uint8_t { N, NE, E, SE, S, SW, W, NW };

inline constexpr std::array<CompassOctant, 8> kAllOctants = {
    CompassOctant::N, CompassOctant::NE, CompassOctant::E, CompassOctant::SE,
    CompassOctant::S, CompassOctant::SW, CompassOctant::W, CompassOctant::NW};

constexpr double center_bearing(CompassOctant o) {
  return static_cast<double>(static_cast<int>(o)) * 45.0;
}

/// Octant reached by stepping `steps` sectors clockwise (negative is anticlockwise).
constexpr CompassOctant rotate(CompassOctant o, int steps) {
  int idx = (static_cast<int>(o) + steps) % 8;
  if (idx < 0) idx += 8;
  return static_cast<CompassOctant>(idx);
}

std::string_view to_string(CompassOctant o);
std::optional<CompassOctant> parse_octant(std::string_view name);

struct VergeScore {
  CompassOctant octant = CompassOctant::N;
  int species_count = 0;  // positive indicator species

  friend bool operator==(const VergeScore&, const VergeScore&) = default;
};

enum class Locality : std::uint8_t { Wolds, NorthernEdge, LimestoneGrassland };

std::string_view to_string(Locality l);
/// Accepts the enumerator names and the long-form area names, case-insensitively.
std::optional<Locality> parse_locality(std::string_view name);

struct SurveyPoint {
  GeoPoint location;
  std::vector<VergeScore> scores;

  const VergeScore* score_for(CompassOctant o) const;

  friend bool operator==(const SurveyPoint&, const SurveyPoint&) = default;
};

/// A surveyed road stretch. Points are in survey order; at least two are
/// required to define a direction of travel.
struct SurveySection {
  std::string section_id;
  std::vector<SurveyPoint> points;
  Locality locality = Locality::Wolds;
  bool rnr = false;  // designated Roadside Nature Reserve

  friend bool operator==(const SurveySection&, const SurveySection&) = default;
};

enum class ScoreScheme : std::uint8_t { FourClass, FiveClass };

std::string_view to_string(ScoreScheme s);
std::optional<ScoreScheme> parse_scheme(std::string_view name);
constexpr int class_count(ScoreScheme s) { return s == ScoreScheme::FourClass ? 4 : 5; }

/// Ordinal conservation class, 1 (no potential) upwards.
struct ScoreClass {
  int ordinal = 1;
  ScoreScheme scheme = ScoreScheme::FourClass;

  friend bool operator==(const ScoreClass&, const ScoreClass&) = default;
  friend auto operator<=>(const ScoreClass& a, const ScoreClass& b) { return a.ordinal <=> b.ordinal; }
};

/// Short score-range name for a class, e.g. "8 - 11".
std::string class_name(int ordinal, ScoreScheme scheme);

/// Panorama capture month.
struct CaptureDate {
  int year = 0;
  int month = 1;

  friend bool operator==(const CaptureDate&, const CaptureDate&) = default;
  friend auto operator<=>(const CaptureDate&, const CaptureDate&) = default;
};

}  // namespace vergepipe
