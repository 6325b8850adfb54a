#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vergepipe/types.hpp"

namespace vergepipe {

/// Field names used to pull scores and attributes out of a Placemark's
/// ExtendedData. The defaults describe the documented fixture schema
/// (docs/kml_subset.md); survey exports with other field names are adapted
/// by overriding these.
struct KmlMapping {
  std::string score_prefix = "score_";  // score_N ... score_NW
  std::string rnr_field = "rnr";
  std::string locality_field = "locality";
  std::string section_id_field = "section_id";  // falls back to <name>, then "placemark-<i>"
  Locality default_locality = Locality::Wolds;
};

enum class KmlIssue : std::uint8_t {
  XmlSyntax,
  MissingCoordinates,
  MalformedCoordinate,
  CoordinateOutOfRange,
  TooFewPoints,
  NoScores,
  InvalidScore,
  DuplicateOctant,
  InvalidAttribute,
};

std::string_view to_string(KmlIssue issue);

struct KmlDiagnostic {
  std::string file;
  std::optional<std::size_t> placemark_index;  // absent for document-level errors
  KmlIssue issue = KmlIssue::XmlSyntax;
  std::string reason;
  std::uint64_t line = 0;  // 1-based source position where known
  std::uint64_t column = 0;
  std::uint64_t byte_offset = 0;
};

struct KmlParseResult {
  std::vector<SurveySection> sections;
  std::vector<KmlDiagnostic> diagnostics;

  bool syntax_error() const;
};

/// Parses the supported KML subset. Never throws on bad input: malformed
/// XML yields a single XmlSyntax diagnostic, malformed Placemarks yield one
/// diagnostic each and are skipped.
KmlParseResult parse_kml(std::string_view bytes, std::string_view file_name = "<memory>",
                         const KmlMapping& mapping = {});

}  // namespace vergepipe
