#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vergepipe/types.hpp"

namespace vergepipe {

/// Maps a positive-indicator species count onto its conservation class.
///
///   FourClass: 0-3 -> 1, 4-7 -> 2, 8-11 -> 3, 12+ -> 4
///   FiveClass: as FourClass, except 20+ (or any Roadside Nature Reserve) -> 5
///
/// Throws std::invalid_argument for a negative count.
ScoreClass quantize_score(int species_count, ScoreScheme scheme, bool rnr_flag = false);

/// Human-readable problems with a section; empty when the section is usable.
std::vector<std::string> validate_section(const SurveySection& section);

/// Sections as JSON lines, preceded by a schema header line.
std::string write_sections_jsonl(const std::vector<SurveySection>& sections);

/// Throws std::runtime_error on a malformed document.
std::vector<SurveySection> read_sections_jsonl(std::string_view text);

}  // namespace vergepipe
