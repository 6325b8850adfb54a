#include "vergepipe/survey.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "json_codec.hpp"

namespace vergepipe {

ScoreClass quantize_score(int species_count, ScoreScheme scheme, bool rnr_flag) {
  if (species_count < 0) {
    throw std::invalid_argument("species count must be non-negative, got " +
                                std::to_string(species_count));
  }
  int ordinal = 4;
  if (species_count <= 3) {
    ordinal = 1;
  } else if (species_count <= 7) {
    ordinal = 2;
  } else if (species_count <= 11) {
    ordinal = 3;
  }
  if (scheme == ScoreScheme::FiveClass && (rnr_flag || species_count >= 20)) ordinal = 5;
  return {ordinal, scheme};
}

std::vector<std::string> validate_section(const SurveySection& section) {
  std::vector<std::string> problems;
  if (section.points.size() < 2) problems.emplace_back("too few points");
  for (std::size_t i = 0; i < section.points.size(); ++i) {
    const auto& pt = section.points[i];
    if (!is_valid(pt.location)) problems.push_back("point " + std::to_string(i) + " out of range");
    std::set<CompassOctant> seen;
    for (const auto& s : pt.scores) {
      if (!seen.insert(s.octant).second) {
        problems.push_back("point " + std::to_string(i) + " repeats octant " +
                           std::string(to_string(s.octant)));
      }
      if (s.species_count < 0) problems.push_back("point " + std::to_string(i) + " negative score");
    }
  }
  return problems;
}

std::string write_sections_jsonl(const std::vector<SurveySection>& sections) {
  std::string out;
  nlohmann::json header = {{"schema", "vergepipe.sections"}, {"version", 1},
                           {"count", sections.size()}};
  out += header.dump();
  out += '\n';
  for (const auto& s : sections) {
    out += detail::to_json(s).dump();
    out += '\n';
  }
  return out;
}

std::vector<SurveySection> read_sections_jsonl(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<SurveySection> sections;
  bool header_seen = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (!header_seen) {
        if (j.value("schema", "") != "vergepipe.sections") {
          throw std::runtime_error("missing vergepipe.sections header");
        }
        header_seen = true;
        continue;
      }
      sections.push_back(detail::section_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("sections line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!header_seen) throw std::runtime_error("sections document is empty");
  return sections;
}

}  // namespace vergepipe
