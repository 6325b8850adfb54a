#include "vergepipe/types.hpp"

#include <algorithm>
#include <cctype>

namespace vergepipe {
namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

constexpr std::array<std::string_view, 8> kOctantNames = {"N", "NE", "E", "SE",
                                                          "S", "SW", "W", "NW"};

}  // namespace

std::string_view to_string(CompassOctant o) { return kOctantNames[static_cast<int>(o)]; }

std::optional<CompassOctant> parse_octant(std::string_view name) {
  for (std::size_t i = 0; i < kOctantNames.size(); ++i) {
    if (iequals(name, kOctantNames[i])) return static_cast<CompassOctant>(i);
  }
  return std::nullopt;
}

std::string_view to_string(Locality l) {
  switch (l) {
    case Locality::Wolds: return "Wolds";
    case Locality::NorthernEdge: return "NorthernEdge";
    case Locality::LimestoneGrassland: return "LimestoneGrassland";
  }
  return "Wolds";
}

std::optional<Locality> parse_locality(std::string_view name) {
  if (iequals(name, "Wolds") || iequals(name, "Lincolnshire Wolds")) return Locality::Wolds;
  if (iequals(name, "NorthernEdge") || iequals(name, "Northern Lincolnshire Edge") ||
      iequals(name, "Northern Edge"))
    return Locality::NorthernEdge;
  if (iequals(name, "LimestoneGrassland") || iequals(name, "Limestone Grassland"))
    return Locality::LimestoneGrassland;
  return std::nullopt;
}

std::string_view to_string(ScoreScheme s) {
  return s == ScoreScheme::FourClass ? "FourClass" : "FiveClass";
}

std::optional<ScoreScheme> parse_scheme(std::string_view name) {
  if (iequals(name, "FourClass") || iequals(name, "four_class") || name == "4")
    return ScoreScheme::FourClass;
  if (iequals(name, "FiveClass") || iequals(name, "five_class") || name == "5")
    return ScoreScheme::FiveClass;
  return std::nullopt;
}

std::string class_name(int ordinal, ScoreScheme scheme) {
  switch (ordinal) {
    case 1: return "0 - 3";
    case 2: return "4 - 7";
    case 3: return "8 - 11";
    case 4: return scheme == ScoreScheme::FourClass ? "12+" : "12 - 19";
    case 5: return "20+";
    default: return "class " + std::to_string(ordinal);
  }
}

const VergeScore* SurveyPoint::score_for(CompassOctant o) const {
  auto it = std::find_if(scores.begin(), scores.end(),
                         [o](const VergeScore& s) { return s.octant == o; });
  return it == scores.end() ? nullptr : &*it;
}

}  // namespace vergepipe
