#include "vergepipe/kml.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <climits>
#include <cmath>
#include <map>
#include <memory>
#include <set>

#include <expat.h>

namespace vergepipe {
namespace {

std::string_view local_name(std::string_view qname) {
  auto pos = qname.rfind(':');
  return pos == std::string_view::npos ? qname : qname.substr(pos + 1);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, int& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

struct Field {
  std::string name;
  std::string value;
};

struct PlacemarkState {
  std::size_t index = 0;
  std::uint64_t line = 0;
  std::uint64_t column = 0;
  std::uint64_t offset = 0;
  std::string name;
  std::optional<std::string> coordinates;  // first LineString only
  std::vector<Field> fields;
};

class KmlReader {
 public:
  KmlReader(std::string_view file, const KmlMapping& mapping) : file_(file), mapping_(mapping) {}

  KmlParseResult run(std::string_view bytes) {
    std::unique_ptr<XML_ParserStruct, decltype(&XML_ParserFree)> parser(XML_ParserCreate(nullptr),
                                                                        &XML_ParserFree);
    parser_ = parser.get();
    XML_SetUserData(parser_, this);
    XML_SetElementHandler(parser_, &KmlReader::on_start, &KmlReader::on_end);
    XML_SetCharacterDataHandler(parser_, &KmlReader::on_text);

    constexpr std::size_t kChunk = 1 << 20;
    std::size_t pos = 0;
    do {
      const std::size_t n = std::min(kChunk, bytes.size() - pos);
      const bool last = pos + n == bytes.size();
      if (XML_Parse(parser_, bytes.data() + pos, static_cast<int>(n), last ? 1 : 0) ==
          XML_STATUS_ERROR) {
        KmlDiagnostic d;
        d.file = file_;
        d.issue = KmlIssue::XmlSyntax;
        d.reason = XML_ErrorString(XML_GetErrorCode(parser_));
        d.line = XML_GetCurrentLineNumber(parser_);
        d.column = XML_GetCurrentColumnNumber(parser_) + 1;
        d.byte_offset = static_cast<std::uint64_t>(XML_GetCurrentByteIndex(parser_));
        result_.sections.clear();
        result_.diagnostics.assign(1, std::move(d));
        return std::move(result_);
      }
      pos += n;
    } while (pos < bytes.size());
    return std::move(result_);
  }

 private:
  static void on_start(void* user, const XML_Char* qname, const XML_Char** attrs) {
    static_cast<KmlReader*>(user)->start(local_name(qname), attrs);
  }
  static void on_end(void* user, const XML_Char* qname) {
    static_cast<KmlReader*>(user)->end(local_name(qname));
  }
  static void on_text(void* user, const XML_Char* s, int len) {
    auto* self = static_cast<KmlReader*>(user);
    if (self->capturing_) self->text_.append(s, static_cast<std::size_t>(len));
  }

  static std::string attr(const XML_Char** attrs, std::string_view key) {
    for (int i = 0; attrs[i] != nullptr; i += 2) {
      if (local_name(attrs[i]) == key) return attrs[i + 1];
    }
    return {};
  }

  void begin_capture() {
    capturing_ = true;
    text_.clear();
  }

  void start(std::string_view name, const XML_Char** attrs) {
    stack_.emplace_back(name);
    if (name == "Placemark") {
      if (!current_) {
        current_.emplace();
        current_->index = placemark_count_++;
        current_->line = XML_GetCurrentLineNumber(parser_);
        current_->column = XML_GetCurrentColumnNumber(parser_) + 1;
        current_->offset = static_cast<std::uint64_t>(XML_GetCurrentByteIndex(parser_));
        placemark_depth_ = stack_.size();
      }
      return;
    }
    if (!current_) return;
    if (name == "LineString") {
      ++linestring_depth_;
    } else if (name == "coordinates" && linestring_depth_ > 0 && !current_->coordinates) {
      begin_capture();
    } else if (name == "name" && stack_.size() == placemark_depth_ + 1) {
      begin_capture();
    } else if (name == "Data") {
      data_name_ = attr(attrs, "name");
    } else if (name == "value" && !data_name_.empty()) {
      begin_capture();
    } else if (name == "SimpleData") {
      data_name_ = attr(attrs, "name");
      begin_capture();
    }
  }

  void end(std::string_view name) {
    if (!stack_.empty()) stack_.pop_back();
    if (!current_) return;
    if (name == "Placemark" && stack_.size() + 1 == placemark_depth_) {
      finish_placemark();
      current_.reset();
      linestring_depth_ = 0;
      return;
    }
    if (name == "LineString") {
      if (linestring_depth_ > 0) --linestring_depth_;
    } else if (name == "coordinates" && capturing_) {
      current_->coordinates = text_;
    } else if (name == "name" && capturing_) {
      current_->name = std::string(trim(text_));
    } else if ((name == "value" || name == "SimpleData") && capturing_) {
      current_->fields.push_back({data_name_, std::string(trim(text_))});
      if (name == "SimpleData") data_name_.clear();
    } else if (name == "Data") {
      data_name_.clear();
    }
    capturing_ = false;
  }

  void diagnose(const PlacemarkState& pm, KmlIssue issue, std::string reason) {
    KmlDiagnostic d;
    d.file = file_;
    d.placemark_index = pm.index;
    d.issue = issue;
    d.reason = std::move(reason);
    d.line = pm.line;
    d.column = pm.column;
    d.byte_offset = pm.offset;
    result_.diagnostics.push_back(std::move(d));
  }

  void finish_placemark() {
    const PlacemarkState& pm = *current_;
    if (!pm.coordinates) {
      diagnose(pm, KmlIssue::MissingCoordinates, "missing LineString coordinates");
      return;
    }

    std::vector<GeoPoint> points;
    std::string_view rest = *pm.coordinates;
    while (true) {
      rest = trim(rest);
      if (rest.empty()) break;
      auto end = std::find_if(rest.begin(), rest.end(),
                              [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
      std::string_view tuple(rest.data(), static_cast<std::size_t>(end - rest.begin()));
      rest.remove_prefix(tuple.size());

      std::vector<std::string_view> parts;
      std::size_t start = 0;
      for (std::size_t i = 0; i <= tuple.size(); ++i) {
        if (i == tuple.size() || tuple[i] == ',') {
          parts.push_back(tuple.substr(start, i - start));
          start = i + 1;
        }
      }
      double lon = 0.0;
      double lat = 0.0;
      double alt = 0.0;
      if (parts.size() < 2 || parts.size() > 3 || !parse_double(parts[0], lon) ||
          !parse_double(parts[1], lat) || (parts.size() == 3 && !parse_double(parts[2], alt))) {
        diagnose(pm, KmlIssue::MalformedCoordinate,
                 "malformed coordinate tuple '" + std::string(tuple.substr(0, 64)) + "'");
        return;
      }
      GeoPoint p{lat, lon};
      if (!is_valid(p)) {
        diagnose(pm, KmlIssue::CoordinateOutOfRange,
                 "coordinate out of range '" + std::string(tuple.substr(0, 64)) + "'");
        return;
      }
      points.push_back(p);
    }
    if (points.size() < 2) {
      diagnose(pm, KmlIssue::TooFewPoints, "too few points");
      return;
    }

    std::vector<VergeScore> scores;
    std::set<CompassOctant> seen;
    bool rnr = false;
    Locality locality = mapping_.default_locality;
    std::string section_id;
    for (const auto& f : pm.fields) {
      if (f.name.size() > mapping_.score_prefix.size() &&
          f.name.compare(0, mapping_.score_prefix.size(), mapping_.score_prefix) == 0) {
        auto octant = parse_octant(std::string_view(f.name).substr(mapping_.score_prefix.size()));
        if (!octant) {
          diagnose(pm, KmlIssue::InvalidAttribute, "unknown score field '" + f.name + "'");
          return;
        }
        int count = 0;
        if (!parse_int(f.value, count) || count < 0) {
          diagnose(pm, KmlIssue::InvalidScore,
                   "invalid score '" + f.value.substr(0, 32) + "' for " + f.name);
          return;
        }
        if (!seen.insert(*octant).second) {
          diagnose(pm, KmlIssue::DuplicateOctant, "octant " + std::string(to_string(*octant)) +
                                                      " scored twice");
          return;
        }
        scores.push_back({*octant, count});
      } else if (f.name == mapping_.rnr_field) {
        if (f.value == "1" || f.value == "true") {
          rnr = true;
        } else if (f.value == "0" || f.value == "false" || f.value.empty()) {
          rnr = false;
        } else {
          diagnose(pm, KmlIssue::InvalidAttribute, "invalid rnr flag '" + f.value.substr(0, 32) + "'");
          return;
        }
      } else if (f.name == mapping_.locality_field) {
        auto loc = parse_locality(f.value);
        if (!loc) {
          diagnose(pm, KmlIssue::InvalidAttribute, "unknown locality '" + f.value.substr(0, 64) + "'");
          return;
        }
        locality = *loc;
      } else if (f.name == mapping_.section_id_field) {
        section_id = f.value;
      }
    }
    if (scores.empty()) {
      diagnose(pm, KmlIssue::NoScores, "no octant scores");
      return;
    }
    std::sort(scores.begin(), scores.end(),
              [](const VergeScore& a, const VergeScore& b) { return a.octant < b.octant; });

    if (section_id.empty()) section_id = pm.name;
    if (section_id.empty()) section_id = "placemark-" + std::to_string(pm.index);

    SurveySection section;
    section.section_id = std::move(section_id);
    section.locality = locality;
    section.rnr = rnr;
    section.points.reserve(points.size());
    for (const auto& p : points) section.points.push_back({p, scores});
    result_.sections.push_back(std::move(section));
  }

  std::string file_;
  const KmlMapping& mapping_;
  XML_Parser parser_ = nullptr;
  KmlParseResult result_;

  std::vector<std::string> stack_;
  std::optional<PlacemarkState> current_;
  std::size_t placemark_depth_ = 0;
  std::size_t placemark_count_ = 0;
  int linestring_depth_ = 0;
  std::string data_name_;
  bool capturing_ = false;
  std::string text_;
};

}  // namespace

std::string_view to_string(KmlIssue issue) {
  switch (issue) {
    case KmlIssue::XmlSyntax: return "xml-syntax";
    case KmlIssue::MissingCoordinates: return "missing-coordinates";
    case KmlIssue::MalformedCoordinate: return "malformed-coordinate";
    case KmlIssue::CoordinateOutOfRange: return "coordinate-out-of-range";
    case KmlIssue::TooFewPoints: return "too-few-points";
    case KmlIssue::NoScores: return "no-scores";
    case KmlIssue::InvalidScore: return "invalid-score";
    case KmlIssue::DuplicateOctant: return "duplicate-octant";
    case KmlIssue::InvalidAttribute: return "invalid-attribute";
  }
  return "unknown";
}

bool KmlParseResult::syntax_error() const {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const KmlDiagnostic& d) { return d.issue == KmlIssue::XmlSyntax; });
}

KmlParseResult parse_kml(std::string_view bytes, std::string_view file_name,
                         const KmlMapping& mapping) {
  KmlReader reader(file_name, mapping);
  return reader.run(bytes);
}

}  // namespace vergepipe
