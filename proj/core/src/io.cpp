#include "vergepipe/io.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "json_codec.hpp"

namespace vergepipe {
namespace {

using nlohmann::json;

constexpr int kDocumentVersion = 1;

// Calls `on_header` for the first non-blank line and `on_row` for the rest,
// turning any parse or field error into a runtime_error with the line number.
void read_jsonl(std::string_view text, std::string_view schema,
                const std::function<void(const json&)>& on_header,
                const std::function<void(const json&)>& on_row) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      if (!header_seen) {
        if (!j.is_object() || j.value("schema", "") != schema) {
          throw std::runtime_error("missing " + std::string(schema) + " header");
        }
        if (j.value("version", 0) != kDocumentVersion) {
          throw std::runtime_error("unsupported " + std::string(schema) + " version " +
                                   j.value("version", json(nullptr)).dump());
        }
        on_header(j);
        header_seen = true;
        continue;
      }
      on_row(j);
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string(schema) + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!header_seen) throw std::runtime_error(std::string(schema) + " document is empty");
}

std::string header_line(std::string_view schema, json extra) {
  extra["schema"] = schema;
  extra["version"] = kDocumentVersion;
  return extra.dump() + '\n';
}

}  // namespace

std::string write_manifest_jsonl(const DatasetManifest& manifest) {
  json norm = nullptr;
  if (manifest.normalization) {
    norm = {{"mean", manifest.normalization->mean}, {"std", manifest.normalization->stddev}};
  }
  std::string out = header_line("vergepipe.manifest", {{"scheme", std::string(to_string(manifest.scheme))},
                                                       {"classes", class_count(manifest.scheme)},
                                                       {"seed", manifest.seed},
                                                       {"count", manifest.samples.size()},
                                                       {"normalization", norm}});
  for (const auto& s : manifest.samples) {
    out += detail::to_json(s).dump();
    out += '\n';
  }
  return out;
}

DatasetManifest read_manifest_jsonl(std::string_view text) {
  DatasetManifest m;
  std::size_t declared = 0;
  read_jsonl(
      text, "vergepipe.manifest",
      [&](const json& h) {
        m.scheme = detail::parse_enum<ScoreScheme>(h, "scheme", parse_scheme);
        m.seed = h.at("seed").get<std::uint64_t>();
        declared = h.at("count").get<std::size_t>();
        const auto& norm = h.at("normalization");
        if (!norm.is_null()) {
          m.normalization = NormalizationStats{norm.at("mean").get<std::vector<double>>(),
                                               norm.at("std").get<std::vector<double>>()};
        }
      },
      [&](const json& row) { m.samples.push_back(detail::sample_from_json(row, m.scheme)); });
  if (declared != m.samples.size()) {
    throw std::runtime_error("vergepipe.manifest: header declares " + std::to_string(declared) +
                             " samples, found " + std::to_string(m.samples.size()));
  }
  return m;
}

std::string write_snaps_jsonl(const std::vector<SectionSnaps>& snaps) {
  std::string out = header_line("vergepipe.snaps", {{"count", snaps.size()}});
  for (const auto& s : snaps) {
    json results = json::array();
    for (const auto& r : s.snaps) results.push_back(detail::to_json(r));
    json chain = json::array();
    for (const auto& e : s.chain) {
      chain.push_back({{"pano", detail::to_json(e.pano)},
                       {"point_index", e.point_index},
                       {"interpolated", e.interpolated}});
    }
    out += json{{"section_id", s.section_id}, {"snaps", results}, {"chain", chain}}.dump();
    out += '\n';
  }
  return out;
}

std::vector<SectionSnaps> read_snaps_jsonl(std::string_view text) {
  std::vector<SectionSnaps> out;
  read_jsonl(
      text, "vergepipe.snaps", [](const json&) {},
      [&](const json& row) {
        SectionSnaps s;
        s.section_id = row.at("section_id").get<std::string>();
        for (const auto& r : row.at("snaps")) s.snaps.push_back(detail::snap_from_json(r));
        for (const auto& e : row.at("chain")) {
          s.chain.push_back({detail::pano_from_json(e.at("pano")), e.at("point_index").get<std::size_t>(),
                             e.at("interpolated").get<bool>()});
        }
        out.push_back(std::move(s));
      });
  return out;
}

std::string write_plans_jsonl(const std::vector<ExtractionPlan>& plans) {
  std::string out = header_line("vergepipe.plans", {{"count", plans.size()}});
  for (const auto& p : plans) {
    out += detail::to_json(p).dump();
    out += '\n';
  }
  return out;
}

std::vector<ExtractionPlan> read_plans_jsonl(std::string_view text) {
  std::vector<ExtractionPlan> out;
  read_jsonl(
      text, "vergepipe.plans", [](const json&) {},
      [&](const json& row) { out.push_back(detail::plan_from_json(row)); });
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace vergepipe
