#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vergepipe/curation.hpp"
#include "vergepipe/pano.hpp"
#include "vergepipe/planner.hpp"

namespace vergepipe {

/// Dataset manifest as JSON lines: a header object followed by one sample
/// per line, keys sorted, so identical manifests serialize byte-identically.
std::string write_manifest_jsonl(const DatasetManifest& manifest);

/// Throws std::runtime_error naming the line on a malformed document or a
/// schema version this build does not understand.
DatasetManifest read_manifest_jsonl(std::string_view text);

/// A panorama on a section's road chain and the survey point whose scores
/// it carries.
struct ChainEntry {
  PanoramaRecord pano;
  std::size_t point_index = 0;
  bool interpolated = false;

  friend bool operator==(const ChainEntry&, const ChainEntry&) = default;
};

/// Survey-point snaps for one section, as persisted between stages.
struct SectionSnaps {
  std::string section_id;
  std::vector<SnapResult> snaps;
  std::vector<ChainEntry> chain;  // accepted and interpolated panoramas in road order

  friend bool operator==(const SectionSnaps&, const SectionSnaps&) = default;
};

std::string write_snaps_jsonl(const std::vector<SectionSnaps>& snaps);
std::vector<SectionSnaps> read_snaps_jsonl(std::string_view text);

std::string write_plans_jsonl(const std::vector<ExtractionPlan>& plans);
std::vector<ExtractionPlan> read_plans_jsonl(std::string_view text);

/// Whole-file helpers. write_file replaces the target atomically.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace vergepipe
