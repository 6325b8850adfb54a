#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vergepipe/config.hpp"
#include "vergepipe/download.hpp"
#include "vergepipe/metadata.hpp"

namespace vergepipe {

enum class Stage : std::uint8_t { Ingest, Snap, Plan, Curate, Split, Fetch, Evaluate, All };

std::string_view to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view name);

/// Artifact file names under the output directory.
namespace artifacts {
inline constexpr std::string_view kSections = "sections.jsonl";
inline constexpr std::string_view kIngestDiagnostics = "ingest_diagnostics.jsonl";
inline constexpr std::string_view kSnaps = "snaps.jsonl";
inline constexpr std::string_view kPlans = "plans.jsonl";
inline constexpr std::string_view kCuratedManifest = "manifest.curated.jsonl";
inline constexpr std::string_view kCurationReport = "curation_report.json";
inline constexpr std::string_view kSplitManifest = "manifest.split.jsonl";
inline constexpr std::string_view kSplitReport = "split_report.json";
inline constexpr std::string_view kManifest = "manifest.jsonl";
inline constexpr std::string_view kFetchReport = "fetch_report.json";
inline constexpr std::string_view kReportText = "report.txt";
inline constexpr std::string_view kReportJson = "report.json";
inline constexpr std::string_view kReportCsv = "report.csv";
inline constexpr std::string_view kPrPoints = "pr_points.csv";
inline constexpr std::string_view kStampDir = ".stamps";
}  // namespace artifacts

/// A stage's input artifact is missing; names the stage that produces it.
class MissingArtifactError : public std::runtime_error {
 public:
  MissingArtifactError(Stage needed_by, Stage producer, std::string artifact);
  Stage producer() const { return producer_; }

 private:
  Stage producer_;
};

struct StageOutcome {
  Stage stage = Stage::Ingest;
  bool up_to_date = false;  // inputs unchanged since the last run; nothing was redone
  std::vector<std::string> notes;
};

/// Backend overrides, mainly for tests. Null members are built from the
/// configuration.
struct PipelineBackends {
  MetadataBackend* metadata = nullptr;
  ImageBackend* images = nullptr;
};

/// Runs one stage, or every stage in order for Stage::All (evaluate only
/// when predictions are configured). A stage whose inputs and configuration
/// hash to the recorded stamp, and whose outputs are intact, is skipped.
/// `on_stage_done` is called as each stage finishes.
std::vector<StageOutcome> run_stage(Stage stage, const RunConfig& config, PipelineBackends backends = {},
                                    const std::function<void(const StageOutcome&)>& on_stage_done = {});

}  // namespace vergepipe
