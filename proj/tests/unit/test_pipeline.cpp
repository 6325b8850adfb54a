#include <gtest/gtest.h>

#include <json.hpp>

#include "temp_dir.hpp"
#include "vergepipe/hashing.hpp"
#include "vergepipe/io.hpp"
#include "vergepipe/pipeline.hpp"
#include "vergepipe/survey.hpp"
#include "vergepipe/synthetic.hpp"

using namespace vergepipe;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  TempDir dir{"pipe"};
  synthetic::EndToEndExpectation expected = synthetic::write_end_to_end_fixture(dir.path());
  RunConfig cfg = load_config(dir / "vergepipe.yaml", [](const std::string&) { return std::nullopt; });

  fs::path out(std::string_view name) const { return cfg.paths.output_dir / name; }
};

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST(Stages, NamesRoundTrip) {
  for (Stage s : {Stage::Ingest, Stage::Snap, Stage::Plan, Stage::Curate, Stage::Split, Stage::Fetch,
                  Stage::Evaluate, Stage::All}) {
    EXPECT_EQ(parse_stage(to_string(s)), s);
  }
  EXPECT_FALSE(parse_stage("train"));
}

TEST(Pipeline, EndToEndCountsMatchFixture) {
  Fixture f;
  std::vector<Stage> seen;
  const auto outcomes = run_stage(Stage::All, f.cfg, {}, [&](const StageOutcome& o) { seen.push_back(o.stage); });
  ASSERT_EQ(outcomes.size(), 7u);
  EXPECT_EQ(seen, (std::vector<Stage>{Stage::Ingest, Stage::Snap, Stage::Plan, Stage::Curate, Stage::Split,
                                      Stage::Fetch, Stage::Evaluate}));
  for (const auto& o : outcomes) EXPECT_FALSE(o.up_to_date);

  const auto& ex = f.expected;
  EXPECT_EQ(read_sections_jsonl(read_file(f.out(artifacts::kSections))).size(), ex.sections);
  EXPECT_EQ(line_count(read_file(f.out(artifacts::kIngestDiagnostics))), ex.ingest_diagnostics);

  std::size_t points = 0, accepted = 0, too_far = 0, passed_over = 0;
  for (const auto& section : read_snaps_jsonl(read_file(f.out(artifacts::kSnaps)))) {
    for (const auto& s : section.snaps) {
      ++points;
      accepted += s.accepted ? 1 : 0;
      too_far += s.reject_reason == SnapRejection::TooFar ? 1 : 0;
      passed_over += s.passed_over.empty() ? 0 : 1;
    }
  }
  EXPECT_EQ(points, ex.gt_points);
  EXPECT_EQ(accepted, ex.accepted_snaps);
  EXPECT_EQ(too_far, ex.too_far);
  EXPECT_EQ(passed_over, ex.passed_over);

  const auto report = nlohmann::json::parse(read_file(f.out(artifacts::kCurationReport)));
  EXPECT_EQ(report["planned"].get<std::size_t>(), ex.planned);
  EXPECT_EQ(report["filtered_out"].get<std::size_t>(), ex.filtered_out);
  EXPECT_EQ(report["duplicates"].get<std::size_t>(), ex.duplicates);
  EXPECT_EQ(report["purged"].get<std::size_t>(), ex.purged);
  EXPECT_EQ(report["active"].get<std::size_t>(), ex.active);

  const auto manifest = read_manifest_jsonl(read_file(f.out(artifacts::kManifest)));
  EXPECT_EQ(manifest.count(SampleStatus::Active), ex.active);
  std::map<int, std::size_t> per_class;
  for (const auto& s : manifest.samples) {
    if (s.status != SampleStatus::Active) continue;
    ++per_class[s.label.ordinal];
    EXPECT_TRUE(s.split);
    EXPECT_TRUE(s.fold);
    EXPECT_EQ(s.fetch, FetchStatus::Fetched);
    EXPECT_TRUE(fs::exists(f.cfg.paths.output_dir / s.image_path)) << s.image_path;
  }
  EXPECT_EQ(per_class, ex.active_per_class);
  EXPECT_TRUE(fs::exists(f.out(artifacts::kReportText)));
  EXPECT_TRUE(fs::exists(f.out(artifacts::kReportJson)));
  EXPECT_TRUE(fs::exists(f.out(artifacts::kReportCsv)));
}

TEST(Pipeline, SecondRunIsANoOp) {
  Fixture f;
  run_stage(Stage::All, f.cfg);
  const auto manifest_hash = sha256_file(f.out(artifacts::kManifest));
  for (const auto& o : run_stage(Stage::All, f.cfg)) EXPECT_TRUE(o.up_to_date) << to_string(o.stage);
  EXPECT_EQ(sha256_file(f.out(artifacts::kManifest)), manifest_hash);
}

TEST(Pipeline, ChangedSettingRerunsFromThatStage) {
  Fixture f;
  run_stage(Stage::All, f.cfg);
  auto changed = f.cfg;
  changed.seed = 42;
  changed.split.seed = 42;
  changed.folds.seed = 42;
  const auto outcomes = run_stage(Stage::All, changed);
  for (const auto& o : outcomes) {
    const bool before_split = o.stage == Stage::Ingest || o.stage == Stage::Snap || o.stage == Stage::Plan;
    if (before_split) {
      EXPECT_TRUE(o.up_to_date) << to_string(o.stage);
    }
    if (o.stage == Stage::Split) {
      EXPECT_FALSE(o.up_to_date);
    }
  }
}

TEST(Pipeline, MissingPredecessorNamesProducer) {
  Fixture f;
  for (auto [stage, producer] : {std::pair{Stage::Snap, Stage::Ingest}, std::pair{Stage::Plan, Stage::Ingest},
                                 std::pair{Stage::Curate, Stage::Plan}, std::pair{Stage::Split, Stage::Curate},
                                 std::pair{Stage::Fetch, Stage::Split}}) {
    try {
      run_stage(stage, f.cfg);
      ADD_FAILURE() << to_string(stage);
    } catch (const MissingArtifactError& e) {
      EXPECT_EQ(e.producer(), producer);
      EXPECT_NE(std::string(e.what()).find("run the '" + std::string(to_string(producer)) + "' stage"),
                std::string::npos)
          << e.what();
    }
  }
}

TEST(Pipeline, DeletingDownstreamArtifactsLeavesUpstreamIntact) {
  Fixture f;
  run_stage(Stage::All, f.cfg);
  const std::vector<std::string_view> upstream = {artifacts::kSections, artifacts::kSnaps, artifacts::kPlans,
                                                  artifacts::kCuratedManifest};
  std::map<std::string_view, std::string> hashes;
  for (auto name : upstream) hashes[name] = sha256_file(f.out(name));

  fs::remove(f.out(artifacts::kSplitManifest));
  fs::remove(f.out(artifacts::kManifest));
  fs::remove_all(f.cfg.paths.output_dir / "images");
  const auto outcomes = run_stage(Stage::All, f.cfg);
  for (const auto& o : outcomes) {
    if (o.stage == Stage::Ingest || o.stage == Stage::Snap || o.stage == Stage::Plan || o.stage == Stage::Curate) {
      EXPECT_TRUE(o.up_to_date) << to_string(o.stage);
    }
    if (o.stage == Stage::Split || o.stage == Stage::Fetch) {
      EXPECT_FALSE(o.up_to_date) << to_string(o.stage);
    }
  }
  for (auto name : upstream) EXPECT_EQ(sha256_file(f.out(name)), hashes[name]) << name;
  EXPECT_TRUE(fs::exists(f.out(artifacts::kManifest)));
}

TEST(Pipeline, CorruptedOutputIsRegenerated) {
  Fixture f;
  run_stage(Stage::Ingest, f.cfg);
  const auto good = read_file(f.out(artifacts::kSections));
  write_file(f.out(artifacts::kSections), "tampered\n");
  const auto again = run_stage(Stage::Ingest, f.cfg);
  EXPECT_FALSE(again[0].up_to_date);
  EXPECT_EQ(read_file(f.out(artifacts::kSections)), good);
}

TEST(Pipeline, EvaluateWithoutPredictionsIsSkippedInAll) {
  Fixture f;
  f.cfg.paths.predictions.reset();
  const auto outcomes = run_stage(Stage::All, f.cfg);
  EXPECT_EQ(outcomes.back().stage, Stage::Evaluate);
  EXPECT_FALSE(fs::exists(f.out(artifacts::kReportText)));
  EXPECT_THROW(run_stage(Stage::Evaluate, f.cfg), std::runtime_error);
}

TEST(Pipeline, InjectedBackendsAreUsed) {
  Fixture f;
  run_stage(Stage::Ingest, f.cfg);
  MockMetadataBackend empty({});
  PipelineBackends b;
  b.metadata = &empty;
  run_stage(Stage::Snap, f.cfg, b);
  EXPECT_GT(empty.calls(), 0u);
  for (const auto& section : read_snaps_jsonl(read_file(f.out(artifacts::kSnaps)))) {
    for (const auto& s : section.snaps) EXPECT_EQ(s.reject_reason, SnapRejection::NoCandidates);
  }
}
