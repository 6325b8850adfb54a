#include <gtest/gtest.h>

#include <random>

#include <json.hpp>

#include "temp_dir.hpp"
#include "vergepipe/io.hpp"
#include "vergepipe/synthetic.hpp"

using namespace vergepipe;
using testing_support::TempDir;

namespace {

DatasetManifest curated(std::uint64_t seed) {
  const auto fx = synthetic::curation_fixture(480, 4, 6, seed);
  auto m = apply_purge(dedup(build_manifest(fx.plans, ScoreScheme::FourClass)), fx.purge_list);
  m = split(m, {{}, seed, true});
  m = make_folds(m, {5, seed, true});
  return m;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

}  // namespace

TEST(ManifestJsonl, RoundTripIsExact) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto m = curated(seed);
    m.samples[0].fetch = FetchStatus::Failed;
    m.samples[0].fetch_error = "HTTP 503 \"busy\"\n";
    m.samples[1].image_path = "images/ab/abc.img";
    if (seed % 2) m.normalization = NormalizationStats{{0.4, 0.5, 0.6}, {0.2, 0.2, 0.25}};
    const auto text = write_manifest_jsonl(m);
    const auto back = read_manifest_jsonl(text);
    EXPECT_EQ(back, m);
    EXPECT_EQ(write_manifest_jsonl(back), text);
  }
}

TEST(ManifestJsonl, HeaderAndRowSchema) {
  const auto m = curated(1);
  const auto lines = lines_of(write_manifest_jsonl(m));
  ASSERT_EQ(lines.size(), m.samples.size() + 1);
  const auto header = nlohmann::json::parse(lines[0]);
  EXPECT_EQ(header["schema"], "vergepipe.manifest");
  EXPECT_EQ(header["version"], 1);
  EXPECT_EQ(header["classes"], 4);
  EXPECT_EQ(header["count"], m.samples.size());
  EXPECT_TRUE(header["normalization"].is_null());

  // Fields the training side reads.
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto row = nlohmann::json::parse(lines[i]);
    for (const char* key : {"sample_id", "image_path", "label", "class_index", "class_name", "status", "split",
                            "fold", "pano_id", "heading", "section_id"}) {
      EXPECT_TRUE(row.contains(key)) << key;
    }
    EXPECT_EQ(row["class_index"].get<int>(), row["label"].get<int>() - 1);
    const auto& s = m.samples[i - 1];
    EXPECT_EQ(row["split"].is_null(), s.status != SampleStatus::Active);
  }
}

TEST(ManifestJsonl, Errors) {
  const auto good = write_manifest_jsonl(curated(2));
  auto expect_error = [](const std::string& text, const std::string& fragment) {
    try {
      read_manifest_jsonl(text);
      ADD_FAILURE() << "accepted: " << text.substr(0, 80);
    } catch (const std::runtime_error& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_error("", "empty");
  expect_error("{\"schema\":\"other\",\"version\":1}\n", "missing vergepipe.manifest header");
  auto bumped = good;
  bumped.replace(bumped.find("\"version\":1"), 11, "\"version\":7");
  expect_error(bumped, "unsupported");

  auto torn = good.substr(0, good.size() - 5);
  const auto line_count = lines_of(torn).size();
  expect_error(torn, "line " + std::to_string(line_count));

  // Dropping a whole row trips the count check.
  auto short_doc = good.substr(0, good.rfind('\n', good.size() - 2) + 1);
  expect_error(short_doc, "header declares");

  auto bad_label = good;
  const auto pos = bad_label.find("\"label\":");
  bad_label.replace(pos, 9, "\"label\":9");
  expect_error(bad_label, "line 2");
}

TEST(SnapsJsonl, RoundTrip) {
  synthetic::RoadSpec spec;
  spec.scores = {{CompassOctant::E, 6}};
  const auto road = synthetic::straight_road(spec);
  SectionSnaps s;
  s.section_id = road.section.section_id;
  s.snaps = snap_section(road.section, PanoIndex(road.panoramas));
  for (std::size_t i = 0; i < s.snaps.size(); ++i) {
    if (s.snaps[i].pano) s.chain.push_back({*s.snaps[i].pano, i, i % 3 == 1});
  }
  SectionSnaps empty;
  empty.section_id = "nothing";
  empty.snaps.push_back({{53.0, -0.1}, std::nullopt, 0.0, false, SnapRejection::NoCandidates, {}});
  const std::vector<SectionSnaps> all = {s, empty};
  const auto text = write_snaps_jsonl(all);
  EXPECT_EQ(read_snaps_jsonl(text), all);
  EXPECT_THROW(read_snaps_jsonl("{\"schema\":\"vergepipe.plans\",\"version\":1}\n"), std::runtime_error);
}

TEST(PlansJsonl, RoundTrip) {
  const auto fx = synthetic::curation_fixture(60, 3, 0, 5);
  auto plans = fx.plans;
  plans[0].skipped.push_back({plans[0].pano.pano_id, CompassOctant::W, VergeSide::Left, "no score in perpendicular octant"});
  const auto text = write_plans_jsonl(plans);
  EXPECT_EQ(read_plans_jsonl(text), plans);
  EXPECT_EQ(write_plans_jsonl(read_plans_jsonl(text)), text);
  EXPECT_THROW(read_plans_jsonl(text.substr(0, text.size() / 2)), std::runtime_error);
}

TEST(Files, WriteReplacesAtomically) {
  TempDir dir("io");
  const auto path = dir / "nested" / "deeper" / "out.txt";
  write_file(path, "first");
  EXPECT_EQ(read_file(path), "first");
  write_file(path, std::string("sec\0ond", 7));
  EXPECT_EQ(read_file(path), std::string("sec\0ond", 7));
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  EXPECT_THROW(read_file(dir / "missing"), std::runtime_error);
}
