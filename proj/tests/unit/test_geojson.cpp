#include <gtest/gtest.h>

#include <json.hpp>

#include "vergepipe/geojson.hpp"
#include "vergepipe/synthetic.hpp"

using namespace vergepipe;
using nlohmann::json;

TEST(GeoJson, EmptyManifestEmptyCollection) {
  const auto doc = json::parse(export_geojson(DatasetManifest{}));
  EXPECT_EQ(doc["type"], "FeatureCollection");
  EXPECT_TRUE(doc["features"].is_array());
  EXPECT_TRUE(doc["features"].empty());
}

TEST(GeoJson, OnePointPerSampleLonLatOrder) {
  DatasetManifest m;
  for (int i = 0; i < 3; ++i) {
    Sample s;
    s.sample_id = "s" + std::to_string(i);
    s.location = {53.0 + i * 0.01, -0.5 + i * 0.02};
    s.label = {i + 1, ScoreScheme::FourClass};
    if (i == 1) s.status = SampleStatus::Purged;
    m.samples.push_back(s);
  }
  const auto doc = json::parse(export_geojson(m));
  ASSERT_EQ(doc["features"].size(), 3u);
  for (int i = 0; i < 3; ++i) {
    const auto& f = doc["features"][static_cast<std::size_t>(i)];
    EXPECT_EQ(f["type"], "Feature");
    EXPECT_EQ(f["geometry"]["type"], "Point");
    const auto& c = f["geometry"]["coordinates"];
    ASSERT_EQ(c.size(), 2u);
    EXPECT_DOUBLE_EQ(c[0].get<double>(), -0.5 + i * 0.02);
    EXPECT_DOUBLE_EQ(c[1].get<double>(), 53.0 + i * 0.01);
    EXPECT_EQ(f["properties"]["sample_id"], "s" + std::to_string(i));
  }
  EXPECT_EQ(doc["features"][1]["properties"]["status"], "Purged");
}

TEST(GeoJson, SnapOutcomesAtSurveyedLocation) {
  synthetic::RoadSpec spec;
  spec.scores = {{CompassOctant::E, 4}};
  const auto road = synthetic::straight_road(spec);
  SectionSnaps s;
  s.section_id = road.section.section_id;
  s.snaps = snap_section(road.section, PanoIndex(road.panoramas));
  const auto doc = json::parse(export_geojson(std::vector<SectionSnaps>{s}));
  ASSERT_EQ(doc["features"].size(), s.snaps.size());
  for (std::size_t i = 0; i < s.snaps.size(); ++i) {
    const auto& c = doc["features"][i]["geometry"]["coordinates"];
    EXPECT_DOUBLE_EQ(c[0].get<double>(), s.snaps[i].source.lon);
    EXPECT_DOUBLE_EQ(c[1].get<double>(), s.snaps[i].source.lat);
  }
}
