#include "vergepipe/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "vergepipe/hashing.hpp"
#include "vergepipe/io.hpp"
#include "vergepipe/kml.hpp"
#include "vergepipe/survey.hpp"

namespace vergepipe {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr Stage kOrder[] = {Stage::Ingest, Stage::Snap,  Stage::Plan,    Stage::Curate,
                            Stage::Split,  Stage::Fetch, Stage::Evaluate};

struct Input {
  std::string name;  // label used in the stamp
  fs::path path;
  std::optional<Stage> producer;  // set for pipeline artifacts
};

class StageRunner {
 public:
  StageRunner(const RunConfig& cfg, PipelineBackends backends) : cfg_(cfg), backends_(backends) {}

  StageOutcome run(Stage stage);

 private:
  fs::path out(std::string_view name) const { return cfg_.paths.output_dir / name; }
  Input artifact(std::string_view name, Stage producer) const {
    return {std::string(name), out(name), producer};
  }

  std::vector<Input> inputs_for(Stage stage) const;
  std::vector<std::string> outputs_for(Stage stage) const;
  json settings_for(Stage stage) const;

  void ingest(StageOutcome& o);
  void snap(StageOutcome& o);
  void plan(StageOutcome& o);
  void curate(StageOutcome& o);
  void split_stage(StageOutcome& o);
  void fetch(StageOutcome& o);
  void evaluate(StageOutcome& o);

  MetadataBackend& metadata_backend();
  ImageBackend& image_backend();

  const RunConfig& cfg_;
  PipelineBackends backends_;
  std::unique_ptr<MetadataBackend> owned_metadata_;
  std::unique_ptr<ImageBackend> owned_images_;
};

std::vector<Input> StageRunner::inputs_for(Stage stage) const {
  std::vector<Input> in;
  switch (stage) {
    case Stage::Ingest:
      for (const auto& k : cfg_.paths.kml) in.push_back({k.filename().string(), k, std::nullopt});
      break;
    case Stage::Snap:
      in.push_back(artifact(artifacts::kSections, Stage::Ingest));
      if (cfg_.backend == BackendMode::Mock) in.push_back({"mock_panoramas", *cfg_.paths.mock_panoramas, {}});
      break;
    case Stage::Plan:
      in.push_back(artifact(artifacts::kSections, Stage::Ingest));
      in.push_back(artifact(artifacts::kSnaps, Stage::Snap));
      break;
    case Stage::Curate:
      in.push_back(artifact(artifacts::kPlans, Stage::Plan));
      if (cfg_.paths.purge_list) in.push_back({"purge_list", *cfg_.paths.purge_list, {}});
      break;
    case Stage::Split:
      in.push_back(artifact(artifacts::kCuratedManifest, Stage::Curate));
      break;
    case Stage::Fetch:
      in.push_back(artifact(artifacts::kSplitManifest, Stage::Split));
      if (cfg_.backend == BackendMode::Mock) in.push_back({"mock_panoramas", *cfg_.paths.mock_panoramas, {}});
      break;
    case Stage::Evaluate:
      if (cfg_.paths.predictions) in.push_back({"predictions", *cfg_.paths.predictions, {}});
      break;
    case Stage::All:
      break;
  }
  return in;
}

std::vector<std::string> StageRunner::outputs_for(Stage stage) const {
  switch (stage) {
    case Stage::Ingest:
      return {std::string(artifacts::kSections), std::string(artifacts::kIngestDiagnostics)};
    case Stage::Snap:
      return {std::string(artifacts::kSnaps)};
    case Stage::Plan:
      return {std::string(artifacts::kPlans)};
    case Stage::Curate:
      return {std::string(artifacts::kCuratedManifest), std::string(artifacts::kCurationReport)};
    case Stage::Split:
      return {std::string(artifacts::kSplitManifest), std::string(artifacts::kSplitReport)};
    case Stage::Fetch:
      return {std::string(artifacts::kManifest), std::string(artifacts::kFetchReport)};
    case Stage::Evaluate: {
      std::vector<std::string> outs;
      for (auto f : cfg_.evaluate.formats) {
        outs.emplace_back(f == ReportFormat::Text   ? artifacts::kReportText
                          : f == ReportFormat::Json ? artifacts::kReportJson
                                                    : artifacts::kReportCsv);
      }
      return outs;
    }
    case Stage::All:
      break;
  }
  return {};
}

// Configuration that influences a stage's outputs; part of its stamp.
json StageRunner::settings_for(Stage stage) const {
  switch (stage) {
    case Stage::Ingest:
      return {{"score_prefix", cfg_.kml.score_prefix},
              {"rnr_field", cfg_.kml.rnr_field},
              {"locality_field", cfg_.kml.locality_field},
              {"section_id_field", cfg_.kml.section_id_field},
              {"default_locality", std::string(to_string(cfg_.kml.default_locality))}};
    case Stage::Snap:
      return {{"backend", std::string(to_string(cfg_.backend))},
              {"threshold_m", cfg_.snap.options.threshold_m},
              {"max_hops", cfg_.snap.options.max_hops},
              {"spacing_factor", cfg_.snap.options.spacing_factor},
              {"query_step_m", cfg_.snap.query_step_m},
              {"interpolate", cfg_.snap.interpolate},
              {"interpolation_step_m", cfg_.snap.interpolation.step_m},
              {"max_chain_hops", cfg_.snap.interpolation.max_chain_hops},
              {"base_url", cfg_.metadata.endpoint.base_url},
              {"search_radius_m", cfg_.metadata.endpoint.search_radius_m},
              {"mock_radius_m", cfg_.metadata.mock_radius_m}};
    case Stage::Plan:
      return {{"scheme", std::string(to_string(cfg_.plan.scheme))},
              {"heading_policy", std::string(to_string(cfg_.plan.heading_policy))},
              {"fov", cfg_.plan.camera.fov},
              {"pitch", cfg_.plan.camera.pitch},
              {"width", cfg_.plan.camera.width},
              {"height", cfg_.plan.camera.height}};
    case Stage::Curate: {
      auto set_json = [](const auto& s) {
        json out = nullptr;
        if (s) {
          out = json::array();
          for (const auto& v : *s) {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Locality>) {
              out.push_back(std::string(to_string(v)));
            } else {
              out.push_back(v);
            }
          }
        }
        return out;
      };
      return {{"scheme", std::string(to_string(cfg_.plan.scheme))},
              {"seed", cfg_.seed},
              {"localities", set_json(cfg_.filters.localities)},
              {"years", set_json(cfg_.filters.years)},
              {"months", set_json(cfg_.filters.months)}};
    }
    case Stage::Split:
      return {{"seed", cfg_.seed},
              {"train", cfg_.split.fractions.train},
              {"val", cfg_.split.fractions.val},
              {"test", cfg_.split.fractions.test},
              {"split_group_by_pano", cfg_.split.group_by_pano},
              {"k", cfg_.folds.k},
              {"folds_group_by_pano", cfg_.folds.group_by_pano}};
    case Stage::Fetch:
      return {{"backend", std::string(to_string(cfg_.backend))},
              {"base_url", cfg_.metadata.endpoint.base_url},
              {"image_path", cfg_.metadata.endpoint.image_path}};
    case Stage::Evaluate: {
      json formats = json::array();
      for (auto f : cfg_.evaluate.formats) formats.push_back(static_cast<int>(f));
      return {{"scheme", std::string(to_string(cfg_.plan.scheme))},
              {"kappa", cfg_.evaluate.kappa == KappaWeighting::Quadratic ? "quadratic" : "linear"},
              {"formats", formats}};
    }
    case Stage::All:
      break;
  }
  return json::object();
}

MetadataBackend& StageRunner::metadata_backend() {
  if (backends_.metadata) return *backends_.metadata;
  if (!owned_metadata_) {
    if (cfg_.backend == BackendMode::Mock) {
      owned_metadata_ = MockMetadataBackend::from_jsonl(read_file(*cfg_.paths.mock_panoramas),
                                                        cfg_.metadata.mock_radius_m);
    } else {
      owned_metadata_ = std::make_unique<HttpMetadataBackend>(cfg_.metadata.endpoint);
    }
  }
  return *owned_metadata_;
}

ImageBackend& StageRunner::image_backend() {
  if (backends_.images) return *backends_.images;
  if (!owned_images_) {
    if (cfg_.backend == BackendMode::Mock) {
      owned_images_ = std::make_unique<MockImageBackend>();
    } else {
      owned_images_ = std::make_unique<HttpImageBackend>(cfg_.metadata.endpoint);
    }
  }
  return *owned_images_;
}

std::shared_ptr<RateLimiter> make_limiter(const RunConfig& cfg) {
  // The mock backend is local; pacing it would only slow runs down.
  return std::make_shared<RateLimiter>(cfg.backend == BackendMode::Mock ? 0.0 : cfg.concurrency.rate_per_s);
}

StageOutcome StageRunner::run(Stage stage) {
  StageOutcome outcome;
  outcome.stage = stage;

  const auto inputs = inputs_for(stage);
  json stamp_inputs = json::object();
  for (const auto& in : inputs) {
    if (!fs::exists(in.path)) {
      if (in.producer) throw MissingArtifactError(stage, *in.producer, in.path.string());
      throw std::runtime_error(fmt::format("{}: input {} does not exist", to_string(stage), in.path.string()));
    }
    stamp_inputs[in.name] = sha256_file(in.path);
  }
  const json stamp_key = {{"stage", std::string(to_string(stage))},
                          {"settings", settings_for(stage)},
                          {"inputs", stamp_inputs}};
  const auto input_hash = sha256_hex(stamp_key.dump());
  const fs::path stamp_path = out(artifacts::kStampDir) / (std::string(to_string(stage)) + ".json");

  const auto outputs = outputs_for(stage);
  if (fs::exists(stamp_path)) {
    try {
      const auto stamp = json::parse(read_file(stamp_path));
      bool intact = stamp.at("input_hash").get<std::string>() == input_hash;
      for (const auto& name : outputs) {
        if (!intact) break;
        const auto& recorded = stamp.at("outputs");
        intact = recorded.contains(name) && fs::exists(out(name)) &&
                 recorded.at(name).get<std::string>() == sha256_file(out(name));
      }
      if (intact) {
        outcome.up_to_date = true;
        outcome.notes.push_back("inputs unchanged; outputs up to date");
        return outcome;
      }
    } catch (const std::exception&) {
      // An unreadable stamp just means the stage runs again.
    }
  }

  fs::create_directories(cfg_.paths.output_dir);
  switch (stage) {
    case Stage::Ingest: ingest(outcome); break;
    case Stage::Snap: snap(outcome); break;
    case Stage::Plan: plan(outcome); break;
    case Stage::Curate: curate(outcome); break;
    case Stage::Split: split_stage(outcome); break;
    case Stage::Fetch: fetch(outcome); break;
    case Stage::Evaluate: evaluate(outcome); break;
    case Stage::All: break;
  }

  json stamp = {{"stage", std::string(to_string(stage))}, {"input_hash", input_hash}, {"inputs", stamp_inputs}};
  json out_hashes = json::object();
  for (const auto& name : outputs) {
    if (fs::exists(out(name))) out_hashes[name] = sha256_file(out(name));
  }
  stamp["outputs"] = out_hashes;
  write_file(stamp_path, stamp.dump(2) + '\n');
  return outcome;
}

void StageRunner::ingest(StageOutcome& o) {
  if (cfg_.paths.kml.empty()) throw std::runtime_error("ingest: no KML inputs configured (paths.kml)");
  std::vector<SurveySection> sections;
  std::string diagnostics;
  std::map<std::string, std::string> origin;
  for (const auto& file : cfg_.paths.kml) {
    auto result = parse_kml(read_file(file), file.filename().string(), cfg_.kml);
    for (const auto& d : result.diagnostics) {
      json j = {{"file", d.file},
                {"placemark_index", d.placemark_index ? json(*d.placemark_index) : json(nullptr)},
                {"issue", std::string(to_string(d.issue))},
                {"reason", d.reason},
                {"line", d.line},
                {"column", d.column},
                {"byte_offset", d.byte_offset}};
      diagnostics += j.dump() + '\n';
    }
    if (result.syntax_error()) {
      o.notes.push_back(fmt::format("{}: XML syntax error, file skipped", file.filename().string()));
    }
    for (auto& s : result.sections) {
      auto [it, fresh] = origin.emplace(s.section_id, file.filename().string());
      if (!fresh) {
        throw std::runtime_error(fmt::format("ingest: section id '{}' appears in both {} and {}", s.section_id,
                                             it->second, file.filename().string()));
      }
      sections.push_back(std::move(s));
    }
  }
  std::size_t n_diag = static_cast<std::size_t>(std::count(diagnostics.begin(), diagnostics.end(), '\n'));
  o.notes.push_back(fmt::format("{} sections, {} diagnostics", sections.size(), n_diag));
  if (sections.empty()) throw std::runtime_error("ingest: no usable survey sections");
  write_file(out(artifacts::kIngestDiagnostics), diagnostics);
  write_file(out(artifacts::kSections), write_sections_jsonl(sections));
}

void StageRunner::snap(StageOutcome& o) {
  const auto sections = read_sections_jsonl(read_file(out(artifacts::kSections)));

  // Metadata lookups at every survey point and every query_step_m between
  // consecutive points, so the index sees each panorama along the road.
  std::vector<GeoPoint> queries;
  std::set<std::string> queued;
  auto enqueue = [&](const GeoPoint& p) {
    if (queued.insert(MetadataCache::key_for(p)).second) queries.push_back(p);
  };
  for (const auto& s : sections) {
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      enqueue(s.points[i].location);
      if (i + 1 == s.points.size()) continue;
      const auto& a = s.points[i].location;
      const auto& b = s.points[i + 1].location;
      const double seg = haversine_distance(a, b);
      for (double d = cfg_.snap.query_step_m; d < seg; d += cfg_.snap.query_step_m) {
        enqueue(intermediate_point(a, b, d / seg));
      }
    }
  }

  MetadataCache cache(cfg_.paths.cache_dir, cfg_.metadata.negative_ttl);
  MetadataClient client(metadata_backend(), &cache, make_limiter(cfg_),
                        {cfg_.api_key, cfg_.retry, cfg_.concurrency.workers});
  const auto answers = client.fetch_all(queries);

  std::map<std::string, PanoramaRecord> unique;
  for (const auto& a : answers) {
    if (a) unique.emplace(a->pano_id, *a);
  }
  PanoIndex index;
  for (auto& [id, rec] : unique) index.add(rec);
  o.notes.push_back(fmt::format("{} metadata queries ({} from the service, {} cached), {} panoramas",
                                queries.size(), client.network_calls(), client.cache_hits(), index.size()));

  std::vector<SectionSnaps> all;
  std::size_t accepted = 0;
  std::size_t total = 0;
  for (const auto& s : sections) {
    SectionSnaps ss;
    ss.section_id = s.section_id;
    ss.snaps = snap_section(s, index, cfg_.snap.options);
    std::set<std::string> in_chain;
    auto push = [&](const PanoramaRecord& p, std::size_t point, bool interpolated) {
      if (in_chain.insert(p.pano_id).second) ss.chain.push_back({p, point, interpolated});
    };
    std::optional<std::size_t> prev;
    for (std::size_t i = 0; i < ss.snaps.size(); ++i) {
      const auto& r = ss.snaps[i];
      ++total;
      if (!r.accepted) continue;
      ++accepted;
      if (prev && cfg_.snap.interpolate && ss.snaps[*prev].pano->pano_id != r.pano->pano_id) {
        const auto& a = ss.snaps[*prev];
        for (const auto& mid : interpolate_panoramas(a, r, index, cfg_.snap.interpolation)) {
          // Interpolated panoramas take the scores of the nearer survey point.
          const bool nearer_b = haversine_distance(mid.location, r.source) <
                                haversine_distance(mid.location, a.source);
          push(mid, nearer_b ? i : *prev, true);
        }
      }
      push(*r.pano, i, false);
      prev = i;
    }
    all.push_back(std::move(ss));
  }
  o.notes.push_back(fmt::format("{} of {} survey points snapped", accepted, total));
  write_file(out(artifacts::kSnaps), write_snaps_jsonl(all));
}

void StageRunner::plan(StageOutcome& o) {
  const auto sections = read_sections_jsonl(read_file(out(artifacts::kSections)));
  const auto snaps = read_snaps_jsonl(read_file(out(artifacts::kSnaps)));
  std::map<std::string, const SurveySection*> by_id;
  for (const auto& s : sections) by_id.emplace(s.section_id, &s);

  std::vector<ExtractionPlan> plans;
  std::size_t requests = 0;
  std::size_t skipped = 0;
  for (const auto& ss : snaps) {
    const auto it = by_id.find(ss.section_id);
    if (it == by_id.end()) {
      throw std::runtime_error("plan: snaps reference unknown section '" + ss.section_id + "'; re-run snap");
    }
    const SurveySection& section = *it->second;
    std::vector<PanoramaRecord> chain;
    for (const auto& e : ss.chain) chain.push_back(e.pano);

    PlanContext ctx{section.section_id, section.locality, cfg_.plan.scheme, section.rnr,
                    cfg_.plan.heading_policy, cfg_.plan.camera};
    for (const auto& e : ss.chain) {
      const auto& pts = section.points;
      Bearing road;
      try {
        if (chain.size() >= 2) {
          road = road_bearing_at(e.pano, chain);
        } else {
          // A lone panorama takes the direction of the surveyed line.
          const std::size_t i = e.point_index;
          road = i + 1 < pts.size() ? forward_bearing(pts[i].location, pts[i + 1].location)
                                    : forward_bearing(pts[i - 1].location, pts[i].location);
        }
      } catch (const std::invalid_argument& err) {
        o.notes.push_back(fmt::format("{}: no road bearing at {}: {}", section.section_id, e.pano.pano_id,
                                      err.what()));
        continue;
      }
      const auto& scores = pts.at(e.point_index).scores;
      auto match = match_octant_scores(e.pano, road, scores);
      auto p = plan_images(e.pano, road, match.matches, ctx);
      p.skipped = std::move(match.skipped);
      requests += p.requests.size();
      skipped += p.skipped.size();
      plans.push_back(std::move(p));
    }
  }
  o.notes.push_back(fmt::format("{} panoramas planned, {} image requests, {} unmatched verges", plans.size(),
                                requests, skipped));
  write_file(out(artifacts::kPlans), write_plans_jsonl(plans));
}

json class_counts(const DatasetManifest& m, SampleStatus status) {
  json out = json::object();
  for (int c = 1; c <= class_count(m.scheme); ++c) out[class_name(c, m.scheme)] = 0;
  for (const auto& s : m.samples) {
    if (s.status == status) out[class_name(s.label.ordinal, m.scheme)] = out[class_name(s.label.ordinal, m.scheme)].get<int>() + 1;
  }
  return out;
}

void StageRunner::curate(StageOutcome& o) {
  const auto plans = read_plans_jsonl(read_file(out(artifacts::kPlans)));
  std::size_t planned = 0;
  for (const auto& p : plans) planned += p.requests.size();
  const auto kept = apply_filters(plans, cfg_.filters);
  auto manifest = build_manifest(kept, cfg_.plan.scheme);
  manifest.seed = cfg_.seed;
  const std::size_t built = manifest.samples.size();
  manifest = dedup(std::move(manifest));
  const std::size_t after_dedup = manifest.count(SampleStatus::Active);

  json purged_by_reason = json::object();
  std::size_t purge_entries = 0;
  if (cfg_.paths.purge_list) {
    const auto entries = parse_purge_csv(read_file(*cfg_.paths.purge_list));
    purge_entries = entries.size();
    manifest = apply_purge(std::move(manifest), entries);
  }
  for (const auto& s : manifest.samples) {
    if (s.status == SampleStatus::Purged && s.purge_reason) {
      const std::string key(to_string(*s.purge_reason));
      purged_by_reason[key] = purged_by_reason.value(key, 0) + 1;
    }
  }

  const json report = {
      {"planned", planned},
      {"filtered_out", planned - built},
      {"manifest_samples", built},
      {"duplicates", manifest.count(SampleStatus::Duplicate)},
      {"active_after_dedup", after_dedup},
      {"purge_list_entries", purge_entries},
      {"purged", manifest.count(SampleStatus::Purged)},
      {"purged_by_reason", purged_by_reason},
      {"active", manifest.count(SampleStatus::Active)},
      {"active_per_class", class_counts(manifest, SampleStatus::Active)},
      {"scheme", std::string(to_string(manifest.scheme))},
  };
  o.notes.push_back(fmt::format("{} planned, {} filtered out, {} duplicates, {} purged, {} active", planned,
                                planned - built, manifest.count(SampleStatus::Duplicate),
                                manifest.count(SampleStatus::Purged), manifest.count(SampleStatus::Active)));
  write_file(out(artifacts::kCurationReport), report.dump(2) + '\n');
  write_file(out(artifacts::kCuratedManifest), write_manifest_jsonl(manifest));
}

void StageRunner::split_stage(StageOutcome& o) {
  auto manifest = read_manifest_jsonl(read_file(out(artifacts::kCuratedManifest)));
  manifest.seed = cfg_.seed;
  manifest = split(std::move(manifest), cfg_.split);
  manifest = make_folds(std::move(manifest), cfg_.folds);

  json splits = json::object();
  for (auto sp : {Split::Train, Split::Val, Split::Test}) {
    json per_class = json::object();
    for (int c = 1; c <= class_count(manifest.scheme); ++c) per_class[class_name(c, manifest.scheme)] = 0;
    std::size_t n = 0;
    for (const auto& s : manifest.samples) {
      if (s.split != sp) continue;
      ++n;
      auto& slot = per_class[class_name(s.label.ordinal, manifest.scheme)];
      slot = slot.get<int>() + 1;
    }
    splits[std::string(to_string(sp))] = {{"total", n}, {"per_class", per_class}};
  }
  json folds = json::object();
  for (int f = 1; f <= cfg_.folds.k; ++f) {
    folds[std::to_string(f)] = std::count_if(manifest.samples.begin(), manifest.samples.end(),
                                             [&](const Sample& s) { return s.fold == f; });
  }
  json oversampling = json::object();
  try {
    for (const auto& r : oversample_plan(manifest, Split::Train)) oversampling[r.sample_id] = r.count;
  } catch (const std::invalid_argument& e) {
    o.notes.push_back(std::string("no oversampling plan: ") + e.what());
    oversampling = nullptr;
  }
  const json report = {{"seed", cfg_.seed}, {"splits", splits}, {"folds", folds},
                       {"train_oversampling", oversampling}};
  auto split_total = [&](Split sp) { return splits[std::string(to_string(sp))]["total"].get<int>(); };
  o.notes.push_back(fmt::format("train {}, val {}, test {}", split_total(Split::Train), split_total(Split::Val),
                                split_total(Split::Test)));
  write_file(out(artifacts::kSplitReport), report.dump(2) + '\n');
  write_file(out(artifacts::kSplitManifest), write_manifest_jsonl(manifest));
}

void StageRunner::fetch(StageOutcome& o) {
  auto manifest = read_manifest_jsonl(read_file(out(artifacts::kSplitManifest)));
  DownloadOptions opts{cfg_.paths.output_dir, cfg_.api_key, cfg_.retry, cfg_.concurrency.workers};
  DownloadSummary summary;
  std::exception_ptr failure;
  try {
    summary = download_images(manifest, image_backend(), make_limiter(cfg_), opts);
  } catch (const FetchError&) {
    failure = std::current_exception();
  }
  std::size_t failed = 0;
  for (const auto& s : manifest.samples) failed += s.fetch == FetchStatus::Failed ? 1 : 0;
  const json report = {{"fetched", manifest.count(SampleStatus::Active) - failed},
                       {"failed", failed},
                       {"failures", [&] {
                          json f = json::array();
                          for (const auto& s : manifest.samples) {
                            if (s.fetch == FetchStatus::Failed) f.push_back({{"sample_id", s.sample_id}, {"error", s.fetch_error}});
                          }
                          return f;
                        }()}};
  o.notes.push_back(fmt::format("{} downloaded, {} reused from disk, {} failed", summary.fetched, summary.cached,
                                summary.failed));
  write_file(out(artifacts::kFetchReport), report.dump(2) + '\n');
  write_file(out(artifacts::kManifest), write_manifest_jsonl(manifest));
  if (failure) std::rethrow_exception(failure);
}

void StageRunner::evaluate(StageOutcome& o) {
  if (!cfg_.paths.predictions) throw std::runtime_error("evaluate: no predictions file configured (paths.predictions)");
  const int k = class_count(cfg_.plan.scheme);
  const auto predictions = read_predictions_csv(read_file(*cfg_.paths.predictions), k);
  if (predictions.empty()) throw std::runtime_error("evaluate: predictions file has no rows");
  std::vector<int> y_true;
  std::vector<int> y_pred;
  std::vector<std::vector<double>> scores;
  bool have_scores = true;
  for (const auto& p : predictions) {
    y_true.push_back(p.true_class);
    y_pred.push_back(p.pred_class);
    have_scores = have_scores && !p.scores.empty();
    scores.push_back(p.scores);
  }

  if (fs::exists(out(artifacts::kManifest))) {
    const auto manifest = read_manifest_jsonl(read_file(out(artifacts::kManifest)));
    std::size_t unknown = 0;
    for (const auto& p : predictions) unknown += manifest.find(p.sample_id) == nullptr ? 1 : 0;
    if (unknown > 0) o.notes.push_back(fmt::format("{} predictions name samples not in the manifest", unknown));
  }

  std::vector<std::string> names;
  for (int c = 1; c <= k; ++c) names.push_back(class_name(c, cfg_.plan.scheme));
  const auto rep = report(confusion(y_true, y_pred, k), names, cfg_.evaluate.kappa);
  for (auto f : cfg_.evaluate.formats) {
    const auto name = f == ReportFormat::Text   ? artifacts::kReportText
                      : f == ReportFormat::Json ? artifacts::kReportJson
                                                : artifacts::kReportCsv;
    write_file(out(name), export_report(rep, f));
  }
  if (have_scores) {
    std::string csv = "class,threshold,recall,precision,interpolated_precision\n";
    const auto curves = pr_points(y_true, scores);
    for (std::size_t c = 0; c < curves.size(); ++c) {
      for (const auto& pt : curves[c]) {
        csv += fmt::format("{},{},{},{},{}\n", names[c], pt.threshold, pt.recall, pt.precision,
                           pt.interpolated_precision);
      }
    }
    write_file(out(artifacts::kPrPoints), csv);
  }
  o.notes.push_back(fmt::format("{} predictions, accuracy {:.2f}%, macro F1 {:.2f}, kappa {:.4f}", predictions.size(),
                                rep.overall_accuracy_pct, rep.macro.f1, rep.kappa));
}

}  // namespace

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Snap: return "snap";
    case Stage::Plan: return "plan";
    case Stage::Curate: return "curate";
    case Stage::Split: return "split";
    case Stage::Fetch: return "fetch";
    case Stage::Evaluate: return "evaluate";
    case Stage::All: return "all";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (auto s : {Stage::Ingest, Stage::Snap, Stage::Plan, Stage::Curate, Stage::Split, Stage::Fetch,
                 Stage::Evaluate, Stage::All}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

MissingArtifactError::MissingArtifactError(Stage needed_by, Stage producer, std::string artifact)
    : std::runtime_error(fmt::format("{} needs {}, which does not exist; run the '{}' stage first",
                                     to_string(needed_by), artifact, to_string(producer))),
      producer_(producer) {}

std::vector<StageOutcome> run_stage(Stage stage, const RunConfig& config, PipelineBackends backends,
                                    const std::function<void(const StageOutcome&)>& on_stage_done) {
  StageRunner runner(config, backends);
  std::vector<StageOutcome> outcomes;
  auto record = [&](StageOutcome o) {
    if (on_stage_done) on_stage_done(o);
    outcomes.push_back(std::move(o));
  };
  if (stage != Stage::All) {
    record(runner.run(stage));
    return outcomes;
  }
  for (Stage s : kOrder) {
    if (s == Stage::Evaluate && !config.paths.predictions) {
      record({s, false, {"skipped: no predictions file configured"}});
      continue;
    }
    record(runner.run(s));
  }
  return outcomes;
}

}  // namespace vergepipe
