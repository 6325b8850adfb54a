// vergepipe: drive the verge survey image pipeline stage by stage.
//
//   vergepipe <stage> --config run.yaml [--seed N] [--backend live|mock]
//   vergepipe geojson --config run.yaml --source manifest|snaps [--output FILE]
//   vergepipe synth --output-dir DIR
//
// Exit status: 0 success, 1 configuration error, 2 stage failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "vergepipe/config.hpp"
#include "vergepipe/geojson.hpp"
#include "vergepipe/io.hpp"
#include "vergepipe/pipeline.hpp"
#include "vergepipe/synthetic.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kStageFailure = 2;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string backend;
};

vergepipe::RunConfig load(const CommonOptions& opts) {
  auto cfg = vergepipe::load_config(opts.config);
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.split.seed = *opts.seed;
    cfg.folds.seed = *opts.seed;
  }
  if (!opts.backend.empty()) {
    cfg.backend = *vergepipe::parse_backend_mode(opts.backend);
    if (cfg.backend == vergepipe::BackendMode::Mock && !cfg.paths.mock_panoramas) {
      throw vergepipe::ConfigError({"paths.mock_panoramas: required by the mock backend"});
    }
  }
  return cfg;
}

void print_config_error(const vergepipe::ConfigError& e) {
  fmt::print(stderr, "configuration error:\n");
  for (const auto& p : e.problems()) fmt::print(stderr, "  {}\n", p);
}

int run_pipeline(vergepipe::Stage stage, const CommonOptions& opts) {
  vergepipe::RunConfig cfg;
  try {
    cfg = load(opts);
  } catch (const vergepipe::ConfigError& e) {
    print_config_error(e);
    return kConfigError;
  }
  try {
    vergepipe::run_stage(stage, cfg, {}, [](const vergepipe::StageOutcome& o) {
      fmt::print("[{}]{}\n", vergepipe::to_string(o.stage), o.up_to_date ? " up to date" : "");
      for (const auto& n : o.notes) fmt::print("  {}\n", n);
      std::fflush(stdout);
    });
  } catch (const std::exception& e) {
    fmt::print(stderr, "{} failed: {}\n", vergepipe::to_string(stage), e.what());
    return kStageFailure;
  }
  return kOk;
}

int export_geojson(const CommonOptions& opts, const std::string& source, const std::string& output) {
  vergepipe::RunConfig cfg;
  try {
    cfg = load(opts);
  } catch (const vergepipe::ConfigError& e) {
    print_config_error(e);
    return kConfigError;
  }
  try {
    std::string doc;
    if (source == "snaps") {
      doc = vergepipe::export_geojson(vergepipe::read_snaps_jsonl(
          vergepipe::read_file(cfg.paths.output_dir / vergepipe::artifacts::kSnaps)));
    } else {
      auto path = cfg.paths.output_dir / vergepipe::artifacts::kManifest;
      if (!std::filesystem::exists(path)) path = cfg.paths.output_dir / vergepipe::artifacts::kSplitManifest;
      if (!std::filesystem::exists(path)) path = cfg.paths.output_dir / vergepipe::artifacts::kCuratedManifest;
      doc = vergepipe::export_geojson(vergepipe::read_manifest_jsonl(vergepipe::read_file(path)));
    }
    if (output.empty() || output == "-") {
      std::cout << doc;
    } else {
      vergepipe::write_file(output, doc);
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "geojson failed: {}\n", e.what());
    return kStageFailure;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verge survey image pipeline"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", opts.config, "Run configuration (YAML)")->required();
    sub->add_option("--seed", opts.seed, "Override the configured seed");
    sub->add_option("--backend", opts.backend, "Override the street-view backend")
        ->check(CLI::IsMember({"live", "mock"}));
  };

  std::optional<vergepipe::Stage> chosen;
  for (auto stage : {vergepipe::Stage::Ingest, vergepipe::Stage::Snap, vergepipe::Stage::Plan,
                     vergepipe::Stage::Curate, vergepipe::Stage::Split, vergepipe::Stage::Fetch,
                     vergepipe::Stage::Evaluate, vergepipe::Stage::All}) {
    const std::string name(vergepipe::to_string(stage));
    auto* sub = app.add_subcommand(name, stage == vergepipe::Stage::All ? "Run every stage in order"
                                                                         : "Run the " + name + " stage");
    add_common(sub);
    sub->callback([&chosen, stage] { chosen = stage; });
  }

  std::string source = "manifest";
  std::string output;
  auto* geo = app.add_subcommand("geojson", "Export the manifest or snap results as GeoJSON");
  add_common(geo);
  geo->add_option("--source", source, "What to export")->check(CLI::IsMember({"manifest", "snaps"}));
  geo->add_option("-o,--output", output, "Output file (default stdout)");

  std::string synth_dir;
  auto* synth = app.add_subcommand("synth", "Write the synthetic end-to-end fixture");
  synth->add_option("-o,--output-dir", synth_dir, "Directory to write into")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (chosen) return run_pipeline(*chosen, opts);
  if (geo->parsed()) return export_geojson(opts, source, output);
  if (synth->parsed()) {
    try {
      const auto ex = vergepipe::synthetic::write_end_to_end_fixture(synth_dir);
      fmt::print("wrote {} sections ({} survey points) to {}\n", ex.sections, ex.gt_points, synth_dir);
      fmt::print("expected: {} planned, {} filtered out, {} duplicates, {} purged, {} active\n", ex.planned,
                 ex.filtered_out, ex.duplicates, ex.purged, ex.active);
    } catch (const std::exception& e) {
      fmt::print(stderr, "synth failed: {}\n", e.what());
      return kStageFailure;
    }
  }
  return kOk;
}
