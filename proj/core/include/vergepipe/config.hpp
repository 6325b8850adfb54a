#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vergepipe/curation.hpp"
#include "vergepipe/http_backend.hpp"
#include "vergepipe/kml.hpp"
#include "vergepipe/metrics.hpp"
#include "vergepipe/pano.hpp"
#include "vergepipe/planner.hpp"
#include "vergepipe/throttle.hpp"

namespace vergepipe {

enum class BackendMode : std::uint8_t { Live, Mock };

std::string_view to_string(BackendMode m);
std::optional<BackendMode> parse_backend_mode(std::string_view name);

/// Every knob of a pipeline run. Relative paths are resolved against the
/// directory of the configuration file.
struct RunConfig {
  std::uint64_t seed = 0;
  BackendMode backend = BackendMode::Live;

  struct Paths {
    std::vector<std::filesystem::path> kml;
    std::filesystem::path output_dir;
    std::filesystem::path cache_dir;  // defaults to <output_dir>/cache
    std::optional<std::filesystem::path> purge_list;
    std::optional<std::filesystem::path> predictions;
    std::optional<std::filesystem::path> mock_panoramas;  // required by the mock backend
  } paths;

  KmlMapping kml;

  struct Snap {
    SnapOptions options;
    double query_step_m = 10.0;  // metadata lookups between survey points
    bool interpolate = false;
    InterpolationOptions interpolation;
  } snap;

  struct Metadata {
    HttpEndpoint endpoint;
    double mock_radius_m = 50.0;
    std::optional<std::chrono::seconds> negative_ttl;
  } metadata;

  struct Plan {
    ScoreScheme scheme = ScoreScheme::FourClass;
    HeadingPolicy heading_policy = HeadingPolicy::OctantCenters;
    CameraParams camera;
  } plan;

  FilterCriteria filters;
  SplitOptions split;  // seed is taken from RunConfig::seed
  FoldOptions folds;   // likewise

  struct Concurrency {
    int workers = 4;
    double rate_per_s = 10.0;
  } concurrency;

  RetryPolicy retry;

  struct Evaluate {
    KappaWeighting kappa = KappaWeighting::Quadratic;
    std::vector<ReportFormat> formats{ReportFormat::Text, ReportFormat::Json, ReportFormat::Csv};
  } evaluate;

  std::string api_key;  // from credentials.api_key, else the SV_API_KEY environment variable
};

/// All problems found in a configuration document, each prefixed with the
/// dotted path of the offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

/// Expands ${NAME} and ${NAME:-fallback}. Throws std::invalid_argument for an
/// unset variable without a fallback or an unterminated reference.
std::string interpolate_env(std::string_view text, const EnvLookup& env);

RunConfig parse_config(std::string_view yaml, const std::filesystem::path& base_dir,
                       const EnvLookup& env = process_env);
RunConfig load_config(const std::filesystem::path& file, const EnvLookup& env = process_env);

}  // namespace vergepipe
