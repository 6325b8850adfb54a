#include "vergepipe/config.hpp"

#include <cstdlib>
#include <cmath>
#include <set>
#include <utility>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "vergepipe/io.hpp"

namespace vergepipe {
namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += "; ";
    out += s;
  }
  return out;
}

// Walks one mapping node, converting known keys and remembering which keys
// were consumed so the rest can be reported as unknown.
class Section {
 public:
  Section(YAML::Node node, std::string path, std::vector<std::string>& problems, const EnvLookup& env,
          const std::filesystem::path& base_dir)
      : node_(std::move(node)), path_(std::move(path)), problems_(problems), env_(env), base_dir_(base_dir) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      fail(path_.empty() ? "<root>" : path_, "expected a mapping");
      node_ = YAML::Node();
    }
  }

  ~Section() {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.contains(key)) fail(field(key), "unknown key");
    }
  }

  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  Section child(const std::string& key) {
    seen_.insert(key);
    YAML::Node n = node_ && node_.IsMap() ? std::as_const(node_)[key] : YAML::Node();
    return Section(n, field(key), problems_, env_, base_dir_);
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  void get(const std::string& key, std::string& out) {
    if (auto text = scalar(key)) out = *text;
  }

  void get(const std::string& key, double& out) {
    convert(key, out, "a number", [](const std::string& s, double& v) {
      std::size_t used = 0;
      v = std::stod(s, &used);
      return used == s.size() && std::isfinite(v);
    });
  }

  void get(const std::string& key, int& out) {
    convert(key, out, "an integer", [](const std::string& s, int& v) {
      std::size_t used = 0;
      v = std::stoi(s, &used);
      return used == s.size();
    });
  }

  void get(const std::string& key, std::uint64_t& out) {
    convert(key, out, "a non-negative integer", [](const std::string& s, std::uint64_t& v) {
      if (s.empty() || s.front() == '-') return false;
      std::size_t used = 0;
      v = std::stoull(s, &used);
      return used == s.size();
    });
  }

  void get(const std::string& key, bool& out) {
    convert(key, out, "true or false", [](const std::string& s, bool& v) {
      if (s == "true" || s == "yes" || s == "on") {
        v = true;
      } else if (s == "false" || s == "no" || s == "off") {
        v = false;
      } else {
        return false;
      }
      return true;
    });
  }

  void get_path(const std::string& key, std::filesystem::path& out) {
    if (auto text = scalar(key)) out = resolve(*text);
  }

  void get_path(const std::string& key, std::optional<std::filesystem::path>& out) {
    if (auto text = scalar(key)) out = resolve(*text);
  }

  template <typename E, typename Parse>
  void get_enum(const std::string& key, E& out, Parse parse, std::string_view choices) {
    if (auto text = scalar(key)) {
      if (auto v = parse(*text)) {
        out = *v;
      } else {
        fail(field(key), fmt::format("'{}' is not one of {}", *text, choices));
      }
    }
  }

  /// Sequence of scalars; a lone scalar counts as a one-element list.
  std::optional<std::vector<std::string>> list(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    const YAML::Node n = std::as_const(node_)[key];
    std::vector<std::string> out;
    auto take = [&](const YAML::Node& item, const std::string& where) {
      if (!item.IsScalar()) {
        fail(where, "expected a scalar");
        return;
      }
      try {
        out.push_back(interpolate_env(item.Scalar(), env_));
      } catch (const std::invalid_argument& e) {
        fail(where, e.what());
      }
    };
    if (n.IsSequence()) {
      for (std::size_t i = 0; i < n.size(); ++i) take(n[i], fmt::format("{}[{}]", field(key), i));
    } else if (n.IsScalar()) {
      take(n, field(key));
    } else if (!n.IsNull()) {
      fail(field(key), "expected a list");
    }
    return out;
  }

  template <typename T, typename Parse>
  std::optional<std::set<T>> set(const std::string& key, Parse parse, const char* what) {
    auto items = list(key);
    if (!items) return std::nullopt;
    std::set<T> out;
    for (const auto& s : *items) {
      if (auto v = parse(s)) {
        out.insert(*v);
      } else {
        fail(field(key), fmt::format("'{}' is not {}", s, what));
      }
    }
    return out;
  }

  std::filesystem::path resolve(const std::string& text) const {
    std::filesystem::path p(text);
    return p.is_absolute() ? p : base_dir_ / p;
  }

  void fail(const std::string& where, const std::string& why) { problems_.push_back(where + ": " + why); }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::optional<std::string> scalar(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    const YAML::Node n = std::as_const(node_)[key];
    if (n.IsNull()) return std::nullopt;
    if (!n.IsScalar()) {
      fail(field(key), "expected a scalar value");
      return std::nullopt;
    }
    try {
      return interpolate_env(n.Scalar(), env_);
    } catch (const std::invalid_argument& e) {
      fail(field(key), e.what());
      return std::nullopt;
    }
  }

  template <typename T, typename Conv>
  void convert(const std::string& key, T& out, const char* what, Conv conv) {
    auto text = scalar(key);
    if (!text) return;
    T v{};
    bool ok = false;
    try {
      ok = conv(*text, v);
    } catch (const std::exception&) {
      ok = false;
    }
    if (ok) {
      out = v;
    } else {
      fail(field(key), fmt::format("expected {}, got '{}'", what, *text));
    }
  }

  YAML::Node node_;
  std::string path_;
  std::vector<std::string>& problems_;
  const EnvLookup& env_;
  const std::filesystem::path& base_dir_;
  std::set<std::string> seen_;
};

std::optional<int> parse_int(const std::string& s) {
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

std::optional<KappaWeighting> parse_kappa(std::string_view s) {
  if (s == "quadratic") return KappaWeighting::Quadratic;
  if (s == "linear") return KappaWeighting::Linear;
  return std::nullopt;
}

void check(std::vector<std::string>& problems, bool ok, const std::string& where, const std::string& why) {
  if (!ok) problems.push_back(where + ": " + why);
}

}  // namespace

std::string_view to_string(BackendMode m) { return m == BackendMode::Live ? "live" : "mock"; }

std::optional<BackendMode> parse_backend_mode(std::string_view name) {
  if (name == "live") return BackendMode::Live;
  if (name == "mock") return BackendMode::Mock;
  return std::nullopt;
}

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("invalid configuration: " + join(problems)), problems_(std::move(problems)) {}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

std::string interpolate_env(std::string_view text, const EnvLookup& env) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto open = text.find("${", i);
    if (open == std::string_view::npos) {
      out.append(text.substr(i));
      break;
    }
    out.append(text.substr(i, open - i));
    const auto close = text.find('}', open);
    if (close == std::string_view::npos) {
      throw std::invalid_argument("unterminated ${ in '" + std::string(text) + "'");
    }
    std::string_view ref = text.substr(open + 2, close - open - 2);
    std::optional<std::string_view> fallback;
    if (const auto dash = ref.find(":-"); dash != std::string_view::npos) {
      fallback = ref.substr(dash + 2);
      ref = ref.substr(0, dash);
    }
    if (ref.empty()) throw std::invalid_argument("empty variable reference in '" + std::string(text) + "'");
    if (auto value = env(std::string(ref))) {
      out += *value;
    } else if (fallback) {
      out.append(*fallback);
    } else {
      throw std::invalid_argument("environment variable " + std::string(ref) + " is not set");
    }
    i = close + 1;
  }
  return out;
}

RunConfig parse_config(std::string_view yaml, const std::filesystem::path& base_dir, const EnvLookup& env) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::Exception& e) {
    throw ConfigError({fmt::format("<document>: YAML syntax error at line {}, column {}: {}", e.mark.line + 1,
                                   e.mark.column + 1, e.msg)});
  }

  RunConfig cfg;
  std::vector<std::string> problems;
  {
    Section top(root, "", problems, env, base_dir);
    top.get("seed", cfg.seed);
    top.get_enum("backend", cfg.backend, parse_backend_mode, "live, mock");

    {
      auto s = top.child("paths");
      if (auto kml = s.list("kml")) {
        for (const auto& k : *kml) cfg.paths.kml.push_back(s.resolve(k));
      }
      s.get_path("output_dir", cfg.paths.output_dir);
      s.get_path("cache_dir", cfg.paths.cache_dir);
      s.get_path("purge_list", cfg.paths.purge_list);
      s.get_path("predictions", cfg.paths.predictions);
      s.get_path("mock_panoramas", cfg.paths.mock_panoramas);
    }
    {
      auto s = top.child("kml");
      s.get("score_prefix", cfg.kml.score_prefix);
      s.get("rnr_field", cfg.kml.rnr_field);
      s.get("locality_field", cfg.kml.locality_field);
      s.get("section_id_field", cfg.kml.section_id_field);
      s.get_enum("default_locality", cfg.kml.default_locality, parse_locality,
                 "Wolds, NorthernEdge, LimestoneGrassland");
    }
    {
      auto s = top.child("snap");
      s.get("threshold_m", cfg.snap.options.threshold_m);
      s.get("max_hops", cfg.snap.options.max_hops);
      s.get("spacing_factor", cfg.snap.options.spacing_factor);
      s.get("query_step_m", cfg.snap.query_step_m);
      s.get("interpolate", cfg.snap.interpolate);
      s.get("interpolation_step_m", cfg.snap.interpolation.step_m);
      s.get("max_chain_hops", cfg.snap.interpolation.max_chain_hops);
      cfg.snap.interpolation.snap_threshold_m = cfg.snap.options.threshold_m;
    }
    {
      auto s = top.child("metadata");
      s.get("base_url", cfg.metadata.endpoint.base_url);
      s.get("metadata_path", cfg.metadata.endpoint.metadata_path);
      s.get("image_path", cfg.metadata.endpoint.image_path);
      s.get("search_radius_m", cfg.metadata.endpoint.search_radius_m);
      int timeout = static_cast<int>(cfg.metadata.endpoint.timeout.count());
      s.get("timeout_s", timeout);
      cfg.metadata.endpoint.timeout = std::chrono::seconds(timeout);
      s.get("mock_radius_m", cfg.metadata.mock_radius_m);
      int ttl = -1;
      s.get("negative_ttl_s", ttl);
      if (ttl >= 0) cfg.metadata.negative_ttl = std::chrono::seconds(ttl);
    }
    {
      auto s = top.child("plan");
      s.get_enum("scheme", cfg.plan.scheme, parse_scheme, "FourClass, FiveClass");
      s.get_enum("heading_policy", cfg.plan.heading_policy, parse_heading_policy,
                 "octant_centers, perpendicular_offsets");
      auto c = s.child("camera");
      c.get("fov", cfg.plan.camera.fov);
      c.get("pitch", cfg.plan.camera.pitch);
      c.get("width", cfg.plan.camera.width);
      c.get("height", cfg.plan.camera.height);
    }
    {
      auto s = top.child("filters");
      cfg.filters.localities = s.set<Locality>("localities", parse_locality, "a locality");
      cfg.filters.years = s.set<int>("years", parse_int, "a year");
      cfg.filters.months = s.set<int>("months", parse_int, "a month");
    }
    {
      auto s = top.child("split");
      s.get("train", cfg.split.fractions.train);
      s.get("val", cfg.split.fractions.val);
      s.get("test", cfg.split.fractions.test);
      s.get("group_by_pano", cfg.split.group_by_pano);
    }
    {
      auto s = top.child("folds");
      s.get("k", cfg.folds.k);
      s.get("group_by_pano", cfg.folds.group_by_pano);
    }
    {
      auto s = top.child("concurrency");
      s.get("workers", cfg.concurrency.workers);
      s.get("rate_per_s", cfg.concurrency.rate_per_s);
    }
    {
      auto s = top.child("retry");
      s.get("max_attempts", cfg.retry.max_attempts);
      int base = static_cast<int>(cfg.retry.base_delay.count());
      int max = static_cast<int>(cfg.retry.max_delay.count());
      s.get("base_delay_ms", base);
      s.get("max_delay_ms", max);
      s.get("multiplier", cfg.retry.multiplier);
      cfg.retry.base_delay = std::chrono::milliseconds(base);
      cfg.retry.max_delay = std::chrono::milliseconds(max);
    }
    {
      auto s = top.child("evaluate");
      s.get_enum("kappa", cfg.evaluate.kappa, parse_kappa, "quadratic, linear");
      if (auto formats = s.list("formats")) {
        cfg.evaluate.formats.clear();
        for (const auto& f : *formats) {
          if (auto v = parse_report_format(f)) {
            cfg.evaluate.formats.push_back(*v);
          } else {
            s.fail("evaluate.formats", "'" + f + "' is not one of text, json, csv");
          }
        }
      }
    }
    {
      auto s = top.child("credentials");
      s.get("api_key", cfg.api_key);
    }
  }

  cfg.split.seed = cfg.seed;
  cfg.folds.seed = cfg.seed;
  if (cfg.api_key.empty()) {
    if (auto key = env(std::string(kCredentialEnvVar))) cfg.api_key = *key;
  }
  if (cfg.paths.cache_dir.empty() && !cfg.paths.output_dir.empty()) cfg.paths.cache_dir = cfg.paths.output_dir / "cache";

  check(problems, !cfg.paths.output_dir.empty(), "paths.output_dir", "required");
  check(problems, cfg.snap.options.threshold_m > 0, "snap.threshold_m", "must be positive");
  check(problems, cfg.snap.options.max_hops >= 1, "snap.max_hops", "must be at least 1");
  check(problems, cfg.snap.options.spacing_factor > 0, "snap.spacing_factor", "must be positive");
  check(problems, cfg.snap.query_step_m > 0, "snap.query_step_m", "must be positive");
  check(problems, cfg.snap.interpolation.step_m > 0, "snap.interpolation_step_m", "must be positive");
  check(problems, cfg.metadata.mock_radius_m > 0, "metadata.mock_radius_m", "must be positive");
  check(problems, cfg.plan.camera.fov > 0 && cfg.plan.camera.fov <= 120, "plan.camera.fov", "must be in (0, 120]");
  check(problems, cfg.plan.camera.pitch >= -90 && cfg.plan.camera.pitch <= 90, "plan.camera.pitch",
        "must be in [-90, 90]");
  check(problems, cfg.plan.camera.width > 0 && cfg.plan.camera.height > 0, "plan.camera",
        "width and height must be positive");
  const auto& f = cfg.split.fractions;
  check(problems, f.train >= 0 && f.val >= 0 && f.test >= 0 && std::abs(f.train + f.val + f.test - 1.0) < 1e-9,
        "split", "train, val and test must be non-negative and sum to 1");
  check(problems, cfg.folds.k >= 2, "folds.k", "must be at least 2");
  check(problems, cfg.concurrency.workers >= 1, "concurrency.workers", "must be at least 1");
  check(problems, cfg.retry.max_attempts >= 1, "retry.max_attempts", "must be at least 1");
  check(problems, cfg.backend != BackendMode::Mock || cfg.paths.mock_panoramas.has_value(),
        "paths.mock_panoramas", "required by the mock backend");
  try {
    cfg.filters.validate();
  } catch (const std::invalid_argument& e) {
    problems.push_back(std::string("filters: ") + e.what());
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

RunConfig load_config(const std::filesystem::path& file, const EnvLookup& env) {
  std::string text;
  try {
    text = read_file(file);
  } catch (const std::exception& e) {
    throw ConfigError({file.string() + ": " + e.what()});
  }
  return parse_config(text, file.has_parent_path() ? file.parent_path() : std::filesystem::path("."), env);
}

}  // namespace vergepipe
