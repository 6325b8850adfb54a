#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vergepipe/planner.hpp"
#include "vergepipe/types.hpp"

namespace vergepipe {

/// Capture/locality selection. An absent set means "no constraint"; a
/// present set must be non-empty.
struct FilterCriteria {
  std::optional<std::set<Locality>> localities;
  std::optional<std::set<int>> years;
  std::optional<std::set<int>> months;

  /// Throws std::invalid_argument on an empty set or a month outside 1..12.
  void validate() const;
  bool accepts(Locality locality, const CaptureDate& date) const;
};

/// Keeps the plans whose section locality and panorama capture date satisfy
/// `criteria`. Order is preserved.
std::vector<ExtractionPlan> apply_filters(std::span<const ExtractionPlan> plans,
                                          const FilterCriteria& criteria);

enum class SampleStatus : std::uint8_t { Active, Purged, Duplicate };
enum class Split : std::uint8_t { Train, Val, Test };
enum class PurgeReason : std::uint8_t { Car, House, CutVerge, VergeNotVisible, Other };
enum class FetchStatus : std::uint8_t { Pending, Fetched, Failed };

std::string_view to_string(SampleStatus s);
std::string_view to_string(Split s);
std::string_view to_string(PurgeReason r);
std::string_view to_string(FetchStatus s);
std::optional<SampleStatus> parse_sample_status(std::string_view s);
std::optional<Split> parse_split(std::string_view s);
std::optional<PurgeReason> parse_purge_reason(std::string_view s);
std::optional<FetchStatus> parse_fetch_status(std::string_view s);

struct Sample {
  std::string sample_id;
  std::string image_path;  // relative to the output directory; empty until fetched
  std::string identity_key;
  ScoreClass label;
  int raw_score = 0;
  std::string section_id;
  Locality locality = Locality::Wolds;
  std::string pano_id;
  GeoPoint location;
  CaptureDate capture_date;
  CompassOctant octant = CompassOctant::N;
  VergeSide side = VergeSide::Right;
  Bearing heading;
  CameraParams camera;
  SampleStatus status = SampleStatus::Active;
  std::optional<PurgeReason> purge_reason;
  std::optional<Split> split;
  std::optional<int> fold;  // 1..k
  FetchStatus fetch = FetchStatus::Pending;
  std::string fetch_error;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Per-channel image statistics for the training side; not computed here.
struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;
};

struct DatasetManifest {
  static constexpr int kSchemaVersion = 1;

  ScoreScheme scheme = ScoreScheme::FourClass;
  std::uint64_t seed = 0;
  std::optional<NormalizationStats> normalization;
  std::vector<Sample> samples;

  std::size_t count(SampleStatus s) const;
  const Sample* find(std::string_view sample_id) const;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Stable id derived from the section and identity key.
std::string make_sample_id(std::string_view section_id, std::string_view identity_key);

/// One Active sample per planned request, in plan order.
DatasetManifest build_manifest(std::span<const ExtractionPlan> plans, ScoreScheme scheme);

/// Marks every non-purged sample whose identity key was already taken by an
/// earlier sample in (section_id, sample_id) order as Duplicate. Idempotent.
DatasetManifest dedup(DatasetManifest manifest);

struct PurgeEntry {
  std::string sample_id;
  PurgeReason reason = PurgeReason::Other;
};

/// Thrown when a purge list names samples that are not in the manifest.
class UnknownSamplesError : public std::invalid_argument {
 public:
  explicit UnknownSamplesError(std::vector<std::string> ids);
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
};

/// `sample_id,reason` rows; an optional header row is skipped.
/// Throws std::invalid_argument naming the offending line.
std::vector<PurgeEntry> parse_purge_csv(std::string_view text);

/// Marks listed samples Purged with their reason. Idempotent; throws
/// UnknownSamplesError naming every id missing from the manifest.
DatasetManifest apply_purge(DatasetManifest manifest, std::span<const PurgeEntry> purge_list);

struct SplitFractions {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

struct SplitOptions {
  SplitFractions fractions;
  std::uint64_t seed = 0;
  bool group_by_pano = true;  // keep every image of a panorama in one split
};

/// Stratified train/val/test assignment of Active samples; non-Active
/// samples lose any split. Throws std::invalid_argument when a present
/// class has fewer than three Active samples.
DatasetManifest split(DatasetManifest manifest, const SplitOptions& options = {});

struct FoldOptions {
  int k = 5;
  std::uint64_t seed = 0;
  bool group_by_pano = true;
};

/// Stratified k-fold partition (folds 1..k) of Active samples.
DatasetManifest make_folds(DatasetManifest manifest, const FoldOptions& options = {});

struct Replication {
  std::string sample_id;
  int count = 0;

  friend bool operator==(const Replication&, const Replication&) = default;
};

/// Extra copies per sample that lift every class of `which` split to the
/// majority class size. Copies are spread round-robin in sample_id order.
/// Throws std::invalid_argument when the split is unassigned or a class seen
/// among Active samples has no member in it.
std::vector<Replication> oversample_plan(const DatasetManifest& manifest, Split which = Split::Train);

/// Deterministic 64-bit generator stream for curation decisions; identical
/// on every platform for a given seed.
class SeededShuffle {
 public:
  explicit SeededShuffle(std::uint64_t seed);
  std::uint64_t next();
  /// Uniform in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vergepipe
