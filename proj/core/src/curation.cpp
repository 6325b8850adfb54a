#include "vergepipe/curation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <array>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "vergepipe/hashing.hpp"

namespace vergepipe {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Integer apportionment of `n` by `fractions` (largest remainder). Each
// share is within one of n * fraction and the shares sum to n.
std::vector<long> apportion(long n, std::span<const double> fractions) {
  const double total = std::accumulate(fractions.begin(), fractions.end(), 0.0);
  std::vector<long> shares(fractions.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  long assigned = 0;
  for (std::size_t s = 0; s < fractions.size(); ++s) {
    const double exact = static_cast<double>(n) * fractions[s] / total;
    shares[s] = static_cast<long>(std::floor(exact + 1e-9));
    assigned += shares[s];
    remainders.emplace_back(exact - static_cast<double>(shares[s]), s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first + 1e-12; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++shares[remainders[i % remainders.size()].second];
  return shares;
}

// Assigns Active samples to buckets so that every class is divided in the
// given proportions, keeping samples that share a group key together.
// Returns bucket index per sample (-1 for non-Active).
std::vector<int> stratified_assign(const DatasetManifest& manifest, std::span<const double> fractions,
                                   std::uint64_t seed, bool group_by_pano) {
  std::map<int, long> class_sizes;
  for (const auto& s : manifest.samples) {
    if (s.status == SampleStatus::Active) ++class_sizes[s.label.ordinal];
  }
  for (const auto& [label, n] : class_sizes) {
    if (n < 3) {
      throw std::invalid_argument(fmt::format("class {} has {} active samples; at least 3 are required",
                                              label, n));
    }
  }

  const std::size_t buckets = fractions.size();
  std::map<int, std::vector<long>> remaining;
  for (const auto& [label, n] : class_sizes) remaining[label] = apportion(n, fractions);

  std::map<std::string, std::vector<std::size_t>> grouped;
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    const auto& s = manifest.samples[i];
    if (s.status != SampleStatus::Active) continue;
    grouped[group_by_pano ? s.pano_id : s.sample_id].push_back(i);
  }
  std::vector<std::vector<std::size_t>> groups;
  groups.reserve(grouped.size());
  for (auto& [key, members] : grouped) groups.push_back(std::move(members));
  SeededShuffle rng(seed);
  rng.shuffle(groups);
  std::stable_sort(groups.begin(), groups.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });

  std::vector<int> assignment(manifest.samples.size(), -1);
  for (const auto& members : groups) {
    std::map<int, long> hist;
    for (auto i : members) ++hist[manifest.samples[i].label.ordinal];

    std::size_t best = 0;
    long best_score = std::numeric_limits<long>::min();
    long best_room = std::numeric_limits<long>::min();
    for (std::size_t b = 0; b < buckets; ++b) {
      long fit = 0;
      long overflow = 0;
      long room = 0;
      for (const auto& [label, count] : hist) {
        const long rem = remaining[label][b];
        fit += std::min(count, std::max(rem, 0L));
        overflow += std::max(0L, count - std::max(rem, 0L));
        room += rem;
      }
      const long score = fit - overflow;
      if (score > best_score || (score == best_score && room > best_room)) {
        best = b;
        best_score = score;
        best_room = room;
      }
    }
    for (const auto& [label, count] : hist) remaining[label][best] -= count;
    for (auto i : members) assignment[i] = static_cast<int>(best);
  }
  return assignment;
}

}  // namespace

void FilterCriteria::validate() const {
  if (localities && localities->empty()) throw std::invalid_argument("filter localities is empty");
  if (years && years->empty()) throw std::invalid_argument("filter years is empty");
  if (months) {
    if (months->empty()) throw std::invalid_argument("filter months is empty");
    for (int m : *months) {
      if (m < 1 || m > 12) throw std::invalid_argument(fmt::format("filter month {} is not in 1..12", m));
    }
  }
}

bool FilterCriteria::accepts(Locality locality, const CaptureDate& date) const {
  if (localities && !localities->contains(locality)) return false;
  if (years && !years->contains(date.year)) return false;
  if (months && !months->contains(date.month)) return false;
  return true;
}

std::vector<ExtractionPlan> apply_filters(std::span<const ExtractionPlan> plans,
                                          const FilterCriteria& criteria) {
  criteria.validate();
  std::vector<ExtractionPlan> out;
  for (const auto& p : plans) {
    if (criteria.accepts(p.locality, p.pano.capture_date)) out.push_back(p);
  }
  return out;
}

std::string_view to_string(SampleStatus s) {
  switch (s) {
    case SampleStatus::Active: return "Active";
    case SampleStatus::Purged: return "Purged";
    case SampleStatus::Duplicate: return "Duplicate";
  }
  return "Active";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "Train";
    case Split::Val: return "Val";
    case Split::Test: return "Test";
  }
  return "Train";
}

std::string_view to_string(PurgeReason r) {
  switch (r) {
    case PurgeReason::Car: return "Car";
    case PurgeReason::House: return "House";
    case PurgeReason::CutVerge: return "CutVerge";
    case PurgeReason::VergeNotVisible: return "VergeNotVisible";
    case PurgeReason::Other: return "Other";
  }
  return "Other";
}

std::string_view to_string(FetchStatus s) {
  switch (s) {
    case FetchStatus::Pending: return "Pending";
    case FetchStatus::Fetched: return "Fetched";
    case FetchStatus::Failed: return "Failed";
  }
  return "Pending";
}

std::optional<SampleStatus> parse_sample_status(std::string_view s) {
  for (auto v : {SampleStatus::Active, SampleStatus::Purged, SampleStatus::Duplicate}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

std::optional<Split> parse_split(std::string_view s) {
  for (auto v : {Split::Train, Split::Val, Split::Test}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

std::optional<PurgeReason> parse_purge_reason(std::string_view s) {
  std::string key;
  for (char c : lower(trim(s))) {
    if (c != '_' && c != '-' && c != ' ') key.push_back(c);
  }
  if (key == "car" || key == "cars") return PurgeReason::Car;
  if (key == "house" || key == "houses") return PurgeReason::House;
  if (key == "cutverge") return PurgeReason::CutVerge;
  if (key == "vergenotvisible") return PurgeReason::VergeNotVisible;
  if (key == "other") return PurgeReason::Other;
  return std::nullopt;
}

std::optional<FetchStatus> parse_fetch_status(std::string_view s) {
  for (auto v : {FetchStatus::Pending, FetchStatus::Fetched, FetchStatus::Failed}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

std::size_t DatasetManifest::count(SampleStatus s) const {
  return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(),
                                                [s](const Sample& x) { return x.status == s; }));
}

const Sample* DatasetManifest::find(std::string_view sample_id) const {
  auto it = std::find_if(samples.begin(), samples.end(),
                         [&](const Sample& x) { return x.sample_id == sample_id; });
  return it == samples.end() ? nullptr : &*it;
}

std::string make_sample_id(std::string_view section_id, std::string_view identity_key) {
  std::string material(section_id);
  material += '\n';
  material += identity_key;
  return "s" + sha256_hex(material).substr(0, 15);
}

DatasetManifest build_manifest(std::span<const ExtractionPlan> plans, ScoreScheme scheme) {
  DatasetManifest m;
  m.scheme = scheme;
  std::unordered_set<std::string> ids;
  for (const auto& plan : plans) {
    for (const auto& r : plan.requests) {
      Sample s;
      s.identity_key = identity_key(r);
      s.sample_id = make_sample_id(r.section_id, s.identity_key);
      for (int n = 2; !ids.insert(s.sample_id).second; ++n) {
        s.sample_id = make_sample_id(r.section_id, s.identity_key) + "-" + std::to_string(n);
      }
      s.label = r.label;
      s.raw_score = r.raw_score;
      s.section_id = r.section_id;
      s.locality = plan.locality;
      s.pano_id = r.pano_id;
      s.location = plan.pano.location;
      s.capture_date = plan.pano.capture_date;
      s.octant = r.octant;
      s.side = r.side;
      s.heading = r.heading;
      s.camera = r.camera;
      m.samples.push_back(std::move(s));
    }
  }
  return m;
}

DatasetManifest dedup(DatasetManifest manifest) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    if (manifest.samples[i].status != SampleStatus::Purged) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = manifest.samples[a];
    const auto& y = manifest.samples[b];
    if (x.section_id != y.section_id) return x.section_id < y.section_id;
    return x.sample_id < y.sample_id;
  });
  std::unordered_set<std::string> seen;
  for (auto i : order) {
    auto& s = manifest.samples[i];
    s.status = seen.insert(s.identity_key).second ? SampleStatus::Active : SampleStatus::Duplicate;
    if (s.status == SampleStatus::Duplicate) {
      s.split.reset();
      s.fold.reset();
    }
  }
  return manifest;
}

UnknownSamplesError::UnknownSamplesError(std::vector<std::string> ids)
    : std::invalid_argument([&] {
        std::string msg = fmt::format("purge list names {} unknown sample id(s):", ids.size());
        for (const auto& id : ids) msg += " " + id;
        return msg;
      }()),
      ids_(std::move(ids)) {}

std::vector<PurgeEntry> parse_purge_csv(std::string_view text) {
  std::vector<PurgeEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view row = trim(line);
    if (row.empty() || row.front() == '#') continue;
    const auto comma = row.find(',');
    if (comma == std::string_view::npos) {
      throw std::invalid_argument(fmt::format("purge list line {}: expected 'sample_id,reason'", lineno));
    }
    const auto id = trim(row.substr(0, comma));
    const auto reason_text = trim(row.substr(comma + 1));
    if (out.empty() && lower(id) == "sample_id") continue;
    auto reason = parse_purge_reason(reason_text);
    if (id.empty() || !reason) {
      throw std::invalid_argument(
          fmt::format("purge list line {}: bad row '{}'", lineno, std::string(row.substr(0, 80))));
    }
    out.push_back({std::string(id), *reason});
  }
  return out;
}

DatasetManifest apply_purge(DatasetManifest manifest, std::span<const PurgeEntry> purge_list) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) index.emplace(manifest.samples[i].sample_id, i);

  std::vector<std::string> unknown;
  for (const auto& e : purge_list) {
    if (!index.contains(e.sample_id)) unknown.push_back(e.sample_id);
  }
  if (!unknown.empty()) {
    std::sort(unknown.begin(), unknown.end());
    unknown.erase(std::unique(unknown.begin(), unknown.end()), unknown.end());
    throw UnknownSamplesError(std::move(unknown));
  }
  for (const auto& e : purge_list) {
    auto& s = manifest.samples[index.at(e.sample_id)];
    s.status = SampleStatus::Purged;
    s.purge_reason = e.reason;
    s.split.reset();
    s.fold.reset();
  }
  return manifest;
}

DatasetManifest split(DatasetManifest manifest, const SplitOptions& options) {
  const std::array<double, 3> fractions = {options.fractions.train, options.fractions.val,
                                           options.fractions.test};
  for (double f : fractions) {
    if (f < 0.0 || !std::isfinite(f)) throw std::invalid_argument("split fractions must be non-negative");
  }
  if (fractions[0] + fractions[1] + fractions[2] <= 0.0) {
    throw std::invalid_argument("split fractions sum to zero");
  }
  const auto assignment = stratified_assign(manifest, fractions, options.seed, options.group_by_pano);
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    auto& s = manifest.samples[i];
    if (assignment[i] < 0) {
      s.split.reset();
    } else {
      s.split = static_cast<Split>(assignment[i]);
    }
  }
  manifest.seed = options.seed;
  return manifest;
}

DatasetManifest make_folds(DatasetManifest manifest, const FoldOptions& options) {
  if (options.k < 2) throw std::invalid_argument("k-fold needs k >= 2");
  const std::vector<double> fractions(static_cast<std::size_t>(options.k), 1.0);
  const auto assignment = stratified_assign(manifest, fractions, options.seed, options.group_by_pano);
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    auto& s = manifest.samples[i];
    if (assignment[i] < 0) {
      s.fold.reset();
    } else {
      s.fold = assignment[i] + 1;
    }
  }
  return manifest;
}

std::vector<Replication> oversample_plan(const DatasetManifest& manifest, Split which) {
  std::set<int> classes;
  std::map<int, std::vector<const Sample*>> members;
  bool any_assigned = false;
  for (const auto& s : manifest.samples) {
    if (s.status != SampleStatus::Active) continue;
    classes.insert(s.label.ordinal);
    if (s.split) any_assigned = true;
    if (s.split == which) members[s.label.ordinal].push_back(&s);
  }
  if (!any_assigned) throw std::invalid_argument("manifest has no split assignment");
  std::size_t majority = 0;
  for (int c : classes) {
    if (members[c].empty()) {
      throw std::invalid_argument(
          fmt::format("class {} has no {} samples to oversample", c, to_string(which)));
    }
    majority = std::max(majority, members[c].size());
  }

  std::vector<Replication> out;
  for (int c : classes) {
    auto& list = members[c];
    std::sort(list.begin(), list.end(),
              [](const Sample* a, const Sample* b) { return a->sample_id < b->sample_id; });
    const std::size_t n = list.size();
    const std::size_t extra = majority - n;
    for (std::size_t i = 0; i < n; ++i) {
      const auto copies = extra / n + (i < extra % n ? 1 : 0);
      out.push_back({list[i]->sample_id, static_cast<int>(copies)});
    }
  }
  return out;
}

SeededShuffle::SeededShuffle(std::uint64_t seed) : engine_(seed) {}

std::uint64_t SeededShuffle::next() { return engine_(); }

std::uint64_t SeededShuffle::below(std::uint64_t bound) {
  if (bound <= 1) return 0;
  // Rejection sampling keeps the draw unbiased and platform independent.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

}  // namespace vergepipe
