#include "vergepipe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

namespace vergepipe {
namespace {

double ratio(std::int64_t num, std::int64_t den, bool& undefined) {
  undefined = den == 0;
  return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int k) : k_(k) {
  if (k < 1) throw std::invalid_argument("confusion matrix needs at least one class");
  counts_.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0);
}

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
  ConfusionMatrix cm(static_cast<int>(rows.size()));
  for (int i = 0; i < cm.k(); ++i) {
    if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != cm.k()) {
      throw std::invalid_argument("confusion matrix rows must be square");
    }
    for (int j = 0; j < cm.k(); ++j) {
      const auto v = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (v < 0) throw std::invalid_argument("confusion matrix counts must be non-negative");
      cm.at(i, j) = v;
    }
  }
  return cm;
}

std::size_t ConfusionMatrix::index(int i, int j) const {
  if (i < 0 || j < 0 || i >= k_ || j >= k_) throw std::out_of_range("confusion matrix index");
  return static_cast<std::size_t>(i) * static_cast<std::size_t>(k_) + static_cast<std::size_t>(j);
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t t = 0;
  for (int i = 0; i < k_; ++i) t += at(i, i);
  return t;
}

std::int64_t ConfusionMatrix::row_sum(int i) const {
  std::int64_t s = 0;
  for (int j = 0; j < k_; ++j) s += at(i, j);
  return s;
}

std::int64_t ConfusionMatrix::col_sum(int j) const {
  std::int64_t s = 0;
  for (int i = 0; i < k_; ++i) s += at(i, j);
  return s;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, int k) {
  if (y_true.size() != y_pred.size()) {
    throw std::invalid_argument(fmt::format("label length mismatch: {} true vs {} predicted",
                                            y_true.size(), y_pred.size()));
  }
  if (y_true.empty()) throw std::invalid_argument("no labels to compare");
  ConfusionMatrix cm(k);
  for (std::size_t n = 0; n < y_true.size(); ++n) {
    const int t = y_true[n];
    const int p = y_pred[n];
    if (t < 1 || t > k || p < 1 || p > k) {
      throw std::invalid_argument(fmt::format("label out of range 1..{} at index {}: true {}, predicted {}",
                                              k, n, t, p));
    }
    ++cm.at(t - 1, p - 1);
  }
  return cm;
}

double macro_average(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("macro average of nothing");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double weighted_average(std::span<const double> values, std::span<const std::int64_t> supports) {
  if (values.size() != supports.size()) throw std::invalid_argument("values and supports differ in length");
  std::int64_t total = 0;
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (supports[i] < 0) throw std::invalid_argument("negative support");
    acc += values[i] * static_cast<double>(supports[i]);
    total += supports[i];
  }
  if (total == 0) throw std::invalid_argument("weighted average with zero total support");
  return acc / static_cast<double>(total);
}

double cohen_kappa(const ConfusionMatrix& cm, KappaWeighting weighting) {
  const auto total = static_cast<double>(cm.total());
  if (total == 0.0) throw std::invalid_argument("kappa of an empty confusion matrix");
  const int k = cm.k();
  if (k == 1) return 1.0;
  std::vector<double> rows(static_cast<std::size_t>(k));
  std::vector<double> cols(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    rows[static_cast<std::size_t>(i)] = static_cast<double>(cm.row_sum(i));
    cols[static_cast<std::size_t>(i)] = static_cast<double>(cm.col_sum(i));
  }
  double observed = 0.0;
  double expected = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double d = std::abs(i - j) / static_cast<double>(k - 1);
      const double w = weighting == KappaWeighting::Quadratic ? d * d : d;
      observed += w * static_cast<double>(cm.at(i, j));
      expected += w * rows[static_cast<std::size_t>(i)] * cols[static_cast<std::size_t>(j)] / total;
    }
  }
  if (expected == 0.0) return 1.0;
  return 1.0 - observed / expected;
}

EvaluationReport report(const ConfusionMatrix& cm, std::vector<std::string> class_names,
                        KappaWeighting weighting) {
  const auto total = cm.total();
  if (total == 0) throw std::invalid_argument("cannot report on an empty confusion matrix");
  const int k = cm.k();
  if (class_names.empty()) {
    for (int c = 1; c <= k; ++c) class_names.push_back(fmt::format("class {}", c));
  }
  if (static_cast<int>(class_names.size()) != k) {
    throw std::invalid_argument("class name count does not match the matrix");
  }

  EvaluationReport r;
  r.class_names = std::move(class_names);
  r.total_support = total;
  std::vector<double> p, rc, f;
  std::vector<std::int64_t> sup;
  for (int c = 0; c < k; ++c) {
    ClassMetrics m;
    m.support = cm.row_sum(c);
    m.precision = ratio(cm.at(c, c), cm.col_sum(c), m.precision_undefined);
    m.recall = ratio(cm.at(c, c), m.support, m.recall_undefined);
    m.f1 = harmonic(m.precision, m.recall);
    m.accuracy_pct = 100.0 * m.recall;
    p.push_back(m.precision);
    rc.push_back(m.recall);
    f.push_back(m.f1);
    sup.push_back(m.support);
    r.per_class.push_back(m);
  }
  r.macro = {macro_average(p), macro_average(rc), macro_average(f)};
  r.weighted = {weighted_average(p, sup), weighted_average(rc, sup), weighted_average(f, sup)};
  r.overall_accuracy_pct = 100.0 * static_cast<double>(cm.trace()) / static_cast<double>(total);
  r.kappa_weighting = weighting;
  r.kappa = cohen_kappa(cm, weighting);
  return r;
}

std::vector<std::vector<PrPoint>> pr_points(std::span<const int> y_true,
                                            const std::vector<std::vector<double>>& class_scores) {
  if (y_true.size() != class_scores.size()) {
    throw std::invalid_argument("one score vector per sample is required");
  }
  if (y_true.empty()) return {};
  const std::size_t k = class_scores.front().size();
  for (std::size_t n = 0; n < class_scores.size(); ++n) {
    if (class_scores[n].size() != k) throw std::invalid_argument(fmt::format("ragged scores at sample {}", n));
    for (double s : class_scores[n]) {
      if (!std::isfinite(s)) throw std::invalid_argument(fmt::format("non-finite score at sample {}", n));
    }
  }

  std::vector<std::vector<PrPoint>> out(k);
  for (std::size_t c = 0; c < k; ++c) {
    const int ordinal = static_cast<int>(c) + 1;
    std::vector<std::pair<double, bool>> scored;
    std::int64_t positives = 0;
    for (std::size_t n = 0; n < y_true.size(); ++n) {
      const bool pos = y_true[n] == ordinal;
      positives += pos ? 1 : 0;
      scored.emplace_back(class_scores[n][c], pos);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    auto& points = out[c];
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    for (std::size_t i = 0; i < scored.size(); ++i) {
      (scored[i].second ? tp : fp) += 1;
      if (i + 1 < scored.size() && scored[i + 1].first == scored[i].first) continue;
      PrPoint pt;
      pt.threshold = scored[i].first;
      pt.recall = positives == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(positives);
      pt.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      points.push_back(pt);
    }
    // Recall is non-decreasing along the list, so the suffix maximum taken at
    // the first point of each equal-recall run covers every point with recall
    // at least as large.
    std::vector<double> suffix(points.size());
    double best = 0.0;
    for (std::size_t i = points.size(); i-- > 0;) {
      best = std::max(best, points[i].precision);
      suffix[i] = best;
    }
    std::size_t run_start = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].recall != points[run_start].recall) run_start = i;
      points[i].interpolated_precision = suffix[run_start];
    }
  }
  return out;
}

std::optional<ReportFormat> parse_report_format(std::string_view name) {
  if (name == "text") return ReportFormat::Text;
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  return std::nullopt;
}

namespace {

std::string text_table(const EvaluationReport& r) {
  std::size_t name_width = std::string_view("Weighted Avg.").size();
  for (const auto& n : r.class_names) name_width = std::max(name_width, n.size() + 1);

  std::string out;
  auto row = [&](std::string_view name, std::string p, std::string rc, std::string f, std::string acc,
                 std::int64_t support) {
    out += fmt::format("{:<{}}  {:>9}  {:>6}  {:>8}  {:>10}  {:>8}\n", name, name_width, p, rc, f, acc,
                       support);
  };
  auto rate = [](double v) { return fmt::format("{:.2f}", v); };

  out += fmt::format("{:<{}}  {:>9}  {:>6}  {:>8}  {:>10}  {:>8}\n", "Class", name_width, "Precision",
                     "Recall", "F1-Score", "Accuracy %", "# Images");
  const std::string rule(name_width + 2 + 9 + 2 + 6 + 2 + 8 + 2 + 10 + 2 + 8, '=');
  out += rule + '\n';
  bool marked = false;
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& m = r.per_class[c];
    const bool mark = m.support == 0 || m.precision_undefined || m.recall_undefined;
    marked = marked || mark;
    row(r.class_names[c] + (mark ? "*" : ""), rate(m.precision), rate(m.recall), rate(m.f1),
        fmt::format("{:.2f}", m.accuracy_pct), m.support);
  }
  out += rule + '\n';
  const auto overall = fmt::format("{:.2f}", r.overall_accuracy_pct);
  row("Accuracy", "", "", "", overall, r.total_support);
  row("Macro Avg.", rate(r.macro.precision), rate(r.macro.recall), rate(r.macro.f1), overall,
      r.total_support);
  row("Weighted Avg.", rate(r.weighted.precision), rate(r.weighted.recall), rate(r.weighted.f1), "",
      r.total_support);
  out += std::string(rule.size(), '-') + '\n';
  out += fmt::format("Cohen's kappa ({}): {:.4f}\n",
                     r.kappa_weighting == KappaWeighting::Quadratic ? "quadratic" : "linear", r.kappa);
  if (marked) out += "* zero denominator: undefined rates are reported as 0.00\n";
  return out;
}

nlohmann::json averaged_json(const AveragedMetrics& a) {
  return {{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}};
}

AveragedMetrics averaged_from(const nlohmann::json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

std::string json_report(const EvaluationReport& r) {
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& m = r.per_class[c];
    classes.push_back({{"name", r.class_names[c]},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"accuracy_pct", m.accuracy_pct},
                       {"support", m.support},
                       {"precision_undefined", m.precision_undefined},
                       {"recall_undefined", m.recall_undefined}});
  }
  nlohmann::json j = {{"per_class", classes},
                      {"macro", averaged_json(r.macro)},
                      {"weighted", averaged_json(r.weighted)},
                      {"overall_accuracy_pct", r.overall_accuracy_pct},
                      {"kappa", r.kappa},
                      {"kappa_weighting",
                       r.kappa_weighting == KappaWeighting::Quadratic ? "quadratic" : "linear"},
                      {"total_support", r.total_support}};
  return j.dump(2) + '\n';
}

std::string csv_report(const EvaluationReport& r) {
  std::string out = "class,precision,recall,f1,accuracy_pct,support\n";
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& m = r.per_class[c];
    out += fmt::format("{},{},{},{},{},{}\n", r.class_names[c], m.precision, m.recall, m.f1,
                       m.accuracy_pct, m.support);
  }
  out += fmt::format("Accuracy,,,,{},{}\n", r.overall_accuracy_pct, r.total_support);
  out += fmt::format("Macro Avg.,{},{},{},{},{}\n", r.macro.precision, r.macro.recall, r.macro.f1,
                     r.overall_accuracy_pct, r.total_support);
  out += fmt::format("Weighted Avg.,{},{},{},,{}\n", r.weighted.precision, r.weighted.recall,
                     r.weighted.f1, r.total_support);
  return out;
}

}  // namespace

std::string export_report(const EvaluationReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Text:
      return text_table(report);
    case ReportFormat::Json:
      return json_report(report);
    case ReportFormat::Csv:
      return csv_report(report);
  }
  throw std::invalid_argument("unknown report format");
}

EvaluationReport report_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvaluationReport r;
    for (const auto& c : j.at("per_class")) {
      r.class_names.push_back(c.at("name").get<std::string>());
      ClassMetrics m;
      m.precision = c.at("precision").get<double>();
      m.recall = c.at("recall").get<double>();
      m.f1 = c.at("f1").get<double>();
      m.accuracy_pct = c.at("accuracy_pct").get<double>();
      m.support = c.at("support").get<std::int64_t>();
      m.precision_undefined = c.at("precision_undefined").get<bool>();
      m.recall_undefined = c.at("recall_undefined").get<bool>();
      r.per_class.push_back(m);
    }
    r.macro = averaged_from(j.at("macro"));
    r.weighted = averaged_from(j.at("weighted"));
    r.overall_accuracy_pct = j.at("overall_accuracy_pct").get<double>();
    r.kappa = j.at("kappa").get<double>();
    const auto w = j.at("kappa_weighting").get<std::string>();
    if (w != "quadratic" && w != "linear") throw std::runtime_error("unknown kappa weighting '" + w + "'");
    r.kappa_weighting = w == "quadratic" ? KappaWeighting::Quadratic : KappaWeighting::Linear;
    r.total_support = j.at("total_support").get<std::int64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed report: ") + e.what());
  }
}

std::vector<Prediction> read_predictions_csv(std::string_view text, int k) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::vector<Prediction> out;
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument(fmt::format("predictions line {}: {}", lineno, why));
  };
  auto parse_int = [&](std::string_view field, const char* what) {
    int v = 0;
    std::size_t used = 0;
    try {
      v = std::stoi(std::string(field), &used);
    } catch (const std::exception&) {
      fail(fmt::format("{} '{}' is not an integer", what, field));
    }
    if (used != field.size()) fail(fmt::format("{} '{}' is not an integer", what, field));
    if (v < 1 || v > k) fail(fmt::format("{} {} outside 1..{}", what, v, k));
    return v;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (!header_seen) {
      if (fields.size() < 3 || fields[0] != "sample_id" || fields[1] != "true_class" ||
          fields[2] != "pred_class") {
        fail("expected header 'sample_id,true_class,pred_class[,score_1..score_k]'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() < 3) fail("expected at least 3 columns");
    Prediction p;
    p.sample_id = std::string(fields[0]);
    if (p.sample_id.empty()) fail("empty sample_id");
    p.true_class = parse_int(fields[1], "true_class");
    p.pred_class = parse_int(fields[2], "pred_class");
    const std::size_t n_scores = fields.size() - 3;
    if (n_scores != 0 && n_scores != static_cast<std::size_t>(k)) {
      fail(fmt::format("expected 0 or {} score columns, got {}", k, n_scores));
    }
    for (std::size_t s = 3; s < fields.size(); ++s) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(std::string(fields[s]), &used);
      } catch (const std::exception&) {
        fail(fmt::format("score '{}' is not a number", fields[s]));
      }
      if (used != fields[s].size() || !std::isfinite(v)) fail(fmt::format("score '{}' is not finite", fields[s]));
      p.scores.push_back(v);
    }
    out.push_back(std::move(p));
  }
  if (!header_seen) throw std::invalid_argument("predictions file is empty");
  return out;
}

}  // namespace vergepipe
