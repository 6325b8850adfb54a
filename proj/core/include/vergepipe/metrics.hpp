#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vergepipe {

/// k x k counts, rows = true class, columns = predicted class. Classes are
/// the ordinals 1..k, stored at index ordinal - 1.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int k);
  /// Row-major k x k counts. Throws std::invalid_argument if not square.
  static ConfusionMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows);

  int k() const { return k_; }
  std::int64_t at(int true_idx, int pred_idx) const { return counts_[index(true_idx, pred_idx)]; }
  std::int64_t& at(int true_idx, int pred_idx) { return counts_[index(true_idx, pred_idx)]; }

  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t row_sum(int i) const;
  std::int64_t col_sum(int j) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t index(int i, int j) const;

  int k_ = 0;
  std::vector<std::int64_t> counts_;
};

/// Throws std::invalid_argument on a length mismatch, empty input, or a
/// label outside 1..k.
ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, int k);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy_pct = 0.0;  // 100 x recall, as the per-class accuracy column is defined
  std::int64_t support = 0;
  // Set when the rate's denominator was zero and the value is the 0 fallback.
  bool precision_undefined = false;
  bool recall_undefined = false;

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

struct AveragedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const AveragedMetrics&, const AveragedMetrics&) = default;
};

enum class KappaWeighting : std::uint8_t { Quadratic, Linear };

struct EvaluationReport {
  std::vector<std::string> class_names;  // row labels, index = ordinal - 1
  std::vector<ClassMetrics> per_class;
  AveragedMetrics macro;
  AveragedMetrics weighted;
  double overall_accuracy_pct = 0.0;
  double kappa = 0.0;
  KappaWeighting kappa_weighting = KappaWeighting::Quadratic;
  std::int64_t total_support = 0;

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

/// Unweighted mean; the aggregate the per-class tables use.
double macro_average(std::span<const double> values);
/// Support-weighted mean. Throws std::invalid_argument on a size mismatch or
/// zero total support.
double weighted_average(std::span<const double> values, std::span<const std::int64_t> supports);

/// Cohen's kappa with w_ij = (|i-j|/(k-1))^p, p = 2 (quadratic) or 1 (linear).
/// A matrix whose chance-expected disagreement is zero (a single class in
/// play) gives 1.
double cohen_kappa(const ConfusionMatrix& cm, KappaWeighting weighting = KappaWeighting::Quadratic);

/// Throws std::invalid_argument when the matrix is empty. Class names default
/// to "class 1".."class k".
EvaluationReport report(const ConfusionMatrix& cm, std::vector<std::string> class_names = {},
                        KappaWeighting weighting = KappaWeighting::Quadratic);

struct PrPoint {
  double threshold = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double interpolated_precision = 0.0;

  friend bool operator==(const PrPoint&, const PrPoint&) = default;
};

/// One-vs-rest precision/recall per class (index = ordinal - 1). For every
/// distinct score observed for the class, predicts positive when score >=
/// threshold; points are ordered by descending threshold. Interpolated
/// precision is the best precision at any recall at least as large.
/// Throws std::invalid_argument on non-finite scores or ragged rows.
std::vector<std::vector<PrPoint>> pr_points(std::span<const int> y_true,
                                            const std::vector<std::vector<double>>& class_scores);

enum class ReportFormat : std::uint8_t { Text, Json, Csv };

std::optional<ReportFormat> parse_report_format(std::string_view name);

std::string export_report(const EvaluationReport& report, ReportFormat format);

/// Inverse of the JSON export. Throws std::runtime_error on malformed input.
EvaluationReport report_from_json(std::string_view text);

struct Prediction {
  std::string sample_id;
  int true_class = 0;
  int pred_class = 0;
  std::vector<double> scores;  // empty when the file has no score columns
};

/// Reads `sample_id,true_class,pred_class[,score_1..score_k]` with a header
/// row. Throws std::invalid_argument naming the line on any malformed row,
/// label outside 1..k, or a score column count other than 0 or k.
std::vector<Prediction> read_predictions_csv(std::string_view text, int k);

}  // namespace vergepipe
