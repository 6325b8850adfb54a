#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "vergepipe/metrics.hpp"
#include "vergepipe/synthetic.hpp"

using namespace vergepipe;

namespace {

using Rows = std::vector<std::vector<std::int64_t>>;

const Rows kTable5 = {{651, 25, 10, 4}, {35, 283, 6, 2}, {15, 10, 82, 2}, {6, 7, 4, 47}};

// Quadratic-weighted kappa through its covariance form over paired labels,
// which shares no code path with the weight-matrix definition.
double quadratic_kappa_pearson(const Rows& m) {
  double n = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double c = static_cast<double>(m[i][j]);
      n += c;
      sx += c * static_cast<double>(i);
      sy += c * static_cast<double>(j);
    }
  }
  const double mx = sx / n, my = sy / n;
  double cov = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double c = static_cast<double>(m[i][j]);
      const double dx = static_cast<double>(i) - mx, dy = static_cast<double>(j) - my;
      cov += c * dx * dy;
      vx += c * dx * dx;
      vy += c * dy * dy;
    }
  }
  cov /= n;
  vx /= n;
  vy /= n;
  return 2.0 * cov / (vx + vy + (mx - my) * (mx - my));
}

// Linear kappa from agreement weights 1 - |i-j|/(k-1).
double linear_kappa_agreement(const Rows& m) {
  const std::size_t k = m.size();
  double n = 0;
  std::vector<double> r(k, 0), c(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      n += static_cast<double>(m[i][j]);
      r[i] += static_cast<double>(m[i][j]);
      c[j] += static_cast<double>(m[i][j]);
    }
  }
  double po = 0, pe = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double w = 1.0 - std::fabs(static_cast<double>(i) - static_cast<double>(j)) / static_cast<double>(k - 1);
      po += w * static_cast<double>(m[i][j]) / n;
      pe += w * r[i] * c[j] / (n * n);
    }
  }
  return (po - pe) / (1.0 - pe);
}

Rows random_matrix(std::mt19937_64& rng, int k, int max_count) {
  std::uniform_int_distribution<int> d(0, max_count);
  Rows m(k, std::vector<std::int64_t>(k));
  for (auto& row : m) {
    for (auto& v : row) v = d(rng);
  }
  m[0][0] += 1;  // never empty
  return m;
}

Rows permuted(const Rows& m, const std::vector<int>& perm) {
  Rows out(m.size(), std::vector<std::int64_t>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) out[perm[i]][perm[j]] = m[i][j];
  }
  return out;
}

}  // namespace

TEST(Confusion, MatchesBruteForceCount) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const int k = 2 + t % 4;
    std::uniform_int_distribution<int> lab(1, k);
    std::vector<int> yt(200), yp(200);
    for (auto& v : yt) v = lab(rng);
    for (auto& v : yp) v = lab(rng);
    EXPECT_EQ(confusion(yt, yp, k), ConfusionMatrix::from_rows(oracle::confusion(yt, yp, k)));
  }
  const std::vector<int> a = {1, 2};
  const std::vector<int> b = {1};
  EXPECT_THROW(confusion(a, b, 2), std::invalid_argument);
  EXPECT_THROW(confusion({}, {}, 2), std::invalid_argument);
  const std::vector<int> out_of_range = {3, 1};
  EXPECT_THROW(confusion(out_of_range, a, 2), std::invalid_argument);
  EXPECT_THROW(ConfusionMatrix::from_rows({{1, 2}, {3}}), std::invalid_argument);
}

TEST(Report, IdentityAndUniformTwoByTwo) {
  const auto id = report(ConfusionMatrix::from_rows({{5, 0}, {0, 5}}));
  for (const auto& m : id.per_class) {
    EXPECT_DOUBLE_EQ(m.precision, 1.0);
    EXPECT_DOUBLE_EQ(m.recall, 1.0);
    EXPECT_DOUBLE_EQ(m.f1, 1.0);
  }
  EXPECT_DOUBLE_EQ(id.overall_accuracy_pct, 100.0);
  EXPECT_DOUBLE_EQ(id.kappa, 1.0);

  const auto uni = report(ConfusionMatrix::from_rows({{5, 5}, {5, 5}}));
  for (const auto& m : uni.per_class) {
    EXPECT_DOUBLE_EQ(m.precision, 0.5);
    EXPECT_DOUBLE_EQ(m.recall, 0.5);
    EXPECT_DOUBLE_EQ(m.f1, 0.5);
    EXPECT_DOUBLE_EQ(m.accuracy_pct, 50.0);
  }
  EXPECT_DOUBLE_EQ(uni.overall_accuracy_pct, 50.0);
  EXPECT_NEAR(uni.kappa, 0.0, 1e-12);
  EXPECT_EQ(id.class_names, (std::vector<std::string>{"class 1", "class 2"}));
}

TEST(Report, PerfectPredictionsAllOnes) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 30; ++t) {
    const int k = 2 + t % 4;
    std::uniform_int_distribution<int> lab(1, k);
    std::vector<int> y(100);
    for (auto& v : y) v = lab(rng);
    const auto r = report(confusion(y, y, k));
    for (const auto& m : r.per_class) {
      if (m.support == 0) continue;
      EXPECT_EQ(m.precision, 1.0);
      EXPECT_EQ(m.recall, 1.0);
      EXPECT_EQ(m.f1, 1.0);
    }
    EXPECT_EQ(r.overall_accuracy_pct, 100.0);
    EXPECT_NEAR(r.kappa, 1.0, 1e-12);
  }
}

TEST(Report, PublishedBestFoldAnchors) {
  const auto r = report(ConfusionMatrix::from_rows(kTable5));
  const std::vector<double> f1 = {0.93, 0.87, 0.78, 0.79};
  const std::vector<std::int64_t> support = {690, 326, 109, 64};
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_NEAR(r.per_class[c].f1, f1[c], 0.005) << c;
    EXPECT_EQ(r.per_class[c].support, support[c]);
  }
  EXPECT_EQ(r.total_support, 1189);
  EXPECT_NEAR(r.macro.f1, 0.84, 0.005);
  EXPECT_NEAR(r.weighted.f1, 0.89, 0.005);
  EXPECT_NEAR(r.overall_accuracy_pct, 100.0 * 1063.0 / 1189.0, 1e-9);
}

TEST(Report, MatchesHandComputedRates) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const int k = 2 + t % 5;
    const auto rows = random_matrix(rng, k, 40);
    const auto r = report(ConfusionMatrix::from_rows(rows));
    std::int64_t total = 0, trace = 0;
    std::vector<double> f1s;
    std::vector<std::int64_t> supports;
    for (int i = 0; i < k; ++i) {
      std::int64_t row = 0, col = 0;
      for (int j = 0; j < k; ++j) {
        row += rows[i][j];
        col += rows[j][i];
        total += rows[i][j];
      }
      trace += rows[i][i];
      const double tp = static_cast<double>(rows[i][i]);
      const double p = col == 0 ? 0.0 : tp / static_cast<double>(col);
      const double rc = row == 0 ? 0.0 : tp / static_cast<double>(row);
      const double f = p + rc == 0 ? 0.0 : 2 * p * rc / (p + rc);
      const auto& m = r.per_class[static_cast<std::size_t>(i)];
      EXPECT_NEAR(m.precision, p, 1e-12);
      EXPECT_NEAR(m.recall, rc, 1e-12);
      EXPECT_NEAR(m.f1, f, 1e-12);
      EXPECT_NEAR(m.accuracy_pct, 100 * rc, 1e-10);
      EXPECT_EQ(m.support, row);
      EXPECT_EQ(m.precision_undefined, col == 0);
      EXPECT_EQ(m.recall_undefined, row == 0);
      f1s.push_back(f);
      supports.push_back(row);
    }
    // Overall accuracy is the trace over the total.
    EXPECT_NEAR(r.overall_accuracy_pct, 100.0 * static_cast<double>(trace) / static_cast<double>(total), 1e-10);
    EXPECT_NEAR(r.macro.f1, std::accumulate(f1s.begin(), f1s.end(), 0.0) / k, 1e-12);
    double w = 0;
    for (int i = 0; i < k; ++i) w += f1s[i] * static_cast<double>(supports[i]);
    EXPECT_NEAR(r.weighted.f1, w / static_cast<double>(total), 1e-12);
    EXPECT_NEAR(r.kappa, quadratic_kappa_pearson(rows), 1e-9);
  }
}

TEST(Averages, MacroEqualsWeightedForEqualSupports) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(0, 1);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(2 + t % 5);
    for (auto& x : v) x = d(rng);
    const std::vector<std::int64_t> s(v.size(), 17);
    EXPECT_NEAR(macro_average(v), weighted_average(v, s), 1e-12);
  }
  const std::vector<double> v = {1.0, 0.0};
  const std::vector<std::int64_t> s = {3, 1};
  EXPECT_DOUBLE_EQ(weighted_average(v, s), 0.75);
  const std::vector<std::int64_t> zero = {0, 0};
  EXPECT_THROW(weighted_average(v, zero), std::invalid_argument);
  const std::vector<std::int64_t> short_s = {1};
  EXPECT_THROW(weighted_average(v, short_s), std::invalid_argument);
}

TEST(Kappa, DiagonalIsOneAndIndependenceIsZero) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> d(1, 30);
  for (int t = 0; t < 200; ++t) {
    const int k = 2 + t % 5;
    Rows diag(k, std::vector<std::int64_t>(k, 0));
    for (int i = 0; i < k; ++i) diag[i][i] = d(rng);
    const auto cm = ConfusionMatrix::from_rows(diag);
    EXPECT_NEAR(cohen_kappa(cm), 1.0, 1e-12);
    EXPECT_NEAR(cohen_kappa(cm, KappaWeighting::Linear), 1.0, 1e-12);

    // Outer product of two marginals: observed equals chance everywhere.
    std::vector<std::int64_t> a(k), b(k);
    for (auto& x : a) x = d(rng);
    for (auto& x : b) x = d(rng);
    Rows outer(k, std::vector<std::int64_t>(k));
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) outer[i][j] = a[i] * b[j];
    }
    const auto indep = ConfusionMatrix::from_rows(outer);
    EXPECT_NEAR(cohen_kappa(indep), 0.0, 1e-12);
    EXPECT_NEAR(cohen_kappa(indep, KappaWeighting::Linear), 0.0, 1e-12);
  }
}

TEST(Kappa, LinearMatchesAgreementForm) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 100; ++t) {
    const auto rows = random_matrix(rng, 2 + t % 5, 25);
    EXPECT_NEAR(cohen_kappa(ConfusionMatrix::from_rows(rows), KappaWeighting::Linear),
                linear_kappa_agreement(rows), 1e-9);
  }
}

TEST(Kappa, SingleClassInPlayIsOne) {
  EXPECT_EQ(cohen_kappa(ConfusionMatrix::from_rows({{7, 0}, {0, 0}})), 1.0);
}

TEST(Properties, ClassPermutationKeepsAccuracyAndFlatKappa) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    const int k = 2 + t % 5;
    const auto rows = random_matrix(rng, k, 30);
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto a = report(ConfusionMatrix::from_rows(rows));
    const auto b = report(ConfusionMatrix::from_rows(permuted(rows, perm)));
    EXPECT_NEAR(a.overall_accuracy_pct, b.overall_accuracy_pct, 1e-10);
    EXPECT_NEAR(a.macro.f1, b.macro.f1, 1e-12);
    EXPECT_NEAR(a.weighted.f1, b.weighted.f1, 1e-12);
    // Unweighted agreement is relabelling invariant; with k = 2 the linear
    // and quadratic weights both reduce to it.
    if (k == 2) {
      EXPECT_NEAR(cohen_kappa(ConfusionMatrix::from_rows(rows)),
                  cohen_kappa(ConfusionMatrix::from_rows(permuted(rows, perm))), 1e-12);
    }
    // Reversing the class order keeps ordinal distances, so weighted kappa holds.
    std::vector<int> reversed(k);
    for (int i = 0; i < k; ++i) reversed[i] = k - 1 - i;
    EXPECT_NEAR(cohen_kappa(ConfusionMatrix::from_rows(rows)),
                cohen_kappa(ConfusionMatrix::from_rows(permuted(rows, reversed))), 1e-12);
  }
}

TEST(Properties, OverallAccuracyIsTraceOverTotal) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    const auto rows = random_matrix(rng, 2 + t % 6, 50);
    const auto cm = ConfusionMatrix::from_rows(rows);
    EXPECT_NEAR(report(cm).overall_accuracy_pct,
                100.0 * static_cast<double>(cm.trace()) / static_cast<double>(cm.total()), 1e-12);
  }
}

TEST(PrPoints, MatchBruteForceOracle) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> lab(1, 4);
  std::uniform_int_distribution<int> coarse(0, 10);  // ties on purpose
  for (int t = 0; t < 20; ++t) {
    std::vector<int> y(50);
    std::vector<std::vector<double>> scores(50, std::vector<double>(4));
    for (std::size_t n = 0; n < 50; ++n) {
      y[n] = lab(rng);
      for (auto& s : scores[n]) s = coarse(rng) / 10.0;
    }
    const auto got = pr_points(y, scores);
    ASSERT_EQ(got.size(), 4u);
    for (int c = 1; c <= 4; ++c) {
      const auto want = oracle::pr_curve(y, scores, c);
      const auto& pts = got[static_cast<std::size_t>(c - 1)];
      ASSERT_EQ(pts.size(), want.size());
      for (std::size_t i = 0; i < pts.size(); ++i) {
        EXPECT_EQ(pts[i].threshold, want[i].threshold);
        EXPECT_NEAR(pts[i].recall, want[i].recall, 1e-12);
        EXPECT_NEAR(pts[i].precision, want[i].precision, 1e-12);
        EXPECT_NEAR(pts[i].interpolated_precision, want[i].interpolated, 1e-12);
        EXPECT_GE(pts[i].interpolated_precision, pts[i].precision);
      }
    }
  }
}

TEST(PrPoints, Errors) {
  const std::vector<int> y = {1, 2};
  EXPECT_THROW(pr_points(y, {{0.1, 0.9}}), std::invalid_argument);
  EXPECT_THROW(pr_points(y, {{0.1, 0.9}, {0.3}}), std::invalid_argument);
  EXPECT_THROW(pr_points(y, {{0.1, NAN}, {0.3, 0.2}}), std::invalid_argument);
  EXPECT_TRUE(pr_points({}, {}).empty());
}

TEST(Export, TextTableLayout) {
  auto r = report(ConfusionMatrix::from_rows(kTable5), {"0 - 3", "4 - 7", "8 - 11", "12+"});
  const auto text = export_report(r, ReportFormat::Text);
  EXPECT_NE(text.find("Precision"), std::string::npos);
  EXPECT_NE(text.find("# Images"), std::string::npos);
  EXPECT_NE(text.find("Macro Avg."), std::string::npos);
  EXPECT_NE(text.find("Weighted Avg."), std::string::npos);
  EXPECT_NE(text.find("Cohen's kappa (quadratic): "), std::string::npos);
  EXPECT_NE(text.find("1189"), std::string::npos);
  EXPECT_NE(text.find("0.93"), std::string::npos);
  EXPECT_EQ(text.find('*'), std::string::npos);
}

TEST(Export, ZeroSupportClassIsFootnoted) {
  const auto r = report(ConfusionMatrix::from_rows({{4, 1, 0}, {1, 4, 0}, {0, 0, 0}}));
  EXPECT_EQ(r.per_class[2].support, 0);
  EXPECT_TRUE(r.per_class[2].recall_undefined);
  EXPECT_TRUE(r.per_class[2].precision_undefined);
  EXPECT_EQ(r.per_class[2].f1, 0.0);
  const auto text = export_report(r, ReportFormat::Text);
  EXPECT_NE(text.find("class 3*"), std::string::npos);
  EXPECT_NE(text.find("* zero denominator"), std::string::npos);
}

TEST(Export, JsonRoundTrip) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 30; ++t) {
    auto rows = random_matrix(rng, 2 + t % 4, 20);
    rows.back().assign(rows.size(), 0);  // exercise the undefined flags
    const auto r = report(ConfusionMatrix::from_rows(rows), {},
                          t % 2 ? KappaWeighting::Linear : KappaWeighting::Quadratic);
    EXPECT_EQ(report_from_json(export_report(r, ReportFormat::Json)), r);
  }
  EXPECT_THROW(report_from_json("{}"), std::runtime_error);
  EXPECT_THROW(report_from_json("not json"), std::runtime_error);
}

TEST(Export, CsvHasRowPerClassPlusSummaries) {
  const auto r = report(ConfusionMatrix::from_rows(kTable5));
  const auto csv = export_report(r, ReportFormat::Csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 4 + 3);
  EXPECT_EQ(csv.rfind("class,precision,recall,f1,accuracy_pct,support\n", 0), 0u);
  EXPECT_NE(csv.find("\nMacro Avg.,"), std::string::npos);
  EXPECT_EQ(parse_report_format("json"), ReportFormat::Json);
  EXPECT_FALSE(parse_report_format("xml"));
}

TEST(Predictions, ReadsWithAndWithoutScores) {
  const auto plain = read_predictions_csv("sample_id,true_class,pred_class\na,1,2\n\nb,3,3\n", 4);
  ASSERT_EQ(plain.size(), 2u);
  EXPECT_EQ(plain[0].sample_id, "a");
  EXPECT_EQ(plain[0].true_class, 1);
  EXPECT_EQ(plain[0].pred_class, 2);
  EXPECT_TRUE(plain[0].scores.empty());
  const auto scored =
      read_predictions_csv("sample_id,true_class,pred_class,score_1,score_2\nx,2,1,0.7,0.3\n", 2);
  EXPECT_EQ(scored[0].scores, (std::vector<double>{0.7, 0.3}));
}

TEST(Predictions, ErrorsNameTheLine) {
  auto expect_error = [](const std::string& text, const std::string& fragment) {
    try {
      read_predictions_csv(text, 4);
      ADD_FAILURE() << text;
    } catch (const std::invalid_argument& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  const std::string h = "sample_id,true_class,pred_class\n";
  expect_error("", "empty");
  expect_error("id,truth,pred\n", "line 1");
  expect_error(h + "a,1,2\nb,5,1\n", "line 3");
  expect_error(h + "a,x,2\n", "not an integer");
  expect_error(h + "a,1,2,0.5\n", "score columns");
  expect_error(h + "a,1,2,0.1,0.2,nan,0.3\n", "line 2");
  expect_error(h + ",1,2\n", "empty sample_id");
}

TEST(Predictions, PublishedFoldFixtureReproducesMatrix) {
  const auto preds = read_predictions_csv(synthetic::table5_predictions_csv(), 4);
  ASSERT_EQ(preds.size(), 1189u);
  std::vector<int> yt, yp;
  for (const auto& p : preds) {
    yt.push_back(p.true_class);
    yp.push_back(p.pred_class);
  }
  EXPECT_EQ(oracle::confusion(yt, yp, 4), kTable5);
  EXPECT_EQ(synthetic::table5_confusion(), kTable5);
}
