#include <gtest/gtest.h>

#include <random>

#include "ethcluster/error.hpp"
#include "ethcluster/evaluate.hpp"

namespace ethcluster {
namespace {

constexpr Label V = Label::vulnerable;
constexpr Label C = Label::clean;

TEST(Confusion, CountsEachCell) {
  const std::vector<Label> pred{V, V, C, C, V};
  const std::vector<Label> truth{V, C, V, C, V};
  EXPECT_EQ(confusion(pred, truth), (ConfusionMatrix{2, 1, 1, 1}));
  try {
    confusion(pred, std::span(truth).first(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AlignmentError);
  }
}

struct Row {
  ConfusionMatrix cm;
  double acc, prec, rec, f;
};

// Published counts and their two-decimal percentages.
class PublishedTables : public ::testing::TestWithParam<Row> {};

TEST_P(PublishedTables, RoundedMetrics) {
  const auto& r = GetParam();
  const auto m = metrics(r.cm);
  EXPECT_DOUBLE_EQ(m.accuracy->rounded, r.acc);
  EXPECT_DOUBLE_EQ(m.precision->rounded, r.prec);
  EXPECT_DOUBLE_EQ(m.recall->rounded, r.rec);
  EXPECT_DOUBLE_EQ(m.f_measure->rounded, r.f);
}

INSTANTIATE_TEST_SUITE_P(Kinds, PublishedTables,
                         ::testing::Values(Row{{81, 7, 0, 182}, 97.41, 92.05, 100, 95.86},
                                           Row{{18, 0, 8, 34}, 86.67, 100, 69.23, 81.82},
                                           Row{{49, 2, 6, 127}, 95.65, 96.08, 89.09, 92.45},
                                           Row{{50, 0, 0, 117}, 100, 100, 100, 100},
                                           Row{{52, 8, 0, 114}, 95.4, 86.67, 100, 92.86}),
                         [](const auto& info) { return "row" + std::to_string(info.index); });

TEST(Metrics, UndefinedDenominators) {
  const auto none_predicted = metrics({0, 0, 5, 5});
  EXPECT_FALSE(none_predicted.precision);
  EXPECT_DOUBLE_EQ(none_predicted.recall->exact, 0.0);
  EXPECT_DOUBLE_EQ(none_predicted.f_measure->exact, 0.0);
  const auto all_clean = metrics({0, 0, 0, 10});
  EXPECT_FALSE(all_clean.precision);
  EXPECT_FALSE(all_clean.recall);
  EXPECT_FALSE(all_clean.f_measure);
  EXPECT_DOUBLE_EQ(all_clean.accuracy->rounded, 100.0);
  try {
    metrics({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyEvaluation);
  }
}

TEST(Percentage, HalfUpRounding) {
  EXPECT_DOUBLE_EQ(percentage(1, 8).rounded, 12.5);
  EXPECT_DOUBLE_EQ(percentage(1, 3).rounded, 33.33);
  EXPECT_DOUBLE_EQ(percentage(2, 3).rounded, 66.67);
  EXPECT_DOUBLE_EQ(percentage(1, 80000).rounded, 0.0);   // 0.00125
  EXPECT_DOUBLE_EQ(percentage(1, 32).rounded, 3.13);  // 3.125
  EXPECT_DOUBLE_EQ(percentage(3, 32).rounded, 9.38);  // 9.375
  EXPECT_DOUBLE_EQ(percentage(3, 3).rounded, 100.0);
}

TEST(FormatPercentage, Trimmed) {
  EXPECT_EQ(format_percentage(percentage(263, 270)), "97.41");
  EXPECT_EQ(format_percentage(percentage(1, 1)), "100");
  EXPECT_EQ(format_percentage(percentage(166, 174)), "95.4");
  EXPECT_EQ(format_percentage(std::nullopt), "undefined");
}

TEST(MetricsProperties, HarmonicMeanAndPermutationInvariance) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const ConfusionMatrix cm{rng() % 50, rng() % 50, rng() % 50, rng() % 50};
    if (cm.total() == 0) continue;
    const auto m = metrics(cm);
    for (const auto& p : {m.accuracy, m.precision, m.recall, m.f_measure})
      if (p) EXPECT_TRUE(p->exact >= 0 && p->exact <= 100);
    if (m.precision && m.recall && m.precision->exact + m.recall->exact > 0) {
      const double P = m.precision->exact, R = m.recall->exact;
      EXPECT_NEAR(m.f_measure->exact, 2 * P * R / (P + R), 1e-9);
    }
    std::vector<Label> pred, truth;
    auto push = [&](std::uint64_t n, Label p, Label t) {
      for (std::uint64_t i = 0; i < n; ++i) pred.push_back(p), truth.push_back(t);
    };
    push(cm.tp, V, V);
    push(cm.fp, V, C);
    push(cm.fn, C, V);
    push(cm.tn, C, C);
    std::vector<std::size_t> perm(pred.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Label> pp, tt;
    for (auto i : perm) pp.push_back(pred[i]), tt.push_back(truth[i]);
    EXPECT_EQ(confusion(pp, tt), cm);
  }
}

TEST(Project2d, CoordinatesAndLabels) {
  Matrix X(4, 3);
  X << 0, 0, 0, 1, 0, 0, 2, 0, 0, 3, 0, 0;
  const std::vector<int> assign{0, 0, 1, 1};
  const std::vector<Label> labels{C, V};
  const auto pts = project2d(X, assign, labels);
  ASSERT_EQ(pts.size(), 4u);
  EXPECT_NEAR(pts[0].x, -1.5, 1e-12);
  EXPECT_NEAR(pts[3].x, 1.5, 1e-12);
  for (const auto& p : pts) EXPECT_NEAR(p.y, 0.0, 1e-12);
  EXPECT_EQ(pts[1].label, C);
  EXPECT_EQ(pts[2].label, V);
  EXPECT_EQ(pts[2].cluster, 1);
  const auto csv = points_csv(pts);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,y,cluster,label");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(ReportTable, ContainsEveryKind) {
  std::vector<ReportRow> rows;
  for (auto k : kAllKinds) rows.push_back({k, {81, 7, 0, 182}, metrics({81, 7, 0, 182})});
  const auto table = format_report_table(rows);
  for (auto k : kAllKinds) EXPECT_NE(table.find(std::string(to_string(k))), std::string::npos);
  EXPECT_NE(table.find("97.41"), std::string::npos);
}

}  // namespace
}  // namespace ethcluster
