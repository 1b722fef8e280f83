#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "sefusion/report.hpp"

using namespace sefusion;

using Labels = std::vector<std::size_t>;

namespace {

Labels random_labels(std::size_t n, std::size_t classes, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, classes - 1);
  Labels out(n);
  for (auto& v : out) v = d(rng);
  return out;
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

}  // namespace

TEST(Confusion, Cases) {
  Labels g{0, 1, 2, 1};
  auto cm = confusion(g, g, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(cm(i, j), i == j ? (i == 1 ? 2 : 1) : 0);
  auto one = confusion(Labels{0}, Labels{1}, 2);
  EXPECT_EQ(one(0, 1), 1);
  EXPECT_EQ(one.total(), 1);
  EXPECT_THROW(confusion(Labels{0, 1}, Labels{0}, 2), UsageError);
  EXPECT_THROW(confusion(Labels{0, 2}, Labels{0, 1}, 2), UsageError);
  EXPECT_THROW(confusion(Labels{}, Labels{}, 2), UsageError);
}

TEST(Confusion, RandomMatchesTally) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const std::size_t c = 2 + static_cast<std::size_t>(t % 3);
    auto g = random_labels(50, c, rng), p = random_labels(50, c, rng);
    auto cm = confusion(g, p, c);
    EXPECT_EQ(cm.total(), 50);
    auto counts = oracle::tally(g, p, c);
    for (std::size_t i = 0; i < c; ++i) {
      EXPECT_EQ(cm(i, i), counts[i].tp);
      EXPECT_EQ(cm.gold_support(i), counts[i].support);
      EXPECT_EQ(cm.predicted_count(i) - cm(i, i), counts[i].fp);
    }
  }
}

TEST(PerClassF1, HandCase) {
  auto scores = per_class_f1(confusion(Labels{0, 0, 1}, Labels{0, 1, 1}, 2));
  EXPECT_DOUBLE_EQ(scores[0].precision, 1.0);
  EXPECT_DOUBLE_EQ(scores[0].recall, 0.5);
  EXPECT_NEAR(scores[0].f1, 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(scores[1].precision, 0.5);
  EXPECT_DOUBLE_EQ(scores[1].recall, 1.0);
  EXPECT_NEAR(scores[1].f1, 2.0 / 3.0, 1e-15);
}

TEST(PerClassF1, PerfectAndAbsentClasses) {
  Labels g{0, 1, 1, 0};
  auto scores = per_class_f1(confusion(g, g, 3));
  EXPECT_EQ(scores[0].f1, 1.0);
  EXPECT_EQ(scores[1].f1, 1.0);
  EXPECT_EQ(scores[2].precision, 0.0);
  EXPECT_EQ(scores[2].recall, 0.0);
  EXPECT_EQ(scores[2].f1, 0.0);
}

TEST(WeightedF1, HandCaseIsTwoThirds) {
  EXPECT_NEAR(weighted_f1(Labels{0, 0, 1}, Labels{0, 1, 1}, 2), 2.0 / 3.0, 1e-15);
}

TEST(WeightedF1, PerfectIsOne) {
  std::mt19937_64 rng(2);
  auto g = random_labels(40, 4, rng);
  EXPECT_EQ(weighted_f1(g, g, 4), 1.0);
}

TEST(WeightedF1, MatchesOracleOnRandomPairs) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> len(1, 60);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t c = 2 + static_cast<std::size_t>(t % 3);
    const std::size_t n = len(rng);
    auto g = random_labels(n, c, rng), p = random_labels(n, c, rng);
    const double got = weighted_f1(g, p, c);
    ASSERT_NEAR(got, oracle::weighted_f1(g, p, c), 1e-12) << "case " << t;
    ASSERT_GE(got, 0.0);
    ASSERT_LE(got, 1.0);
    auto scores = per_class_f1(confusion(g, p, c));
    auto counts = oracle::tally(g, p, c);
    for (std::size_t i = 0; i < c; ++i)
      ASSERT_NEAR(scores[i].f1, oracle::f1_from_counts(counts[i]), 1e-12);
  }
}

TEST(WeightedF1, RelabelInvariant) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    auto g = random_labels(30, 4, rng), p = random_labels(30, 4, rng);
    Labels perm{0, 1, 2, 3};
    std::shuffle(perm.begin(), perm.end(), rng);
    Labels g2, p2;
    for (auto v : g) g2.push_back(perm[v]);
    for (auto v : p) p2.push_back(perm[v]);
    EXPECT_NEAR(weighted_f1(g, p, 4), weighted_f1(g2, p2, 4), 1e-12);
  }
}

TEST(WeightedF1, ConstantPredictorClosedForm) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    auto g = random_labels(25, 3, rng);
    const std::size_t k = static_cast<std::size_t>(t % 3);
    Labels p(g.size(), k);
    const double share = static_cast<double>(std::count(g.begin(), g.end(), k)) /
                         static_cast<double>(g.size());
    // Constant k: precision = share, recall = 1 (when present).
    const double f1k = share > 0 ? 2 * share / (share + 1) : 0.0;
    EXPECT_NEAR(weighted_f1(g, p, 3), share * f1k, 1e-12);
  }
}

TEST(WeightedF1, OneOnlyWhenPerfect) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 200; ++t) {
    auto g = random_labels(6, 2, rng), p = random_labels(6, 2, rng);
    EXPECT_EQ(weighted_f1(g, p, 2) == 1.0, g == p);
  }
}

TEST(AverageWeightedF1, TableAggregates) {
  const std::vector<double> b{0.8344, 0.8243, 0.5177, 0.9444};
  const std::vector<double> c{0.4634, 0.4429, 0.4317, 0.9444};
  EXPECT_EQ(round4(average_weighted_f1(b)), 0.7802);
  EXPECT_EQ(round4(average_weighted_f1(c)), 0.5706);
  EXPECT_EQ(average_weighted_f1(std::vector<double>{0.25}), 0.25);
  EXPECT_THROW(average_weighted_f1(std::vector<double>{}), UsageError);
}

TEST(Accuracy, Cases) {
  EXPECT_EQ(accuracy(Labels{0, 1, 2}, Labels{0, 1, 2}), 1.0);
  EXPECT_EQ(accuracy(Labels{0, 1, 2}, Labels{1, 2, 0}), 0.0);
  EXPECT_THROW(accuracy(Labels{0}, Labels{}), UsageError);
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    auto g = random_labels(33, 4, rng), p = random_labels(33, 4, rng);
    long hits = 0;
    for (std::size_t k = 0; k < g.size(); ++k) hits += g[k] == p[k];
    EXPECT_DOUBLE_EQ(accuracy(g, p), static_cast<double>(hits) / 33.0);
  }
}

TEST(Report, GroupAverageAndJson) {
  std::vector<EvalReport> members;
  const std::vector<double> test_scores{0.8344, 0.8243, 0.5177, 0.9444};
  for (std::size_t i = 0; i < 4; ++i) {
    EvalReport r;
    r.task = "B" + std::to_string(i + 1);
    r.weighted_f1[Split::test] = test_scores[i];
    r.samples[Split::test] = 1500;
    if (i < 3) r.weighted_f1[Split::train] = 0.5;
    members.push_back(r);
  }
  auto g = make_group_report("B", members);
  EXPECT_NEAR(g.average.at(Split::test), 0.78020, 1e-4);
  EXPECT_EQ(g.average.count(Split::train), 0u);  // B4 lacks a train score

  auto back = group_report_from_json(nlohmann::json::parse(to_json(g).dump()));
  EXPECT_EQ(back.group, "B");
  ASSERT_EQ(back.members.size(), 4u);
  EXPECT_EQ(back.members[2].weighted_f1, members[2].weighted_f1);
  EXPECT_EQ(back.average, g.average);
}

TEST(Report, TableLayout) {
  EvalReport a;
  a.task = "A";
  a.weighted_f1 = {{Split::train, 0.5}, {Split::validation, 0.25}, {Split::test, 0.3468}};
  EvalReport c4;
  c4.task = "C4";
  c4.weighted_f1[Split::test] = 0.9444;
  auto g = make_group_report("C", {c4});
  const auto table = render_table({a}, {g});
  EXPECT_NE(table.find("Task     Sub-task  Train      Validation Test"), std::string::npos);
  EXPECT_NE(table.find("A        A         0.5000     0.2500     0.3468"), std::string::npos);
  EXPECT_NE(table.find("C        C4        -          -          0.9444"), std::string::npos);
  EXPECT_NE(table.find("average-weighted-F1"), std::string::npos);
}
