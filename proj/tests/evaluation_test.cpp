#include <gtest/gtest.h>

#include <map>
#include <random>

#include "postcheck/common/error.hpp"
#include "postcheck/evaluation.hpp"

namespace postcheck::evaluation {
namespace {

TEST(RocAuc, WorkedExamples) {
  EXPECT_EQ(roc_auc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}), 1.0);
  EXPECT_EQ(roc_auc(std::vector<double>{0.3, 0.3, 0.3}, std::vector<int>{1, 0, 1}), 0.5);
  EXPECT_EQ(roc_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1}), 0.75);
}

TEST(RocAuc, SingleClassIsMetricError) {
  EXPECT_THROW(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), MetricError);
}

TEST(RocAuc, LengthMismatchIsError) {
  EXPECT_THROW(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1}), Error);
}

// Rank estimator against the O(n^2) definition, ties included.
TEST(RocAuc, MatchesPairwiseOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 499);
    const int levels = 1 + static_cast<int>(rng() % 20);
    std::vector<double> s(static_cast<std::size_t>(n));
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      s[static_cast<std::size_t>(i)] = static_cast<double>(rng() % static_cast<unsigned>(levels)) / levels;
      y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_NEAR(roc_auc(s, y), auc_pairwise_oracle(s, y), 1e-12);
  }
}

TEST(RocAuc, MonotoneTransformInvariance) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(150), t(150);
    std::vector<int> y(150);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = std::round(normal(rng) * 4) / 4;
      t[i] = std::exp(3 * s[i]) + 7;
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_EQ(roc_auc(s, y), roc_auc(t, y));
  }
}

TEST(RocAuc, ReversedScoresWithoutTies) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u;
  std::vector<double> s(300), r(300);
  std::vector<int> y(300);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = u(rng);
    r[i] = -s[i];
    y[i] = static_cast<int>(i % 3 == 0);
  }
  EXPECT_NEAR(roc_auc(r, y), 1.0 - roc_auc(s, y), 1e-12);
}

TEST(RocAuc, RandomScoresAverageHalf) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u;
  double sum = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::vector<double> s(200);
    std::vector<int> y(200);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = u(rng);
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    sum += roc_auc(s, y);
  }
  EXPECT_NEAR(sum / 100, 0.5, 0.05);
}

TEST(Report, SortedDescendingWithReference) {
  std::vector<NamedPredictions> runs = {
      {"weak", {{0.2, 0.4, 0.3, 0.1}, {0, 1, 0, 1}}, config_fingerprint({{"a", 1}})},
      {"strong", {{0.1, 0.9, 0.2, 0.8}, {0, 1, 0, 1}}, config_fingerprint({{"a", 2}})}};
  const auto r = report(runs, reference_meta_zoo_rows());
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].name, "strong");
  EXPECT_EQ(r.rows[0].auc, 1.0);
  EXPECT_EQ(r.rows[1].name, "weak");
  EXPECT_EQ(r.rows[0].n_pos, 2);
  EXPECT_NE(r.rows[0].fingerprint, r.rows[1].fingerprint);
  EXPECT_NE(r.to_table().find("gradient_boosting"), std::string::npos);
  EXPECT_EQ(r.to_json()["rows"].size(), 2u);
}

TEST(Report, ReferenceTablesCarryPublishedValues) {
  bool found_gb = false, found_lr = false;
  for (const auto& row : reference_meta_zoo_rows()) {
    if (row.name == "gradient_boosting") found_gb = row.auc == 0.733850;
    if (row.name == "logistic_regression") found_lr = row.auc == 0.545037;
  }
  EXPECT_TRUE(found_gb);
  EXPECT_TRUE(found_lr);
  std::map<std::string, double> strategy;
  for (const auto& row : reference_strategy_rows()) strategy[row.name] = row.auc;
  EXPECT_EQ(strategy.at("S1"), 0.9058);
  EXPECT_EQ(strategy.at("S2"), 0.9399);
  EXPECT_EQ(strategy.at("S3"), 0.9552);
  EXPECT_EQ(strategy.at("S4"), 0.9628);
  EXPECT_EQ(strategy.at("meta-only"), 0.7338);
  EXPECT_FALSE(reference_block_rows().empty());
}

TEST(Fingerprint, StableAndKeyOrderFree) {
  const nlohmann::json a = {{"x", 1}, {"y", {1, 2}}};
  const nlohmann::json b = nlohmann::json::parse(R"({"y":[1,2],"x":1})");
  EXPECT_EQ(config_fingerprint(a), config_fingerprint(b));
  EXPECT_NE(config_fingerprint(a), config_fingerprint({{"x", 2}}));
}

}  // namespace
}  // namespace postcheck::evaluation
