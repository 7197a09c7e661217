#include <gtest/gtest.h>

#include "postcheck/common/error.hpp"
#include "postcheck/cross_validate.hpp"
#include "postcheck/dataset/synth.hpp"
#include "postcheck/pipeline.hpp"
#include "test_util.hpp"

namespace postcheck::training {
namespace {

class LabelOracle final : public FoldPipeline {
 public:
  std::vector<double> fit_predict(const FoldData& fold) override {
    const auto y = fold.test_labels();
    return {y.begin(), y.end()};
  }
  nlohmann::json config() const override { return {{"pipeline", "oracle"}}; }
};

class Constant final : public FoldPipeline {
 public:
  std::vector<double> fit_predict(const FoldData& fold) override { return std::vector<double>(fold.test.size(), 0.3); }
  nlohmann::json config() const override { return {{"pipeline", "constant"}}; }
};

class GradientBoosting final : public FoldPipeline {
 public:
  std::vector<double> fit_predict(const FoldData& fold) override {
    const auto m = tabular::train_base({tabular::LearnerKind::gradient_boosting, nlohmann::json::object(), 0},
                                       fold.train_meta.values, fold.train_labels());
    const Eigen::VectorXd s = m->predict_proba(fold.test_meta.values);
    return {s.data(), s.data() + s.size()};
  }
  nlohmann::json config() const override { return {{"pipeline", "gb"}}; }
};

CorpusCache synthetic(int n, std::uint64_t seed) {
  return CorpusCache(dataset::synthesize_corpus(n, seed), features::default_image_resolver());
}

TEST(CrossValidate, OracleAndConstantBounds) {
  const auto corpus = synthetic(300, 1);
  LabelOracle oracle;
  const auto a = cross_validate(oracle, corpus, 5, 1);
  EXPECT_EQ(a.scored_folds, 5);
  for (const auto& f : a.folds) EXPECT_EQ(f.auc.value(), 1.0);
  Constant constant;
  const auto b = cross_validate(constant, corpus, 5, 1);
  for (const auto& f : b.folds) EXPECT_EQ(f.auc.value(), 0.5);
  EXPECT_EQ(b.std_auc, 0.0);
}

TEST(CrossValidate, SingleClassFoldSkippedWithWarning) {
  auto recs = dataset::synthesize_corpus(20, 2);
  for (auto& r : recs) r.label = 0;
  recs[0].label = 1;
  recs[1].label = 1;
  const CorpusCache corpus(recs, features::default_image_resolver());
  LabelOracle oracle;
  const auto rep = cross_validate(oracle, corpus, 5, 0, false);
  EXPECT_LE(rep.scored_folds, 2);
  int skipped = 0;
  for (const auto& f : rep.folds) {
    if (!f.auc) {
      ++skipped;
      EXPECT_NE(f.warning.find("single class"), std::string::npos);
    }
  }
  EXPECT_EQ(skipped, 5 - rep.scored_folds);
  EXPECT_EQ(rep.to_json()["folds"].size(), 5u);
}

// Fitted artifacts of each fold are traced back to exactly the training ids.
TEST(Leakage, TenFoldProvenance) {
  const auto corpus = synthetic(600, 3);
  GradientBoosting gb;
  const auto rep = cross_validate(gb, corpus, 10, 3);
  std::set<std::string> all_test;
  for (const auto& f : rep.folds) {
    std::set<std::string> train_ids;
    for (auto i : rep.plan.train_indices(f.fold)) train_ids.insert(corpus.records()[i].id);
    EXPECT_EQ(f.user_score_sources, train_ids);
    EXPECT_EQ(f.standardizer_sources, train_ids);
    for (const auto& id : f.test_ids) {
      EXPECT_FALSE(f.user_score_sources.count(id));
      EXPECT_FALSE(f.standardizer_sources.count(id));
      all_test.insert(id);
    }
  }
  EXPECT_EQ(all_test.size(), 600u);
}

TEST(Leakage, TimestampFloorFromTrainingRowsOnly) {
  auto recs = dataset::synthesize_corpus(40, 4);
  recs[0].timestamp = 100;  // earliest, held out below
  recs[1].timestamp.reset();
  const CorpusCache corpus(recs, features::default_image_resolver());
  std::vector<std::size_t> train, test = {0, 1};
  std::int64_t floor = INT64_MAX;
  for (std::size_t i = 2; i < recs.size(); ++i) {
    train.push_back(i);
    if (recs[i].timestamp) floor = std::min(floor, *recs[i].timestamp);
  }
  const auto fold = corpus.split(train, test);
  EXPECT_EQ(fold.timestamp_floor, floor);
  EXPECT_EQ(fold.test[1].record.timestamp, floor);
  EXPECT_EQ(fold.test[0].record.timestamp, 100);
}

TEST(Leakage, TestRowsScoredAsNewPosts) {
  const auto corpus = synthetic(200, 5);
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < 200; ++i) (i % 4 ? train : test).push_back(i);
  const auto fold = corpus.split(train, test);
  for (std::size_t j = 0; j < fold.test.size(); ++j) {
    const auto& r = fold.test[j].record;
    EXPECT_EQ(fold.user_scores.score(r), fold.user_scores.score_new(r.user_id));
  }
}

TEST(CrossValidate, SyntheticGradientBoostingClearsFloor) {
  const auto corpus = synthetic(2000, 7);
  GradientBoosting gb;
  const auto rep = cross_validate(gb, corpus, 10, 7);
  EXPECT_EQ(rep.scored_folds, 10);
  EXPECT_GE(rep.mean_auc, 0.85);
}

TEST(RunConfigJson, StrictRoundTripAndPresets) {
  const auto b = pipeline::RunConfig::benchmark();
  EXPECT_EQ(b.seed, 7u);
  EXPECT_EQ(b.backbone.kind, textenc::BackboneKind::toy);
  const auto back = pipeline::RunConfig::from_json(b.to_json());
  EXPECT_EQ(back.to_json(), b.to_json());
  EXPECT_EQ(pipeline::RunConfig().backbone.hidden, 768);
  EXPECT_EQ(pipeline::RunConfig().optimizer.max_lr, 2e-5);
  EXPECT_THROW(pipeline::RunConfig::from_json({{"sede", 1}}), ConfigError);
  EXPECT_THROW(pipeline::RunConfig::from_json({{"fusion", {{"strategy", "s4"}, {"mode", "x"}}}}), ConfigError);
  const auto partial = pipeline::RunConfig::from_json({{"seed", 3}}, b);
  EXPECT_EQ(partial.seed, 3u);
  EXPECT_EQ(partial.optimizer.epochs, b.optimizer.epochs);
}

TEST(Pipeline, SplitSamplesCarryTokensAndMeta) {
  const auto corpus = synthetic(100, 8);
  const auto [train, test] = pipeline::holdout_rows(corpus, 0.2, 8);
  EXPECT_EQ(test.size(), 20u);
  const auto split = pipeline::make_split(corpus, train, test, textenc::BackboneConfig::toy());
  ASSERT_EQ(split.train.size(), 80u);
  for (const auto& s : split.train) {
    EXPECT_EQ(s.meta.size(), features::kMetaDim);
    EXPECT_LE(s.tokens.size(), 32u);
    EXPECT_EQ(s.tokens.front(), textenc::kClsId);
  }
  EXPECT_EQ(split.test_labels(), split.data.test_labels());
}

}  // namespace
}  // namespace postcheck::training
