#include <gtest/gtest.h>

#include <set>

#include "postcheck/common/error.hpp"
#include "postcheck/cross_validate.hpp"
#include "postcheck/dataset/synth.hpp"
#include "postcheck/evaluation.hpp"
#include "postcheck/pipeline.hpp"
#include "postcheck/tabular.hpp"
#include "test_util.hpp"

namespace postcheck::tabular {
namespace {

using testing::blobs;

double auc(const Eigen::VectorXd& s, std::span<const int> y) {
  return evaluation::roc_auc(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())), y);
}

TEST(Learners, NamesRoundTrip) {
  for (auto k : kAllLearners) EXPECT_EQ(parse_learner_kind(to_string(k)), k);
  EXPECT_THROW(parse_learner_kind("xgboost"), ConfigError);
}

TEST(Learners, EveryKindIsDeterministicAndSerializable) {
  const auto [X, y] = blobs(120, 4, 2.5, 3);
  const auto [Xq, yq] = blobs(40, 4, 2.5, 4);
  testing::TempDir dir("zoo");
  for (auto kind : kAllLearners) {
    const BaseLearnerSpec spec{kind, nlohmann::json::object(), 11};
    const auto a = train_base(spec, X, y);
    const auto b = train_base(spec, X, y);
    const Eigen::VectorXd pa = a->predict_proba(Xq);
    EXPECT_EQ(pa, b->predict_proba(Xq)) << to_string(kind);
    EXPECT_GE(pa.minCoeff(), 0.0);
    EXPECT_LE(pa.maxCoeff(), 1.0);
    EXPECT_GT(auc(pa, yq), 0.7) << to_string(kind);
    const auto back = load_model(a->to_json());
    EXPECT_EQ(back->predict_proba(Xq), pa) << to_string(kind);
    save_model(dir / to_string(kind), *a, {{"spec", spec.to_json()}});
    EXPECT_EQ(load_model_dir(dir / to_string(kind))->predict_proba(Xq), pa);
  }
}

TEST(Learners, UnknownHyperparameterRejected) {
  const auto [X, y] = blobs(20, 2, 1.0, 1);
  EXPECT_THROW(train_base({LearnerKind::knn, {{"neighbours", 3}}, 0}, X, y), ConfigError);
}

TEST(Learners, SeparableTrainingAucIsOne) {
  Eigen::MatrixXd X(60, 2);
  std::vector<int> y(60);
  for (int i = 0; i < 60; ++i) {
    y[static_cast<std::size_t>(i)] = i % 2;
    X(i, 0) = (i % 2 ? 2.0 : -2.0) + 0.01 * i;
    X(i, 1) = 0.1 * ((i * 37) % 11);
  }
  const auto m = train_base({LearnerKind::gradient_boosting, nlohmann::json::object(), 0}, X, y);
  EXPECT_EQ(auc(m->predict_proba(X), y), 1.0);
}

TEST(Learners, NoSignalHeldOutAucNearHalf) {
  dataset::SignalSpec spec;
  spec.signal = 0.0;
  training::CorpusCache corpus(dataset::synthesize_corpus(2000, 13, spec), features::default_image_resolver());
  const auto [train_rows, test_rows] = pipeline::holdout_rows(corpus, 0.5, 13);
  const auto fold = corpus.split(train_rows, test_rows);
  const auto m = train_base({LearnerKind::gradient_boosting, nlohmann::json::object(), 0}, fold.train_meta.values,
                            fold.train_labels());
  const double a = auc(m->predict_proba(fold.test_meta.values), fold.test_labels());
  EXPECT_GE(a, 0.4);
  EXPECT_LE(a, 0.6);
}

TEST(Logistic, StationaryPointOfPenalizedLikelihood) {
  const auto [X, y] = blobs(200, 3, 1.0, 9);
  const double l2 = 0.5;
  const auto fit = fit_logistic(X, y, l2);
  const Eigen::VectorXd p = logistic_predict(fit, X);
  Eigen::VectorXd r(200);
  for (int i = 0; i < 200; ++i) r(i) = y[static_cast<std::size_t>(i)] - p(i);
  const Eigen::VectorXd grad_w = X.transpose() * r - l2 * fit.weights;
  EXPECT_LT(grad_w.cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(std::abs(r.sum()), 1e-8);  // intercept is not penalized
}

TEST(Tree, UnlimitedDepthFitsDistinctPoints) {
  const auto [X, y] = blobs(80, 3, 0.5, 2);
  std::vector<double> t(y.begin(), y.end()), w(y.size(), 1.0);
  std::vector<std::size_t> rows(y.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const Tree tree = build_tree(X, t, w, rows, TreeOptions{}, 0);
  for (int i = 0; i < 80; ++i) EXPECT_EQ(tree.predict(X.row(i)), y[static_cast<std::size_t>(i)]);
  TreeOptions shallow;
  shallow.max_depth = 2;
  EXPECT_LE(build_tree(X, t, w, rows, shallow, 0).depth(), 2);
  const Tree back = Tree::from_json(tree.to_json());
  EXPECT_EQ(back.nodes.size(), tree.nodes.size());
}

TEST(Kernels, SerialAndParallelAgree) {
  const auto [X, y] = blobs(300, 5, 1.0, 21);
  const auto [Q, yq] = blobs(120, 5, 1.0, 22);
  EXPECT_EQ(knn_scores(X, y, Q, 7, ExecPolicy::serial), knn_scores(X, y, Q, 7, ExecPolicy::openmp));
  ForestOptions opt;
  opt.estimators = 12;
  const auto fs = fit_forest(X, y, opt, 5, ExecPolicy::serial);
  const auto fp = fit_forest(X, y, opt, 5, ExecPolicy::openmp);
  const Eigen::VectorXd ss = forest_scores(fs, Q, ExecPolicy::serial);
  EXPECT_EQ(ss, forest_scores(fp, Q, ExecPolicy::openmp));
}

TEST(Knn, BruteForceOracle) {
  const auto [X, y] = blobs(50, 2, 1.0, 5);
  const auto [Q, yq] = blobs(10, 2, 1.0, 6);
  const int k = 5;
  const Eigen::VectorXd got = knn_scores(X, y, Q, k, ExecPolicy::serial);
  for (int q = 0; q < Q.rows(); ++q) {
    std::vector<std::pair<double, int>> d;
    for (int i = 0; i < X.rows(); ++i) d.push_back({(X.row(i) - Q.row(q)).squaredNorm(), i});
    std::sort(d.begin(), d.end());
    double pos = 0;
    for (int j = 0; j < k; ++j) pos += y[static_cast<std::size_t>(d[static_cast<std::size_t>(j)].second)];
    EXPECT_DOUBLE_EQ(got(q), pos / k);
  }
}

TEST(MetaMlp, ShapesAndZeroWeights) {
  MetaMLP m(14, 2);
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(7, 14);
  const auto [features, logits] = mlp_forward(m, X);
  EXPECT_EQ(features.rows(), 7);
  EXPECT_EQ(features.cols(), kMetaFeatureDim);
  EXPECT_EQ(logits.rows(), 7);
  EXPECT_EQ(logits.cols(), 2);
  EXPECT_EQ(mlp_forward(m, X).second, logits);
  for (auto* p : m.parameters().all()) p->value.setZero();
  const auto zero = mlp_forward(m, X).second;
  EXPECT_EQ(zero.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(nn::softmax_positive(zero)(0), 0.5);
  EXPECT_THROW(mlp_forward(m, Eigen::MatrixXd::Zero(2, 5)), ShapeError);
}

EnsembleConfig stacking_of(std::vector<BaseLearnerSpec> bases, std::uint64_t seed = 1) {
  EnsembleConfig c;
  c.mode = EnsembleMode::stacking;
  c.base = std::move(bases);
  c.seed = seed;
  return c;
}

TEST(Stacking, OofRowsComeFromModelsNotTrainedOnThem) {
  const auto [X, y] = blobs(100, 3, 1.0, 31);
  const auto m = train_stacking(stacking_of({{LearnerKind::gradient_boosting, {{"n_estimators", 10}}, 0},
                                             {LearnerKind::knn, nlohmann::json::object(), 0}}),
                                X, y);
  ASSERT_EQ(m->oof.producer_fold.size(), 100u);
  for (std::size_t i = 0; i < 100; ++i) {
    const int f = m->oof.producer_fold[i];
    const auto& rows = m->oof.fold_train_rows[static_cast<std::size_t>(f)];
    EXPECT_EQ(std::count(rows.begin(), rows.end(), i), 0) << "row " << i;
  }
  EXPECT_EQ(m->meta_features.rows(), 100);
  EXPECT_EQ(m->meta_features.cols(), 2);
}

TEST(Stacking, PerfectBaseGivesPerfectAuc) {
  Eigen::MatrixXd X(60, 2);
  std::vector<int> y(60);
  for (int i = 0; i < 60; ++i) {
    y[static_cast<std::size_t>(i)] = i % 3 == 0;
    X(i, 0) = y[static_cast<std::size_t>(i)] + 0.001 * i;
    X(i, 1) = std::sin(i);
  }
  const auto m = train_stacking(stacking_of({{LearnerKind::decision_tree, {{"max_depth", 1}}, 0}}), X, y);
  EXPECT_EQ(auc(m->predict_proba(X), y), 1.0);
}

// Duplicated columns split the single-base weight; the min-norm fit predicts identically.
TEST(Stacking, DuplicateBaseMatchesSingleBase) {
  const auto [X, y] = blobs(50, 3, 0.8, 41);
  const BaseLearnerSpec base{LearnerKind::gradient_boosting, {{"n_estimators", 20}}, 3};
  const auto one = train_stacking(stacking_of({base}), X, y);
  const auto two = train_stacking(stacking_of({base, base}), X, y);
  const auto [Q, yq] = blobs(30, 3, 0.8, 42);
  EXPECT_LT((one->predict_proba(Q) - two->predict_proba(Q)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(two->meta().weights(0), two->meta().weights(1), 1e-9);
  EXPECT_NEAR(two->meta().weights.sum(), one->meta().weights(0), 1e-9);
}

TEST(Stacking, TooFewRowsIsError) {
  const auto [X, y] = blobs(4, 2, 1.0, 1);
  EXPECT_THROW(train_stacking(stacking_of({{LearnerKind::knn, {{"k", 1}}, 0}}), X, y), ModelError);
}

TEST(Blending, EightyTwentySplitAndDeterminism) {
  const auto [X, y] = blobs(100, 3, 1.0, 51);
  EnsembleConfig c = EnsembleConfig::default_stacking(4);
  c.mode = EnsembleMode::blending;
  const auto a = train_blending(c, X, y);
  EXPECT_EQ(a->base_rows.size(), 80u);
  EXPECT_EQ(a->meta_rows.size(), 20u);
  std::set<std::size_t> base(a->base_rows.begin(), a->base_rows.end());
  for (auto r : a->meta_rows) EXPECT_FALSE(base.count(r));
  const auto b = train_blending(c, X, y);
  EXPECT_EQ(a->meta_rows, b->meta_rows);
  EXPECT_EQ(a->predict_proba(X), b->predict_proba(X));
  const auto back = load_model(a->to_json());
  EXPECT_EQ(back->predict_proba(X), a->predict_proba(X));
}

TEST(Blending, PerfectBaseOnHoldout) {
  Eigen::MatrixXd X(100, 1);
  std::vector<int> y(100);
  for (int i = 0; i < 100; ++i) {
    y[static_cast<std::size_t>(i)] = i % 4 == 0;
    X(i, 0) = y[static_cast<std::size_t>(i)] * 5.0 + 0.01 * i;
  }
  EnsembleConfig c;
  c.mode = EnsembleMode::blending;
  c.base = {{LearnerKind::logistic_regression, nlohmann::json::object(), 0}};
  const auto m = train_blending(c, X, y);
  Eigen::MatrixXd Xh(static_cast<Eigen::Index>(m->meta_rows.size()), 1);
  std::vector<int> yh;
  for (std::size_t i = 0; i < m->meta_rows.size(); ++i) {
    Xh(static_cast<Eigen::Index>(i), 0) = X(static_cast<Eigen::Index>(m->meta_rows[i]), 0);
    yh.push_back(y[m->meta_rows[i]]);
  }
  EXPECT_EQ(auc(m->predict_proba(Xh), yh), 1.0);
}

TEST(EnsembleConfigJson, RoundTrip) {
  const auto c = EnsembleConfig::default_stacking(9);
  EXPECT_EQ(EnsembleConfig::from_json(c.to_json()).to_json(), c.to_json());
  EXPECT_EQ(c.base.size(), 4u);
}

}  // namespace
}  // namespace postcheck::tabular
