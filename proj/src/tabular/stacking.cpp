#include <algorithm>

#include "internal.hpp"
#include "postcheck/common/error.hpp"
#include "postcheck/common/json_util.hpp"
#include "postcheck/common/seed.hpp"
#include "postcheck/dataset/folds.hpp"
#include "postcheck/tabular_defaults.hpp"

namespace postcheck::tabular {
namespace {

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& X, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<int> labels_of(std::span<const int> y, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

bool both_classes(std::span<const int> y) {
  return std::find(y.begin(), y.end(), 0) != y.end() && std::find(y.begin(), y.end(), 1) != y.end();
}

// Trains every base learner on the same rows; independent fits run concurrently.
std::vector<ModelPtr> fit_bases(const std::vector<BaseLearnerSpec>& specs, const Eigen::MatrixXd& X,
                                std::span<const int> y, ExecPolicy policy) {
  std::vector<ModelPtr> out(specs.size());
  parallel_for(policy, static_cast<std::ptrdiff_t>(specs.size()), [&](std::ptrdiff_t b) {
    out[static_cast<std::size_t>(b)] = train_base(specs[static_cast<std::size_t>(b)], X, y, ExecPolicy::serial);
  });
  return out;
}

void check_config(const EnsembleConfig& cfg, EnsembleMode mode, const Eigen::MatrixXd& X, std::span<const int> y) {
  if (cfg.mode != mode) throw ConfigError("ensemble config has the wrong mode");
  if (cfg.base.empty()) throw ConfigError("ensemble needs at least one base learner");
  detail::check_xy(X, y, mode == EnsembleMode::stacking ? "stacking" : "blending");
}

}  // namespace

EnsembleConfig EnsembleConfig::default_stacking(std::uint64_t seed) {
  EnsembleConfig cfg;
  cfg.seed = seed;
  for (auto k : {LearnerKind::gradient_boosting, LearnerKind::random_forest, LearnerKind::adaboost,
                 LearnerKind::extra_trees}) {
    cfg.base.push_back({k, nlohmann::json::object(), mix_seed(seed, to_string(k))});
  }
  return cfg;
}

nlohmann::json EnsembleConfig::to_json() const {
  nlohmann::json b = nlohmann::json::array();
  for (const auto& s : base) b.push_back(s.to_json());
  return {{"mode", mode == EnsembleMode::stacking ? "stacking" : "blending"},
          {"base", b},
          {"meta_learner", "logistic_regression"},
          {"stacking_folds", stacking_folds},
          {"blending_holdout_fraction", blending_holdout_fraction},
          {"seed", seed}};
}

EnsembleConfig EnsembleConfig::from_json(const nlohmann::json& j) {
  StrictReader r(j, "ensemble");
  EnsembleConfig cfg;
  std::string mode = "stacking", meta = "logistic_regression";
  r.get("mode", mode);
  r.get("meta_learner", meta);
  if (mode == "stacking") cfg.mode = EnsembleMode::stacking;
  else if (mode == "blending") cfg.mode = EnsembleMode::blending;
  else throw ConfigError("ensemble mode must be stacking or blending, got '" + mode + "'");
  if (meta != "logistic_regression") throw ConfigError("the ensemble meta learner is logistic_regression");
  r.get("stacking_folds", cfg.stacking_folds);
  r.get("blending_holdout_fraction", cfg.blending_holdout_fraction);
  r.get("seed", cfg.seed);
  if (r.has("base")) {
    for (const auto& s : r.at("base")) cfg.base.push_back(BaseLearnerSpec::from_json(s));
  } else {
    cfg.base = default_stacking(cfg.seed).base;
  }
  r.finish();
  return cfg;
}

EnsembleModel::EnsembleModel(EnsembleMode mode, std::vector<ModelPtr> bases, LogisticFit meta)
    : mode_(mode), bases_(std::move(bases)), meta_(std::move(meta)) {}

Eigen::MatrixXd EnsembleModel::base_scores(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd s(X.rows(), static_cast<Eigen::Index>(bases_.size()));
  for (std::size_t b = 0; b < bases_.size(); ++b) s.col(static_cast<Eigen::Index>(b)) = bases_[b]->predict_proba(X);
  return s;
}

Eigen::VectorXd EnsembleModel::predict_proba(const Eigen::MatrixXd& X) const {
  return logistic_predict(meta_, base_scores(X));
}

nlohmann::json EnsembleModel::to_json() const {
  nlohmann::json bases = nlohmann::json::array();
  for (const auto& b : bases_) bases.push_back(b->to_json());
  return {{"kind", kind()},
          {"payload",
           {{"bases", bases},
            {"meta",
             {{"weights", std::vector<double>(meta_.weights.data(), meta_.weights.data() + meta_.weights.size())},
              {"intercept", meta_.intercept}}}}}};
}

std::unique_ptr<EnsembleModel> train_stacking(const EnsembleConfig& cfg, const Eigen::MatrixXd& X,
                                              std::span<const int> y, ExecPolicy policy) {
  check_config(cfg, EnsembleMode::stacking, X, y);
  if (X.rows() < cfg.stacking_folds) {
    throw ModelError("stacking needs at least " + std::to_string(cfg.stacking_folds) + " rows, got " +
                     std::to_string(X.rows()));
  }
  const auto plan = dataset::make_folds(y, cfg.stacking_folds, cfg.seed, true);
  const auto n_base = static_cast<Eigen::Index>(cfg.base.size());
  Eigen::MatrixXd oof(X.rows(), n_base);
  OofTrace trace;
  trace.producer_fold.assign(static_cast<std::size_t>(X.rows()), -1);

  for (int f = 0; f < cfg.stacking_folds; ++f) {
    const auto train_rows = plan.train_indices(f);
    const auto test_rows = plan.test_indices(f);
    const auto y_train = labels_of(y, train_rows);
    if (!both_classes(y_train)) throw ModelError("stacking fold " + std::to_string(f) + " has a single class");
    const auto bases = fit_bases(cfg.base, rows_of(X, train_rows), y_train, policy);
    const Eigen::MatrixXd X_test = rows_of(X, test_rows);
    for (Eigen::Index b = 0; b < n_base; ++b) {
      const Eigen::VectorXd s = bases[static_cast<std::size_t>(b)]->predict_proba(X_test);
      for (std::size_t i = 0; i < test_rows.size(); ++i) oof(static_cast<Eigen::Index>(test_rows[i]), b) = s(static_cast<Eigen::Index>(i));
    }
    for (auto r : test_rows) trace.producer_fold[r] = f;
    trace.fold_train_rows.push_back(train_rows);
  }

  LogisticFit meta = fit_logistic(oof, y, 0.0);
  auto model = std::make_unique<EnsembleModel>(EnsembleMode::stacking, fit_bases(cfg.base, X, y, policy),
                                               std::move(meta));
  model->meta_features = std::move(oof);
  model->oof = std::move(trace);
  return model;
}

std::unique_ptr<EnsembleModel> train_blending(const EnsembleConfig& cfg, const Eigen::MatrixXd& X,
                                              std::span<const int> y, ExecPolicy policy) {
  check_config(cfg, EnsembleMode::blending, X, y);
  std::vector<std::size_t> base_rows, meta_rows;
  bool ok = false;
  for (int attempt = 0; attempt < defaults::kBlendingRetries && !ok; ++attempt) {
    std::tie(base_rows, meta_rows) = dataset::stratified_holdout(
        y, cfg.blending_holdout_fraction, mix_seed(cfg.seed, static_cast<std::uint64_t>(attempt)));
    ok = both_classes(labels_of(y, meta_rows)) && both_classes(labels_of(y, base_rows));
  }
  if (!ok) throw ModelError("blending holdout keeps a single class after retries");

  const auto y_base = labels_of(y, base_rows);
  const auto y_meta = labels_of(y, meta_rows);
  auto bases = fit_bases(cfg.base, rows_of(X, base_rows), y_base, policy);
  const Eigen::MatrixXd X_meta = rows_of(X, meta_rows);
  Eigen::MatrixXd scores(X_meta.rows(), static_cast<Eigen::Index>(bases.size()));
  for (std::size_t b = 0; b < bases.size(); ++b) scores.col(static_cast<Eigen::Index>(b)) = bases[b]->predict_proba(X_meta);
  LogisticFit meta = fit_logistic(scores, y_meta, 0.0);
  auto model = std::make_unique<EnsembleModel>(EnsembleMode::blending, std::move(bases), std::move(meta));
  model->meta_features = std::move(scores);
  model->base_rows = std::move(base_rows);
  model->meta_rows = std::move(meta_rows);
  return model;
}

}  // namespace postcheck::tabular
