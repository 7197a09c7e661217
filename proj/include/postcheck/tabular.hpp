#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "postcheck/common/parallel.hpp"
#include "postcheck/nn/layers.hpp"
#include "postcheck/training.hpp"

namespace postcheck::tabular {

enum class LearnerKind {
  logistic_regression,
  lda,
  knn,
  decision_tree,
  gaussian_nb,
  svm,
  adaboost,
  gradient_boosting,
  random_forest,
  extra_trees,
  mlp,
};

inline constexpr std::array<LearnerKind, 11> kAllLearners = {
    LearnerKind::logistic_regression, LearnerKind::lda,          LearnerKind::knn,
    LearnerKind::decision_tree,       LearnerKind::gaussian_nb,  LearnerKind::svm,
    LearnerKind::adaboost,            LearnerKind::gradient_boosting, LearnerKind::random_forest,
    LearnerKind::extra_trees,         LearnerKind::mlp};

std::string to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view name);  // ConfigError on unknown names

struct BaseLearnerSpec {
  LearnerKind kind = LearnerKind::gradient_boosting;
  nlohmann::json hyperparameters = nlohmann::json::object();
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static BaseLearnerSpec from_json(const nlohmann::json& j);
};

// A fitted metadata classifier. Immutable after training.
class TabularModel {
 public:
  virtual ~TabularModel() = default;
  // Unreliable-class score in [0, 1] per row.
  virtual Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const = 0;
  virtual std::string kind() const = 0;
  // {"kind": ..., "payload": ...}; load_model inverts it.
  virtual nlohmann::json to_json() const = 0;
};

using ModelPtr = std::unique_ptr<TabularModel>;

ModelPtr train_base(const BaseLearnerSpec& spec, const Eigen::MatrixXd& X, std::span<const int> y,
                    ExecPolicy policy = default_exec_policy());
ModelPtr load_model(const nlohmann::json& j);

// Directory with model.json (payload) and manifest.json (spec, seed, metrics).
void save_model(const std::filesystem::path& dir, const TabularModel& model, const nlohmann::json& manifest);
ModelPtr load_model_dir(const std::filesystem::path& dir);

// ---------------------------------------------------------------- trees

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct TreeOptions {
  int max_depth = 0;  // 0 = unlimited
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  int max_features = 0;  // 0 = all
  bool random_thresholds = false;  // extra-trees style splits
};

// Weighted least-squares regression tree. On 0/1 targets the split gain equals
// the weighted gini decrease, so the same builder serves classification.
struct Tree {
  std::vector<TreeNode> nodes;

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  int leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  int depth() const;
  nlohmann::json to_json() const;
  static Tree from_json(const nlohmann::json& j);
};

Tree build_tree(const Eigen::MatrixXd& X, std::span<const double> target, std::span<const double> weight,
                std::span<const std::size_t> rows, const TreeOptions& opt, std::uint64_t seed);

// ---------------------------------------------------------------- kNN kernel

// Positive share among the k nearest training rows (Euclidean, ties by index).
Eigen::VectorXd knn_scores(const Eigen::MatrixXd& train, std::span<const int> labels, const Eigen::MatrixXd& query,
                           int k, ExecPolicy policy);

// ---------------------------------------------------------------- forests

// Mean of tree predictions; trees evaluated in parallel under openmp.
Eigen::VectorXd forest_scores(std::span<const Tree> trees, const Eigen::MatrixXd& X, ExecPolicy policy);

struct ForestOptions {
  int estimators = 100;
  bool bootstrap = true;
  bool random_thresholds = false;
  int max_features = 0;  // 0 = round(sqrt(d))
};

std::vector<Tree> fit_forest(const Eigen::MatrixXd& X, std::span<const int> y, const ForestOptions& opt,
                             std::uint64_t seed, ExecPolicy policy);

// ---------------------------------------------------------------- logistic regression

// Minimizes sum(logloss) + l2/2 * |w|^2 (intercept unpenalized) by Newton steps.
// With l2 = 0 each step is the minimum-norm solution, so duplicated columns
// share weight equally.
struct LogisticFit {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  int iterations = 0;
};

LogisticFit fit_logistic(const Eigen::MatrixXd& X, std::span<const int> y, double l2, int max_iter = 100);
Eigen::VectorXd logistic_predict(const LogisticFit& fit, const Eigen::MatrixXd& X);

// ---------------------------------------------------------------- MetaMLP

inline constexpr int kMetaHidden = 64;
inline constexpr int kMetaFeatureDim = 32;

// Layers of the metadata network, registered into a caller-owned ParameterSet
// under "<prefix>.fc1", "<prefix>.fc2" and, when with_output, "<prefix>.out".
class MetaNet {
 public:
  MetaNet() = default;
  MetaNet(nn::ParameterSet& params, const std::string& prefix, int in_dim, std::uint64_t seed,
          double dropout = 0.2, bool with_output = true);

  // 32-dim penultimate activation.
  nn::Var feature(nn::Graph& g, nn::Var x, nn::ForwardContext& ctx) const;
  nn::Var output(nn::Graph& g, nn::Var feature, nn::ForwardContext& ctx) const;
  int in_dim() const { return fc1_.in_dim(); }
  bool has_output() const { return with_output_; }

 private:
  nn::Linear fc1_, fc2_, out_;
  double dropout_ = 0.2;
  bool with_output_ = true;
};

class MetaMLP : public nn::Classifier {
 public:
  explicit MetaMLP(int in_dim, std::uint64_t seed = 0, double dropout = 0.2);

  nn::ParameterSet& parameters() override { return params_; }
  const nn::ParameterSet& parameters() const override { return params_; }
  nn::Var logits(nn::Graph& g, std::span<const nn::Sample* const> batch, nn::ForwardContext& ctx) const override;

  const MetaNet& net() const { return net_; }
  int in_dim() const { return net_.in_dim(); }

 private:
  nn::ParameterSet params_;
  MetaNet net_;
};

// Inference pass: (features n x 32, logits n x 2).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> mlp_forward(const MetaMLP& m, const Eigen::MatrixXd& X);

std::vector<nn::Sample> meta_samples(const Eigen::MatrixXd& X, std::span<const int> y,
                                     std::span<const std::string> ids = {});

// Optimizer settings for the metadata MLP: warmup schedule peaking at `lr`.
training::OptimizerConfig meta_mlp_optimizer(std::uint64_t seed, int epochs = 20, double lr = 1e-3,
                                             int batch_size = 32);

// Trains a MetaMLP on (X, y); validation rows, when given, select the best epoch.
training::TrainHistory train_meta_mlp(MetaMLP& model, const Eigen::MatrixXd& X, std::span<const int> y,
                                      const training::OptimizerConfig& cfg,
                                      const Eigen::MatrixXd* X_val = nullptr, std::span<const int> y_val = {},
                                      ExecPolicy policy = default_exec_policy());

// ---------------------------------------------------------------- ensembles

enum class EnsembleMode { stacking, blending };

struct EnsembleConfig {
  EnsembleMode mode = EnsembleMode::stacking;
  std::vector<BaseLearnerSpec> base;
  int stacking_folds = 5;
  double blending_holdout_fraction = 0.2;
  std::uint64_t seed = 0;

  static EnsembleConfig default_stacking(std::uint64_t seed = 0);
  nlohmann::json to_json() const;
  static EnsembleConfig from_json(const nlohmann::json& j);
};

// Where each meta-feature came from: row i's base scores were produced by
// models trained on `fold_train_rows[producer_fold[i]]`.
struct OofTrace {
  std::vector<int> producer_fold;
  std::vector<std::vector<std::size_t>> fold_train_rows;
};

class EnsembleModel : public TabularModel {
 public:
  EnsembleModel(EnsembleMode mode, std::vector<ModelPtr> bases, LogisticFit meta);

  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override;
  std::string kind() const override { return mode_ == EnsembleMode::stacking ? "stacking" : "blending"; }
  nlohmann::json to_json() const override;

  Eigen::MatrixXd base_scores(const Eigen::MatrixXd& X) const;
  const LogisticFit& meta() const { return meta_; }
  std::size_t base_count() const { return bases_.size(); }

  // Stacking: out-of-fold score matrix and its provenance. Blending: holdout
  // rows and their base scores.
  Eigen::MatrixXd meta_features;
  OofTrace oof;
  std::vector<std::size_t> base_rows;
  std::vector<std::size_t> meta_rows;

 private:
  EnsembleMode mode_;
  std::vector<ModelPtr> bases_;
  LogisticFit meta_;
};

std::unique_ptr<EnsembleModel> train_stacking(const EnsembleConfig& cfg, const Eigen::MatrixXd& X,
                                              std::span<const int> y, ExecPolicy policy = default_exec_policy());
std::unique_ptr<EnsembleModel> train_blending(const EnsembleConfig& cfg, const Eigen::MatrixXd& X,
                                              std::span<const int> y, ExecPolicy policy = default_exec_policy());

}  // namespace postcheck::tabular
