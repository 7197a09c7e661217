#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "postcheck/cross_validate.hpp"
#include "postcheck/dataset/records.hpp"
#include "postcheck/fusion.hpp"
#include "postcheck/tabular.hpp"
#include "postcheck/textenc.hpp"
#include "postcheck/training.hpp"

namespace postcheck::pipeline {

// Every tunable of a run. Unknown keys are rejected; to_json() is the
// resolved config written next to each run's outputs.
struct RunConfig {
  std::uint64_t seed = 0;

  struct Paths {
    std::filesystem::path corpus;
    std::filesystem::path output_dir = "runs";
    std::filesystem::path text_checkpoint;
    std::filesystem::path meta_checkpoint;
    std::filesystem::path image_table;
  } paths;

  dataset::ColumnSchema schema;

  training::OptimizerConfig optimizer;       // text and fused models
  training::OptimizerConfig meta_optimizer;  // meta MLP pretraining
  training::SmoothingLossConfig loss;
  bool unfreeze = true;
  int epochs_per_group = 1;
  double lr_factor = 0.95;

  textenc::BackboneConfig backbone;
  std::string blocks = "all";

  fusion::CombineMode combine = fusion::CombineMode::concat;
  int projection_dim = 128;
  std::string strategy = "s4";

  std::string tabular_model = "gradient_boosting";
  nlohmann::json tabular_hyperparameters = nlohmann::json::object();
  tabular::EnsembleConfig ensemble = tabular::EnsembleConfig::default_stacking();

  int cv_folds = 10;
  bool stratified = true;
  double holdout = 0.2;     // test share of a single train/test split
  double validation = 0.1;  // share of the training rows used for best-epoch selection

  RunConfig();
  // Settings for the desk-scale synthetic benchmark (toy backbone, larger
  // learning rates, few epochs).
  static RunConfig benchmark();

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j, const RunConfig& base = RunConfig());
  static RunConfig load(const std::filesystem::path& path, const RunConfig& base = RunConfig());

  fusion::FusionConfig fusion_config() const;
  textenc::BlockSelection selection() const;
  training::UnfreezeSchedule unfreeze_schedule(int group_count) const;
};

// One train/test split with everything a model needs.
struct Split {
  training::FoldData data;
  std::vector<nn::Sample> train;
  std::vector<nn::Sample> test;

  std::vector<int> test_labels() const;
};

std::vector<nn::Sample> make_samples(std::span<const features::PreparedRecord> records, const Eigen::MatrixXd& meta,
                                     const textenc::Tokenizer& tokenizer, int max_length);

Split make_split(const training::CorpusCache& corpus, std::span<const std::size_t> train_rows,
                 std::span<const std::size_t> test_rows, const textenc::BackboneConfig& backbone);

// Stratified train/test rows for a labeled corpus.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_rows(const training::CorpusCache& corpus,
                                                                           double fraction, std::uint64_t seed);

template <class Model>
struct TrainedModel {
  std::unique_ptr<Model> model;
  training::TrainHistory history;
  Eigen::VectorXd test_scores;
};

// Gradient-trained models. A stratified share of split.train (cfg.validation)
// selects the best epoch; the remaining rows are trained on.
TrainedModel<textenc::TextClassifier> train_text(const RunConfig& cfg, const Split& split, std::uint64_t seed,
                                                 ExecPolicy policy = default_exec_policy());
TrainedModel<tabular::MetaMLP> train_meta(const RunConfig& cfg, const Split& split, std::uint64_t seed,
                                          ExecPolicy policy = default_exec_policy());
TrainedModel<fusion::FusionModel> train_fusion(const RunConfig& cfg, const fusion::StrategyPlan& plan,
                                               const Split& split, ExecPolicy policy = default_exec_policy());

// Named checkpoints with manifests (config, seed, step, metrics, provenance).
Checkpoint text_checkpoint(const textenc::TextClassifier& m, const RunConfig& cfg, std::uint64_t seed,
                           const training::TrainHistory& h, nlohmann::json metrics);
Checkpoint meta_checkpoint(const tabular::MetaMLP& m, const RunConfig& cfg, std::uint64_t seed,
                           const training::TrainHistory& h, nlohmann::json metrics);

features::ImageResolver image_resolver(const RunConfig& cfg);

}  // namespace postcheck::pipeline
