#include "postcheck/common/error.hpp"
#include "postcheck/common/seed.hpp"
#include "postcheck/dataset/folds.hpp"
#include "postcheck/pipeline.hpp"

namespace postcheck::pipeline {
namespace {

// Splits samples into (fit, validation) with a stratified holdout.
std::pair<std::vector<nn::Sample>, std::vector<nn::Sample>> inner_split(const std::vector<nn::Sample>& samples,
                                                                        double fraction, std::uint64_t seed) {
  if (fraction <= 0.0) return {samples, {}};
  std::vector<int> y;
  for (const auto& s : samples) y.push_back(s.label);
  const auto [fit_rows, val_rows] = dataset::stratified_holdout(y, fraction, seed);
  std::pair<std::vector<nn::Sample>, std::vector<nn::Sample>> out;
  for (auto i : fit_rows) out.first.push_back(samples[i]);
  for (auto i : val_rows) out.second.push_back(samples[i]);
  return out;
}

training::TrainOptions options_for(ExecPolicy policy) {
  training::TrainOptions o;
  o.policy = policy;
  return o;
}

nlohmann::json trained_provenance(const nn::ParameterSet& params, const std::string& origin) {
  nlohmann::json p = nlohmann::json::object();
  for (const auto* q : params.all()) p[q->name] = origin;
  return p;
}

nlohmann::json history_json(const training::TrainHistory& h) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : h.epochs) epochs.push_back(e.to_json());
  return {{"epochs", epochs},
          {"best_epoch", h.best_epoch},
          {"best_val_auc", h.best_val_auc ? nlohmann::json(*h.best_val_auc) : nlohmann::json(nullptr)}};
}

}  // namespace

std::vector<int> Split::test_labels() const {
  std::vector<int> y;
  for (const auto& s : test) y.push_back(s.label);
  return y;
}

std::vector<nn::Sample> make_samples(std::span<const features::PreparedRecord> records, const Eigen::MatrixXd& meta,
                                     const textenc::Tokenizer& tokenizer, int max_length) {
  if (meta.rows() != static_cast<Eigen::Index>(records.size())) {
    throw ShapeError("meta matrix rows must match the record count");
  }
  std::vector<nn::Sample> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& s = out[i];
    s.id = records[i].record.id;
    s.tokens = tokenizer.encode(records[i].text.text, max_length);
    s.meta = meta.row(static_cast<Eigen::Index>(i));
    s.label = records[i].record.label.value_or(0);
  }
  return out;
}

Split make_split(const training::CorpusCache& corpus, std::span<const std::size_t> train_rows,
                 std::span<const std::size_t> test_rows, const textenc::BackboneConfig& backbone) {
  Split s;
  s.data = corpus.split(train_rows, test_rows);
  const auto tok = textenc::make_tokenizer(backbone.tokenizer);
  s.train = make_samples(s.data.train, s.data.train_meta.values, *tok, backbone.max_sequence_length);
  s.test = make_samples(s.data.test, s.data.test_meta.values, *tok, backbone.max_sequence_length);
  return s;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_rows(const training::CorpusCache& corpus,
                                                                           double fraction, std::uint64_t seed) {
  return dataset::stratified_holdout(corpus.labels(), fraction, seed);
}

TrainedModel<textenc::TextClassifier> train_text(const RunConfig& cfg, const Split& split, std::uint64_t seed,
                                                 ExecPolicy policy) {
  TrainedModel<textenc::TextClassifier> out;
  out.model = std::make_unique<textenc::TextClassifier>(cfg.backbone, cfg.selection(), seed);
  const auto [fit, val] = inner_split(split.train, cfg.validation, mix_seed(cfg.seed, "validation"));
  training::OptimizerConfig opt = cfg.optimizer;
  opt.seed = seed;
  out.history = training::train(*out.model, {fit, val}, opt, cfg.loss,
                                cfg.unfreeze_schedule(out.model->group_count()),
                                training::DiscriminativeLRMap{cfg.lr_factor}, options_for(policy));
  if (!split.test.empty()) out.test_scores = nn::predict_proba(*out.model, split.test, policy);
  return out;
}

TrainedModel<tabular::MetaMLP> train_meta(const RunConfig& cfg, const Split& split, std::uint64_t seed,
                                          ExecPolicy policy) {
  TrainedModel<tabular::MetaMLP> out;
  out.model = std::make_unique<tabular::MetaMLP>(features::kMetaDim, seed);
  const auto [fit, val] = inner_split(split.train, cfg.validation, mix_seed(cfg.seed, "validation"));
  training::OptimizerConfig opt = cfg.meta_optimizer;
  opt.seed = seed;
  out.history = training::train(*out.model, {fit, val}, opt, cfg.loss, training::UnfreezeSchedule{1, 1, false},
                                training::DiscriminativeLRMap{cfg.lr_factor}, options_for(policy));
  if (!split.test.empty()) out.test_scores = nn::predict_proba(*out.model, split.test, policy);
  return out;
}

TrainedModel<fusion::FusionModel> train_fusion(const RunConfig& cfg, const fusion::StrategyPlan& plan,
                                               const Split& split, ExecPolicy policy) {
  TrainedModel<fusion::FusionModel> out;
  out.model = fusion::assemble(plan, cfg.fusion_config());
  const auto [fit, val] = inner_split(split.train, cfg.validation, mix_seed(cfg.seed, "validation"));
  training::OptimizerConfig opt = cfg.optimizer;
  opt.seed = plan.seed;
  out.history = training::train(*out.model, {fit, val}, opt, cfg.loss,
                                cfg.unfreeze_schedule(out.model->group_count()),
                                training::DiscriminativeLRMap{cfg.lr_factor}, options_for(policy));
  if (!split.test.empty()) out.test_scores = nn::predict_proba(*out.model, split.test, policy);
  return out;
}

Checkpoint text_checkpoint(const textenc::TextClassifier& m, const RunConfig& cfg, std::uint64_t seed,
                           const training::TrainHistory& h, nlohmann::json metrics) {
  nlohmann::json manifest = {
      {"model", {{"kind", "text"}, {"backbone", m.config().to_json()}, {"blocks", m.net().selection().to_string()},
                 {"head_input_dim", m.net().head().in_dim()}}},
      {"config", cfg.to_json()},
      {"seed", seed},
      {"step", h.epochs.empty() ? 0 : h.epochs.back().step},
      {"metrics", std::move(metrics)},
      {"history", history_json(h)},
      {"provenance", trained_provenance(m.parameters(), "trained:text:seed" + std::to_string(seed) + " from " +
                                                            m.backbone_origin())}};
  return Checkpoint::from_parameters(m.parameters(), std::move(manifest));
}

Checkpoint meta_checkpoint(const tabular::MetaMLP& m, const RunConfig& cfg, std::uint64_t seed,
                           const training::TrainHistory& h, nlohmann::json metrics) {
  nlohmann::json manifest = {
      {"model", {{"kind", "meta_mlp"}, {"in_dim", m.in_dim()}, {"feature_dim", tabular::kMetaFeatureDim}}},
      {"config", cfg.to_json()},
      {"seed", seed},
      {"step", h.epochs.empty() ? 0 : h.epochs.back().step},
      {"metrics", std::move(metrics)},
      {"history", history_json(h)},
      {"provenance", trained_provenance(m.parameters(), "trained:meta:seed" + std::to_string(seed))}};
  return Checkpoint::from_parameters(m.parameters(), std::move(manifest));
}

features::ImageResolver image_resolver(const RunConfig& cfg) {
  return cfg.paths.image_table.empty() ? features::default_image_resolver()
                                       : features::table_image_resolver(cfg.paths.image_table);
}

}  // namespace postcheck::pipeline
