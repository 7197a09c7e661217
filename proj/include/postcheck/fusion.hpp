#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "postcheck/checkpoint.hpp"
#include "postcheck/tabular.hpp"
#include "postcheck/textenc.hpp"

namespace postcheck::fusion {

enum class CombineMode { concat, add };

CombineMode parse_combine_mode(std::string_view s);
std::string to_string(CombineMode m);

struct FusionConfig {
  CombineMode combine = CombineMode::concat;
  int d_text = textenc::kHeadHidden;
  int d_meta_feat = tabular::kMetaFeatureDim;
  int projection_dim = 128;  // add mode only
  int head_hidden = 128;
  double dropout = 0.3;
  textenc::BackboneConfig backbone;
  std::string blocks = "all";  // block spec, or "all"
  int meta_in_dim = 14;

  // Width of the fused head input.
  int fused_dim() const { return combine == CombineMode::concat ? d_text + d_meta_feat : projection_dim; }
  textenc::BlockSelection selection() const;

  nlohmann::json to_json() const;
  static FusionConfig from_json(const nlohmann::json& j);
};

enum class StrategyId { S1, S2, S3, S4 };
enum class InitSource { random, checkpoint };

StrategyId parse_strategy(std::string_view s);  // "s1".."s4", case-insensitive
std::string to_string(StrategyId id);

struct StrategyPlan {
  StrategyId id = StrategyId::S1;
  InitSource text_init = InitSource::random;
  InitSource meta_init = InitSource::random;
  std::optional<std::filesystem::path> text_checkpoint;
  std::optional<std::filesystem::path> meta_checkpoint;
  std::uint64_t seed = 0;

  // The init table: S2 and S4 take the meta checkpoint, S3 and S4 the text one.
  static StrategyPlan make(StrategyId id, std::uint64_t seed,
                           std::optional<std::filesystem::path> text_checkpoint = std::nullopt,
                           std::optional<std::filesystem::path> meta_checkpoint = std::nullopt);
  nlohmann::json to_json() const;
};

// Fused model: text submodel (backbone + head without its output layer),
// meta submodel (MLP without its output layer), optional projections and a
// fused head "fusion.head.fc1" -> "fusion.head.out".
class FusionModel : public nn::Classifier {
 public:
  FusionModel(const FusionConfig& cfg, std::uint64_t seed);

  nn::ParameterSet& parameters() override { return params_; }
  const nn::ParameterSet& parameters() const override { return params_; }
  nn::Var logits(nn::Graph& g, std::span<const nn::Sample* const> batch, nn::ForwardContext& ctx) const override;
  int group_depth(const std::string& name) const override { return text_.group_depth(name); }
  int group_count() const override { return text_.group_count(); }

  nn::Var text_feature(nn::Graph& g, std::span<const nn::Sample* const> batch, nn::ForwardContext& ctx) const;
  nn::Var meta_feature(nn::Graph& g, std::span<const nn::Sample* const> batch, nn::ForwardContext& ctx) const;
  int head_input_dim() const { return head_fc1_.in_dim(); }

  const FusionConfig& config() const { return cfg_; }
  // Parameter name -> origin ("checkpoint:<path>", "random:<seed>", "pretrained:...").
  const std::map<std::string, std::string>& provenance() const { return provenance_; }
  std::map<std::string, std::string>& provenance() { return provenance_; }

 private:
  FusionConfig cfg_;
  nn::ParameterSet params_;
  textenc::TextNet text_;
  tabular::MetaNet meta_;
  nn::Linear text_proj_, meta_proj_;
  nn::Linear head_fc1_, head_out_;
  std::map<std::string, std::string> provenance_;
};

// Builds the fused model and records the origin of every parameter.
// Missing or mismatched checkpoints raise CheckpointError naming them.
std::unique_ptr<FusionModel> assemble(const StrategyPlan& plan, const FusionConfig& cfg);

// Inference logits n x 2; |texts| must equal rows(meta).
Eigen::MatrixXd fuse_forward(const FusionModel& m, std::span<const std::vector<int>> texts,
                             const Eigen::MatrixXd& meta);
Eigen::MatrixXd fuse_forward(const FusionModel& m, std::span<const nn::Sample> samples);

Eigen::VectorXd combine_features(const Eigen::VectorXd& a, const Eigen::VectorXd& b, CombineMode mode);
nn::Var combine_features(nn::Var a, nn::Var b, CombineMode mode);

// Checkpoint of a fused model with its provenance ledger in the manifest.
Checkpoint fusion_checkpoint(const FusionModel& m, const StrategyPlan& plan, nlohmann::json extra = {});

}  // namespace postcheck::fusion
