#include "postcheck/fusion.hpp"

#include <algorithm>
#include <cctype>

#include "postcheck/common/error.hpp"
#include "postcheck/common/json_util.hpp"

namespace postcheck::fusion {

CombineMode parse_combine_mode(std::string_view s) {
  if (s == "concat") return CombineMode::concat;
  if (s == "add") return CombineMode::add;
  throw ConfigError("combine mode must be concat or add, got '" + std::string(s) + "'");
}

std::string to_string(CombineMode m) { return m == CombineMode::concat ? "concat" : "add"; }

StrategyId parse_strategy(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "s1") return StrategyId::S1;
  if (lower == "s2") return StrategyId::S2;
  if (lower == "s3") return StrategyId::S3;
  if (lower == "s4") return StrategyId::S4;
  throw ConfigError("strategy must be one of s1, s2, s3, s4; got '" + std::string(s) + "'");
}

std::string to_string(StrategyId id) {
  switch (id) {
    case StrategyId::S1: return "S1";
    case StrategyId::S2: return "S2";
    case StrategyId::S3: return "S3";
    case StrategyId::S4: return "S4";
  }
  return "?";
}

textenc::BlockSelection FusionConfig::selection() const {
  return blocks == "all" ? textenc::BlockSelection::all(backbone.layers)
                         : textenc::BlockSelection::parse(blocks, backbone.layers);
}

nlohmann::json FusionConfig::to_json() const {
  return {{"combine", to_string(combine)},   {"d_text", d_text},         {"d_meta_feat", d_meta_feat},
          {"projection_dim", projection_dim}, {"head_hidden", head_hidden}, {"dropout", dropout},
          {"backbone", backbone.to_json()},   {"blocks", blocks},         {"meta_in_dim", meta_in_dim}};
}

FusionConfig FusionConfig::from_json(const nlohmann::json& j) {
  StrictReader r(j, "fusion");
  FusionConfig c;
  std::string combine = "concat";
  r.get("combine", combine);
  c.combine = parse_combine_mode(combine);
  r.get("d_text", c.d_text);
  r.get("d_meta_feat", c.d_meta_feat);
  r.get("projection_dim", c.projection_dim);
  r.get("head_hidden", c.head_hidden);
  r.get("dropout", c.dropout);
  if (r.has("backbone")) c.backbone = textenc::BackboneConfig::from_json(r.at("backbone"));
  r.get("blocks", c.blocks);
  r.get("meta_in_dim", c.meta_in_dim);
  r.finish();
  if (c.d_text != textenc::kHeadHidden) throw ConfigError("d_text is fixed by the text head (256)");
  if (c.d_meta_feat != tabular::kMetaFeatureDim) throw ConfigError("d_meta_feat is fixed by the meta MLP (32)");
  return c;
}

StrategyPlan StrategyPlan::make(StrategyId id, std::uint64_t seed, std::optional<std::filesystem::path> text_checkpoint,
                                std::optional<std::filesystem::path> meta_checkpoint) {
  StrategyPlan p;
  p.id = id;
  p.seed = seed;
  p.text_init = (id == StrategyId::S3 || id == StrategyId::S4) ? InitSource::checkpoint : InitSource::random;
  p.meta_init = (id == StrategyId::S2 || id == StrategyId::S4) ? InitSource::checkpoint : InitSource::random;
  if (p.text_init == InitSource::checkpoint) p.text_checkpoint = std::move(text_checkpoint);
  if (p.meta_init == InitSource::checkpoint) p.meta_checkpoint = std::move(meta_checkpoint);
  return p;
}

nlohmann::json StrategyPlan::to_json() const {
  auto src = [](InitSource s) { return s == InitSource::random ? "random" : "checkpoint"; };
  return {{"id", to_string(id)},
          {"text_head_init", text_init == InitSource::random ? "random" : "finetuned_checkpoint"},
          {"meta_init", meta_init == InitSource::random ? "random" : "pretrained_checkpoint"},
          {"backbone_init", "pretrained"},
          {"text_checkpoint", text_checkpoint ? nlohmann::json(text_checkpoint->string()) : nlohmann::json(nullptr)},
          {"meta_checkpoint", meta_checkpoint ? nlohmann::json(meta_checkpoint->string()) : nlohmann::json(nullptr)},
          {"text_source", src(text_init)},
          {"meta_source", src(meta_init)},
          {"seed", seed}};
}

FusionModel::FusionModel(const FusionConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      text_(params_, "text", cfg.backbone, cfg.selection(), seed, /*with_output=*/false),
      meta_(params_, "meta", cfg.meta_in_dim, seed, 0.2, /*with_output=*/false) {
  if (cfg.combine == CombineMode::add) {
    text_proj_ = nn::Linear(params_, "fusion.text_proj", cfg.d_text, cfg.projection_dim, seed);
    meta_proj_ = nn::Linear(params_, "fusion.meta_proj", cfg.d_meta_feat, cfg.projection_dim, seed);
  }
  head_fc1_ = nn::Linear(params_, "fusion.head.fc1", cfg.fused_dim(), cfg.head_hidden, seed);
  head_out_ = nn::Linear(params_, "fusion.head.out", cfg.head_hidden, 2, seed);
}

nn::Var FusionModel::text_feature(nn::Graph& g, std::span<const nn::Sample* const> batch,
                                  nn::ForwardContext& ctx) const {
  return text_.feature(g, batch, ctx);
}

nn::Var FusionModel::meta_feature(nn::Graph& g, std::span<const nn::Sample* const> batch,
                                  nn::ForwardContext& ctx) const {
  nn::Matrix x(static_cast<Eigen::Index>(batch.size()), cfg_.meta_in_dim);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i]->meta.size() != cfg_.meta_in_dim) {
      throw ShapeError("fusion: expected " + std::to_string(cfg_.meta_in_dim) + " meta features, got " +
                       std::to_string(batch[i]->meta.size()));
    }
    x.row(static_cast<Eigen::Index>(i)) = batch[i]->meta;
  }
  return meta_.feature(g, g.constant(std::move(x)), ctx);
}

nn::Var FusionModel::logits(nn::Graph& g, std::span<const nn::Sample* const> batch, nn::ForwardContext& ctx) const {
  nn::Var t = text_feature(g, batch, ctx);
  nn::Var m = meta_feature(g, batch, ctx);
  if (cfg_.combine == CombineMode::add) {
    t = text_proj_.forward(g, t);
    m = meta_proj_.forward(g, m);
  }
  nn::Var h = nn::dropout(combine_features(t, m, cfg_.combine), cfg_.dropout, ctx.rng);
  h = nn::dropout(nn::relu(head_fc1_.forward(g, h)), cfg_.dropout, ctx.rng);
  return head_out_.forward(g, h);
}

std::unique_ptr<FusionModel> assemble(const StrategyPlan& plan, const FusionConfig& cfg) {
  textenc::require_backbone_weights(cfg.backbone);
  auto model = std::make_unique<FusionModel>(cfg, plan.seed);
  auto& prov = model->provenance();
  const std::string random_tag = "random:" + std::to_string(plan.seed);
  for (const auto* p : model->parameters().all()) prov[p->name] = random_tag;

  const std::string backbone_origin = textenc::load_pretrained_backbone(model->parameters(), "text.backbone",
                                                                         cfg.backbone);
  for (const auto* p : model->parameters().all()) {
    if (p->name.rfind("text.backbone.", 0) == 0) prov[p->name] = backbone_origin;
  }

  std::vector<std::string> missing;
  if (plan.text_init == InitSource::checkpoint && !plan.text_checkpoint) missing.push_back("text checkpoint");
  if (plan.meta_init == InitSource::checkpoint && !plan.meta_checkpoint) missing.push_back("meta checkpoint");
  if (!missing.empty()) {
    std::string msg = "strategy " + to_string(plan.id) + " requires";
    for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? " and " : " ") + missing[i];
    throw CheckpointError(msg + " (none given)");
  }

  if (plan.text_init == InitSource::checkpoint) {
    const Checkpoint ckpt = Checkpoint::load(*plan.text_checkpoint);
    // The whole fine-tuned text submodel, except its output layer.
    for (const auto& name : load_into(model->parameters(), ckpt, {"text."}, {"text.head.out."})) {
      prov[name] = "checkpoint:" + plan.text_checkpoint->string();
    }
  }
  if (plan.meta_init == InitSource::checkpoint) {
    const Checkpoint ckpt = Checkpoint::load(*plan.meta_checkpoint);
    for (const auto& name : load_into(model->parameters(), ckpt, {"meta."}, {"meta.out."})) {
      prov[name] = "checkpoint:" + plan.meta_checkpoint->string();
    }
  }
  return model;
}

Eigen::MatrixXd fuse_forward(const FusionModel& m, std::span<const nn::Sample> samples) {
  std::vector<const nn::Sample*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  nn::Graph g(nn::GradMode::none);
  nn::ForwardContext ctx;
  return m.logits(g, batch, ctx).value();
}

Eigen::MatrixXd fuse_forward(const FusionModel& m, std::span<const std::vector<int>> texts,
                             const Eigen::MatrixXd& meta) {
  if (static_cast<Eigen::Index>(texts.size()) != meta.rows()) {
    throw ShapeError("fuse_forward: " + std::to_string(texts.size()) + " texts vs " + std::to_string(meta.rows()) +
                     " meta rows");
  }
  std::vector<nn::Sample> samples(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    samples[i].tokens = texts[i];
    samples[i].meta = meta.row(static_cast<Eigen::Index>(i));
  }
  return fuse_forward(m, samples);
}

Eigen::VectorXd combine_features(const Eigen::VectorXd& a, const Eigen::VectorXd& b, CombineMode mode) {
  if (mode == CombineMode::add) {
    if (a.size() != b.size()) {
      throw ShapeError("add mode needs equal dims, got " + std::to_string(a.size()) + " and " +
                       std::to_string(b.size()));
    }
    return a + b;
  }
  Eigen::VectorXd out(a.size() + b.size());
  out << a, b;
  return out;
}

nn::Var combine_features(nn::Var a, nn::Var b, CombineMode mode) {
  if (mode == CombineMode::add) {
    if (a.cols() != b.cols()) {
      throw ShapeError("add mode needs equal dims, got " + std::to_string(a.cols()) + " and " +
                       std::to_string(b.cols()));
    }
    return nn::add(a, b);
  }
  const nn::Var parts[] = {a, b};
  return nn::concat_cols(parts);
}

Checkpoint fusion_checkpoint(const FusionModel& m, const StrategyPlan& plan, nlohmann::json extra) {
  nlohmann::json manifest = extra.is_object() ? std::move(extra) : nlohmann::json::object();
  manifest["config"] = m.config().to_json();
  manifest["plan"] = plan.to_json();
  manifest["seed"] = plan.seed;
  manifest["provenance"] = m.provenance();
  return Checkpoint::from_parameters(m.parameters(), std::move(manifest));
}

}  // namespace postcheck::fusion
