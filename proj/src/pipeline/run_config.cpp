#include "postcheck/common/error.hpp"
#include "postcheck/common/json_util.hpp"
#include "postcheck/pipeline.hpp"

namespace postcheck::pipeline {

RunConfig::RunConfig() : backbone(textenc::BackboneConfig::pretrained_base()) { meta_optimizer = optimizer; }

RunConfig RunConfig::benchmark() {
  RunConfig c;
  c.seed = 7;
  c.optimizer.max_lr = 2e-3;
  c.optimizer.base_lr = 1e-3;
  c.optimizer.epochs = 6;
  c.meta_optimizer = tabular::meta_mlp_optimizer(0, 30, 3e-3, 32);
  c.backbone = textenc::BackboneConfig::toy();
  c.blocks = "all";
  return c;
}

nlohmann::json RunConfig::to_json() const {
  return {
      {"seed", seed},
      {"paths",
       {{"corpus", paths.corpus.string()},
        {"output_dir", paths.output_dir.string()},
        {"text_checkpoint", paths.text_checkpoint.string()},
        {"meta_checkpoint", paths.meta_checkpoint.string()},
        {"image_table", paths.image_table.string()}}},
      {"schema", schema.to_json()},
      {"optimizer", optimizer.to_json()},
      {"meta_optimizer", meta_optimizer.to_json()},
      {"loss", {{"epsilon", loss.epsilon}}},
      {"unfreeze", {{"enabled", unfreeze}, {"epochs_per_group", epochs_per_group}}},
      {"discriminative_lr", {{"factor", lr_factor}}},
      {"text", {{"backbone", backbone.to_json()}, {"blocks", blocks}}},
      {"fusion", {{"combine", fusion::to_string(combine)}, {"projection_dim", projection_dim}, {"strategy", strategy}}},
      {"tabular", {{"model", tabular_model}, {"hyperparameters", tabular_hyperparameters}, {"ensemble", ensemble.to_json()}}},
      {"cv", {{"folds", cv_folds}, {"stratified", stratified}}},
      {"split", {{"holdout", holdout}, {"validation", validation}}},
  };
}

RunConfig RunConfig::from_json(const nlohmann::json& j, const RunConfig& base) {
  RunConfig c = base;
  StrictReader r(j, "run config");
  r.get("seed", c.seed);
  if (r.has("paths")) {
    StrictReader p(r.at("paths"), "paths");
    std::string s;
    auto path = [&](const char* key, std::filesystem::path& out) {
      s = out.string();
      p.get(key, s);
      out = s;
    };
    path("corpus", c.paths.corpus);
    path("output_dir", c.paths.output_dir);
    path("text_checkpoint", c.paths.text_checkpoint);
    path("meta_checkpoint", c.paths.meta_checkpoint);
    path("image_table", c.paths.image_table);
    p.finish();
  }
  if (r.has("schema")) c.schema = dataset::ColumnSchema::from_json(r.at("schema"));
  if (r.has("optimizer")) c.optimizer = training::OptimizerConfig::from_json(r.at("optimizer"), c.optimizer);
  if (r.has("meta_optimizer")) {
    c.meta_optimizer = training::OptimizerConfig::from_json(r.at("meta_optimizer"), c.meta_optimizer);
  }
  if (r.has("loss")) {
    StrictReader l(r.at("loss"), "loss");
    l.get("epsilon", c.loss.epsilon);
    l.finish();
    if (!(c.loss.epsilon >= 0.0 && c.loss.epsilon < 1.0)) throw ConfigError("loss.epsilon must lie in [0, 1)");
  }
  if (r.has("unfreeze")) {
    StrictReader u(r.at("unfreeze"), "unfreeze");
    u.get("enabled", c.unfreeze);
    u.get("epochs_per_group", c.epochs_per_group);
    u.finish();
  }
  if (r.has("discriminative_lr")) {
    StrictReader d(r.at("discriminative_lr"), "discriminative_lr");
    d.get("factor", c.lr_factor);
    d.finish();
    if (!(c.lr_factor > 0.0 && c.lr_factor <= 1.0)) throw ConfigError("discriminative_lr.factor must lie in (0, 1]");
  }
  if (r.has("text")) {
    StrictReader t(r.at("text"), "text");
    if (t.has("backbone")) c.backbone = textenc::BackboneConfig::from_json(t.at("backbone"));
    t.get("blocks", c.blocks);
    t.finish();
  }
  if (r.has("fusion")) {
    StrictReader f(r.at("fusion"), "fusion");
    std::string combine = fusion::to_string(c.combine);
    f.get("combine", combine);
    c.combine = fusion::parse_combine_mode(combine);
    f.get("projection_dim", c.projection_dim);
    f.get("strategy", c.strategy);
    f.finish();
    fusion::parse_strategy(c.strategy);
  }
  if (r.has("tabular")) {
    StrictReader t(r.at("tabular"), "tabular");
    t.get("model", c.tabular_model);
    t.get("hyperparameters", c.tabular_hyperparameters);
    if (t.has("ensemble")) c.ensemble = tabular::EnsembleConfig::from_json(t.at("ensemble"));
    t.finish();
  }
  if (r.has("cv")) {
    StrictReader v(r.at("cv"), "cv");
    v.get("folds", c.cv_folds);
    v.get("stratified", c.stratified);
    v.finish();
  }
  if (r.has("split")) {
    StrictReader s(r.at("split"), "split");
    s.get("holdout", c.holdout);
    s.get("validation", c.validation);
    s.finish();
  }
  r.finish();
  if (!(c.holdout > 0.0 && c.holdout < 1.0)) throw ConfigError("split.holdout must lie in (0, 1)");
  if (!(c.validation >= 0.0 && c.validation < 1.0)) throw ConfigError("split.validation must lie in [0, 1)");
  c.selection();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path, const RunConfig& base) {
  return from_json(read_json_file(path), base);
}

textenc::BlockSelection RunConfig::selection() const {
  return blocks == "all" ? textenc::BlockSelection::all(backbone.layers)
                         : textenc::BlockSelection::parse(blocks, backbone.layers);
}

fusion::FusionConfig RunConfig::fusion_config() const {
  fusion::FusionConfig f;
  f.combine = combine;
  f.projection_dim = projection_dim;
  f.backbone = backbone;
  f.blocks = blocks;
  f.meta_in_dim = features::kMetaDim;
  return f;
}

training::UnfreezeSchedule RunConfig::unfreeze_schedule(int group_count) const {
  return {group_count, epochs_per_group, unfreeze};
}

}  // namespace postcheck::pipeline
