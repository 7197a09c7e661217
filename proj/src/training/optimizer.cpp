#include <algorithm>
#include <cmath>
#include <map>

#include "postcheck/common/error.hpp"
#include "postcheck/common/json_util.hpp"
#include "postcheck/training.hpp"

namespace postcheck::training {
namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

nlohmann::json OptimizerConfig::to_json() const {
  return {{"base_lr", base_lr},
          {"max_lr", max_lr},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"weight_decay", weight_decay},
          {"warmup_fraction", warmup_fraction},
          {"schedule", schedule == LrSchedule::warmup_linear ? "warmup_linear" : "constant"},
          {"no_decay_patterns", no_decay_patterns},
          {"decay_patterns", decay_patterns},
          {"beta1", beta1},
          {"beta2", beta2},
          {"adam_epsilon", adam_epsilon},
          {"seed", seed}};
}

OptimizerConfig OptimizerConfig::from_json(const nlohmann::json& j) { return from_json(j, OptimizerConfig{}); }

OptimizerConfig OptimizerConfig::from_json(const nlohmann::json& j, const OptimizerConfig& defaults) {
  OptimizerConfig c = defaults;
  StrictReader r(j, "optimizer");
  r.get("base_lr", c.base_lr);
  r.get("max_lr", c.max_lr);
  r.get("batch_size", c.batch_size);
  r.get("epochs", c.epochs);
  r.get("weight_decay", c.weight_decay);
  r.get("warmup_fraction", c.warmup_fraction);
  std::string schedule = c.schedule == LrSchedule::warmup_linear ? "warmup_linear" : "constant";
  r.get("schedule", schedule);
  if (schedule == "warmup_linear") {
    c.schedule = LrSchedule::warmup_linear;
  } else if (schedule == "constant") {
    c.schedule = LrSchedule::constant;
  } else {
    throw ConfigError("optimizer.schedule must be warmup_linear or constant");
  }
  r.get("no_decay_patterns", c.no_decay_patterns);
  r.get("decay_patterns", c.decay_patterns);
  r.get("beta1", c.beta1);
  r.get("beta2", c.beta2);
  r.get("adam_epsilon", c.adam_epsilon);
  r.get("seed", c.seed);
  r.finish();
  if (c.batch_size < 1 || c.epochs < 1) throw ConfigError("optimizer: batch_size and epochs must be >= 1");
  return c;
}

DecayClass classify_parameter(const std::string& name, const OptimizerConfig& cfg) {
  for (const auto& p : cfg.no_decay_patterns)
    if (ends_with(name, p)) return DecayClass::no_decay;
  for (const auto& p : cfg.decay_patterns)
    if (ends_with(name, p)) return DecayClass::decay;
  throw ConfigError("parameter '" + name + "' matches neither decay nor no_decay patterns");
}

std::string ParamGroup::label() const {
  return std::string(decay ? "decay" : "no_decay") + "/depth" + std::to_string(depth);
}

std::vector<ParamGroup> build_param_groups(nn::Classifier& model, const OptimizerConfig& cfg,
                                           const DiscriminativeLRMap& lr_map) {
  std::map<std::pair<int, bool>, ParamGroup> groups;
  for (nn::Parameter* p : model.parameters().all()) {
    const bool decay = classify_parameter(p->name, cfg) == DecayClass::decay;
    const int depth = model.group_depth(p->name);
    auto& g = groups[{depth, !decay}];
    g.decay = decay;
    g.depth = depth;
    g.lr_multiplier = lr_map.multiplier(depth);
    g.weight_decay = decay ? cfg.weight_decay : 0.0;
    g.params.push_back(p);
  }
  std::vector<ParamGroup> out;
  for (auto& [_, g] : groups) out.push_back(std::move(g));
  return out;
}

AdamW::AdamW(std::vector<ParamGroup> groups, const OptimizerConfig& cfg) : groups_(std::move(groups)), cfg_(cfg) {}

void AdamW::step(const nn::GradientBuffer& grads, double lr,
                 const std::unordered_set<const nn::Parameter*>& trainable) {
  for (const auto& group : groups_) {
    const double group_lr = lr * group.lr_multiplier;
    for (nn::Parameter* p : group.params) {
      if (!trainable.count(p)) continue;
      const nn::Matrix* g = grads.find(p);
      auto& s = state_[p];
      if (s.t == 0) {
        s.m = nn::Matrix::Zero(p->value.rows(), p->value.cols());
        s.v = nn::Matrix::Zero(p->value.rows(), p->value.cols());
      }
      s.t += 1;
      if (group.weight_decay > 0.0) p->value *= (1.0 - group_lr * group.weight_decay);
      if (g == nullptr) {
        s.m *= cfg_.beta1;
        s.v *= cfg_.beta2;
      } else {
        s.m = cfg_.beta1 * s.m + (1.0 - cfg_.beta1) * *g;
        s.v = cfg_.beta2 * s.v + (1.0 - cfg_.beta2) * g->cwiseProduct(*g);
      }
      const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(s.t));
      const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(s.t));
      p->value.array() -= group_lr * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + cfg_.adam_epsilon);
    }
  }
}

}  // namespace postcheck::training
