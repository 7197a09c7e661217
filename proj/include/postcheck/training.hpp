#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "postcheck/common/parallel.hpp"
#include "postcheck/nn/layers.hpp"

namespace postcheck::training {

enum class LrSchedule { warmup_linear, constant };

struct OptimizerConfig {
  double base_lr = 1e-5;  // used where no schedule applies
  double max_lr = 2e-5;   // warmup peak
  int batch_size = 32;
  int epochs = 20;
  double weight_decay = 0.01;
  double warmup_fraction = 0.1;
  LrSchedule schedule = LrSchedule::warmup_linear;
  // Suffix patterns, checked no_decay first. A name matching neither is an error.
  std::vector<std::string> no_decay_patterns = {".bias", "norm.weight"};
  std::vector<std::string> decay_patterns = {".weight"};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static OptimizerConfig from_json(const nlohmann::json& j, const OptimizerConfig& defaults);
  static OptimizerConfig from_json(const nlohmann::json& j);
};

struct SmoothingLossConfig {
  double epsilon = 0.15;
  int classes = 2;
};

// Head first, then deeper groups, one more group per `epochs_per_group` epochs.
struct UnfreezeSchedule {
  int group_count = 1;
  int epochs_per_group = 1;
  bool enabled = true;

  std::set<int> trainable_groups(int epoch) const;
};

// Learning-rate multiplier factor^depth; depth 0 is the head / top group.
struct DiscriminativeLRMap {
  double factor = 0.95;
  double multiplier(int depth) const;
};

// ---- loss

// Throws ConfigError when epsilon is outside [0, 1).
double label_smoothing_ce(const nn::Matrix& logits, std::span<const int> labels, double epsilon);
// Entropy of the smoothed target; a lower bound of the loss for any logits.
double smoothed_target_entropy(double epsilon, int classes = 2);

// ---- parameter groups / optimizer

enum class DecayClass { decay, no_decay };
DecayClass classify_parameter(const std::string& name, const OptimizerConfig& cfg);

struct ParamGroup {
  bool decay = true;
  int depth = 0;
  double lr_multiplier = 1.0;
  double weight_decay = 0.0;
  std::vector<nn::Parameter*> params;

  std::string label() const;
};

// Partition of every parameter into (decay | no_decay) x depth groups.
std::vector<ParamGroup> build_param_groups(nn::Classifier& model, const OptimizerConfig& cfg,
                                           const DiscriminativeLRMap& lr_map);

// Adam with decoupled weight decay (the decay never passes through the
// gradient). Only parameters in `trainable` are touched.
class AdamW {
 public:
  AdamW(std::vector<ParamGroup> groups, const OptimizerConfig& cfg);

  void step(const nn::GradientBuffer& grads, double lr,
            const std::unordered_set<const nn::Parameter*>& trainable);
  const std::vector<ParamGroup>& groups() const { return groups_; }

 private:
  struct Moments {
    nn::Matrix m, v;
    long t = 0;
  };
  std::vector<ParamGroup> groups_;
  OptimizerConfig cfg_;
  std::unordered_map<const nn::Parameter*, Moments> state_;
};

// Linear ramp 0 -> max_lr over max(1, floor(warmup_fraction * total)) steps,
// then linear decay to 0 at total_steps.
double lr_at(long step, long total_steps, const OptimizerConfig& cfg);

// ---- training loop

struct EpochRecord {
  int epoch = 0;
  long step = 0;  // optimizer steps completed
  double lr = 0.0;  // last learning rate used
  double loss = 0.0;  // mean training loss of the epoch
  std::optional<double> val_auc;
  int trainable_groups = 0;

  nlohmann::json to_json() const;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  std::optional<double> best_val_auc;

  std::string to_json_lines() const;
};

struct TrainData {
  std::span<const nn::Sample> train;
  std::span<const nn::Sample> validation;
};

struct TrainOptions {
  ExecPolicy policy = default_exec_policy();
  bool restore_best = true;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct BatchResult {
  double loss = 0.0;
  nn::GradientBuffer grads;
};

// Mean loss and gradient over one batch. The batch is cut into a fixed
// number of chunks (independent of thread count) that run in parallel under
// ExecPolicy::openmp and are reduced in chunk order.
BatchResult batch_gradients(const nn::Classifier& model, std::span<const nn::Sample* const> batch,
                            const std::unordered_set<const nn::Parameter*>& trainable,
                            const SmoothingLossConfig& loss_cfg, std::uint64_t dropout_seed,
                            ExecPolicy policy = default_exec_policy());

// Parameters whose group is in `groups`.
std::unordered_set<const nn::Parameter*> trainable_parameters(const nn::Classifier& model,
                                                              const std::set<int>& groups);

TrainHistory train(nn::Classifier& model, TrainData data, const OptimizerConfig& cfg,
                   const SmoothingLossConfig& loss_cfg, const UnfreezeSchedule& schedule,
                   const DiscriminativeLRMap& lr_map, const TrainOptions& options = {});

}  // namespace postcheck::training
