#include <algorithm>
#include <cmath>

#include "postcheck/common/error.hpp"
#include "postcheck/training.hpp"

namespace postcheck::training {

double lr_at(long step, long total_steps, const OptimizerConfig& cfg) {
  if (total_steps <= 0) throw ConfigError("lr_at: total_steps must be positive");
  if (step < 0 || step > total_steps) {
    throw ConfigError("lr_at: step " + std::to_string(step) + " outside [0, " + std::to_string(total_steps) + "]");
  }
  if (step == total_steps) return 0.0;
  const long warmup =
      std::max(1L, static_cast<long>(std::floor(cfg.warmup_fraction * static_cast<double>(total_steps))));
  if (step <= warmup) return cfg.max_lr * static_cast<double>(step) / static_cast<double>(warmup);
  return cfg.max_lr * static_cast<double>(total_steps - step) / static_cast<double>(total_steps - warmup);
}

std::set<int> UnfreezeSchedule::trainable_groups(int epoch) const {
  std::set<int> out;
  if (group_count <= 0) return out;
  int n = group_count;
  if (enabled) {
    const int per = std::max(1, epochs_per_group);
    n = std::min(group_count, std::max(0, epoch) / per + 1);
  }
  for (int d = 0; d < n; ++d) out.insert(d);
  return out;
}

double DiscriminativeLRMap::multiplier(int depth) const {
  if (!(factor > 0.0)) throw ConfigError("discriminative lr factor must be positive");
  return std::pow(factor, std::max(0, depth));
}

}  // namespace postcheck::training
