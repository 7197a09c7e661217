#include <cmath>

#include "postcheck/common/error.hpp"
#include "postcheck/nn/loss_math.hpp"
#include "postcheck/training.hpp"

namespace postcheck::training {

double label_smoothing_ce(const nn::Matrix& logits, std::span<const int> labels, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw ConfigError("label smoothing epsilon must lie in [0, 1), got " + std::to_string(epsilon));
  }
  return nn::smoothing_ce(logits, labels, epsilon, nullptr);
}

double smoothed_target_entropy(double epsilon, int classes) {
  const double q_other = epsilon / classes;
  const double q_true = 1.0 - epsilon + q_other;
  double h = -q_true * std::log(q_true);
  if (q_other > 0.0) h -= (classes - 1) * q_other * std::log(q_other);
  return h;
}

}  // namespace postcheck::training
