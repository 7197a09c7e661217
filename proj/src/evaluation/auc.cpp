#include <algorithm>
#include <cmath>
#include <numeric>

#include "postcheck/common/error.hpp"
#include "postcheck/evaluation.hpp"

namespace postcheck::evaluation {
namespace {

void validate(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw MetricError("roc_auc: " + std::to_string(scores.size()) + " scores vs " +
                      std::to_string(labels.size()) + " labels");
  }
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw MetricError("roc_auc: labels must be 0 or 1");
    if (std::isnan(scores[i])) throw MetricError("roc_auc: NaN score at row " + std::to_string(i));
    pos += static_cast<std::size_t>(labels[i]);
  }
  if (pos == 0 || pos == labels.size()) {
    throw MetricError("roc_auc: undefined for single-class input");
  }
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  validate(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks are half-integers, so every quantity below is exact in double.
  double rank_sum_pos = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t t = i; t <= j; ++t) {
      if (labels[order[t]] == 1) {
        rank_sum_pos += midrank;
        n_pos += 1.0;
      }
    }
    i = j + 1;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  const double u = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
  return u / (n_pos * n_neg);
}

double auc_pairwise_oracle(std::span<const double> scores, std::span<const int> labels) {
  validate(scores, labels);
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / pairs;
}

}  // namespace postcheck::evaluation
