#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace postcheck::evaluation {

// Scores are "higher = more likely unreliable"; labels are 0 (reliable) or 1.
struct ScoredPredictions {
  std::vector<double> scores;
  std::vector<int> labels;
};

// Rank (Mann-Whitney) estimate of P(s+ > s-) + 0.5 P(s+ = s-).
// Throws MetricError when lengths differ, a label is not 0/1, a score is NaN,
// or only one class is present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);
inline double roc_auc(const ScoredPredictions& p) { return roc_auc(p.scores, p.labels); }

// Literal O(n_pos * n_neg) double loop with the same tie convention.
double auc_pairwise_oracle(std::span<const double> scores, std::span<const int> labels);
inline double auc_pairwise_oracle(const ScoredPredictions& p) {
  return auc_pairwise_oracle(p.scores, p.labels);
}

struct MetricsRow {
  std::string name;
  double auc = 0.0;
  std::int64_t n_pos = 0;
  std::int64_t n_neg = 0;
  std::int64_t tie_count = 0;  // positive/negative pairs with equal scores
  std::string fingerprint;
};

struct NamedPredictions {
  std::string name;
  ScoredPredictions predictions;
  std::string fingerprint;
};

struct ReferenceRow {
  std::string name;
  double auc;
};

// Reference AUCs from the original ReINTEL experiments, kept for side-by-side
// comparison. Meta-only and text-only rows come from the modality ablation,
// S1-S4 from the training-strategy comparison.
const std::vector<ReferenceRow>& reference_strategy_rows();
// The meta-only zoo (eleven learners).
const std::vector<ReferenceRow>& reference_meta_zoo_rows();
// Block-subset rows for the [CLS] concatenation head (public test).
const std::vector<ReferenceRow>& reference_block_rows();

struct MetricsReport {
  std::vector<MetricsRow> rows;  // sorted by AUC, descending
  std::vector<ReferenceRow> reference;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

MetricsRow evaluate_named(const NamedPredictions& p);
MetricsReport report(std::span<const NamedPredictions> results,
                     std::vector<ReferenceRow> reference = {});

// Stable hex digest of a JSON config, used as a fingerprint.
std::string config_fingerprint(const nlohmann::json& config);

}  // namespace postcheck::evaluation
