#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "postcheck/common/error.hpp"
#include "postcheck/common/json_util.hpp"
#include "postcheck/dataset/folds.hpp"

namespace postcheck::dataset {

std::vector<std::size_t> FoldPlan::test_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

nlohmann::json FoldPlan::to_json() const {
  return {{"seed", seed}, {"k", k}, {"stratified", stratified}, {"assignments", assignments}};
}

FoldPlan FoldPlan::from_json(const nlohmann::json& j) {
  FoldPlan p;
  StrictReader r(j, "fold_plan");
  r.get("seed", p.seed);
  r.get("k", p.k);
  r.get("stratified", p.stratified);
  r.get("assignments", p.assignments);
  r.finish();
  return p;
}

FoldPlan make_folds(std::span<const int> labels, int k, std::uint64_t seed, bool stratified) {
  if (k < 2) throw ConfigError("make_folds: k must be >= 2, got " + std::to_string(k));
  if (static_cast<std::size_t>(k) > labels.size()) {
    throw ConfigError("make_folds: k = " + std::to_string(k) + " exceeds record count " +
                      std::to_string(labels.size()));
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order;
  if (stratified) {
    // Shuffle each class, then lay classes end to end so the round robin
    // below spreads every class evenly.
    for (int cls : {1, 0}) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw ConfigError("make_folds: labels must be 0 or 1");
        if (labels[i] == cls) members.push_back(i);
      }
      std::shuffle(members.begin(), members.end(), rng);
      order.insert(order.end(), members.begin(), members.end());
    }
  } else {
    order.resize(labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
  }

  // Rotate fold numbering so the surplus folds are not always 0, 1, ...
  const int offset = static_cast<int>(rng() % static_cast<std::uint64_t>(k));
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.stratified = stratified;
  plan.assignments.assign(labels.size(), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    plan.assignments[order[pos]] = static_cast<int>((pos + offset) % static_cast<std::size_t>(k));
  }
  return plan;
}

FoldPlan make_folds(const std::vector<CleanRecord>& records, int k, std::uint64_t seed, bool stratified) {
  if (!stratified) {
    std::vector<int> dummy(records.size(), 0);
    return make_folds(dummy, k, seed, false);
  }
  const auto y = labels_of(records);
  return make_folds(y, k, seed, true);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    std::span<const int> labels, double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("holdout fraction must lie in (0, 1)");
  }
  const std::size_t n = labels.size();
  const auto n_hold = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
  if (n_hold == 0 || n_hold >= n) throw ConfigError("holdout split leaves an empty side");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < n; ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);

  // Largest-remainder allocation of the holdout across the two classes.
  auto n_hold_pos = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_hold) * static_cast<double>(pos.size()) / static_cast<double>(n)));
  n_hold_pos = std::min(n_hold_pos, pos.size());
  if (n_hold - n_hold_pos > neg.size()) n_hold_pos = n_hold - neg.size();
  const std::size_t n_hold_neg = n_hold - n_hold_pos;

  std::vector<std::size_t> train, hold;
  hold.insert(hold.end(), pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_hold_pos));
  hold.insert(hold.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(n_hold_neg));
  train.insert(train.end(), pos.begin() + static_cast<std::ptrdiff_t>(n_hold_pos), pos.end());
  train.insert(train.end(), neg.begin() + static_cast<std::ptrdiff_t>(n_hold_neg), neg.end());
  std::sort(train.begin(), train.end());
  std::sort(hold.begin(), hold.end());
  return {std::move(train), std::move(hold)};
}

}  // namespace postcheck::dataset
