#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "postcheck/dataset/records.hpp"

namespace postcheck::dataset {

struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  bool stratified = true;
  std::vector<int> assignments;  // fold index per record

  std::vector<std::size_t> test_indices(int fold) const;
  std::vector<std::size_t> train_indices(int fold) const;
  nlohmann::json to_json() const;
  static FoldPlan from_json(const nlohmann::json& j);
};

// Stratified (default) round-robin assignment of shuffled rows.
// Fold sizes differ by at most one; so do per-fold class counts.
FoldPlan make_folds(std::span<const int> labels, int k, std::uint64_t seed, bool stratified = true);
FoldPlan make_folds(const std::vector<CleanRecord>& records, int k, std::uint64_t seed,
                    bool stratified = true);

// Stratified holdout split: returns (train rows, holdout rows), both sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    std::span<const int> labels, double holdout_fraction, std::uint64_t seed);

}  // namespace postcheck::dataset
