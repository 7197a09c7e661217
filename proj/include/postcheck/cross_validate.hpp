#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "postcheck/dataset/folds.hpp"
#include "postcheck/dataset/records.hpp"
#include "postcheck/features.hpp"

namespace postcheck::training {

// Everything a pipeline may see for one split. All fitted artifacts
// (timestamp floor, user scores, standardization) come from `train` only.
struct FoldData {
  int fold = -1;
  std::int64_t timestamp_floor = 0;
  std::vector<features::PreparedRecord> train;
  std::vector<features::PreparedRecord> test;
  features::UserScoreTable user_scores;
  features::MetaMatrix train_meta;
  features::MetaMatrix test_meta;

  std::vector<int> train_labels() const;
  std::vector<int> test_labels() const;
};

// Text normalization and image features do not depend on the split, so they
// are computed once per corpus and reused across folds.
class CorpusCache {
 public:
  CorpusCache(std::vector<dataset::RawRecord> records, const features::ImageResolver& resolver);

  const std::vector<dataset::RawRecord>& records() const { return records_; }
  std::vector<int> labels() const;

  // Builds the split from row indices; fits floor/user scores/standardizer on train rows.
  FoldData split(std::span<const std::size_t> train_rows, std::span<const std::size_t> test_rows,
                 int fold = -1) const;

 private:
  std::vector<dataset::RawRecord> records_;
  std::vector<features::NormalizedText> texts_;
  std::vector<features::ImageFeatures> images_;
};

class FoldPipeline {
 public:
  virtual ~FoldPipeline() = default;
  // Scores for fold.test, higher = more unreliable.
  virtual std::vector<double> fit_predict(const FoldData& fold) = 0;
  virtual nlohmann::json config() const = 0;
};

struct FoldResult {
  int fold = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::optional<double> auc;
  std::string warning;
  // Provenance of the fitted artifacts, for leakage audits.
  std::set<std::string> user_score_sources;
  std::set<std::string> standardizer_sources;
  std::set<std::string> test_ids;
};

struct CvReport {
  std::vector<FoldResult> folds;
  double mean_auc = 0.0;
  double std_auc = 0.0;
  int scored_folds = 0;
  dataset::FoldPlan plan;

  nlohmann::json to_json() const;
};

// k-fold cross validation; single-class folds are skipped with a warning.
CvReport cross_validate(FoldPipeline& pipeline, const CorpusCache& corpus, int k, std::uint64_t seed,
                        bool stratified = true);

}  // namespace postcheck::training
