#include "postcheck/cross_validate.hpp"

#include <cmath>
#include <iostream>

#include "postcheck/common/error.hpp"
#include "postcheck/evaluation.hpp"

namespace postcheck::training {

std::vector<int> FoldData::train_labels() const {
  std::vector<int> y;
  for (const auto& r : train) y.push_back(r.record.label.value_or(0));
  return y;
}

std::vector<int> FoldData::test_labels() const {
  std::vector<int> y;
  for (const auto& r : test) y.push_back(r.record.label.value_or(0));
  return y;
}

CorpusCache::CorpusCache(std::vector<dataset::RawRecord> records, const features::ImageResolver& resolver)
    : records_(std::move(records)) {
  texts_.reserve(records_.size());
  images_.reserve(records_.size());
  for (const auto& r : records_) {
    texts_.push_back(features::normalize_text(r.text.value_or("")));
    images_.push_back(features::compute_image_features(r.image_refs, resolver));
  }
}

std::vector<int> CorpusCache::labels() const {
  std::vector<int> y;
  for (const auto& r : records_) {
    if (!r.label) throw ConfigError("record " + r.id + " has no label");
    y.push_back(static_cast<int>(*r.label));
  }
  return y;
}

FoldData CorpusCache::split(std::span<const std::size_t> train_rows, std::span<const std::size_t> test_rows,
                            int fold) const {
  std::vector<dataset::RawRecord> train_raw;
  for (auto i : train_rows) train_raw.push_back(records_[i]);
  const auto floor = dataset::min_timestamp(train_raw);

  auto build = [&](std::span<const std::size_t> rows) {
    std::vector<dataset::RawRecord> raw;
    for (auto i : rows) raw.push_back(records_[i]);
    auto clean = dataset::fill_missing(raw, floor);
    std::vector<features::PreparedRecord> out;
    out.reserve(rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
      out.push_back({std::move(clean[j]), texts_[rows[j]], images_[rows[j]]});
    }
    return out;
  };

  FoldData d;
  d.fold = fold;
  d.train = build(train_rows);
  d.test = build(test_rows);
  d.timestamp_floor = *floor;
  std::vector<dataset::CleanRecord> train_clean;
  for (const auto& p : d.train) train_clean.push_back(p.record);
  d.user_scores = features::UserScoreTable::build(train_clean);
  d.train_meta = features::build_meta_matrix(d.train, d.user_scores);
  d.test_meta = features::transform_meta_matrix(d.test, d.user_scores, d.train_meta.standardizer);
  return d;
}

nlohmann::json CvReport::to_json() const {
  nlohmann::json folds_j = nlohmann::json::array();
  for (const auto& f : folds) {
    nlohmann::json j = {{"fold", f.fold}, {"n_train", f.n_train}, {"n_test", f.n_test}, {"auc", nullptr}};
    if (f.auc) j["auc"] = *f.auc;
    if (!f.warning.empty()) j["warning"] = f.warning;
    folds_j.push_back(j);
  }
  return {{"folds", folds_j},
          {"mean_auc", mean_auc},
          {"std_auc", std_auc},
          {"scored_folds", scored_folds},
          {"k", plan.k},
          {"seed", plan.seed},
          {"stratified", plan.stratified}};
}

CvReport cross_validate(FoldPipeline& pipeline, const CorpusCache& corpus, int k, std::uint64_t seed,
                        bool stratified) {
  CvReport report;
  const auto labels = corpus.labels();
  report.plan = dataset::make_folds(labels, k, seed, stratified);

  std::vector<double> aucs;
  for (int f = 0; f < k; ++f) {
    const auto train_rows = report.plan.train_indices(f);
    const auto test_rows = report.plan.test_indices(f);
    FoldResult r;
    r.fold = f;
    r.n_train = train_rows.size();
    r.n_test = test_rows.size();

    const FoldData data = corpus.split(train_rows, test_rows, f);
    r.user_score_sources = data.user_scores.source_ids();
    r.standardizer_sources = data.train_meta.standardizer.source_ids;
    for (const auto& p : data.test) r.test_ids.insert(p.record.id);

    const auto y_test = data.test_labels();
    const bool both = std::count(y_test.begin(), y_test.end(), 1) > 0 &&
                      std::count(y_test.begin(), y_test.end(), 0) > 0;
    if (!both) {
      r.warning = "fold " + std::to_string(f) + " has a single class; skipped";
      std::cerr << "warning: " << r.warning << '\n';
      report.folds.push_back(std::move(r));
      continue;
    }
    const auto scores = pipeline.fit_predict(data);
    r.auc = evaluation::roc_auc(scores, y_test);
    aucs.push_back(*r.auc);
    report.folds.push_back(std::move(r));
  }
  report.scored_folds = static_cast<int>(aucs.size());
  if (!aucs.empty()) {
    double sum = 0.0;
    for (double a : aucs) sum += a;
    report.mean_auc = sum / static_cast<double>(aucs.size());
    double var = 0.0;
    for (double a : aucs) var += (a - report.mean_auc) * (a - report.mean_auc);
    report.std_auc = std::sqrt(var / static_cast<double>(aucs.size()));
  }
  return report;
}

}  // namespace postcheck::training
