#include <algorithm>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "postcheck/common/seed.hpp"
#include "postcheck/evaluation.hpp"

namespace postcheck::evaluation {

const std::vector<ReferenceRow>& reference_strategy_rows() {
  static const std::vector<ReferenceRow> rows = {
      {"meta-only", 0.7338}, {"text-only", 0.9628}, {"S1", 0.9058},
      {"S2", 0.9399},        {"S3", 0.9552},        {"S4", 0.9628},
  };
  return rows;
}

const std::vector<ReferenceRow>& reference_meta_zoo_rows() {
  static const std::vector<ReferenceRow> rows = {
      {"logistic_regression", 0.545037}, {"lda", 0.545037},
      {"knn", 0.633251},                 {"decision_tree", 0.657217},
      {"gaussian_nb", 0.588978},         {"svm", 0.599256},
      {"adaboost", 0.673511},            {"gradient_boosting", 0.733850},
      {"random_forest", 0.727192},       {"extra_trees", 0.651323},
      {"mlp", 0.604653},
  };
  return rows;
}

const std::vector<ReferenceRow>& reference_block_rows() {
  static const std::vector<ReferenceRow> rows = {
      {"blocks 1-6", 0.913251},  {"blocks 6-12", 0.937330},
      {"blocks 9-12", 0.921147}, {"blocks 1-12", 0.939915},
      {"blocks 1-12 (ensemble)", 0.941811},
  };
  return rows;
}

MetricsRow evaluate_named(const NamedPredictions& p) {
  MetricsRow row;
  row.name = p.name;
  row.fingerprint = p.fingerprint;
  row.auc = roc_auc(p.predictions);

  // Count tied positive/negative pairs group by group.
  std::unordered_map<double, std::pair<std::int64_t, std::int64_t>> groups;
  for (std::size_t i = 0; i < p.predictions.scores.size(); ++i) {
    auto& g = groups[p.predictions.scores[i]];
    if (p.predictions.labels[i] == 1) {
      ++row.n_pos;
      ++g.first;
    } else {
      ++row.n_neg;
      ++g.second;
    }
  }
  for (const auto& [_, g] : groups) row.tie_count += g.first * g.second;
  return row;
}

MetricsReport report(std::span<const NamedPredictions> results, std::vector<ReferenceRow> reference) {
  MetricsReport out;
  out.reference = std::move(reference);
  for (const auto& r : results) out.rows.push_back(evaluate_named(r));
  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const MetricsRow& a, const MetricsRow& b) { return a.auc > b.auc; });
  return out;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"name", r.name},
                         {"auc", r.auc},
                         {"n_pos", r.n_pos},
                         {"n_neg", r.n_neg},
                         {"tie_count", r.tie_count},
                         {"fingerprint", r.fingerprint}});
  }
  j["reference"] = nlohmann::json::array();
  for (const auto& r : reference) j["reference"].push_back({{"name", r.name}, {"auc", r.auc}});
  return j;
}

std::string MetricsReport::to_table() const {
  std::size_t width = 4;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  for (const auto& r : reference) width = std::max(width, r.name.size());

  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %9s  %6s  %6s  %9s  %s\n", static_cast<int>(width), "name",
                "roc_auc", "n_pos", "n_neg", "ties", "fingerprint");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %9.6f  %6lld  %6lld  %9lld  %s\n",
                  static_cast<int>(width), r.name.c_str(), r.auc, static_cast<long long>(r.n_pos),
                  static_cast<long long>(r.n_neg), static_cast<long long>(r.tie_count),
                  r.fingerprint.c_str());
    os << buf;
  }
  if (!reference.empty()) {
    os << "\nreference\n";
    for (const auto& r : reference) {
      std::snprintf(buf, sizeof buf, "%-*s  %9.6f\n", static_cast<int>(width), r.name.c_str(), r.auc);
      os << buf;
    }
  }
  return os.str();
}

std::string config_fingerprint(const nlohmann::json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(config.dump())));
  return buf;
}

}  // namespace postcheck::evaluation
