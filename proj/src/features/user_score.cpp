#include "postcheck/common/error.hpp"
#include "postcheck/common/json_util.hpp"
#include "postcheck/features.hpp"

namespace postcheck::features {

UserScoreTable UserScoreTable::build(std::span<const dataset::CleanRecord> train_records) {
  UserScoreTable t;
  for (const auto& r : train_records) {
    if (!r.label) throw ConfigError("user scores need labeled rows; " + r.id + " has no label");
    auto& c = t.counts_[r.user_id];
    c.total += 1;
    if (*r.label == dataset::kReliable) c.reliable += 1;
    t.source_labels_[r.id] = *r.label;
    t.source_ids_.insert(r.id);
  }
  return t;
}

double UserScoreTable::score_new(const std::string& user_id) const {
  const auto it = counts_.find(user_id);
  if (it == counts_.end()) return default_score();
  return smoothed(it->second.reliable, it->second.total);
}

double UserScoreTable::score(const dataset::CleanRecord& r) const {
  const auto src = source_labels_.find(r.id);
  if (src == source_labels_.end()) return score_new(r.user_id);
  const auto it = counts_.find(r.user_id);
  if (it == counts_.end()) return default_score();
  const std::int64_t own_reliable = src->second == dataset::kReliable ? 1 : 0;
  return smoothed(it->second.reliable - own_reliable, it->second.total - 1);
}

nlohmann::json UserScoreTable::to_json() const {
  nlohmann::json users = nlohmann::json::object();
  for (const auto& [user, c] : counts_) {
    users[user] = {{"reliable", c.reliable}, {"total", c.total}, {"score", smoothed(c.reliable, c.total)}};
  }
  nlohmann::json sources = nlohmann::json::object();
  for (const auto& [id, label] : source_labels_) sources[id] = label;
  return {{"alpha", kAlpha}, {"default_score", default_score()}, {"users", users}, {"sources", sources}};
}

UserScoreTable UserScoreTable::from_json(const nlohmann::json& j) {
  UserScoreTable t;
  for (const auto& [user, c] : j.at("users").items()) {
    t.counts_[user] = {c.at("reliable").get<std::int64_t>(), c.at("total").get<std::int64_t>()};
  }
  for (const auto& [id, label] : j.at("sources").items()) {
    t.source_labels_[id] = label.get<int>();
    t.source_ids_.insert(id);
  }
  return t;
}

}  // namespace postcheck::features
