#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "postcheck/dataset/records.hpp"

namespace postcheck::features {

// ---------------------------------------------------------------- time

struct TimeFeatures {
  int minute = 0;   // [0, 59]
  int hour = 0;     // [0, 23]
  int day = 1;      // [1, 31]
  int month = 1;    // [1, 12]
  int year = 1970;
  int weekday = 0;  // 0 = Monday .. 6 = Sunday
  int is_weekend = 0;

  bool operator==(const TimeFeatures&) const = default;
};

// UTC calendar decomposition. Negative timestamps are rejected.
TimeFeatures decode_timestamp(std::int64_t ts);

// ---------------------------------------------------------------- user score

// Laplace-smoothed share of reliable posts per user, built from training rows
// only. Scoring a row that was part of the build excludes that row's own label.
class UserScoreTable {
 public:
  static constexpr double kAlpha = 1.0;

  struct Counts {
    std::int64_t reliable = 0;
    std::int64_t total = 0;
  };

  static UserScoreTable build(std::span<const dataset::CleanRecord> train_records);

  double default_score() const { return smoothed(0, 0); }
  // Score for a new post by `user_id`.
  double score_new(const std::string& user_id) const;
  // Leave-one-out when r.id is a source row, score_new otherwise.
  double score(const dataset::CleanRecord& r) const;

  const std::unordered_map<std::string, Counts>& counts() const { return counts_; }
  const std::set<std::string>& source_ids() const { return source_ids_; }

  nlohmann::json to_json() const;
  static UserScoreTable from_json(const nlohmann::json& j);

  static double smoothed(std::int64_t reliable, std::int64_t total) {
    return (static_cast<double>(reliable) + kAlpha) / (static_cast<double>(total) + 2.0 * kAlpha);
  }

 private:
  std::unordered_map<std::string, Counts> counts_;
  std::unordered_map<std::string, int> source_labels_;
  std::set<std::string> source_ids_;
};

// ---------------------------------------------------------------- images

struct ImageSize {
  double width = 0;
  double height = 0;
};

// Maps an image reference to its pixel size, or nullopt when unknown.
using ImageResolver = std::function<std::optional<ImageSize>(std::string_view ref)>;

// Understands "synthetic://<w>x<h>/..." refs produced by synthesize_corpus.
std::optional<ImageSize> synthetic_image_size(std::string_view ref);

// Looks refs up in a {"ref": [w, h]} JSON table, falling back to synthetic refs.
ImageResolver table_image_resolver(const std::filesystem::path& json_table);
ImageResolver default_image_resolver();

struct ImageFeatures {
  int image_count = 0;
  double image_aspect_mean = 0.0;  // mean width/height over resolvable images
};

ImageFeatures compute_image_features(std::span<const std::string> image_refs,
                                     const ImageResolver& resolver = default_image_resolver());

// ---------------------------------------------------------------- text

struct NormalizedText {
  std::string text;
  std::map<std::string, int> replacement_counts;  // kind -> count
};

// NFC, modern tone-mark placement, HTML removal, placeholder replacement
// (<email>, <url>, <phone>, <datetime>, <number>, <emoji>), whitespace collapse.
NormalizedText normalize_text(std::string_view raw);

// Moves tone marks from legacy "òa/òe/ùy" placement to "oà/oè/uỳ".
std::string modernize_tone_marks(std::string_view utf8);
std::string nfc(std::string_view utf8);

// Number of Unicode code points.
std::size_t utf8_length(std::string_view s);

// ---------------------------------------------------------------- meta matrix

inline constexpr std::array<const char*, 14> kMetaColumns = {
    "likes",  "comments", "shares",  "text_length", "minute",      "hour",        "day",
    "month",  "year",     "weekday", "is_weekend",  "user_score", "image_count", "image_aspect_mean"};
inline constexpr int kMetaDim = static_cast<int>(kMetaColumns.size());

using MetaFeatureVector = std::array<double, kMetaDim>;

// Inputs to the meta features that do not depend on the fold.
struct PreparedRecord {
  dataset::CleanRecord record;
  NormalizedText text;
  ImageFeatures images;
};

PreparedRecord prepare_record(dataset::CleanRecord record, const ImageResolver& resolver);
std::vector<PreparedRecord> prepare_records(std::vector<dataset::CleanRecord> records,
                                            const ImageResolver& resolver);

MetaFeatureVector meta_features(const PreparedRecord& r, double user_score);

// Per-column z-score fitted on training rows. Zero-variance columns map to 0.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd stddev;  // population standard deviation
  std::set<std::string> source_ids;

  static Standardizer fit(const Eigen::MatrixXd& raw, std::span<const std::string> ids);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const;

  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);
};

struct MetaMatrix {
  Eigen::MatrixXd values;  // n x kMetaDim, standardized
  Standardizer standardizer;
  std::vector<std::string> ids;
};

Eigen::MatrixXd raw_meta_matrix(std::span<const PreparedRecord> records, const UserScoreTable& scores);

// Builds the standardized matrix for training rows, fitting the standardizer on them.
MetaMatrix build_meta_matrix(std::span<const PreparedRecord> train_records, const UserScoreTable& scores);
// Applies an existing standardizer (held-out rows).
MetaMatrix transform_meta_matrix(std::span<const PreparedRecord> records, const UserScoreTable& scores,
                                 const Standardizer& standardizer);

// Column-major float64 payload at <prefix>.f64 plus a JSON sidecar at <prefix>.json.
void write_feature_matrix(const std::filesystem::path& prefix, const MetaMatrix& m);
MetaMatrix read_feature_matrix(const std::filesystem::path& prefix);

}  // namespace postcheck::features
