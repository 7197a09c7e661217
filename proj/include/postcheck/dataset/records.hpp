#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace postcheck::dataset {

inline constexpr int kReliable = 0;
inline constexpr int kUnreliable = 1;

// One social post as read from disk. Any cell that failed to parse is missing.
struct RawRecord {
  std::string id;
  std::string user_id;
  std::optional<std::string> text;
  std::optional<std::int64_t> timestamp;  // epoch seconds
  std::optional<std::int64_t> likes;
  std::optional<std::int64_t> comments;
  std::optional<std::int64_t> shares;
  std::vector<std::string> image_refs;
  std::optional<std::int64_t> label;  // validated to {0, 1} by drop_invalid

  bool operator==(const RawRecord&) const = default;
};

struct CleanRecord {
  std::string id;
  std::string user_id;
  std::string text;
  std::int64_t timestamp = 0;
  std::int64_t likes = 0;
  std::int64_t comments = 0;
  std::int64_t shares = 0;
  std::vector<std::string> image_refs;
  std::optional<int> label;  // absent only for unlabeled (test) rows

  bool operator==(const CleanRecord&) const = default;
};

// Logical field -> column name. Optional columns may be absent from the file.
struct ColumnSchema {
  std::string id = "id";
  std::string user_id = "user_name";
  std::string text = "post_message";
  std::string timestamp = "timestamp_post";
  std::string likes = "num_like_post";
  std::string comments = "num_comment_post";
  std::string shares = "num_share_post";
  std::string image_refs = "image_links";
  std::string label = "label";
  bool image_refs_required = false;
  bool label_required = false;

  static ColumnSchema from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct DropEntry {
  std::string id;
  std::string reason;
  bool operator==(const DropEntry&) const = default;
};

struct DropReport {
  std::vector<DropEntry> dropped;
  nlohmann::json to_json() const;
};

std::vector<RawRecord> load_corpus(const std::filesystem::path& path,
                                   const ColumnSchema& schema = {});

// Removes rows with an empty id, a label outside {0, 1}, or a negative count.
// Order of the survivors is preserved.
std::pair<std::vector<RawRecord>, DropReport> drop_invalid(const std::vector<RawRecord>& records);

// Minimum present timestamp, or nullopt when every timestamp is missing.
std::optional<std::int64_t> min_timestamp(const std::vector<RawRecord>& records);

// Numbers -> 0, timestamps -> floor, text -> "". The floor must come from the
// training split. A missing floor is a ConfigError.
std::vector<CleanRecord> fill_missing(const std::vector<RawRecord>& records,
                                      std::optional<std::int64_t> timestamp_floor);

// Lifts a clean record back to the raw type (nothing missing).
RawRecord to_raw(const CleanRecord& r);

// Writes records with the schema's column names. Missing cells are empty.
void write_corpus(const std::filesystem::path& path, const std::vector<RawRecord>& records,
                  const ColumnSchema& schema = {});

// Parses an image-reference cell: "[a, b]" lists or '|' / whitespace separated.
std::vector<std::string> parse_image_refs(const std::string& cell);

std::vector<int> labels_of(const std::vector<CleanRecord>& records);

}  // namespace postcheck::dataset
