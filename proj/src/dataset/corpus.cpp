#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "postcheck/common/error.hpp"
#include "postcheck/common/json_util.hpp"
#include "postcheck/dataset/csv.hpp"
#include "postcheck/dataset/records.hpp"

namespace postcheck::dataset {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Integers, or reals with an integral value ("12.0"). Timestamps may carry
// a fractional part and are floored.
std::optional<std::int64_t> parse_int(std::string_view cell, bool floor_fraction) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec == std::errc() && p == cell.data() + cell.size()) return v;

  const std::string s(cell);
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(d) || std::fabs(d) > 9.0e18) return std::nullopt;
  if (floor_fraction) return static_cast<std::int64_t>(std::floor(d));
  if (d != std::floor(d)) return std::nullopt;
  return static_cast<std::int64_t>(d);
}

std::string int_cell(const std::optional<std::int64_t>& v) {
  return v ? std::to_string(*v) : std::string();
}

}  // namespace

ColumnSchema ColumnSchema::from_json(const nlohmann::json& j) {
  ColumnSchema s;
  StrictReader r(j, "schema");
  r.get("id", s.id);
  r.get("user_id", s.user_id);
  r.get("text", s.text);
  r.get("timestamp", s.timestamp);
  r.get("likes", s.likes);
  r.get("comments", s.comments);
  r.get("shares", s.shares);
  r.get("image_refs", s.image_refs);
  r.get("label", s.label);
  r.get("image_refs_required", s.image_refs_required);
  r.get("label_required", s.label_required);
  r.finish();
  return s;
}

nlohmann::json ColumnSchema::to_json() const {
  return {{"id", id},
          {"user_id", user_id},
          {"text", text},
          {"timestamp", timestamp},
          {"likes", likes},
          {"comments", comments},
          {"shares", shares},
          {"image_refs", image_refs},
          {"label", label},
          {"image_refs_required", image_refs_required},
          {"label_required", label_required}};
}

nlohmann::json DropReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : dropped) arr.push_back({{"id", d.id}, {"reason", d.reason}});
  return arr;
}

std::vector<std::string> parse_image_refs(const std::string& cell) {
  std::string_view s = trim(cell);
  std::vector<std::string> out;
  if (s.empty()) return out;
  auto push = [&](std::string_view item) {
    item = trim(item);
    if (item.size() >= 2 && (item.front() == '\'' || item.front() == '"') && item.back() == item.front()) {
      item = item.substr(1, item.size() - 2);
    }
    item = trim(item);
    if (!item.empty()) out.emplace_back(item);
  };
  if (s.front() == '[' && s.back() == ']') {
    s = s.substr(1, s.size() - 2);
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
      if (i == s.size() || s[i] == ',') {
        push(s.substr(start, i - start));
        start = i + 1;
      }
    }
    return out;
  }
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == '|' || std::isspace(static_cast<unsigned char>(s[i]))) {
      push(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::vector<RawRecord> load_corpus(const std::filesystem::path& path, const ColumnSchema& schema) {
  if (!std::filesystem::exists(path)) throw IoError("corpus file not found: " + path.string());
  const CsvTable table = read_csv_file(path);

  auto required = [&](const std::string& name) {
    const int c = table.column(name);
    if (c < 0) throw SchemaError("corpus " + path.string() + " has no column '" + name + "'");
    return c;
  };
  auto optional_col = [&](const std::string& name, bool is_required) {
    return is_required ? required(name) : table.column(name);
  };
  const int c_id = required(schema.id);
  const int c_user = required(schema.user_id);
  const int c_text = required(schema.text);
  const int c_ts = required(schema.timestamp);
  const int c_likes = required(schema.likes);
  const int c_comments = required(schema.comments);
  const int c_shares = required(schema.shares);
  const int c_images = optional_col(schema.image_refs, schema.image_refs_required);
  const int c_label = optional_col(schema.label, schema.label_required);

  std::vector<RawRecord> records;
  records.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    auto cell = [&](int c) -> const std::string* {
      return (c >= 0 && static_cast<std::size_t>(c) < row.size()) ? &row[c] : nullptr;
    };
    RawRecord r;
    if (auto* v = cell(c_id)) r.id = std::string(trim(*v));
    if (auto* v = cell(c_user)) r.user_id = std::string(trim(*v));
    if (auto* v = cell(c_text); v && !v->empty()) r.text = *v;
    if (auto* v = cell(c_ts)) r.timestamp = parse_int(*v, true);
    if (auto* v = cell(c_likes)) r.likes = parse_int(*v, false);
    if (auto* v = cell(c_comments)) r.comments = parse_int(*v, false);
    if (auto* v = cell(c_shares)) r.shares = parse_int(*v, false);
    if (auto* v = cell(c_images)) r.image_refs = parse_image_refs(*v);
    if (auto* v = cell(c_label)) r.label = parse_int(*v, false);
    records.push_back(std::move(r));
  }
  return records;
}

std::pair<std::vector<RawRecord>, DropReport> drop_invalid(const std::vector<RawRecord>& records) {
  std::vector<RawRecord> kept;
  DropReport report;
  kept.reserve(records.size());
  auto negative = [](const std::optional<std::int64_t>& v) { return v && *v < 0; };
  for (const auto& r : records) {
    std::string reason;
    if (r.id.empty()) {
      reason = "empty id";
    } else if (r.label && *r.label != kReliable && *r.label != kUnreliable) {
      reason = "invalid label";
    } else if (negative(r.likes) || negative(r.comments) || negative(r.shares)) {
      reason = "negative count";
    }
    if (reason.empty()) {
      kept.push_back(r);
    } else {
      report.dropped.push_back({r.id, reason});
    }
  }
  return {std::move(kept), std::move(report)};
}

std::optional<std::int64_t> min_timestamp(const std::vector<RawRecord>& records) {
  std::optional<std::int64_t> lo;
  for (const auto& r : records) {
    if (r.timestamp && (!lo || *r.timestamp < *lo)) lo = r.timestamp;
  }
  return lo;
}

std::vector<CleanRecord> fill_missing(const std::vector<RawRecord>& records,
                                      std::optional<std::int64_t> timestamp_floor) {
  if (!timestamp_floor) {
    throw ConfigError("fill_missing: timestamp floor undefined (no timestamp present in the training split)");
  }
  std::vector<CleanRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    CleanRecord c;
    c.id = r.id;
    c.user_id = r.user_id;
    c.text = r.text.value_or(std::string());
    c.timestamp = r.timestamp.value_or(*timestamp_floor);
    c.likes = r.likes.value_or(0);
    c.comments = r.comments.value_or(0);
    c.shares = r.shares.value_or(0);
    c.image_refs = r.image_refs;
    if (r.label) c.label = static_cast<int>(*r.label);
    out.push_back(std::move(c));
  }
  return out;
}

RawRecord to_raw(const CleanRecord& c) {
  RawRecord r;
  r.id = c.id;
  r.user_id = c.user_id;
  if (!c.text.empty()) r.text = c.text;
  r.timestamp = c.timestamp;
  r.likes = c.likes;
  r.comments = c.comments;
  r.shares = c.shares;
  r.image_refs = c.image_refs;
  if (c.label) r.label = *c.label;
  return r;
}

void write_corpus(const std::filesystem::path& path, const std::vector<RawRecord>& records,
                  const ColumnSchema& schema) {
  CsvTable t;
  t.header = {schema.id,    schema.user_id,  schema.text,   schema.timestamp,  schema.likes,
              schema.comments, schema.shares, schema.image_refs, schema.label};
  for (const auto& r : records) {
    std::string images;
    for (std::size_t i = 0; i < r.image_refs.size(); ++i) {
      images += (i ? "|" : "") + r.image_refs[i];
    }
    t.rows.push_back({r.id, r.user_id, r.text.value_or(""), int_cell(r.timestamp), int_cell(r.likes),
                      int_cell(r.comments), int_cell(r.shares), images, int_cell(r.label)});
  }
  write_csv_file(path, t);
}

std::vector<int> labels_of(const std::vector<CleanRecord>& records) {
  std::vector<int> y;
  y.reserve(records.size());
  for (const auto& r : records) {
    if (!r.label) throw ConfigError("record " + r.id + " has no label");
    y.push_back(*r.label);
  }
  return y;
}

}  // namespace postcheck::dataset
