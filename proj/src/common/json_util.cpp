#include "postcheck/common/json_util.hpp"

#include <fstream>

#include "postcheck/common/error.hpp"

namespace postcheck {

StrictReader::StrictReader(const json& obj, std::string context)
    : obj_(obj), context_(std::move(context)) {
  if (!obj_.is_object()) throw ConfigError(context_ + ": expected a JSON object");
}

void StrictReader::finish() const {
  std::string unknown;
  for (const auto& [key, _] : obj_.items()) {
    if (!seen_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw ConfigError(context_ + ": unknown key(s): " + unknown);
}

void StrictReader::fail_type(const char* key, const char* what) const {
  throw ConfigError(context_ + "." + key + ": " + what);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace postcheck
