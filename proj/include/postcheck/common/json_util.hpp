#pragma once

#include <filesystem>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

namespace postcheck {

using nlohmann::json;

// Reads fields out of a JSON object and rejects keys nobody asked for.
class StrictReader {
 public:
  StrictReader(const json& obj, std::string context);

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (auto it = obj_.find(key); it != obj_.end()) {
      try {
        out = it->template get<T>();
      } catch (const json::exception& e) {
        fail_type(key, e.what());
      }
    }
  }

  bool has(const char* key) const { return obj_.contains(key); }
  const json& at(const char* key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  // Throws ConfigError naming every unknown key.
  void finish() const;

 private:
  [[noreturn]] void fail_type(const char* key, const char* what) const;

  const json& obj_;
  std::string context_;
  std::set<std::string> seen_;
};

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace postcheck
