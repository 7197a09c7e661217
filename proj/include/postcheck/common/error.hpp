#pragma once

#include <stdexcept>
#include <string>

namespace postcheck {

// Every error raised by the library carries a category so the CLI can report
// it as "error[<category>]: ..." and pick an exit status.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error("io", w) {}
};
struct SchemaError : Error {
  explicit SchemaError(const std::string& w) : Error("schema", w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error("shape", w) {}
};
struct MetricError : Error {
  explicit MetricError(const std::string& w) : Error("metric", w) {}
};
struct ModelError : Error {
  explicit ModelError(const std::string& w) : Error("model", w) {}
};
struct CheckpointError : Error {
  explicit CheckpointError(const std::string& w) : Error("checkpoint", w) {}
};
struct TrainingError : Error {
  explicit TrainingError(const std::string& w) : Error("training", w) {}
};

}  // namespace postcheck
