#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "postcheck/dataset/records.hpp"

namespace postcheck::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("postcheck_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline dataset::CleanRecord clean_record(std::string id, std::string user, int label, std::int64_t ts = 1577836800) {
  dataset::CleanRecord r;
  r.id = std::move(id);
  r.user_id = std::move(user);
  r.text = "post " + r.id;
  r.timestamp = ts;
  r.label = label;
  return r;
}

// Two Gaussian blobs; labels alternate so both classes are always present.
inline std::pair<Eigen::MatrixXd, std::vector<int>> blobs(int n, int d, double separation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd X(n, d);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = i % 2;
    for (int j = 0; j < d; ++j) X(i, j) = normal(rng) + (j == 0 && i % 2 ? separation : 0.0);
  }
  return {X, y};
}

}  // namespace postcheck::testing
