#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace postcheck::nn {

using Matrix = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Matrix value;
};

// Owns named parameters with stable addresses (moving the set keeps every
// Parameter* valid). Names are unique.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(ParameterSet&&) noexcept = default;
  ParameterSet& operator=(ParameterSet&&) noexcept = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;

  Parameter& add(std::string name, Matrix value);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t scalar_count() const;

  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, Parameter*> by_name_;
};

// Deterministic initializers; every parameter draws from its own stream
// derived from (seed, parameter name) so init is independent of creation order.
std::mt19937_64 param_rng(std::uint64_t seed, std::string_view name);
Matrix init_uniform(Eigen::Index rows, Eigen::Index cols, double bound, std::mt19937_64& rng);
Matrix init_normal(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng);

}  // namespace postcheck::nn
