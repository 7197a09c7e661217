#include "postcheck/nn/parameters.hpp"

#include "postcheck/common/error.hpp"
#include "postcheck/common/seed.hpp"

namespace postcheck::nn {

Parameter& ParameterSet::add(std::string name, Matrix value) {
  if (by_name_.count(name)) throw ModelError("duplicate parameter name " + name);
  auto p = std::make_unique<Parameter>(Parameter{std::move(name), std::move(value)});
  Parameter& ref = *p;
  by_name_.emplace(ref.name, &ref);
  params_.push_back(std::move(p));
  return ref;
}

Parameter* ParameterSet::find(std::string_view name) {
  auto it = by_name_.find(std::string(name));
  return it == by_name_.end() ? nullptr : it->second;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  return it == by_name_.end() ? nullptr : it->second;
}

Parameter& ParameterSet::at(std::string_view name) {
  if (auto* p = find(name)) return *p;
  throw ModelError("no parameter named " + std::string(name));
}

const Parameter& ParameterSet::at(std::string_view name) const {
  if (const auto* p = find(name)) return *p;
  throw ModelError("no parameter named " + std::string(name));
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

std::vector<Matrix> ParameterSet::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value);
  return out;
}

void ParameterSet::restore(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) throw ModelError("snapshot size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) params_[i]->value = values[i];
}

std::mt19937_64 param_rng(std::uint64_t seed, std::string_view name) {
  return std::mt19937_64(mix_seed(seed, name));
}

Matrix init_uniform(Eigen::Index rows, Eigen::Index cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = d(rng);
  return m;
}

Matrix init_normal(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = d(rng);
  return m;
}

}  // namespace postcheck::nn
