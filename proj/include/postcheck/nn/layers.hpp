#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "postcheck/common/parallel.hpp"
#include "postcheck/nn/graph.hpp"

namespace postcheck::nn {

// Dropout is active only when `rng` is set (training).
struct ForwardContext {
  std::mt19937_64* rng = nullptr;
  bool training() const { return rng != nullptr; }
};

// y = x W + b with W stored in x out. Parameters "<prefix>.weight", "<prefix>.bias".
class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet& params, const std::string& prefix, int in, int out, std::uint64_t seed,
         double init_stddev = 0.0);

  Var forward(Graph& g, Var x) const;
  Matrix infer(const Matrix& x) const;

  int in_dim() const { return static_cast<int>(weight_->value.rows()); }
  int out_dim() const { return static_cast<int>(weight_->value.cols()); }
  Parameter& weight() const { return *weight_; }
  Parameter& bias() const { return *bias_; }

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
};

// Row-wise layer normalization; "<prefix>.weight" (gain) and "<prefix>.bias".
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterSet& params, const std::string& prefix, int dim);
  Var forward(Graph& g, Var x) const;

 private:
  Parameter* gain_ = nullptr;
  Parameter* bias_ = nullptr;
};

// One training/inference example. Text models read `tokens`, metadata models
// read `meta`; fused models read both.
struct Sample {
  std::string id;
  std::vector<int> tokens;
  Eigen::RowVectorXd meta;
  int label = 0;
};

// A differentiable binary classifier: logits over {reliable, unreliable}.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual ParameterSet& parameters() = 0;
  virtual const ParameterSet& parameters() const = 0;
  virtual Var logits(Graph& g, std::span<const Sample* const> batch, ForwardContext& ctx) const = 0;

  // Parameter groups ordered top-down for discriminative learning rates and
  // gradual unfreezing: depth 0 is the task head, then deeper blocks.
  virtual int group_depth(const std::string& /*param_name*/) const { return 0; }
  virtual int group_count() const { return 1; }
};

// Unreliable-class probability per sample, evaluated in inference mode.
// Fixed-size chunks run in parallel under ExecPolicy::openmp.
Eigen::VectorXd predict_proba(const Classifier& model, std::span<const Sample> samples,
                              ExecPolicy policy = default_exec_policy());

Eigen::VectorXd softmax_positive(const Matrix& logits);

}  // namespace postcheck::nn
