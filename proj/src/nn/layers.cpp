#include "postcheck/nn/layers.hpp"

#include <cmath>

#include "postcheck/common/error.hpp"

namespace postcheck::nn {

Linear::Linear(ParameterSet& params, const std::string& prefix, int in, int out, std::uint64_t seed,
               double init_stddev) {
  auto rng = param_rng(seed, prefix + ".weight");
  // Uniform(+-1/sqrt(in)) unless a normal stddev is requested.
  Matrix w = init_stddev > 0.0 ? init_normal(in, out, init_stddev, rng)
                               : init_uniform(in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  auto brng = param_rng(seed, prefix + ".bias");
  Matrix b = init_stddev > 0.0 ? Matrix::Zero(1, out)
                               : init_uniform(1, out, 1.0 / std::sqrt(static_cast<double>(in)), brng);
  weight_ = &params.add(prefix + ".weight", std::move(w));
  bias_ = &params.add(prefix + ".bias", std::move(b));
}

Var Linear::forward(Graph& g, Var x) const {
  if (x.cols() != weight_->value.rows()) {
    throw ShapeError(weight_->name + ": expected input dim " + std::to_string(weight_->value.rows()) + ", got " +
                     std::to_string(x.cols()));
  }
  return add_row(matmul(x, g.param(*weight_)), g.param(*bias_));
}

Matrix Linear::infer(const Matrix& x) const {
  if (x.cols() != weight_->value.rows()) {
    throw ShapeError(weight_->name + ": expected input dim " + std::to_string(weight_->value.rows()) + ", got " +
                     std::to_string(x.cols()));
  }
  return (x * weight_->value).rowwise() + bias_->value.row(0);
}

LayerNorm::LayerNorm(ParameterSet& params, const std::string& prefix, int dim) {
  gain_ = &params.add(prefix + ".weight", Matrix::Ones(1, dim));
  bias_ = &params.add(prefix + ".bias", Matrix::Zero(1, dim));
}

Var LayerNorm::forward(Graph& g, Var x) const { return layer_norm_rows(x, g.param(*gain_), g.param(*bias_)); }

Eigen::VectorXd softmax_positive(const Matrix& logits) {
  if (logits.cols() != 2) throw ShapeError("expected 2 logits per row");
  // p1 = 1 / (1 + exp(l0 - l1))
  return (1.0 / (1.0 + (logits.col(0) - logits.col(1)).array().exp())).matrix();
}

Eigen::VectorXd predict_proba(const Classifier& model, std::span<const Sample> samples, ExecPolicy policy) {
  constexpr std::ptrdiff_t kChunk = 16;
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  Eigen::VectorXd out(n);
  const std::ptrdiff_t chunks = (n + kChunk - 1) / kChunk;
  parallel_for(policy, chunks, [&](std::ptrdiff_t c) {
    const std::ptrdiff_t lo = c * kChunk;
    const std::ptrdiff_t hi = std::min(n, lo + kChunk);
    std::vector<const Sample*> batch;
    for (std::ptrdiff_t i = lo; i < hi; ++i) batch.push_back(&samples[static_cast<std::size_t>(i)]);
    Graph g(GradMode::none);
    ForwardContext ctx;
    const Var l = model.logits(g, batch, ctx);
    out.segment(lo, hi - lo) = softmax_positive(l.value());
  });
  return out;
}

}  // namespace postcheck::nn
