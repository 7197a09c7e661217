#include "postcheck/nn/graph.hpp"

#include <cmath>

#include "postcheck/common/error.hpp"
#include "postcheck/nn/loss_math.hpp"

namespace postcheck::nn {

const Matrix& Var::value() const { return graph->value(id); }

void GradientBuffer::add(const Parameter* p, const Matrix& g) {
  auto [it, inserted] = grads_.try_emplace(p, g);
  if (!inserted) it->second += g;
}

void GradientBuffer::merge(const GradientBuffer& other) {
  for (const auto& [p, g] : other.grads_) add(p, g);
}

const Matrix* GradientBuffer::find(const Parameter* p) const {
  auto it = grads_.find(p);
  return it == grads_.end() ? nullptr : &it->second;
}

Graph::Graph(GradMode mode, const std::unordered_set<const Parameter*>* trainable)
    : mode_(mode), trainable_(trainable) {
  if (mode == GradMode::selected && trainable == nullptr) {
    throw ModelError("GradMode::selected needs a trainable set");
  }
  nodes_.reserve(256);
}

Var Graph::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Graph::param(const Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
  Node n;
  n.external = &p.value;
  n.param = &p;
  n.needs_grad = mode_ == GradMode::all || (mode_ == GradMode::selected && trainable_->count(&p) > 0);
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return {this, id};
}

const Matrix& Graph::value(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.external ? *n.external : n.value;
}

Var Graph::record(Matrix value, std::initializer_list<Var> inputs, BackFn back) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(back));
}

Var Graph::record(Matrix value, std::span<const Var> inputs, BackFn back) {
  Node n;
  n.value = std::move(value);
  for (const Var& v : inputs) {
    if (v.graph != this) throw ModelError("graph op mixes variables from different graphs");
    n.needs_grad = n.needs_grad || nodes_[static_cast<std::size_t>(v.id)].needs_grad;
  }
  if (n.needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Matrix& Graph::grad_storage(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) {
    const Matrix& v = value(id);
    n.grad = Matrix::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

void Graph::backward(Var loss) {
  if (loss.graph != this) throw ModelError("backward on a foreign variable");
  if (loss.rows() != 1 || loss.cols() != 1) throw ShapeError("backward needs a 1x1 loss");
  Node& root = nodes_[static_cast<std::size_t>(loss.id)];
  if (!root.needs_grad) return;
  root.grad = Matrix::Ones(1, 1);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.back && n.grad.size() != 0) n.back(*this, i);
  }
}

void Graph::accumulate_gradients(GradientBuffer& buffer) const {
  for (const auto& [p, id] : param_nodes_) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.needs_grad && n.grad.size() != 0) buffer.add(p, n.grad);
  }
}

// ---------------------------------------------------------------- ops

namespace {
void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape (" + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     ") vs (" + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
  }
}
}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dims " + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()));
  }
  Graph& g = *a.graph;
  return g.record(a.value() * b.value(), {a, b}, [a, b](Graph& g, int self) {
    const Matrix& up = g.grad(self);
    if (g.needs_grad(a.id)) g.accumulate(a.id, up * g.value(b.id).transpose());
    if (g.needs_grad(b.id)) g.accumulate(b.id, g.value(a.id).transpose() * up);
  });
}

Var matmul_nt(Var a, Var b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: dims " + std::to_string(a.cols()) + " vs " + std::to_string(b.cols()));
  }
  Graph& g = *a.graph;
  return g.record(a.value() * b.value().transpose(), {a, b}, [a, b](Graph& g, int self) {
    const Matrix& up = g.grad(self);
    if (g.needs_grad(a.id)) g.accumulate(a.id, up * g.value(b.id));
    if (g.needs_grad(b.id)) g.accumulate(b.id, up.transpose() * g.value(a.id));
  });
}

Var add(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "add");
  Graph& g = *a.graph;
  return g.record(a.value() + b.value(), {a, b}, [a, b](Graph& g, int self) {
    g.accumulate(a.id, g.grad(self));
    g.accumulate(b.id, g.grad(self));
  });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row: row of width " + std::to_string(row.cols()) + " for " + std::to_string(a.cols()) +
                     " columns");
  }
  Graph& g = *a.graph;
  Matrix out = a.value().rowwise() + row.value().row(0);
  return g.record(std::move(out), {a, row}, [a, row](Graph& g, int self) {
    g.accumulate(a.id, g.grad(self));
    if (g.needs_grad(row.id)) g.accumulate(row.id, g.grad(self).colwise().sum());
  });
}

Var scale(Var a, double s) {
  Graph& g = *a.graph;
  return g.record(a.value() * s, {a}, [a, s](Graph& g, int self) { g.accumulate(a.id, g.grad(self) * s); });
}

Var relu(Var a) {
  Graph& g = *a.graph;
  return g.record(a.value().cwiseMax(0.0), {a}, [a](Graph& g, int self) {
    g.accumulate(a.id, (g.value(a.id).array() > 0.0).cast<double>().matrix().cwiseProduct(g.grad(self)));
  });
}

Var gelu(Var a) {
  static constexpr double k = 0.7978845608028654;  // sqrt(2 / pi)
  Graph& g = *a.graph;
  const auto& x = a.value().array();
  Eigen::ArrayXXd t = (k * (x + 0.044715 * x.cube())).tanh();
  Matrix out = (0.5 * x * (1.0 + t)).matrix();
  return g.record(std::move(out), {a}, [a, t = std::move(t)](Graph& g, int self) {
    const auto& x = g.value(a.id).array();
    const Eigen::ArrayXXd dt = (1.0 - t.square()) * k * (1.0 + 3.0 * 0.044715 * x.square());
    const Eigen::ArrayXXd d = 0.5 * (1.0 + t) + 0.5 * x * dt;
    g.accumulate(a.id, (d * g.grad(self).array()).matrix());
  });
}

Var softmax_rows(Var a) {
  Graph& g = *a.graph;
  Matrix y = a.value();
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double m = y.row(i).maxCoeff();
    y.row(i) = (y.row(i).array() - m).exp();
    y.row(i) /= y.row(i).sum();
  }
  return g.record(std::move(y), {a}, [a](Graph& g, int self) {
    const Matrix& y = g.value(self);
    const Matrix& up = g.grad(self);
    const Eigen::VectorXd dots = up.cwiseProduct(y).rowwise().sum();
    g.accumulate(a.id, (y.array() * (up.colwise() - dots).array()).matrix());
  });
}

Var layer_norm_rows(Var x, Var gain, Var bias, double eps) {
  const Eigen::Index d = x.cols();
  if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 || bias.cols() != d) {
    throw ShapeError("layer_norm_rows: gain/bias must be 1x" + std::to_string(d));
  }
  Graph& g = *x.graph;
  const Matrix& xv = x.value();
  const Eigen::VectorXd mean = xv.rowwise().mean();
  Matrix centered = xv.colwise() - mean;
  const Eigen::VectorXd inv_std =
      ((centered.array().square().rowwise().sum() / static_cast<double>(d)) + eps).rsqrt().matrix();
  Matrix xhat = centered.array().colwise() * inv_std.array();
  Matrix out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix().rowwise() + bias.value().row(0);
  return g.record(std::move(out), {x, gain, bias},
                  [x, gain, bias, xhat = std::move(xhat), inv_std](Graph& g, int self) {
                    const Matrix& up = g.grad(self);
                    if (g.needs_grad(gain.id)) g.accumulate(gain.id, up.cwiseProduct(xhat).colwise().sum());
                    if (g.needs_grad(bias.id)) g.accumulate(bias.id, up.colwise().sum());
                    if (!g.needs_grad(x.id)) return;
                    const Matrix dxhat = up.array().rowwise() * g.value(gain.id).row(0).array();
                    const Eigen::VectorXd m1 = dxhat.rowwise().mean();
                    const Eigen::VectorXd m2 = dxhat.cwiseProduct(xhat).rowwise().mean();
                    Matrix dx = (dxhat.colwise() - m1) - (xhat.array().colwise() * m2.array()).matrix();
                    g.accumulate(x.id, (dx.array().colwise() * inv_std.array()).matrix());
                  });
}

Var dropout(Var x, double rate, std::mt19937_64* rng) {
  if (rng == nullptr || rate <= 0.0) return x;
  if (rate >= 1.0) throw ModelError("dropout rate must be < 1");
  Graph& g = *x.graph;
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(x.rows(), x.cols());
  const double s = 1.0 / (1.0 - rate);
  for (Eigen::Index j = 0; j < mask.cols(); ++j)
    for (Eigen::Index i = 0; i < mask.rows(); ++i) mask(i, j) = keep(*rng) ? s : 0.0;
  Matrix out = x.value().cwiseProduct(mask);
  return g.record(std::move(out), {x}, [x, mask = std::move(mask)](Graph& g, int self) {
    g.accumulate(x.id, g.grad(self).cwiseProduct(mask));
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Graph& g = *parts.front().graph;
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row count mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<Var> inputs(parts.begin(), parts.end());
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return g.record(std::move(out), parts, [inputs](Graph& g, int self) {
    Eigen::Index c = 0;
    for (const Var& p : inputs) {
      const Eigen::Index w = g.value(p.id).cols();
      if (g.needs_grad(p.id)) g.accumulate(p.id, g.grad(self).middleCols(c, w));
      c += w;
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  Graph& g = *parts.front().graph;
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw ShapeError("concat_rows: column count mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<Var> inputs(parts.begin(), parts.end());
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return g.record(std::move(out), parts, [inputs](Graph& g, int self) {
    Eigen::Index r = 0;
    for (const Var& p : inputs) {
      const Eigen::Index h = g.value(p.id).rows();
      if (g.needs_grad(p.id)) g.accumulate(p.id, g.grad(self).middleRows(r, h));
      r += h;
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw ShapeError("slice_cols: out of range");
  Graph& g = *a.graph;
  return g.record(a.value().middleCols(start, count), {a}, [a, start, count](Graph& g, int self) {
    g.grad_storage(a.id).middleCols(start, count) += g.grad(self);
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw ShapeError("slice_rows: out of range");
  Graph& g = *a.graph;
  return g.record(a.value().middleRows(start, count), {a}, [a, start, count](Graph& g, int self) {
    g.grad_storage(a.id).middleRows(start, count) += g.grad(self);
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  Graph& g = *table.graph;
  const Matrix& t = table.value();
  Matrix out(static_cast<Eigen::Index>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= t.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(ids[i]) + " outside table of " +
                       std::to_string(t.rows()) + " rows");
    }
    out.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return g.record(std::move(out), {table}, [table, idx = std::move(idx)](Graph& g, int self) {
    Matrix& dt = g.grad_storage(table.id);
    const Matrix& up = g.grad(self);
    for (std::size_t i = 0; i < idx.size(); ++i) dt.row(idx[i]) += up.row(static_cast<Eigen::Index>(i));
  });
}

double smoothing_ce(const Matrix& logits, std::span<const int> labels, double epsilon, Matrix* grad) {
  const Eigen::Index n = logits.rows();
  const Eigen::Index k = logits.cols();
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw ShapeError("label_smoothing_ce: " + std::to_string(n) + " rows vs " + std::to_string(labels.size()) +
                     " labels");
  }
  if (n == 0) throw ShapeError("label_smoothing_ce: empty batch");
  const double q_other = epsilon / static_cast<double>(k);
  const double q_true = 1.0 - epsilon + q_other;
  double total = 0.0;
  if (grad) grad->resize(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= k) throw ShapeError("label_smoothing_ce: label " + std::to_string(y) + " out of range");
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    for (Eigen::Index c = 0; c < k; ++c) {
      const double q = c == y ? q_true : q_other;
      const double log_p = logits(i, c) - lse;
      total -= q * log_p;
      if (grad) (*grad)(i, c) = (std::exp(log_p) - q) / static_cast<double>(n);
    }
  }
  return total / static_cast<double>(n);
}

Var label_smoothing_ce(Var logits, std::span<const int> labels, double epsilon) {
  Graph& g = *logits.graph;
  Matrix grad;
  const double loss = smoothing_ce(logits.value(), labels, epsilon, g.grad_enabled() ? &grad : nullptr);
  Matrix out(1, 1);
  out(0, 0) = loss;
  return g.record(std::move(out), {logits}, [logits, grad = std::move(grad)](Graph& g, int self) {
    g.accumulate(logits.id, grad * g.grad(self)(0, 0));
  });
}

}  // namespace postcheck::nn
