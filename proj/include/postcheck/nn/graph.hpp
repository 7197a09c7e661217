#pragma once

#include <functional>
#include <random>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "postcheck/nn/parameters.hpp"

namespace postcheck::nn {

class Graph;

// Handle to a node of a Graph.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

// Per-parameter gradient sums.
class GradientBuffer {
 public:
  void add(const Parameter* p, const Matrix& g);
  void merge(const GradientBuffer& other);
  const Matrix* find(const Parameter* p) const;
  bool empty() const { return grads_.empty(); }
  void clear() { grads_.clear(); }

 private:
  std::unordered_map<const Parameter*, Matrix> grads_;
};

enum class GradMode { none, all, selected };

// Reverse-mode tape. Nodes are recorded in topological order; backward()
// walks them in reverse. Parameters enter as leaves; only trainable leaves
// (per GradMode) accumulate gradient, and subgraphs that cannot reach a
// trainable leaf record no backward work.
class Graph {
 public:
  using BackFn = std::function<void(Graph&, int self)>;

  explicit Graph(GradMode mode = GradMode::none,
                 const std::unordered_set<const Parameter*>* trainable = nullptr);
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value);
  Var param(const Parameter& p);

  const Matrix& value(int id) const;
  const Matrix& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

  Var record(Matrix value, std::initializer_list<Var> inputs, BackFn back);
  Var record(Matrix value, std::span<const Var> inputs, BackFn back);

  template <class Expr>
  void accumulate(int id, const Expr& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }
  // Lazily allocates a zero gradient of the node's shape.
  Matrix& grad_storage(int id);

  void backward(Var scalar_loss);
  void accumulate_gradients(GradientBuffer& buffer) const;
  bool grad_enabled() const { return mode_ != GradMode::none; }

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    bool needs_grad = false;
    BackFn back;
    const Parameter* param = nullptr;
  };

  GradMode mode_;
  const std::unordered_set<const Parameter*>* trainable_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

// ---- ops
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T
Var add(Var a, Var b);
Var add_row(Var a, Var row);  // broadcast a 1 x d row over a's rows
Var scale(Var a, double s);
Var relu(Var a);
Var gelu(Var a);  // tanh approximation
Var softmax_rows(Var a);
Var layer_norm_rows(Var x, Var gain, Var bias, double eps = 1e-5);
Var dropout(Var x, double rate, std::mt19937_64* rng);  // identity when rng is null or rate is 0
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var gather_rows(Var table, std::span<const int> ids);
// Mean label-smoothing cross entropy over rows; result is 1 x 1.
Var label_smoothing_ce(Var logits, std::span<const int> labels, double epsilon);

}  // namespace postcheck::nn
