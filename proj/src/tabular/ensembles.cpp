#include <cmath>
#include <algorithm>
#include <numeric>
#include <random>

#include "internal.hpp"
#include "postcheck/common/error.hpp"
#include "postcheck/common/seed.hpp"

namespace postcheck::tabular::detail {

// Discrete two-class AdaBoost over depth-1 trees.
AdaBoostFit fit_adaboost(const Eigen::MatrixXd& X, std::span<const int> y, int estimators, double learning_rate,
                         std::uint64_t seed) {
  check_xy(X, y, "adaboost");
  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<double> target(y.begin(), y.end());
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  TreeOptions opt;
  opt.max_depth = 1;

  AdaBoostFit fit;
  for (int m = 0; m < estimators; ++m) {
    Tree stump = build_tree(X, target, w, rows, opt, mix_seed(seed, static_cast<std::uint64_t>(m)));
    std::vector<char> wrong(n);
    double err = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int h = stump.predict(X.row(static_cast<Eigen::Index>(i))) >= 0.5 ? 1 : 0;
      wrong[i] = h != y[i];
      total += w[i];
      if (wrong[i]) err += w[i];
    }
    err /= total;
    if (err <= 0.0) {
      fit.stumps.push_back(std::move(stump));
      fit.alphas.push_back(1.0);
      break;
    }
    if (err >= 0.5) {
      if (fit.stumps.empty()) {
        fit.stumps.push_back(std::move(stump));
        fit.alphas.push_back(1.0);
      }
      break;
    }
    const double alpha = learning_rate * std::log((1.0 - err) / err);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (wrong[i]) w[i] *= std::exp(alpha);
      sum += w[i];
    }
    for (auto& v : w) v /= sum;
    fit.stumps.push_back(std::move(stump));
    fit.alphas.push_back(alpha);
  }
  return fit;
}

// Weighted vote rescaled from [-1, 1] to [0, 1].
Eigen::VectorXd adaboost_predict(const AdaBoostFit& fit, const Eigen::MatrixXd& X) {
  const double total = std::accumulate(fit.alphas.begin(), fit.alphas.end(), 0.0);
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double F = 0.0;
    for (std::size_t m = 0; m < fit.stumps.size(); ++m) {
      F += fit.alphas[m] * (fit.stumps[m].predict(X.row(i)) >= 0.5 ? 1.0 : -1.0);
    }
    out(i) = 0.5 * (1.0 + F / total);
  }
  return out;
}

// Log-loss gradient boosting: least-squares trees on the residual, Newton leaf values.
BoostingFit fit_gradient_boosting(const Eigen::MatrixXd& X, std::span<const int> y, int estimators, int max_depth,
                                  double learning_rate, double subsample, std::uint64_t seed) {
  check_xy(X, y, "gradient_boosting");
  const auto n = static_cast<std::size_t>(X.rows());
  const double pos = std::accumulate(y.begin(), y.end(), 0.0);
  if (pos == 0.0 || pos == static_cast<double>(n)) throw ModelError("gradient_boosting: both classes are required");
  BoostingFit fit;
  fit.learning_rate = learning_rate;
  fit.init = std::log(pos / (static_cast<double>(n) - pos));

  std::vector<double> F(n, fit.init), residual(n), hess(n);
  const std::vector<double> weight(n, 1.0);
  TreeOptions opt;
  opt.max_depth = max_depth;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});

  for (int m = 0; m < estimators; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = 1.0 / (1.0 + std::exp(-F[i]));
      residual[i] = y[i] - p;
      hess[i] = p * (1.0 - p);
    }
    std::vector<std::size_t> rows = all;
    if (subsample < 1.0) {
      std::shuffle(rows.begin(), rows.end(), rng);
      rows.resize(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(subsample * static_cast<double>(n)))));
      std::sort(rows.begin(), rows.end());
    }
    Tree tree = build_tree(X, residual, weight, rows, opt, mix_seed(seed, static_cast<std::uint64_t>(m)));
    std::vector<double> num(tree.nodes.size(), 0.0), den(tree.nodes.size(), 0.0);
    for (auto i : rows) {
      const auto leaf = static_cast<std::size_t>(tree.leaf_of(X.row(static_cast<Eigen::Index>(i))));
      num[leaf] += residual[i];
      den[leaf] += hess[i];
    }
    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
      if (tree.nodes[k].feature < 0) tree.nodes[k].value = den[k] > 1e-150 ? num[k] / den[k] : 0.0;
    }
    for (std::size_t i = 0; i < n; ++i) F[i] += learning_rate * tree.predict(X.row(static_cast<Eigen::Index>(i)));
    fit.trees.push_back(std::move(tree));
  }
  return fit;
}

Eigen::VectorXd boosting_predict(const BoostingFit& fit, const Eigen::MatrixXd& X) {
  Eigen::VectorXd F = Eigen::VectorXd::Constant(X.rows(), fit.init);
  for (const auto& t : fit.trees) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) F(i) += fit.learning_rate * t.predict(X.row(i));
  }
  return sigmoid(F);
}

}  // namespace postcheck::tabular::detail
