#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "internal.hpp"
#include "postcheck/common/error.hpp"

namespace postcheck::tabular {

namespace detail {

void check_xy(const Eigen::MatrixXd& X, std::span<const int> y, const char* who) {
  if (X.rows() == 0) throw ModelError(std::string(who) + ": no training rows");
  if (static_cast<Eigen::Index>(y.size()) != X.rows()) {
    throw ShapeError(std::string(who) + ": " + std::to_string(y.size()) + " labels for " +
                     std::to_string(X.rows()) + " rows");
  }
  for (int v : y) {
    if (v != 0 && v != 1) throw ModelError(std::string(who) + ": labels must be 0 or 1");
  }
  if (!X.allFinite()) throw ModelError(std::string(who) + ": non-finite feature values");
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

LinearFit fit_lda(const Eigen::MatrixXd& X, std::span<const int> y, double ridge) {
  check_xy(X, y, "lda");
  const Eigen::Index d = X.cols();
  Eigen::RowVectorXd mu[2] = {Eigen::RowVectorXd::Zero(d), Eigen::RowVectorXd::Zero(d)};
  double n[2] = {0, 0};
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    mu[y[static_cast<std::size_t>(i)]] += X.row(i);
    n[y[static_cast<std::size_t>(i)]] += 1;
  }
  if (n[0] == 0 || n[1] == 0) throw ModelError("lda: both classes are required");
  mu[0] /= n[0];
  mu[1] /= n[1];
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Eigen::RowVectorXd c = X.row(i) - mu[y[static_cast<std::size_t>(i)]];
    S.noalias() += c.transpose() * c;
  }
  S /= std::max(1.0, static_cast<double>(X.rows()) - 2.0);
  S.diagonal().array() += ridge * (1.0 + S.diagonal().mean());
  LinearFit fit;
  fit.w = S.ldlt().solve((mu[1] - mu[0]).transpose());
  fit.b = -0.5 * (mu[0] + mu[1]).dot(fit.w.transpose()) + std::log(n[1] / n[0]);
  if (!fit.w.allFinite()) throw ModelError("lda: singular covariance");
  return fit;
}

// Dual coordinate descent for the L1-loss linear SVM; the bias is an extra
// constant feature.
LinearFit fit_linear_svm(const Eigen::MatrixXd& X, std::span<const int> y, double C, int max_iter, double tol,
                         std::uint64_t seed) {
  check_xy(X, y, "svm");
  const Eigen::Index n = X.rows(), d = X.cols();
  Eigen::MatrixXd Xa(n, d + 1);
  Xa << X, Eigen::VectorXd::Ones(n);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd qii = Xa.rowwise().squaredNorm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  for (int it = 0; it < max_iter; ++it) {
    std::shuffle(order.begin(), order.end(), rng);
    double pg_max = -INFINITY, pg_min = INFINITY;
    for (Eigen::Index i : order) {
      const double yi = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
      const double G = yi * Xa.row(i).dot(w) - 1.0;
      double pg = G;
      if (alpha(i) == 0.0) pg = std::min(G, 0.0);
      else if (alpha(i) == C) pg = std::max(G, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) > 1e-12 && qii(i) > 0.0) {
        const double old = alpha(i);
        alpha(i) = std::clamp(old - G / qii(i), 0.0, C);
        w += (alpha(i) - old) * yi * Xa.row(i).transpose();
      }
    }
    if (pg_max - pg_min < tol) break;
  }
  return {w.head(d), w(d)};
}

NaiveBayesFit fit_gaussian_nb(const Eigen::MatrixXd& X, std::span<const int> y, double var_smoothing) {
  check_xy(X, y, "gaussian_nb");
  const Eigen::Index d = X.cols();
  NaiveBayesFit fit;
  fit.mean = Eigen::MatrixXd::Zero(2, d);
  fit.var = Eigen::MatrixXd::Zero(2, d);
  double n[2] = {0, 0};
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    fit.mean.row(y[static_cast<std::size_t>(i)]) += X.row(i);
    n[y[static_cast<std::size_t>(i)]] += 1;
  }
  if (n[0] == 0 || n[1] == 0) throw ModelError("gaussian_nb: both classes are required");
  for (int c = 0; c < 2; ++c) fit.mean.row(c) /= n[c];
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const int c = y[static_cast<std::size_t>(i)];
    fit.var.row(c) += (X.row(i) - fit.mean.row(c)).array().square().matrix();
  }
  for (int c = 0; c < 2; ++c) fit.var.row(c) /= n[c];
  const Eigen::RowVectorXd mean_all = X.colwise().mean();
  const double max_var = ((X.rowwise() - mean_all).array().square().colwise().sum() / static_cast<double>(X.rows()))
                             .maxCoeff();
  fit.var.array() += std::max(var_smoothing * max_var, 1e-300);
  const double total = n[0] + n[1];
  fit.log_prior << std::log(n[0] / total), std::log(n[1] / total);
  return fit;
}

Eigen::VectorXd nb_predict(const NaiveBayesFit& fit, const Eigen::MatrixXd& X) {
  if (X.cols() != fit.mean.cols()) throw ShapeError("gaussian_nb: column count mismatch");
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double ll[2];
    for (int c = 0; c < 2; ++c) {
      const auto diff2 = (X.row(i) - fit.mean.row(c)).array().square();
      ll[c] = fit.log_prior(c) - 0.5 * (fit.var.row(c).array() * 2.0 * M_PI).log().sum() -
              0.5 * (diff2 / fit.var.row(c).array()).sum();
    }
    out(i) = 1.0 / (1.0 + std::exp(ll[0] - ll[1]));
  }
  return out;
}

}  // namespace detail

LogisticFit fit_logistic(const Eigen::MatrixXd& X, std::span<const int> y, double l2, int max_iter) {
  detail::check_xy(X, y, "logistic_regression");
  const Eigen::Index n = X.rows(), d = X.cols();
  Eigen::MatrixXd Xa(n, d + 1);
  Xa << X, Eigen::VectorXd::Ones(n);
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)];
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d + 1, l2);
  penalty(d) = 0.0;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  LogisticFit fit;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd p = detail::sigmoid(eta);
    const Eigen::VectorXd grad = Xa.transpose() * (p - yv) + penalty.cwiseProduct(theta);
    const Eigen::VectorXd h = (p.array() * (1.0 - p.array())).matrix();
    Eigen::MatrixXd H = Xa.transpose() * h.asDiagonal() * Xa;
    H.diagonal() += penalty;
    // Minimum-norm step keeps the solution in the row space of the data.
    const Eigen::VectorXd step = l2 > 0.0 ? Eigen::VectorXd(H.ldlt().solve(grad))
                                          : Eigen::VectorXd(H.completeOrthogonalDecomposition().solve(grad));
    if (!step.allFinite()) break;
    const Eigen::VectorXd next = theta - step;
    const Eigen::VectorXd next_eta = Xa * next;
    if (!next_eta.allFinite()) break;
    const double change = (next_eta - eta).cwiseAbs().maxCoeff();
    theta = next;
    eta = next_eta;
    fit.iterations = it + 1;
    if (change < 1e-10) break;
  }
  fit.weights = theta.head(d);
  fit.intercept = theta(d);
  return fit;
}

Eigen::VectorXd logistic_predict(const LogisticFit& fit, const Eigen::MatrixXd& X) {
  if (X.cols() != fit.weights.size()) {
    throw ShapeError("logistic_regression: expected " + std::to_string(fit.weights.size()) + " columns, got " +
                     std::to_string(X.cols()));
  }
  return detail::sigmoid((X * fit.weights).array() + fit.intercept);
}

}  // namespace postcheck::tabular
