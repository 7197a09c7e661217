#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "postcheck/tabular.hpp"

namespace postcheck::tabular::detail {

void check_xy(const Eigen::MatrixXd& X, std::span<const int> y, const char* who);
Eigen::VectorXd sigmoid(const Eigen::VectorXd& z);

struct LinearFit {
  Eigen::VectorXd w;
  double b = 0.0;
};

LinearFit fit_lda(const Eigen::MatrixXd& X, std::span<const int> y, double ridge);
LinearFit fit_linear_svm(const Eigen::MatrixXd& X, std::span<const int> y, double C, int max_iter, double tol,
                         std::uint64_t seed);

struct NaiveBayesFit {
  Eigen::MatrixXd mean;  // 2 x d
  Eigen::MatrixXd var;   // 2 x d
  Eigen::Vector2d log_prior;
};

NaiveBayesFit fit_gaussian_nb(const Eigen::MatrixXd& X, std::span<const int> y, double var_smoothing);
Eigen::VectorXd nb_predict(const NaiveBayesFit& fit, const Eigen::MatrixXd& X);

struct AdaBoostFit {
  std::vector<Tree> stumps;
  std::vector<double> alphas;
};

AdaBoostFit fit_adaboost(const Eigen::MatrixXd& X, std::span<const int> y, int estimators, double learning_rate,
                         std::uint64_t seed);
Eigen::VectorXd adaboost_predict(const AdaBoostFit& fit, const Eigen::MatrixXd& X);

struct BoostingFit {
  double init = 0.0;
  double learning_rate = 0.1;
  std::vector<Tree> trees;
};

BoostingFit fit_gradient_boosting(const Eigen::MatrixXd& X, std::span<const int> y, int estimators, int max_depth,
                                  double learning_rate, double subsample, std::uint64_t seed);
Eigen::VectorXd boosting_predict(const BoostingFit& fit, const Eigen::MatrixXd& X);

}  // namespace postcheck::tabular::detail
