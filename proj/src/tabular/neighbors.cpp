#include <algorithm>
#include <numeric>

#include "postcheck/common/error.hpp"
#include "postcheck/tabular.hpp"

namespace postcheck::tabular {

Eigen::VectorXd knn_scores(const Eigen::MatrixXd& train, std::span<const int> labels, const Eigen::MatrixXd& query,
                           int k, ExecPolicy policy) {
  if (train.rows() == 0) throw ModelError("knn has no training rows");
  if (static_cast<Eigen::Index>(labels.size()) != train.rows()) throw ShapeError("knn labels must match rows");
  if (query.cols() != train.cols()) {
    throw ShapeError("knn: expected " + std::to_string(train.cols()) + " columns, got " +
                     std::to_string(query.cols()));
  }
  const auto n = static_cast<std::size_t>(train.rows());
  const auto kk = static_cast<std::size_t>(std::clamp<Eigen::Index>(k, 1, train.rows()));
  Eigen::VectorXd out(query.rows());
  parallel_for(policy, query.rows(), [&](std::ptrdiff_t q) {
    std::vector<std::pair<double, std::size_t>> d(n);
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = {(train.row(static_cast<Eigen::Index>(i)) - query.row(q)).squaredNorm(), i};
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
    int pos = 0;
    for (std::size_t j = 0; j < kk; ++j) pos += labels[d[j].second];
    out(q) = static_cast<double>(pos) / static_cast<double>(kk);
  });
  return out;
}

}  // namespace postcheck::tabular
