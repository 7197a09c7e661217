#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "postcheck/common/error.hpp"
#include "postcheck/common/seed.hpp"
#include "postcheck/tabular.hpp"

namespace postcheck::tabular {
namespace {

constexpr double kMinGain = 1e-12;

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = kMinGain;
};

class Builder {
 public:
  Builder(const Eigen::MatrixXd& X, std::span<const double> target, std::span<const double> weight,
          const TreeOptions& opt, std::uint64_t seed)
      : X_(X), t_(target), w_(weight), opt_(opt), rng_(seed) {}

  Tree build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t> rows, int depth) {
    double W = 0.0, S = 0.0;
    for (auto r : rows) {
      W += w_[r];
      S += w_[r] * t_[r];
    }
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[static_cast<std::size_t>(id)].value = W > 0.0 ? S / W : 0.0;

    const bool depth_ok = opt_.max_depth <= 0 || depth < opt_.max_depth;
    if (!depth_ok || static_cast<int>(rows.size()) < opt_.min_samples_split || pure(rows)) return id;

    const Split best = find_split(rows, W, S);
    if (best.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (X_(static_cast<Eigen::Index>(r), best.feature) <= best.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int rt = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = rt;
    return id;
  }

  bool pure(const std::vector<std::size_t>& rows) const {
    const double first = t_[rows.front()];
    return std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return t_[r] == first; });
  }

  std::vector<int> candidate_features() {
    const int d = static_cast<int>(X_.cols());
    std::vector<int> f(static_cast<std::size_t>(d));
    std::iota(f.begin(), f.end(), 0);
    if (opt_.max_features > 0 && opt_.max_features < d) {
      std::shuffle(f.begin(), f.end(), rng_);
      f.resize(static_cast<std::size_t>(opt_.max_features));
      std::sort(f.begin(), f.end());
    }
    return f;
  }

  Split find_split(const std::vector<std::size_t>& rows, double W, double S) {
    const double parent = S * S / W;
    Split best;
    const auto min_leaf = static_cast<std::size_t>(std::max(1, opt_.min_samples_leaf));
    std::vector<std::size_t> sorted = rows;
    for (int f : candidate_features()) {
      auto x = [&](std::size_t r) { return X_(static_cast<Eigen::Index>(r), f); };
      if (opt_.random_thresholds) {
        double lo = x(rows.front()), hi = lo;
        for (auto r : rows) {
          lo = std::min(lo, x(r));
          hi = std::max(hi, x(r));
        }
        if (!(hi > lo)) continue;
        const double thr = std::uniform_real_distribution<double>(lo, hi)(rng_);
        double wl = 0.0, sl = 0.0;
        std::size_t nl = 0;
        for (auto r : rows) {
          if (x(r) <= thr) {
            wl += w_[r];
            sl += w_[r] * t_[r];
            ++nl;
          }
        }
        if (nl < min_leaf || rows.size() - nl < min_leaf) continue;
        const double wr = W - wl, sr = S - sl;
        if (wl <= 0.0 || wr <= 0.0) continue;
        const double gain = sl * sl / wl + sr * sr / wr - parent;
        if (gain > best.gain) best = {f, thr, gain};
        continue;
      }
      std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) { return x(a) < x(b); });
      double wl = 0.0, sl = 0.0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const auto r = sorted[i];
        wl += w_[r];
        sl += w_[r] * t_[r];
        const double xi = x(r), xn = x(sorted[i + 1]);
        if (!(xi < xn)) continue;
        const std::size_t nl = i + 1;
        if (nl < min_leaf || sorted.size() - nl < min_leaf) continue;
        const double wr = W - wl, sr = S - sl;
        if (wl <= 0.0 || wr <= 0.0) continue;
        const double gain = sl * sl / wl + sr * sr / wr - parent;
        if (gain > best.gain) best = {f, 0.5 * (xi + xn), gain};
      }
    }
    return best;
  }

  const Eigen::MatrixXd& X_;
  std::span<const double> t_;
  std::span<const double> w_;
  TreeOptions opt_;
  std::mt19937_64 rng_;
  Tree tree_;
};

}  // namespace

int Tree::leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = x(n.feature) <= n.threshold ? n.left : n.right;
  }
  return i;
}

double Tree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return nodes[static_cast<std::size_t>(leaf_of(x))].value;
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int out = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.feature < 0) continue;
    d[static_cast<std::size_t>(n.left)] = d[i] + 1;
    d[static_cast<std::size_t>(n.right)] = d[i] + 1;
    out = std::max(out, d[i] + 1);
  }
  return out;
}

nlohmann::json Tree::to_json() const {
  nlohmann::json f = nlohmann::json::array(), t = nlohmann::json::array(), l = nlohmann::json::array(),
                 r = nlohmann::json::array(), v = nlohmann::json::array();
  for (const auto& n : nodes) {
    f.push_back(n.feature);
    t.push_back(n.threshold);
    l.push_back(n.left);
    r.push_back(n.right);
    v.push_back(n.value);
  }
  return {{"feature", f}, {"threshold", t}, {"left", l}, {"right", r}, {"value", v}};
}

Tree Tree::from_json(const nlohmann::json& j) {
  Tree tree;
  const auto& f = j.at("feature");
  tree.nodes.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto& n = tree.nodes[i];
    n.feature = f[i].get<int>();
    n.threshold = j.at("threshold")[i].get<double>();
    n.left = j.at("left")[i].get<int>();
    n.right = j.at("right")[i].get<int>();
    n.value = j.at("value")[i].get<double>();
  }
  if (tree.nodes.empty()) throw ModelError("tree payload has no nodes");
  return tree;
}

Tree build_tree(const Eigen::MatrixXd& X, std::span<const double> target, std::span<const double> weight,
                std::span<const std::size_t> rows, const TreeOptions& opt, std::uint64_t seed) {
  if (rows.empty()) throw ModelError("cannot build a tree on zero rows");
  if (target.size() != static_cast<std::size_t>(X.rows()) || weight.size() != target.size()) {
    throw ShapeError("tree targets/weights must match the row count");
  }
  return Builder(X, target, weight, opt, seed).build({rows.begin(), rows.end()});
}

std::vector<Tree> fit_forest(const Eigen::MatrixXd& X, std::span<const int> y, const ForestOptions& opt,
                             std::uint64_t seed, ExecPolicy policy) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (y.size() != n) throw ShapeError("forest labels must match the row count");
  std::vector<double> target(y.begin(), y.end());
  std::vector<double> weight(n, 1.0);
  TreeOptions topt;
  topt.random_thresholds = opt.random_thresholds;
  topt.max_features = opt.max_features > 0
                          ? opt.max_features
                          : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(X.cols())))));
  std::vector<Tree> trees(static_cast<std::size_t>(opt.estimators));
  parallel_for(policy, opt.estimators, [&](std::ptrdiff_t t) {
    const std::uint64_t tseed = mix_seed(seed, static_cast<std::uint64_t>(t));
    std::vector<std::size_t> rows(n);
    if (opt.bootstrap) {
      std::mt19937_64 rng(mix_seed(tseed, std::uint64_t{0xb007}));
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    trees[static_cast<std::size_t>(t)] = build_tree(X, target, weight, rows, topt, tseed);
  });
  return trees;
}

Eigen::VectorXd forest_scores(std::span<const Tree> trees, const Eigen::MatrixXd& X, ExecPolicy policy) {
  if (trees.empty()) throw ModelError("forest has no trees");
  Eigen::MatrixXd per_tree(X.rows(), static_cast<Eigen::Index>(trees.size()));
  parallel_for(policy, static_cast<std::ptrdiff_t>(trees.size()), [&](std::ptrdiff_t t) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) per_tree(i, t) = trees[static_cast<std::size_t>(t)].predict(X.row(i));
  });
  // Summed in tree order so the result does not depend on scheduling.
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  for (Eigen::Index t = 0; t < per_tree.cols(); ++t) out += per_tree.col(t);
  return out / static_cast<double>(trees.size());
}

}  // namespace postcheck::tabular
