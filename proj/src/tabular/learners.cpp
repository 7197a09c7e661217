#include <fstream>

#include "internal.hpp"
#include "postcheck/common/error.hpp"
#include "postcheck/common/json_util.hpp"
#include "postcheck/tabular_defaults.hpp"

namespace postcheck::tabular {
namespace {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}
Eigen::MatrixXd mat_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>(), cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw ModelError("matrix payload size mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

json trees_to_json(const std::vector<Tree>& trees) {
  json a = json::array();
  for (const auto& t : trees) a.push_back(t.to_json());
  return a;
}
std::vector<Tree> trees_from_json(const json& j) {
  std::vector<Tree> out;
  for (const auto& t : j) out.push_back(Tree::from_json(t));
  return out;
}

void check_cols(const Eigen::MatrixXd& X, Eigen::Index expected, const std::string& who) {
  if (X.cols() != expected) {
    throw ShapeError(who + ": expected " + std::to_string(expected) + " columns, got " + std::to_string(X.cols()));
  }
}

class LogisticModel final : public TabularModel {
 public:
  explicit LogisticModel(LogisticFit fit) : fit_(std::move(fit)) {}
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override { return logistic_predict(fit_, X); }
  std::string kind() const override { return "logistic_regression"; }
  json to_json() const override {
    return {{"kind", kind()}, {"payload", {{"weights", vec_to_json(fit_.weights)}, {"intercept", fit_.intercept}}}};
  }
  static ModelPtr load(const json& p) {
    LogisticFit f;
    f.weights = vec_from_json(p.at("weights"));
    f.intercept = p.at("intercept").get<double>();
    return std::make_unique<LogisticModel>(std::move(f));
  }

 private:
  LogisticFit fit_;
};

// sigmoid(x.w + b); used by LDA and the linear SVM.
class LinearScoreModel final : public TabularModel {
 public:
  LinearScoreModel(std::string kind, detail::LinearFit fit) : kind_(std::move(kind)), fit_(std::move(fit)) {}
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override {
    check_cols(X, fit_.w.size(), kind_);
    return detail::sigmoid((X * fit_.w).array() + fit_.b);
  }
  std::string kind() const override { return kind_; }
  json to_json() const override {
    return {{"kind", kind_}, {"payload", {{"weights", vec_to_json(fit_.w)}, {"intercept", fit_.b}}}};
  }
  static ModelPtr load(const std::string& kind, const json& p) {
    return std::make_unique<LinearScoreModel>(kind,
                                              detail::LinearFit{vec_from_json(p.at("weights")), p.at("intercept")});
  }

 private:
  std::string kind_;
  detail::LinearFit fit_;
};

class KnnModel final : public TabularModel {
 public:
  KnnModel(Eigen::MatrixXd X, std::vector<int> y, int k) : X_(std::move(X)), y_(std::move(y)), k_(k) {}
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override {
    return knn_scores(X_, y_, X, k_, default_exec_policy());
  }
  std::string kind() const override { return "knn"; }
  json to_json() const override {
    return {{"kind", kind()}, {"payload", {{"k", k_}, {"train", mat_to_json(X_)}, {"labels", y_}}}};
  }
  static ModelPtr load(const json& p) {
    return std::make_unique<KnnModel>(mat_from_json(p.at("train")), p.at("labels").get<std::vector<int>>(),
                                      p.at("k").get<int>());
  }

 private:
  Eigen::MatrixXd X_;
  std::vector<int> y_;
  int k_;
};

// A single tree or a forest; the score is the mean leaf value.
class TreeEnsembleModel final : public TabularModel {
 public:
  TreeEnsembleModel(std::string kind, std::vector<Tree> trees, Eigen::Index cols)
      : kind_(std::move(kind)), trees_(std::move(trees)), cols_(cols) {}
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override {
    check_cols(X, cols_, kind_);
    return forest_scores(trees_, X, default_exec_policy());
  }
  std::string kind() const override { return kind_; }
  json to_json() const override {
    return {{"kind", kind_}, {"payload", {{"columns", cols_}, {"trees", trees_to_json(trees_)}}}};
  }
  static ModelPtr load(const std::string& kind, const json& p) {
    return std::make_unique<TreeEnsembleModel>(kind, trees_from_json(p.at("trees")),
                                               p.at("columns").get<Eigen::Index>());
  }

 private:
  std::string kind_;
  std::vector<Tree> trees_;
  Eigen::Index cols_;
};

class NaiveBayesModel final : public TabularModel {
 public:
  explicit NaiveBayesModel(detail::NaiveBayesFit fit) : fit_(std::move(fit)) {}
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override { return detail::nb_predict(fit_, X); }
  std::string kind() const override { return "gaussian_nb"; }
  json to_json() const override {
    return {{"kind", kind()},
            {"payload",
             {{"mean", mat_to_json(fit_.mean)},
              {"var", mat_to_json(fit_.var)},
              {"log_prior", {fit_.log_prior(0), fit_.log_prior(1)}}}}};
  }
  static ModelPtr load(const json& p) {
    detail::NaiveBayesFit f;
    f.mean = mat_from_json(p.at("mean"));
    f.var = mat_from_json(p.at("var"));
    f.log_prior << p.at("log_prior")[0].get<double>(), p.at("log_prior")[1].get<double>();
    return std::make_unique<NaiveBayesModel>(std::move(f));
  }

 private:
  detail::NaiveBayesFit fit_;
};

class AdaBoostModel final : public TabularModel {
 public:
  AdaBoostModel(detail::AdaBoostFit fit, Eigen::Index cols) : fit_(std::move(fit)), cols_(cols) {}
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override {
    check_cols(X, cols_, kind());
    return detail::adaboost_predict(fit_, X);
  }
  std::string kind() const override { return "adaboost"; }
  json to_json() const override {
    return {{"kind", kind()},
            {"payload", {{"columns", cols_}, {"alphas", fit_.alphas}, {"stumps", trees_to_json(fit_.stumps)}}}};
  }
  static ModelPtr load(const json& p) {
    detail::AdaBoostFit f;
    f.alphas = p.at("alphas").get<std::vector<double>>();
    f.stumps = trees_from_json(p.at("stumps"));
    return std::make_unique<AdaBoostModel>(std::move(f), p.at("columns").get<Eigen::Index>());
  }

 private:
  detail::AdaBoostFit fit_;
  Eigen::Index cols_;
};

class BoostingModel final : public TabularModel {
 public:
  BoostingModel(detail::BoostingFit fit, Eigen::Index cols) : fit_(std::move(fit)), cols_(cols) {}
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override {
    check_cols(X, cols_, kind());
    return detail::boosting_predict(fit_, X);
  }
  std::string kind() const override { return "gradient_boosting"; }
  json to_json() const override {
    return {{"kind", kind()},
            {"payload",
             {{"columns", cols_},
              {"init", fit_.init},
              {"learning_rate", fit_.learning_rate},
              {"trees", trees_to_json(fit_.trees)}}}};
  }
  static ModelPtr load(const json& p) {
    detail::BoostingFit f;
    f.init = p.at("init");
    f.learning_rate = p.at("learning_rate");
    f.trees = trees_from_json(p.at("trees"));
    return std::make_unique<BoostingModel>(std::move(f), p.at("columns").get<Eigen::Index>());
  }

 private:
  detail::BoostingFit fit_;
  Eigen::Index cols_;
};

class MlpModel final : public TabularModel {
 public:
  MlpModel(std::unique_ptr<MetaMLP> net, double dropout) : net_(std::move(net)), dropout_(dropout) {}
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const override {
    return nn::softmax_positive(mlp_forward(*net_, X).second);
  }
  std::string kind() const override { return "mlp"; }
  json to_json() const override {
    json params = json::object();
    for (const auto* p : net_->parameters().all()) params[p->name] = mat_to_json(p->value);
    return {{"kind", kind()}, {"payload", {{"in_dim", net_->in_dim()}, {"dropout", dropout_}, {"parameters", params}}}};
  }
  static ModelPtr load(const json& p) {
    const double dropout = p.at("dropout");
    auto net = std::make_unique<MetaMLP>(p.at("in_dim").get<int>(), 0, dropout);
    const auto& params = p.at("parameters");
    for (auto* param : net->parameters().all()) {
      if (!params.contains(param->name)) throw ModelError("mlp payload lacks parameter " + param->name);
      Eigen::MatrixXd v = mat_from_json(params.at(param->name));
      if (v.rows() != param->value.rows() || v.cols() != param->value.cols()) {
        throw ModelError("mlp payload shape mismatch for " + param->name);
      }
      param->value = std::move(v);
    }
    return std::make_unique<MlpModel>(std::move(net), dropout);
  }

 private:
  std::unique_ptr<MetaMLP> net_;
  double dropout_;
};

}  // namespace

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::logistic_regression: return "logistic_regression";
    case LearnerKind::lda: return "lda";
    case LearnerKind::knn: return "knn";
    case LearnerKind::decision_tree: return "decision_tree";
    case LearnerKind::gaussian_nb: return "gaussian_nb";
    case LearnerKind::svm: return "svm";
    case LearnerKind::adaboost: return "adaboost";
    case LearnerKind::gradient_boosting: return "gradient_boosting";
    case LearnerKind::random_forest: return "random_forest";
    case LearnerKind::extra_trees: return "extra_trees";
    case LearnerKind::mlp: return "mlp";
  }
  throw ConfigError("unknown learner kind");
}

LearnerKind parse_learner_kind(std::string_view name) {
  for (auto k : kAllLearners) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown learner kind '" + std::string(name) + "'");
}

json BaseLearnerSpec::to_json() const {
  return {{"kind", to_string(kind)}, {"hyperparameters", hyperparameters}, {"seed", seed}};
}

BaseLearnerSpec BaseLearnerSpec::from_json(const json& j) {
  StrictReader r(j, "learner spec");
  BaseLearnerSpec s;
  std::string kind;
  r.get("kind", kind);
  s.kind = parse_learner_kind(kind);
  r.get("hyperparameters", s.hyperparameters);
  r.get("seed", s.seed);
  r.finish();
  if (!s.hyperparameters.is_object()) throw ConfigError("learner hyperparameters must be an object");
  return s;
}

ModelPtr train_base(const BaseLearnerSpec& spec, const Eigen::MatrixXd& X, std::span<const int> y,
                    ExecPolicy policy) {
  namespace d = defaults;
  detail::check_xy(X, y, to_string(spec.kind).c_str());
  StrictReader hp(spec.hyperparameters, to_string(spec.kind) + " hyperparameters");
  try {
    switch (spec.kind) {
      case LearnerKind::logistic_regression: {
        double C = d::kLogisticC;
        int iters = d::kLogisticMaxIter;
        hp.get("C", C);
        hp.get("max_iter", iters);
        hp.finish();
        if (!(C > 0)) throw ConfigError("logistic_regression: C must be positive");
        return std::make_unique<LogisticModel>(fit_logistic(X, y, 1.0 / C, iters));
      }
      case LearnerKind::lda: {
        double ridge = d::kLdaRidge;
        hp.get("ridge", ridge);
        hp.finish();
        return std::make_unique<LinearScoreModel>("lda", detail::fit_lda(X, y, ridge));
      }
      case LearnerKind::knn: {
        int k = d::kKnnNeighbors;
        hp.get("k", k);
        hp.finish();
        if (k < 1) throw ConfigError("knn: k must be >= 1");
        return std::make_unique<KnnModel>(X, std::vector<int>(y.begin(), y.end()), k);
      }
      case LearnerKind::decision_tree: {
        TreeOptions opt;
        opt.max_depth = d::kTreeMaxDepth;
        opt.min_samples_split = d::kTreeMinSamplesSplit;
        opt.min_samples_leaf = d::kTreeMinSamplesLeaf;
        hp.get("max_depth", opt.max_depth);
        hp.get("min_samples_split", opt.min_samples_split);
        hp.get("min_samples_leaf", opt.min_samples_leaf);
        hp.finish();
        std::vector<double> t(y.begin(), y.end()), w(y.size(), 1.0);
        std::vector<std::size_t> rows(y.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        std::vector<Tree> trees;
        trees.push_back(build_tree(X, t, w, rows, opt, spec.seed));
        return std::make_unique<TreeEnsembleModel>("decision_tree", std::move(trees), X.cols());
      }
      case LearnerKind::gaussian_nb: {
        double smoothing = d::kNbVarSmoothing;
        hp.get("var_smoothing", smoothing);
        hp.finish();
        return std::make_unique<NaiveBayesModel>(detail::fit_gaussian_nb(X, y, smoothing));
      }
      case LearnerKind::svm: {
        double C = d::kSvmC, tol = d::kSvmTol;
        int iters = d::kSvmMaxIter;
        hp.get("C", C);
        hp.get("max_iter", iters);
        hp.get("tol", tol);
        hp.finish();
        return std::make_unique<LinearScoreModel>("svm", detail::fit_linear_svm(X, y, C, iters, tol, spec.seed));
      }
      case LearnerKind::adaboost: {
        int n = d::kAdaBoostEstimators;
        double lr = d::kAdaBoostLearningRate;
        hp.get("n_estimators", n);
        hp.get("learning_rate", lr);
        hp.finish();
        return std::make_unique<AdaBoostModel>(detail::fit_adaboost(X, y, n, lr, spec.seed), X.cols());
      }
      case LearnerKind::gradient_boosting: {
        int n = d::kGbEstimators, depth = d::kGbMaxDepth;
        double lr = d::kGbLearningRate, sub = d::kGbSubsample;
        hp.get("n_estimators", n);
        hp.get("max_depth", depth);
        hp.get("learning_rate", lr);
        hp.get("subsample", sub);
        hp.finish();
        return std::make_unique<BoostingModel>(detail::fit_gradient_boosting(X, y, n, depth, lr, sub, spec.seed),
                                               X.cols());
      }
      case LearnerKind::random_forest:
      case LearnerKind::extra_trees: {
        ForestOptions opt;
        opt.estimators = d::kForestEstimators;
        opt.bootstrap = spec.kind == LearnerKind::random_forest;
        opt.random_thresholds = spec.kind == LearnerKind::extra_trees;
        hp.get("n_estimators", opt.estimators);
        hp.get("max_features", opt.max_features);
        hp.get("bootstrap", opt.bootstrap);
        hp.finish();
        if (opt.estimators < 1) throw ConfigError("forest: n_estimators must be >= 1");
        return std::make_unique<TreeEnsembleModel>(to_string(spec.kind), fit_forest(X, y, opt, spec.seed, policy),
                                                   X.cols());
      }
      case LearnerKind::mlp: {
        int epochs = d::kMlpEpochs, batch = d::kMlpBatch;
        double lr = d::kMlpLearningRate, dropout = d::kMlpDropout;
        hp.get("epochs", epochs);
        hp.get("batch_size", batch);
        hp.get("learning_rate", lr);
        hp.get("dropout", dropout);
        hp.finish();
        auto net = std::make_unique<MetaMLP>(static_cast<int>(X.cols()), spec.seed, dropout);
        train_meta_mlp(*net, X, y, meta_mlp_optimizer(spec.seed, epochs, lr, batch), nullptr, {}, policy);
        return std::make_unique<MlpModel>(std::move(net), dropout);
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const ModelError& e) {
    throw ModelError(std::string(e.what()) + " [spec " + spec.to_json().dump() + "]");
  }
  throw ConfigError("unhandled learner kind");
}

ModelPtr load_model(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const json& p = j.at("payload");
  if (kind == "logistic_regression") return LogisticModel::load(p);
  if (kind == "lda" || kind == "svm") return LinearScoreModel::load(kind, p);
  if (kind == "knn") return KnnModel::load(p);
  if (kind == "decision_tree" || kind == "random_forest" || kind == "extra_trees") {
    return TreeEnsembleModel::load(kind, p);
  }
  if (kind == "gaussian_nb") return NaiveBayesModel::load(p);
  if (kind == "adaboost") return AdaBoostModel::load(p);
  if (kind == "gradient_boosting") return BoostingModel::load(p);
  if (kind == "mlp") return MlpModel::load(p);
  if (kind == "stacking" || kind == "blending") {
    std::vector<ModelPtr> bases;
    for (const auto& b : p.at("bases")) bases.push_back(load_model(b));
    LogisticFit meta;
    meta.weights = vec_from_json(p.at("meta").at("weights"));
    meta.intercept = p.at("meta").at("intercept");
    return std::make_unique<EnsembleModel>(kind == "stacking" ? EnsembleMode::stacking : EnsembleMode::blending,
                                           std::move(bases), std::move(meta));
  }
  throw ModelError("unknown model kind '" + kind + "'");
}

void save_model(const std::filesystem::path& dir, const TabularModel& model, const json& manifest) {
  write_json_file(dir / "model.json", model.to_json());
  write_json_file(dir / "manifest.json", manifest);
}

ModelPtr load_model_dir(const std::filesystem::path& dir) { return load_model(read_json_file(dir / "model.json")); }

}  // namespace postcheck::tabular
