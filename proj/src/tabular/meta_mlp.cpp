#include "postcheck/common/error.hpp"
#include "postcheck/tabular.hpp"

namespace postcheck::tabular {

MetaNet::MetaNet(nn::ParameterSet& params, const std::string& prefix, int in_dim, std::uint64_t seed,
                 double dropout, bool with_output)
    : fc1_(params, prefix + ".fc1", in_dim, kMetaHidden, seed),
      fc2_(params, prefix + ".fc2", kMetaHidden, kMetaFeatureDim, seed),
      dropout_(dropout),
      with_output_(with_output) {
  if (with_output_) out_ = nn::Linear(params, prefix + ".out", kMetaFeatureDim, 2, seed);
}

nn::Var MetaNet::feature(nn::Graph& g, nn::Var x, nn::ForwardContext& ctx) const {
  nn::Var h = nn::relu(fc1_.forward(g, x));
  h = nn::dropout(h, dropout_, ctx.rng);
  return nn::relu(fc2_.forward(g, h));
}

nn::Var MetaNet::output(nn::Graph& g, nn::Var feature, nn::ForwardContext& ctx) const {
  if (!with_output_) throw ModelError("meta network was built without its output layer");
  return out_.forward(g, nn::dropout(feature, dropout_, ctx.rng));
}

MetaMLP::MetaMLP(int in_dim, std::uint64_t seed, double dropout) : net_(params_, "meta", in_dim, seed, dropout) {}

nn::Var MetaMLP::logits(nn::Graph& g, std::span<const nn::Sample* const> batch, nn::ForwardContext& ctx) const {
  nn::Matrix x(static_cast<Eigen::Index>(batch.size()), in_dim());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i]->meta.size() != in_dim()) {
      throw ShapeError("meta MLP: expected " + std::to_string(in_dim()) + " features, got " +
                       std::to_string(batch[i]->meta.size()));
    }
    x.row(static_cast<Eigen::Index>(i)) = batch[i]->meta;
  }
  return net_.output(g, net_.feature(g, g.constant(std::move(x)), ctx), ctx);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> mlp_forward(const MetaMLP& m, const Eigen::MatrixXd& X) {
  if (X.cols() != m.in_dim()) {
    throw ShapeError("meta MLP: expected " + std::to_string(m.in_dim()) + " columns, got " +
                     std::to_string(X.cols()));
  }
  nn::Graph g(nn::GradMode::none);
  nn::ForwardContext ctx;
  const nn::Var f = m.net().feature(g, g.constant(X), ctx);
  const nn::Var l = m.net().output(g, f, ctx);
  return {f.value(), l.value()};
}

std::vector<nn::Sample> meta_samples(const Eigen::MatrixXd& X, std::span<const int> y,
                                     std::span<const std::string> ids) {
  if (!y.empty() && static_cast<Eigen::Index>(y.size()) != X.rows()) throw ShapeError("labels must match rows");
  std::vector<nn::Sample> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    auto& s = out[static_cast<std::size_t>(i)];
    s.id = ids.empty() ? "row" + std::to_string(i) : ids[static_cast<std::size_t>(i)];
    s.meta = X.row(i);
    s.label = y.empty() ? 0 : y[static_cast<std::size_t>(i)];
  }
  return out;
}

training::OptimizerConfig meta_mlp_optimizer(std::uint64_t seed, int epochs, double lr, int batch_size) {
  training::OptimizerConfig cfg;
  cfg.base_lr = lr;
  cfg.max_lr = lr;
  cfg.epochs = epochs;
  cfg.batch_size = batch_size;
  cfg.seed = seed;
  return cfg;
}

training::TrainHistory train_meta_mlp(MetaMLP& model, const Eigen::MatrixXd& X, std::span<const int> y,
                                      const training::OptimizerConfig& cfg, const Eigen::MatrixXd* X_val,
                                      std::span<const int> y_val, ExecPolicy policy) {
  const auto train = meta_samples(X, y);
  std::vector<nn::Sample> val;
  if (X_val) val = meta_samples(*X_val, y_val);
  training::TrainOptions opt;
  opt.policy = policy;
  return training::train(model, {train, val}, cfg, training::SmoothingLossConfig{},
                         training::UnfreezeSchedule{1, 1, false}, training::DiscriminativeLRMap{}, opt);
}

}  // namespace postcheck::tabular
