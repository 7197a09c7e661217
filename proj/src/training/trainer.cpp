#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "postcheck/common/error.hpp"
#include "postcheck/common/seed.hpp"
#include "postcheck/evaluation.hpp"
#include "postcheck/training.hpp"

namespace postcheck::training {
namespace {

constexpr std::ptrdiff_t kGradientChunks = 4;

bool has_both_classes(std::span<const nn::Sample> samples) {
  bool pos = false, neg = false;
  for (const auto& s : samples) (s.label == 1 ? pos : neg) = true;
  return pos && neg;
}

}  // namespace

nlohmann::json EpochRecord::to_json() const {
  nlohmann::json j = {{"epoch", epoch}, {"step", step},         {"lr", lr},
                      {"loss", loss},   {"val_auc", nullptr}, {"trainable_groups", trainable_groups}};
  if (val_auc) j["val_auc"] = *val_auc;
  return j;
}

std::string TrainHistory::to_json_lines() const {
  std::ostringstream os;
  for (const auto& e : epochs) os << e.to_json().dump() << '\n';
  return os.str();
}

std::unordered_set<const nn::Parameter*> trainable_parameters(const nn::Classifier& model,
                                                              const std::set<int>& groups) {
  std::unordered_set<const nn::Parameter*> out;
  for (const nn::Parameter* p : model.parameters().all()) {
    if (groups.count(model.group_depth(p->name))) out.insert(p);
  }
  return out;
}

BatchResult batch_gradients(const nn::Classifier& model, std::span<const nn::Sample* const> batch,
                            const std::unordered_set<const nn::Parameter*>& trainable,
                            const SmoothingLossConfig& loss_cfg, std::uint64_t dropout_seed, ExecPolicy policy) {
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  if (n == 0) throw TrainingError("empty batch");
  const std::ptrdiff_t chunks = std::min(kGradientChunks, n);
  std::vector<nn::GradientBuffer> partial(static_cast<std::size_t>(chunks));
  std::vector<double> losses(static_cast<std::size_t>(chunks), 0.0);

  parallel_for(policy, chunks, [&](std::ptrdiff_t c) {
    const std::ptrdiff_t lo = c * n / chunks;
    const std::ptrdiff_t hi = (c + 1) * n / chunks;
    const auto part = batch.subspan(static_cast<std::size_t>(lo), static_cast<std::size_t>(hi - lo));
    std::vector<int> labels;
    for (const auto* s : part) labels.push_back(s->label);

    nn::Graph g(nn::GradMode::selected, &trainable);
    std::mt19937_64 rng(mix_seed(dropout_seed, static_cast<std::uint64_t>(c)));
    nn::ForwardContext ctx{&rng};
    const nn::Var logits = model.logits(g, part, ctx);
    // Chunk mean scaled by its share of the batch gives the batch mean.
    const nn::Var loss =
        nn::scale(nn::label_smoothing_ce(logits, labels, loss_cfg.epsilon),
                  static_cast<double>(hi - lo) / static_cast<double>(n));
    losses[static_cast<std::size_t>(c)] = loss.value()(0, 0);
    g.backward(loss);
    g.accumulate_gradients(partial[static_cast<std::size_t>(c)]);
  });

  BatchResult out;
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    out.loss += losses[static_cast<std::size_t>(c)];
    out.grads.merge(partial[static_cast<std::size_t>(c)]);
  }
  return out;
}

TrainHistory train(nn::Classifier& model, TrainData data, const OptimizerConfig& cfg,
                   const SmoothingLossConfig& loss_cfg, const UnfreezeSchedule& schedule,
                   const DiscriminativeLRMap& lr_map, const TrainOptions& options) {
  if (!(loss_cfg.epsilon >= 0.0 && loss_cfg.epsilon < 1.0)) {
    throw ConfigError("label smoothing epsilon must lie in [0, 1)");
  }
  if (data.train.empty()) throw TrainingError("no training samples");
  const auto n = static_cast<long>(data.train.size());
  const long batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const long total_steps = batches_per_epoch * cfg.epochs;

  AdamW optimizer(build_param_groups(model, cfg, lr_map), cfg);
  const bool validate = !data.validation.empty() && has_both_classes(data.validation);

  TrainHistory history;
  std::vector<nn::Matrix> best;
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  long step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::set<int> groups = schedule.trainable_groups(epoch);
    const auto trainable = trainable_parameters(model, groups);
    std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    double lr = 0.0;
    for (long b = 0; b < batches_per_epoch; ++b) {
      const long lo = b * cfg.batch_size;
      const long hi = std::min(n, lo + cfg.batch_size);
      std::vector<const nn::Sample*> batch;
      for (long i = lo; i < hi; ++i) batch.push_back(&data.train[order[static_cast<std::size_t>(i)]]);

      lr = cfg.schedule == LrSchedule::warmup_linear ? lr_at(step, total_steps, cfg) : cfg.base_lr;
      BatchResult r = batch_gradients(model, batch, trainable, loss_cfg,
                                      mix_seed(cfg.seed ^ 0x5eedULL, static_cast<std::uint64_t>(step)),
                                      options.policy);
      if (!std::isfinite(r.loss)) {
        std::ostringstream os;
        os << "non-finite loss at step " << step << " (lr " << lr << "), batch ids:";
        for (const auto* s : batch) os << ' ' << s->id;
        throw TrainingError(os.str());
      }
      optimizer.step(r.grads, lr, trainable);
      loss_sum += r.loss * static_cast<double>(hi - lo);
      ++step;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.step = step;
    rec.lr = lr;
    rec.loss = loss_sum / static_cast<double>(n);
    rec.trainable_groups = static_cast<int>(groups.size());
    if (validate) {
      const Eigen::VectorXd p = nn::predict_proba(model, data.validation, options.policy);
      std::vector<int> y;
      for (const auto& s : data.validation) y.push_back(s.label);
      rec.val_auc = evaluation::roc_auc(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), y);
      if (!history.best_val_auc || *rec.val_auc > *history.best_val_auc) {
        history.best_val_auc = rec.val_auc;
        history.best_epoch = epoch;
        if (options.restore_best) best = model.parameters().snapshot();
      }
    }
    if (options.on_epoch) options.on_epoch(rec);
    history.epochs.push_back(rec);
  }
  if (!validate) history.best_epoch = cfg.epochs - 1;
  if (options.restore_best && !best.empty()) model.parameters().restore(best);
  return history;
}

}  // namespace postcheck::training
