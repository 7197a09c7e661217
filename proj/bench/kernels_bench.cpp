// Serial reference vs OpenMP for each data-parallel kernel. The policy is the
// benchmark argument: 0 = serial, 1 = openmp.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "postcheck/nn/layers.hpp"
#include "postcheck/tabular.hpp"
#include "postcheck/textenc.hpp"
#include "postcheck/training.hpp"

namespace {

using namespace postcheck;

ExecPolicy policy_of(const benchmark::State& state) {
  return state.range(0) == 0 ? ExecPolicy::serial : ExecPolicy::openmp;
}

struct Blobs {
  Eigen::MatrixXd X;
  std::vector<int> y;
};

Blobs blobs(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Blobs b{Eigen::MatrixXd(n, d), std::vector<int>(static_cast<std::size_t>(n))};
  for (int i = 0; i < n; ++i) {
    b.y[static_cast<std::size_t>(i)] = i % 2;
    for (int j = 0; j < d; ++j) b.X(i, j) = normal(rng) + (j == 0 ? 2.0 * (i % 2) : 0.0);
  }
  return b;
}

std::vector<nn::Sample> texts(int n) {
  const auto cfg = textenc::BackboneConfig::toy();
  const auto tok = textenc::make_tokenizer(cfg.tokenizer);
  const char* words[] = {"tin", "nong", "canh", "bao", "lua", "dao", "mien", "phi", "so", "y", "te", "dich"};
  std::mt19937_64 rng(3);
  std::vector<nn::Sample> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::string t;
    for (int w = 0; w < 20; ++w) t += std::string(words[rng() % 12]) + " ";
    out[static_cast<std::size_t>(i)].tokens = tok->encode(t, cfg.max_sequence_length);
    out[static_cast<std::size_t>(i)].label = i % 2;
  }
  return out;
}

void BM_KnnScores(benchmark::State& state) {
  const auto train = blobs(2000, 14, 1);
  const auto query = blobs(400, 14, 2);
  for (auto _ : state) benchmark::DoNotOptimize(tabular::knn_scores(train.X, train.y, query.X, 15, policy_of(state)));
}
BENCHMARK(BM_KnnScores)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FitForest(benchmark::State& state) {
  const auto b = blobs(1000, 14, 3);
  tabular::ForestOptions opt;
  opt.estimators = 50;
  for (auto _ : state) benchmark::DoNotOptimize(tabular::fit_forest(b.X, b.y, opt, 4, policy_of(state)));
}
BENCHMARK(BM_FitForest)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ForestScores(benchmark::State& state) {
  const auto b = blobs(1000, 14, 5);
  tabular::ForestOptions opt;
  opt.estimators = 50;
  const auto trees = tabular::fit_forest(b.X, b.y, opt, 6, ExecPolicy::serial);
  for (auto _ : state) benchmark::DoNotOptimize(tabular::forest_scores(trees, b.X, policy_of(state)));
}
BENCHMARK(BM_ForestScores)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Encode(benchmark::State& state) {
  const auto cfg = textenc::BackboneConfig::toy();
  nn::ParameterSet params;
  const auto tok = textenc::make_tokenizer(cfg.tokenizer);
  const textenc::TransformerBackbone bb(params, "text.backbone", cfg, tok->vocab_size());
  std::vector<std::vector<int>> ids;
  for (const auto& s : texts(256)) ids.push_back(s.tokens);
  for (auto _ : state) benchmark::DoNotOptimize(textenc::encode(bb, ids, policy_of(state)));
}
BENCHMARK(BM_Encode)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PredictProba(benchmark::State& state) {
  const textenc::TextClassifier model(textenc::BackboneConfig::toy(), textenc::BlockSelection::all(2), 1);
  const auto samples = texts(256);
  for (auto _ : state) benchmark::DoNotOptimize(nn::predict_proba(model, samples, policy_of(state)));
}
BENCHMARK(BM_PredictProba)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BatchGradients(benchmark::State& state) {
  const textenc::TextClassifier model(textenc::BackboneConfig::toy(), textenc::BlockSelection::all(2), 1);
  const auto samples = texts(64);
  std::vector<const nn::Sample*> batch;
  for (const auto& s : samples) batch.push_back(&s);
  const auto all = training::trainable_parameters(
      model, training::UnfreezeSchedule{model.group_count(), 1, false}.trainable_groups(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        training::batch_gradients(model, batch, all, training::SmoothingLossConfig{}, 1, policy_of(state)));
  }
}
BENCHMARK(BM_BatchGradients)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
