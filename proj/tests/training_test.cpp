#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "postcheck/common/error.hpp"
#include "postcheck/nn/graph.hpp"
#include "postcheck/tabular.hpp"
#include "postcheck/textenc.hpp"
#include "postcheck/training.hpp"

namespace postcheck::training {
namespace {

nn::Matrix logits_for(double p0, double p1) {
  nn::Matrix m(1, 2);
  m << std::log(p0), std::log(p1);
  return m;
}

TEST(LabelSmoothing, WorkedValue) {
  const std::vector<int> y = {0};
  const double expected = -(0.925 * std::log(0.9) + 0.075 * std::log(0.1));
  EXPECT_NEAR(label_smoothing_ce(logits_for(0.9, 0.1), y, 0.15), expected, 1e-12);
  EXPECT_NEAR(label_smoothing_ce(logits_for(0.9, 0.1), y, 0.15), 0.27015, 1e-4);
}

TEST(LabelSmoothing, ZeroEpsilonIsCrossEntropy) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  nn::Matrix logits(40, 2);
  std::vector<int> y(40);
  double ce = 0;
  for (int i = 0; i < 40; ++i) {
    logits(i, 0) = 3 * normal(rng);
    logits(i, 1) = 3 * normal(rng);
    y[static_cast<std::size_t>(i)] = i % 2;
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log(std::exp(logits(i, 0) - m) + std::exp(logits(i, 1) - m));
    ce += lse - logits(i, y[static_cast<std::size_t>(i)]);
  }
  EXPECT_NEAR(label_smoothing_ce(logits, y, 0.0), ce / 40, 1e-12);
}

TEST(LabelSmoothing, UniformPredictionIsLn2) {
  const std::vector<int> y = {1};
  for (double eps : {0.0, 0.1, 0.5, 0.9}) EXPECT_NEAR(label_smoothing_ce(logits_for(0.5, 0.5), y, eps), std::log(2.0), 1e-15);
}

TEST(LabelSmoothing, EpsilonOutOfRangeIsError) {
  const std::vector<int> y = {1};
  EXPECT_THROW(label_smoothing_ce(logits_for(0.5, 0.5), y, 1.0), Error);
  EXPECT_THROW(label_smoothing_ce(logits_for(0.5, 0.5), y, -0.1), Error);
}

// Loss of a classifier at current parameter values, dropout off.
double loss_of(const nn::Classifier& model, std::span<const nn::Sample* const> batch, double eps,
               nn::GradientBuffer* grads = nullptr) {
  nn::Graph g(grads ? nn::GradMode::all : nn::GradMode::none);
  nn::ForwardContext ctx;
  const nn::Var logits = model.logits(g, batch, ctx);
  std::vector<int> y;
  for (const auto* s : batch) y.push_back(s->label);
  const nn::Var loss = nn::label_smoothing_ce(logits, y, eps);
  if (grads) {
    g.backward(loss);
    g.accumulate_gradients(*grads);
  }
  return loss.value()(0, 0);
}

// Central differences on every scalar of the named parameters.
void check_gradients(nn::Classifier& model, std::span<const nn::Sample* const> batch,
                     const std::vector<std::string>& prefixes) {
  const double eps = 0.15;
  nn::GradientBuffer grads;
  loss_of(model, batch, eps, &grads);
  int checked = 0;
  for (nn::Parameter* p : model.parameters().all()) {
    bool wanted = false;
    for (const auto& pre : prefixes) wanted |= p->name.rfind(pre, 0) == 0;
    if (!wanted) continue;
    const nn::Matrix* g = grads.find(p);
    ASSERT_NE(g, nullptr) << p->name;
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double orig = p->value(i);
      const double h = 1e-5 * std::max(1.0, std::abs(orig));
      p->value(i) = orig + h;
      const double up = loss_of(model, batch, eps);
      p->value(i) = orig - h;
      const double down = loss_of(model, batch, eps);
      p->value(i) = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = (*g)(i);
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      EXPECT_LE(std::abs(numeric - analytic) / scale, 1e-4) << p->name << "[" << i << "]";
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

std::vector<nn::Sample> random_meta_samples(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<nn::Sample> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& s = out[static_cast<std::size_t>(i)];
    s.id = std::to_string(i);
    s.meta.resize(d);
    for (int j = 0; j < d; ++j) s.meta(j) = normal(rng);
    s.label = i % 2;
  }
  return out;
}

std::vector<const nn::Sample*> pointers(const std::vector<nn::Sample>& v) {
  std::vector<const nn::Sample*> p;
  for (const auto& s : v) p.push_back(&s);
  return p;
}

TEST(Gradients, MetaMlpMatchesFiniteDifferences) {
  tabular::MetaMLP model(14, 3);
  const auto samples = random_meta_samples(6, 14, 1);
  const auto batch = pointers(samples);
  check_gradients(model, batch, {"meta."});
}

TEST(Gradients, TextHeadMatchesFiniteDifferences) {
  textenc::BackboneConfig cfg = textenc::BackboneConfig::toy();
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.ffn = 12;
  cfg.max_sequence_length = 8;
  cfg.tokenizer = "hash:64";
  textenc::TextClassifier model(cfg, textenc::BlockSelection::all(cfg.layers), 4);
  const auto tok = textenc::make_tokenizer(cfg.tokenizer);
  std::vector<nn::Sample> samples;
  for (const char* t : {"tin that", "tin gia mao", "ok", "canh bao lua dao"}) {
    nn::Sample s;
    s.id = t;
    s.tokens = tok->encode(t, cfg.max_sequence_length);
    s.label = static_cast<int>(samples.size() % 2);
    samples.push_back(s);
  }
  const auto batch = pointers(samples);
  check_gradients(model, batch, {"text.head."});
}

TEST(Gradients, BackboneBlockMatchesFiniteDifferences) {
  textenc::BackboneConfig cfg = textenc::BackboneConfig::toy();
  cfg.layers = 1;
  cfg.hidden = 4;
  cfg.heads = 2;
  cfg.ffn = 6;
  cfg.max_sequence_length = 6;
  cfg.tokenizer = "hash:16";
  textenc::TextClassifier model(cfg, textenc::BlockSelection::all(1), 2);
  const auto tok = textenc::make_tokenizer(cfg.tokenizer);
  std::vector<nn::Sample> samples(3);
  const char* texts[] = {"a b", "c d e", "f"};
  for (int i = 0; i < 3; ++i) {
    samples[static_cast<std::size_t>(i)].tokens = tok->encode(texts[i], cfg.max_sequence_length);
    samples[static_cast<std::size_t>(i)].label = i % 2;
  }
  const auto batch = pointers(samples);
  check_gradients(model, batch, {"text.backbone.block1."});
}

TEST(ParamGroups, NoDecayForBiasAndNorm) {
  textenc::TextClassifier model(textenc::BackboneConfig::toy(), textenc::BlockSelection::all(2), 1);
  const OptimizerConfig cfg;
  const auto groups = build_param_groups(model, cfg, DiscriminativeLRMap{});
  std::set<const nn::Parameter*> seen;
  std::size_t total = 0;
  for (const auto& g : groups) {
    for (const auto* p : g.params) {
      EXPECT_TRUE(seen.insert(p).second) << p->name << " in two groups";
      ++total;
      const bool no_decay_name = p->name.ends_with(".bias") || p->name.find("norm.") != std::string::npos;
      if (g.decay) {
        EXPECT_FALSE(no_decay_name) << p->name;
        EXPECT_EQ(g.weight_decay, 0.01);
      } else {
        EXPECT_EQ(g.weight_decay, 0.0);
      }
    }
  }
  EXPECT_EQ(total, model.parameters().size());
}

TEST(ParamGroups, ClassifyExamplesAndUnknownName) {
  const OptimizerConfig cfg;
  EXPECT_EQ(classify_parameter("text.backbone.block1.attention_norm.weight", cfg), DecayClass::no_decay);
  EXPECT_EQ(classify_parameter("text.head.fc1.weight", cfg), DecayClass::decay);
  EXPECT_EQ(classify_parameter("text.head.fc1.bias", cfg), DecayClass::no_decay);
  EXPECT_THROW(classify_parameter("mystery", cfg), ConfigError);
}

TEST(ParamGroups, DiscriminativeMultipliers) {
  const DiscriminativeLRMap map{0.95};
  EXPECT_EQ(map.multiplier(0), 1.0);
  EXPECT_NEAR(map.multiplier(3), 0.95 * 0.95 * 0.95, 1e-15);
  textenc::TextClassifier model(textenc::BackboneConfig::toy(), textenc::BlockSelection::all(2), 1);
  for (const auto& g : build_param_groups(model, OptimizerConfig{}, map)) {
    EXPECT_EQ(g.lr_multiplier, map.multiplier(g.depth));
  }
  EXPECT_EQ(model.group_depth("text.head.fc1.weight"), 0);
  EXPECT_EQ(model.group_depth("text.backbone.block2.attention.query.weight"), 1);
  EXPECT_EQ(model.group_depth("text.backbone.block1.attention.query.weight"), 2);
  EXPECT_EQ(model.group_depth("text.backbone.embeddings.token.weight"), 3);
}

TEST(LrSchedule, WarmupPeakAndEnds) {
  const OptimizerConfig cfg;
  EXPECT_EQ(lr_at(0, 1000, cfg), 0.0);
  EXPECT_EQ(lr_at(100, 1000, cfg), 2e-5);
  EXPECT_EQ(lr_at(1000, 1000, cfg), 0.0);
  double prev = 0;
  for (long s = 1; s <= 100; ++s) {
    EXPECT_GT(lr_at(s, 1000, cfg), prev);
    prev = lr_at(s, 1000, cfg);
  }
  for (long s = 101; s <= 1000; ++s) {
    EXPECT_LT(lr_at(s, 1000, cfg), prev);
    prev = lr_at(s, 1000, cfg);
  }
  EXPECT_THROW(lr_at(0, 0, cfg), Error);
}

TEST(Unfreeze, MonotoneAndSaturating) {
  const UnfreezeSchedule sched{5, 2, true};
  EXPECT_EQ(sched.trainable_groups(0), std::set<int>({0}));
  std::set<int> prev;
  for (int e = 0; e < 20; ++e) {
    const auto cur = sched.trainable_groups(e);
    EXPECT_TRUE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
    prev = cur;
  }
  EXPECT_EQ(sched.trainable_groups(8).size(), 5u);
  EXPECT_EQ((UnfreezeSchedule{5, 1, false}.trainable_groups(0).size()), 5u);
}

TEST(Unfreeze, TrainableParametersGrowWithGroups) {
  textenc::TextClassifier model(textenc::BackboneConfig::toy(), textenc::BlockSelection::all(2), 1);
  const UnfreezeSchedule sched{model.group_count(), 1, true};
  std::size_t prev = 0;
  for (int e = 0; e < model.group_count() + 1; ++e) {
    const auto t = trainable_parameters(model, sched.trainable_groups(e));
    EXPECT_GE(t.size(), prev);
    prev = t.size();
  }
  EXPECT_EQ(prev, model.parameters().size());
}

std::vector<nn::Sample> separable_texts(int n) {
  const auto tok = textenc::make_tokenizer("hash:2048");
  std::vector<nn::Sample> out;
  for (int i = 0; i < n; ++i) {
    nn::Sample s;
    s.id = std::to_string(i);
    s.label = i % 2;
    const std::string text = s.label ? "tin don chua kiem chung lan truyen " + std::to_string(i % 5)
                                     : "bo y te thong bao chinh thuc " + std::to_string(i % 5);
    s.tokens = tok->encode(text, 32);
    out.push_back(s);
  }
  return out;
}

OptimizerConfig small_run() {
  OptimizerConfig cfg;
  cfg.max_lr = 2e-3;
  cfg.epochs = 5;
  cfg.batch_size = 10;
  cfg.seed = 5;
  return cfg;
}

TEST(Train, LossDecreasesOnSeparableSet) {
  textenc::TextClassifier model(textenc::BackboneConfig::toy(), textenc::BlockSelection::all(2), 3);
  const auto samples = separable_texts(50);
  const auto cfg = small_run();
  const auto h = train(model, {samples, {}}, cfg, SmoothingLossConfig{}, UnfreezeSchedule{model.group_count(), 1, false},
                       DiscriminativeLRMap{});
  ASSERT_EQ(h.epochs.size(), 5u);
  for (std::size_t e = 1; e < h.epochs.size(); ++e) EXPECT_LT(h.epochs[e].loss, h.epochs[e - 1].loss) << e;
}

TEST(Train, SameSeedSameHistory) {
  const auto samples = separable_texts(40);
  std::string first;
  for (int run = 0; run < 2; ++run) {
    textenc::TextClassifier model(textenc::BackboneConfig::toy(), textenc::BlockSelection::all(2), 3);
    const auto h = train(model, {std::span(samples).subspan(0, 30), std::span(samples).subspan(30)}, small_run(),
                         SmoothingLossConfig{}, UnfreezeSchedule{model.group_count(), 1, true}, DiscriminativeLRMap{});
    if (run == 0) first = h.to_json_lines();
    else EXPECT_EQ(h.to_json_lines(), first);
  }
}

TEST(Train, SerialAndParallelGradientsAgree) {
  textenc::TextClassifier model(textenc::BackboneConfig::toy(), textenc::BlockSelection::all(2), 3);
  const auto samples = separable_texts(24);
  const auto batch = pointers(samples);
  const auto all = trainable_parameters(model, UnfreezeSchedule{model.group_count(), 1, false}.trainable_groups(0));
  const auto a = batch_gradients(model, batch, all, SmoothingLossConfig{}, 9, ExecPolicy::serial);
  const auto b = batch_gradients(model, batch, all, SmoothingLossConfig{}, 9, ExecPolicy::openmp);
  EXPECT_EQ(a.loss, b.loss);
  for (const auto* p : model.parameters().all()) {
    ASSERT_NE(a.grads.find(p), nullptr);
    EXPECT_EQ(*a.grads.find(p), *b.grads.find(p)) << p->name;
  }
}

TEST(Train, EmptyTrainingSetIsError) {
  tabular::MetaMLP model(3);
  EXPECT_THROW(train(model, {}, small_run(), SmoothingLossConfig{}, UnfreezeSchedule{}, DiscriminativeLRMap{}),
               TrainingError);
}

TEST(OptimizerConfigJson, RoundTripAndUnknownKey) {
  OptimizerConfig cfg;
  cfg.max_lr = 3e-4;
  cfg.epochs = 7;
  const auto back = OptimizerConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.to_json(), cfg.to_json());
  EXPECT_THROW(OptimizerConfig::from_json({{"bogus", 1}}), ConfigError);
}

}  // namespace
}  // namespace postcheck::training
