#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "postcheck/checkpoint.hpp"
#include "postcheck/common/error.hpp"
#include "postcheck/fusion.hpp"
#include "postcheck/nn/graph.hpp"
#include "postcheck/tabular.hpp"
#include "postcheck/textenc.hpp"
#include "test_util.hpp"

namespace postcheck::fusion {
namespace {

using testing::TempDir;

FusionConfig toy_config(CombineMode mode = CombineMode::concat) {
  FusionConfig c;
  c.combine = mode;
  c.backbone = textenc::BackboneConfig::toy();
  return c;
}

// Fine-tuned text and pretrained meta checkpoints with recognizable values.
struct Donors {
  TempDir dir{"donors"};
  std::filesystem::path text, meta;
  Donors() {
    textenc::TextClassifier t(textenc::BackboneConfig::toy(), textenc::BlockSelection::all(2), 101);
    for (auto* p : t.parameters().all()) p->value.array() += 0.125;
    text = dir / "text";
    Checkpoint::from_parameters(t.parameters(), {{"model", "text"}}).save(text);
    tabular::MetaMLP m(14, 202);
    for (auto* p : m.parameters().all()) p->value.array() -= 0.25;
    meta = dir / "meta";
    Checkpoint::from_parameters(m.parameters(), {{"model", "meta"}}).save(meta);
  }
};

bool starts_with(const std::string& s, const char* p) { return s.rfind(p, 0) == 0; }

void expect_provenance(const FusionModel& m, const StrategyPlan& plan, const Donors& d) {
  const std::string random = "random:" + std::to_string(plan.seed);
  const Checkpoint text = Checkpoint::load(d.text);
  const Checkpoint meta = Checkpoint::load(d.meta);
  std::size_t text_loaded = 0, meta_loaded = 0;
  for (const auto* p : m.parameters().all()) {
    const std::string& origin = m.provenance().at(p->name);
    EXPECT_FALSE(starts_with(p->name, "text.head.out.")) << p->name;
    EXPECT_FALSE(starts_with(p->name, "meta.out.")) << p->name;
    if (starts_with(p->name, "text.")) {
      if (plan.text_init == InitSource::checkpoint) {
        EXPECT_EQ(origin, "checkpoint:" + d.text.string()) << p->name;
        EXPECT_EQ(p->value, text.at(p->name)) << p->name;  // bitwise
        ++text_loaded;
      } else if (starts_with(p->name, "text.backbone.")) {
        EXPECT_EQ(origin, "pretrained:toy-init:20200101") << p->name;
      } else {
        EXPECT_EQ(origin, random) << p->name;
      }
    } else if (starts_with(p->name, "meta.")) {
      if (plan.meta_init == InitSource::checkpoint) {
        EXPECT_EQ(origin, "checkpoint:" + d.meta.string()) << p->name;
        EXPECT_EQ(p->value, meta.at(p->name)) << p->name;
        ++meta_loaded;
      } else {
        EXPECT_EQ(origin, random) << p->name;
      }
    } else {
      EXPECT_TRUE(starts_with(p->name, "fusion.")) << p->name;
      EXPECT_EQ(origin, random) << p->name;
    }
  }
  EXPECT_EQ(m.provenance().size(), m.parameters().size());
  if (plan.text_init == InitSource::checkpoint) EXPECT_EQ(text_loaded, text.tensors.size() - 2);
  if (plan.meta_init == InitSource::checkpoint) EXPECT_EQ(meta_loaded, meta.tensors.size() - 2);
}

TEST(Assemble, ProvenanceForEveryStrategy) {
  Donors d;
  for (auto id : {StrategyId::S1, StrategyId::S2, StrategyId::S3, StrategyId::S4}) {
    const auto plan = StrategyPlan::make(id, 77, d.text, d.meta);
    const auto m = assemble(plan, toy_config());
    SCOPED_TRACE(to_string(id));
    expect_provenance(*m, plan, d);
  }
}

TEST(Assemble, PlanTable) {
  using enum InitSource;
  EXPECT_EQ(StrategyPlan::make(StrategyId::S1, 0).text_init, random);
  EXPECT_EQ(StrategyPlan::make(StrategyId::S1, 0).meta_init, random);
  EXPECT_EQ(StrategyPlan::make(StrategyId::S2, 0).text_init, random);
  EXPECT_EQ(StrategyPlan::make(StrategyId::S2, 0).meta_init, checkpoint);
  EXPECT_EQ(StrategyPlan::make(StrategyId::S3, 0).text_init, checkpoint);
  EXPECT_EQ(StrategyPlan::make(StrategyId::S3, 0).meta_init, random);
  EXPECT_EQ(StrategyPlan::make(StrategyId::S4, 0).text_init, checkpoint);
  EXPECT_EQ(StrategyPlan::make(StrategyId::S4, 0).meta_init, checkpoint);
  EXPECT_EQ(parse_strategy("S3"), StrategyId::S3);
  EXPECT_THROW(parse_strategy("s5"), ConfigError);
}

TEST(Assemble, MissingCheckpointNamed) {
  try {
    assemble(StrategyPlan::make(StrategyId::S2, 1), toy_config());
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("meta checkpoint"), std::string::npos);
  }
}

TEST(Assemble, MismatchedCheckpointListsNames) {
  Donors d;
  FusionConfig cfg = toy_config();
  cfg.meta_in_dim = 9;
  try {
    assemble(StrategyPlan::make(StrategyId::S2, 1, std::nullopt, d.meta), cfg);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("meta.fc1.weight"), std::string::npos);
  }
}

TEST(Assemble, S1SeedsChangeHeadsNotBackbone) {
  const auto a = assemble(StrategyPlan::make(StrategyId::S1, 1), toy_config());
  const auto b = assemble(StrategyPlan::make(StrategyId::S1, 2), toy_config());
  for (const auto* p : a->parameters().all()) {
    const auto& q = b->parameters().at(p->name);
    if (starts_with(p->name, "text.backbone.")) EXPECT_EQ(p->value, q.value) << p->name;
    if (starts_with(p->name, "text.head.fc1.weight")) EXPECT_NE(p->value, q.value) << p->name;
  }
}

TEST(FusionShapes, ConcatAndAdd) {
  const auto concat = assemble(StrategyPlan::make(StrategyId::S1, 1), toy_config());
  EXPECT_EQ(concat->head_input_dim(), 288);
  EXPECT_EQ(toy_config().fused_dim(), 256 + 32);
  const auto add = assemble(StrategyPlan::make(StrategyId::S1, 1), toy_config(CombineMode::add));
  EXPECT_EQ(add->head_input_dim(), 128);
  std::vector<std::vector<int>> texts = {{1, 5, 2}, {1, 2}, {1, 7, 8, 2}};
  const Eigen::MatrixXd meta = Eigen::MatrixXd::Random(3, 14);
  EXPECT_EQ(fuse_forward(*concat, texts, meta).rows(), 3);
  EXPECT_EQ(fuse_forward(*add, texts, meta).cols(), 2);
  EXPECT_THROW(fuse_forward(*concat, texts, Eigen::MatrixXd::Zero(2, 14)), ShapeError);
}

TEST(FusionShapes, ZeroMetaPathMakesLogitsTextOnly) {
  auto m = assemble(StrategyPlan::make(StrategyId::S1, 3), toy_config());
  for (auto* p : m->parameters().all())
    if (starts_with(p->name, "meta.")) p->value.setZero();
  std::vector<std::vector<int>> texts = {{1, 5, 2}, {1, 9, 2}};
  const Eigen::MatrixXd a = fuse_forward(*m, texts, Eigen::MatrixXd::Random(2, 14));
  const Eigen::MatrixXd b = fuse_forward(*m, texts, Eigen::MatrixXd::Random(2, 14) * 50);
  EXPECT_EQ(a, b);
}

TEST(CombineFeatures, Examples) {
  EXPECT_EQ(combine_features(Eigen::Vector2d(1, 2), Eigen::VectorXd::Constant(1, 3), CombineMode::concat),
            Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ(combine_features(Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4), CombineMode::add), Eigen::Vector2d(4, 6));
  EXPECT_THROW(combine_features(Eigen::VectorXd::Constant(1, 1), Eigen::Vector2d(1, 2), CombineMode::add), ShapeError);
}

TEST(Checkpoint, BitExactRoundTrip) {
  TempDir dir("ckpt");
  Checkpoint c;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e300, 1e300);
  for (int t = 0; t < 5; ++t) {
    nn::Matrix m(t + 1, 7 - t);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
    c.tensors["t" + std::to_string(t)] = m;
  }
  c.tensors["special"] = nn::Matrix(1, 3);
  c.tensors["special"] << -0.0, std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max();
  c.manifest = {{"seed", 5}, {"step", 12}};
  c.save(dir / "c");
  const Checkpoint back = Checkpoint::load(dir / "c");
  ASSERT_EQ(back.tensors.size(), c.tensors.size());
  for (const auto& [name, m] : c.tensors) {
    const auto& b = back.at(name);
    ASSERT_EQ(b.rows(), m.rows());
    ASSERT_EQ(b.cols(), m.cols());
    EXPECT_EQ(std::memcmp(b.data(), m.data(), sizeof(double) * static_cast<std::size_t>(m.size())), 0) << name;
  }
  EXPECT_EQ(back.manifest["seed"], 5);
}

TEST(Checkpoint, CorruptFileIsError) {
  TempDir dir("bad");
  Checkpoint c;
  c.tensors["a"] = nn::Matrix::Ones(2, 2);
  c.save(dir / "c");
  std::filesystem::resize_file(dir / "c" / "params.bin", 20);
  EXPECT_THROW(Checkpoint::load(dir / "c"), CheckpointError);
  EXPECT_THROW(Checkpoint::load(dir / "missing"), Error);
}

TEST(Checkpoint, FusionManifestCarriesLedger) {
  Donors d;
  const auto plan = StrategyPlan::make(StrategyId::S4, 9, d.text, d.meta);
  const auto m = assemble(plan, toy_config());
  TempDir dir("fused");
  fusion_checkpoint(*m, plan, {{"step", 3}}).save(dir / "f");
  const auto back = Checkpoint::load(dir / "f");
  EXPECT_EQ(back.manifest["provenance"].size(), m->parameters().size());
  EXPECT_EQ(back.manifest["plan"]["id"], "S4");
  EXPECT_EQ(back.manifest["step"], 3);
  EXPECT_EQ(FusionConfig::from_json(back.manifest["config"]).to_json(), m->config().to_json());
}

}  // namespace
}  // namespace postcheck::fusion
