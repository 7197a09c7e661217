#include <cmath>

#include "postcheck/checkpoint.hpp"
#include "postcheck/common/error.hpp"
#include "postcheck/common/json_util.hpp"
#include "postcheck/textenc.hpp"

namespace postcheck::textenc {
namespace {

constexpr double kInitStddev = 0.02;

}  // namespace

BackboneConfig BackboneConfig::toy() { return BackboneConfig{}; }

BackboneConfig BackboneConfig::pretrained_base() {
  BackboneConfig c;
  c.kind = BackboneKind::pretrained;
  c.layers = 12;
  c.hidden = 768;
  c.heads = 12;
  c.ffn = 3072;
  c.max_sequence_length = 256;
  c.tokenizer = "hash:64000";
  return c;
}

void BackboneConfig::validate() const {
  if (layers < 1) throw ConfigError("backbone needs at least one block");
  if (hidden < 1) throw ConfigError("backbone hidden size must be positive");
  if (heads < 1 || hidden % heads != 0) throw ConfigError("hidden size must be a multiple of the head count");
  if (ffn < 1) throw ConfigError("backbone ffn size must be positive");
  if (max_sequence_length < 2) throw ConfigError("max_sequence_length must be at least 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("backbone dropout must lie in [0, 1)");
}

nlohmann::json BackboneConfig::to_json() const {
  return {{"kind", kind == BackboneKind::toy ? "toy" : "pretrained"},
          {"layers", layers},
          {"hidden", hidden},
          {"heads", heads},
          {"ffn", ffn},
          {"max_sequence_length", max_sequence_length},
          {"tokenizer", tokenizer},
          {"dropout", dropout},
          {"init_seed", init_seed},
          {"checkpoint", checkpoint.string()}};
}

BackboneConfig BackboneConfig::from_json(const nlohmann::json& j) {
  StrictReader r(j, "backbone");
  std::string kind = "toy";
  r.get("kind", kind);
  BackboneConfig c = kind == "pretrained" ? pretrained_base() : toy();
  if (kind != "toy" && kind != "pretrained") throw ConfigError("backbone kind must be toy or pretrained");
  r.get("layers", c.layers);
  r.get("hidden", c.hidden);
  r.get("heads", c.heads);
  r.get("ffn", c.ffn);
  r.get("max_sequence_length", c.max_sequence_length);
  r.get("tokenizer", c.tokenizer);
  r.get("dropout", c.dropout);
  r.get("init_seed", c.init_seed);
  std::string ckpt;
  r.get("checkpoint", ckpt);
  c.checkpoint = ckpt;
  r.finish();
  c.validate();
  return c;
}

TransformerBackbone::TransformerBackbone(nn::ParameterSet& params, const std::string& prefix,
                                         const BackboneConfig& cfg, int vocab_size)
    : prefix_(prefix),
      hidden_(cfg.hidden),
      heads_(cfg.heads),
      max_len_(cfg.max_sequence_length),
      dropout_(cfg.dropout) {
  cfg.validate();
  const std::string emb = prefix + ".embeddings";
  auto trng = nn::param_rng(cfg.init_seed, emb + ".token.weight");
  token_embedding_ = &params.add(emb + ".token.weight", nn::init_normal(vocab_size, cfg.hidden, kInitStddev, trng));
  auto prng = nn::param_rng(cfg.init_seed, emb + ".position.weight");
  position_embedding_ =
      &params.add(emb + ".position.weight", nn::init_normal(cfg.max_sequence_length, cfg.hidden, kInitStddev, prng));
  embedding_norm_ = nn::LayerNorm(params, emb + ".norm", cfg.hidden);
  for (int l = 1; l <= cfg.layers; ++l) {
    const std::string b = prefix + ".block" + std::to_string(l);
    const auto s = cfg.init_seed;
    blocks_.push_back(Block{
        nn::Linear(params, b + ".attention.query", cfg.hidden, cfg.hidden, s, kInitStddev),
        nn::Linear(params, b + ".attention.key", cfg.hidden, cfg.hidden, s, kInitStddev),
        nn::Linear(params, b + ".attention.value", cfg.hidden, cfg.hidden, s, kInitStddev),
        nn::Linear(params, b + ".attention.output", cfg.hidden, cfg.hidden, s, kInitStddev),
        nn::LayerNorm(params, b + ".attention_norm", cfg.hidden),
        nn::Linear(params, b + ".ffn.in", cfg.hidden, cfg.ffn, s, kInitStddev),
        nn::Linear(params, b + ".ffn.out", cfg.ffn, cfg.hidden, s, kInitStddev),
        nn::LayerNorm(params, b + ".ffn_norm", cfg.hidden),
    });
  }
}

nn::Var TransformerBackbone::encode_one(nn::Graph& g, std::span<const int> tokens, nn::ForwardContext& ctx,
                                        std::vector<nn::Var>& cls) const {
  if (tokens.empty()) throw ShapeError("cannot encode an empty token sequence");
  if (static_cast<int>(tokens.size()) > max_len_) {
    throw ShapeError("sequence of " + std::to_string(tokens.size()) + " tokens exceeds max length " +
                     std::to_string(max_len_));
  }
  std::vector<int> positions(tokens.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);
  nn::Var x = nn::add(nn::gather_rows(g.param(*token_embedding_), tokens),
                      nn::gather_rows(g.param(*position_embedding_), positions));
  x = nn::dropout(embedding_norm_.forward(g, x), dropout_, ctx.rng);

  const int dh = hidden_ / heads_;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  for (const Block& b : blocks_) {
    const nn::Var q = b.query.forward(g, x);
    const nn::Var k = b.key.forward(g, x);
    const nn::Var v = b.value.forward(g, x);
    std::vector<nn::Var> heads;
    for (int h = 0; h < heads_; ++h) {
      const nn::Var qh = heads_ == 1 ? q : nn::slice_cols(q, h * dh, dh);
      const nn::Var kh = heads_ == 1 ? k : nn::slice_cols(k, h * dh, dh);
      const nn::Var vh = heads_ == 1 ? v : nn::slice_cols(v, h * dh, dh);
      const nn::Var att = nn::softmax_rows(nn::scale(nn::matmul_nt(qh, kh), inv_sqrt));
      heads.push_back(nn::matmul(att, vh));
    }
    const nn::Var mixed = heads.size() == 1 ? heads.front() : nn::concat_cols(heads);
    const nn::Var attn_out = nn::dropout(b.output.forward(g, mixed), dropout_, ctx.rng);
    x = b.attention_norm.forward(g, nn::add(x, attn_out));
    const nn::Var ff = b.ffn_out.forward(g, nn::gelu(b.ffn_in.forward(g, x)));
    x = b.ffn_norm.forward(g, nn::add(x, nn::dropout(ff, dropout_, ctx.rng)));
    cls.push_back(nn::slice_rows(x, 0, 1));
  }
  return x;
}

std::vector<nn::Var> TransformerBackbone::cls_states(nn::Graph& g, std::span<const nn::Sample* const> batch,
                                                     nn::ForwardContext& ctx) const {
  if (batch.empty()) throw ShapeError("empty batch");
  const auto L = static_cast<std::size_t>(layers());
  std::vector<std::vector<nn::Var>> per_block(L);
  for (const nn::Sample* s : batch) {
    std::vector<nn::Var> cls;
    encode_one(g, s->tokens, ctx, cls);
    for (std::size_t l = 0; l < L; ++l) per_block[l].push_back(cls[l]);
  }
  std::vector<nn::Var> out;
  out.reserve(L);
  for (auto& rows : per_block) out.push_back(rows.size() == 1 ? rows.front() : nn::concat_rows(rows));
  return out;
}

void require_backbone_weights(const BackboneConfig& cfg) {
  if (cfg.kind == BackboneKind::pretrained && cfg.checkpoint.empty()) {
    throw CheckpointError("pretrained backbone needs a checkpoint path (backbone.checkpoint)");
  }
}

std::string load_pretrained_backbone(nn::ParameterSet& params, const std::string& prefix, const BackboneConfig& cfg) {
  if (cfg.kind == BackboneKind::toy) return "pretrained:toy-init:" + std::to_string(cfg.init_seed);
  require_backbone_weights(cfg);
  const Checkpoint ckpt = Checkpoint::load(cfg.checkpoint);
  load_into(params, ckpt, {prefix + "."});
  return "pretrained:" + cfg.checkpoint.string();
}

std::vector<EncoderOutput> encode(const TransformerBackbone& backbone, std::span<const std::vector<int>> token_ids,
                                  ExecPolicy policy) {
  std::vector<EncoderOutput> out(token_ids.size());
  parallel_for(policy, static_cast<std::ptrdiff_t>(token_ids.size()), [&](std::ptrdiff_t i) {
    nn::Sample s;
    s.tokens = token_ids[static_cast<std::size_t>(i)];
    const nn::Sample* batch[] = {&s};
    nn::Graph g(nn::GradMode::none);
    nn::ForwardContext ctx;
    const auto cls = backbone.cls_states(g, batch, ctx);
    Eigen::MatrixXd m(backbone.layers(), backbone.hidden());
    for (int l = 0; l < backbone.layers(); ++l) m.row(l) = cls[static_cast<std::size_t>(l)].value().row(0);
    out[static_cast<std::size_t>(i)].cls_states = std::move(m);
  });
  return out;
}

}  // namespace postcheck::textenc
