#include <algorithm>
#include <charconv>
#include <set>

#include "postcheck/common/error.hpp"
#include "postcheck/textenc.hpp"

namespace postcheck::textenc {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

int parse_index(std::string_view s, std::string_view spec) {
  s = trim(s);
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("bad block spec '" + std::string(spec) + "'");
  }
  return v;
}

}  // namespace

BlockSelection BlockSelection::parse(std::string_view spec, int layers) {
  if (trim(spec) == "all") return all(layers);
  std::set<int> blocks;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t comma = std::min(spec.find(',', start), spec.size());
    const std::string_view part = trim(spec.substr(start, comma - start));
    if (part.empty()) throw ConfigError("bad block spec '" + std::string(spec) + "'");
    if (const auto dash = part.find('-'); dash != std::string_view::npos) {
      const int a = parse_index(part.substr(0, dash), spec);
      const int b = parse_index(part.substr(dash + 1), spec);
      if (a > b) throw ConfigError("descending block range in '" + std::string(spec) + "'");
      for (int i = a; i <= b; ++i) blocks.insert(i);
    } else {
      blocks.insert(parse_index(part, spec));
    }
    start = comma + 1;
  }
  BlockSelection sel{{blocks.begin(), blocks.end()}};
  sel.validate(layers);
  return sel;
}

BlockSelection BlockSelection::all(int layers) {
  BlockSelection sel;
  for (int i = 1; i <= layers; ++i) sel.blocks.push_back(i);
  sel.validate(layers);
  return sel;
}

void BlockSelection::validate(int layers) const {
  if (blocks.empty()) throw ConfigError("block selection is empty");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i] < 1 || blocks[i] > layers) {
      throw ConfigError("block " + std::to_string(blocks[i]) + " outside [1, " + std::to_string(layers) + "]");
    }
    if (i > 0 && blocks[i] <= blocks[i - 1]) throw ConfigError("block selection must be sorted and unique");
  }
}

std::string BlockSelection::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < blocks.size();) {
    std::size_t j = i;
    while (j + 1 < blocks.size() && blocks[j + 1] == blocks[j] + 1) ++j;
    if (!out.empty()) out += ',';
    out += std::to_string(blocks[i]);
    if (j > i) out += '-' + std::to_string(blocks[j]);
    i = j + 1;
  }
  return out;
}

Eigen::RowVectorXd concat_cls(const EncoderOutput& out, const BlockSelection& sel) {
  sel.validate(static_cast<int>(out.cls_states.rows()));
  const Eigen::Index H = out.cls_states.cols();
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(sel.size()) * H);
  for (std::size_t i = 0; i < sel.size(); ++i) {
    v.segment(static_cast<Eigen::Index>(i) * H, H) = out.cls_states.row(sel.blocks[i] - 1);
  }
  return v;
}

nn::Var concat_cls(std::span<const nn::Var> per_block, const BlockSelection& sel) {
  sel.validate(static_cast<int>(per_block.size()));
  if (sel.size() == 1) return per_block[static_cast<std::size_t>(sel.blocks.front() - 1)];
  std::vector<nn::Var> parts;
  for (int b : sel.blocks) parts.push_back(per_block[static_cast<std::size_t>(b - 1)]);
  return nn::concat_cols(parts);
}

ClassificationHead::ClassificationHead(nn::ParameterSet& params, const std::string& prefix, int in_dim,
                                       std::uint64_t seed, double dropout, bool with_output)
    : fc1_(params, prefix + ".fc1", in_dim, kHeadHidden, seed), dropout_(dropout), with_output_(with_output) {
  if (with_output_) out_ = nn::Linear(params, prefix + ".out", kHeadHidden, 2, seed);
}

nn::Var ClassificationHead::penultimate(nn::Graph& g, nn::Var x, nn::ForwardContext& ctx) const {
  if (x.cols() != fc1_.in_dim()) {
    throw ShapeError("text head: expected input dim " + std::to_string(fc1_.in_dim()) + ", got " +
                     std::to_string(x.cols()));
  }
  return nn::relu(fc1_.forward(g, nn::dropout(x, dropout_, ctx.rng)));
}

nn::Var ClassificationHead::output(nn::Graph& g, nn::Var penultimate, nn::ForwardContext& ctx) const {
  if (!with_output_) throw ModelError("text head was built without its output layer");
  return out_.forward(g, nn::dropout(penultimate, dropout_, ctx.rng));
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> head_forward(const ClassificationHead& head, const Eigen::MatrixXd& x) {
  nn::Graph g(nn::GradMode::none);
  nn::ForwardContext ctx;
  const nn::Var pen = head.penultimate(g, g.constant(x), ctx);
  const nn::Var logits = head.output(g, pen, ctx);
  return {pen.value(), logits.value()};
}

TextNet::TextNet(nn::ParameterSet& params, const std::string& prefix, const BackboneConfig& cfg,
                 const BlockSelection& sel, std::uint64_t head_seed, bool with_output)
    : prefix_(prefix),
      backbone_(params, prefix + ".backbone", cfg, make_tokenizer(cfg.tokenizer)->vocab_size()),
      head_(params, prefix + ".head", head_input_dim(sel, cfg.hidden), head_seed, 0.3, with_output),
      selection_(sel) {
  sel.validate(cfg.layers);
}

nn::Var TextNet::feature(nn::Graph& g, std::span<const nn::Sample* const> batch, nn::ForwardContext& ctx) const {
  const auto cls = backbone_.cls_states(g, batch, ctx);
  return head_.penultimate(g, concat_cls(cls, selection_), ctx);
}

nn::Var TextNet::output(nn::Graph& g, nn::Var feature, nn::ForwardContext& ctx) const {
  return head_.output(g, feature, ctx);
}

int TextNet::group_depth(const std::string& name) const {
  const std::string bb = prefix_ + ".backbone.";
  if (name.rfind(bb, 0) != 0) return 0;
  const std::string rest = name.substr(bb.size());
  const int L = backbone_.layers();
  if (rest.rfind("embeddings.", 0) == 0) return L + 1;
  if (rest.rfind("block", 0) == 0) {
    const int l = std::stoi(rest.substr(5));
    return L - l + 1;
  }
  throw ModelError("unexpected backbone parameter " + name);
}

namespace {
const BackboneConfig& checked(const BackboneConfig& cfg) {
  require_backbone_weights(cfg);
  return cfg;
}
}  // namespace

TextClassifier::TextClassifier(const BackboneConfig& cfg, const BlockSelection& sel, std::uint64_t seed)
    : cfg_(checked(cfg)), net_(params_, "text", cfg, sel, seed) {
  backbone_origin_ = load_pretrained_backbone(params_, "text.backbone", cfg);
}

nn::Var TextClassifier::logits(nn::Graph& g, std::span<const nn::Sample* const> batch,
                               nn::ForwardContext& ctx) const {
  return net_.output(g, net_.feature(g, batch, ctx), ctx);
}

Eigen::VectorXd ensemble_block_variants(std::span<const nn::Classifier* const> models,
                                        std::span<const nn::Sample> samples, ExecPolicy policy) {
  if (models.empty()) throw ModelError("ensemble needs at least one model");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(samples.size()));
  for (const auto* m : models) sum += nn::predict_proba(*m, samples, policy);
  return sum / static_cast<double>(models.size());
}

}  // namespace postcheck::textenc
