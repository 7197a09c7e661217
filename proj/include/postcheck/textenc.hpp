#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "postcheck/common/parallel.hpp"
#include "postcheck/nn/layers.hpp"

namespace postcheck::textenc {

// ---------------------------------------------------------------- tokenizers

inline constexpr int kPadId = 0;
inline constexpr int kClsId = 1;
inline constexpr int kSepId = 2;
inline constexpr int kUnkId = 3;
inline constexpr int kFirstWordId = 4;

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  // [CLS] words... [SEP], keeping the first max_length - 2 words.
  std::vector<int> encode(std::string_view text, int max_length) const;
  virtual int vocab_size() const = 0;
  virtual std::string id() const = 0;

 protected:
  virtual int word_id(std::string_view word) const = 0;
};

// Lowercased words and punctuation, split on whitespace.
std::vector<std::string> split_words(std::string_view text);

// Word ids are FNV-1a hash buckets.
class HashTokenizer final : public Tokenizer {
 public:
  explicit HashTokenizer(int buckets);
  int vocab_size() const override { return buckets_ + kFirstWordId; }
  std::string id() const override { return "hash:" + std::to_string(buckets_); }

 protected:
  int word_id(std::string_view word) const override;

 private:
  int buckets_;
};

// One word per line; unknown words map to kUnkId.
class VocabTokenizer final : public Tokenizer {
 public:
  explicit VocabTokenizer(const std::filesystem::path& vocab_file);
  int vocab_size() const override { return static_cast<int>(ids_.size()) + kFirstWordId; }
  std::string id() const override { return "vocab:" + path_.string(); }

 protected:
  int word_id(std::string_view word) const override;

 private:
  std::filesystem::path path_;
  std::unordered_map<std::string, int> ids_;
};

// "hash:<buckets>" or "vocab:<file>".
std::unique_ptr<Tokenizer> make_tokenizer(const std::string& id);

// ---------------------------------------------------------------- backbone

enum class BackboneKind { pretrained, toy };

struct BackboneConfig {
  BackboneKind kind = BackboneKind::toy;
  int layers = 2;
  int hidden = 32;
  int heads = 2;
  int ffn = 64;
  int max_sequence_length = 32;
  std::string tokenizer = "hash:2048";
  double dropout = 0.1;
  // Toy: the fixed seed that plays the role of pretrained weights.
  std::uint64_t init_seed = 20200101;
  // Pretrained: repo-format checkpoint holding text.backbone.* tensors.
  std::filesystem::path checkpoint;

  static BackboneConfig toy();
  // Base-size encoder dims (12 blocks, hidden 768).
  static BackboneConfig pretrained_base();

  void validate() const;
  nlohmann::json to_json() const;
  static BackboneConfig from_json(const nlohmann::json& j);
};

// Post-norm transformer encoder. Parameters live under
// "<prefix>.embeddings.*" and "<prefix>.block<l>.*" (l = 1..L).
class TransformerBackbone {
 public:
  TransformerBackbone() = default;
  TransformerBackbone(nn::ParameterSet& params, const std::string& prefix, const BackboneConfig& cfg,
                      int vocab_size);

  // Hidden state at position 0 after each block: L nodes of shape n x H.
  std::vector<nn::Var> cls_states(nn::Graph& g, std::span<const nn::Sample* const> batch,
                                  nn::ForwardContext& ctx) const;

  int layers() const { return static_cast<int>(blocks_.size()); }
  int hidden() const { return hidden_; }
  const std::string& prefix() const { return prefix_; }

 private:
  struct Block {
    nn::Linear query, key, value, output;
    nn::LayerNorm attention_norm;
    nn::Linear ffn_in, ffn_out;
    nn::LayerNorm ffn_norm;
  };

  nn::Var encode_one(nn::Graph& g, std::span<const int> tokens, nn::ForwardContext& ctx,
                     std::vector<nn::Var>& cls) const;

  std::string prefix_;
  int hidden_ = 0;
  int heads_ = 1;
  int max_len_ = 0;
  double dropout_ = 0.0;
  nn::Parameter* token_embedding_ = nullptr;
  nn::Parameter* position_embedding_ = nullptr;
  nn::LayerNorm embedding_norm_;
  std::vector<Block> blocks_;
};

// Sets the backbone tensors to their pretrained values: the fixed-seed init
// for toy backbones, the configured checkpoint otherwise. Returns the origin tag.
// Throws CheckpointError when a pretrained backbone has no weights to load.
// Called before any allocation so a misconfigured run fails fast.
void require_backbone_weights(const BackboneConfig& cfg);

std::string load_pretrained_backbone(nn::ParameterSet& params, const std::string& prefix, const BackboneConfig& cfg);

// ---------------------------------------------------------------- [CLS] selection

// Sorted, unique, 1-based block indices.
struct BlockSelection {
  std::vector<int> blocks;

  // "a-b" inclusive ranges and comma lists, e.g. "1-6", "9,10,11,12", "1-3,7".
  static BlockSelection parse(std::string_view spec, int layers);
  static BlockSelection all(int layers);
  void validate(int layers) const;
  std::size_t size() const { return blocks.size(); }
  std::string to_string() const;
};

struct EncoderOutput {
  Eigen::MatrixXd cls_states;  // L x H
};

// Head input width for a selection.
inline int head_input_dim(const BlockSelection& sel, int hidden) { return static_cast<int>(sel.size()) * hidden; }

// Selected rows of cls_states concatenated in ascending block order.
Eigen::RowVectorXd concat_cls(const EncoderOutput& out, const BlockSelection& sel);
nn::Var concat_cls(std::span<const nn::Var> per_block, const BlockSelection& sel);

// ---------------------------------------------------------------- head

inline constexpr int kHeadHidden = 256;

// dropout -> fc1 -> ReLU (penultimate) -> dropout -> out.
class ClassificationHead {
 public:
  ClassificationHead() = default;
  ClassificationHead(nn::ParameterSet& params, const std::string& prefix, int in_dim, std::uint64_t seed,
                     double dropout = 0.3, bool with_output = true);

  nn::Var penultimate(nn::Graph& g, nn::Var x, nn::ForwardContext& ctx) const;
  nn::Var output(nn::Graph& g, nn::Var penultimate, nn::ForwardContext& ctx) const;
  int in_dim() const { return fc1_.in_dim(); }
  bool has_output() const { return with_output_; }

 private:
  nn::Linear fc1_, out_;
  double dropout_ = 0.3;
  bool with_output_ = true;
};

// Inference pass: (penultimate n x 256, logits n x 2).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> head_forward(const ClassificationHead& head, const Eigen::MatrixXd& x);

// ---------------------------------------------------------------- text submodel

// Backbone + head under "<prefix>.backbone" and "<prefix>.head".
class TextNet {
 public:
  TextNet() = default;
  TextNet(nn::ParameterSet& params, const std::string& prefix, const BackboneConfig& cfg, const BlockSelection& sel,
          std::uint64_t head_seed, bool with_output = true);

  nn::Var feature(nn::Graph& g, std::span<const nn::Sample* const> batch, nn::ForwardContext& ctx) const;
  nn::Var output(nn::Graph& g, nn::Var feature, nn::ForwardContext& ctx) const;

  const TransformerBackbone& backbone() const { return backbone_; }
  const ClassificationHead& head() const { return head_; }
  const BlockSelection& selection() const { return selection_; }

  // Depth L+1 for embeddings, L-l+1 for block l, 0 outside the backbone.
  int group_depth(const std::string& name) const;
  int group_count() const { return backbone_.layers() + 2; }

 private:
  std::string prefix_;
  TransformerBackbone backbone_;
  ClassificationHead head_;
  BlockSelection selection_;
};

class TextClassifier : public nn::Classifier {
 public:
  TextClassifier(const BackboneConfig& cfg, const BlockSelection& sel, std::uint64_t seed);

  nn::ParameterSet& parameters() override { return params_; }
  const nn::ParameterSet& parameters() const override { return params_; }
  nn::Var logits(nn::Graph& g, std::span<const nn::Sample* const> batch, nn::ForwardContext& ctx) const override;
  int group_depth(const std::string& name) const override { return net_.group_depth(name); }
  int group_count() const override { return net_.group_count(); }

  const TextNet& net() const { return net_; }
  const BackboneConfig& config() const { return cfg_; }
  const std::string& backbone_origin() const { return backbone_origin_; }

 private:
  BackboneConfig cfg_;
  nn::ParameterSet params_;
  TextNet net_;
  std::string backbone_origin_;
};

// Per-text [CLS] trajectories, evaluated in inference mode; texts are
// independent and run in parallel under ExecPolicy::openmp.
std::vector<EncoderOutput> encode(const TransformerBackbone& backbone, std::span<const std::vector<int>> token_ids,
                                  ExecPolicy policy = default_exec_policy());

// Unweighted mean of the models' unreliable-class probabilities.
Eigen::VectorXd ensemble_block_variants(std::span<const nn::Classifier* const> models,
                                        std::span<const nn::Sample> samples,
                                        ExecPolicy policy = default_exec_policy());

}  // namespace postcheck::textenc
