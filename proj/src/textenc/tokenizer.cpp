#include <fstream>

#include <unicode/locid.h>
#include <unicode/unistr.h>

#include "postcheck/common/error.hpp"
#include "postcheck/common/seed.hpp"
#include "postcheck/textenc.hpp"

namespace postcheck::textenc {
namespace {

constexpr std::string_view kPunctuation = ".,!?;:()[]{}\"'";

std::string lowercase(std::string_view s) {
  std::string out;
  icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())))
      .toLower(icu::Locale::getRoot())
      .toUTF8String(out);
  return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  const std::string lower = lowercase(text);
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) words.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : lower) {
    if (is_space(c)) {
      flush();
    } else if (kPunctuation.find(c) != std::string_view::npos) {
      flush();
      words.emplace_back(1, c);
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return words;
}

std::vector<int> Tokenizer::encode(std::string_view text, int max_length) const {
  if (max_length < 2) throw ConfigError("max sequence length must be at least 2");
  const auto words = split_words(text);
  const std::size_t keep = std::min(words.size(), static_cast<std::size_t>(max_length - 2));
  std::vector<int> ids;
  ids.reserve(keep + 2);
  ids.push_back(kClsId);
  for (std::size_t i = 0; i < keep; ++i) ids.push_back(word_id(words[i]));
  ids.push_back(kSepId);
  return ids;
}

HashTokenizer::HashTokenizer(int buckets) : buckets_(buckets) {
  if (buckets < 1) throw ConfigError("hash tokenizer needs at least one bucket");
}

int HashTokenizer::word_id(std::string_view word) const {
  return kFirstWordId + static_cast<int>(fnv1a(word) % static_cast<std::uint64_t>(buckets_));
}

VocabTokenizer::VocabTokenizer(const std::filesystem::path& vocab_file) : path_(vocab_file) {
  std::ifstream in(vocab_file);
  if (!in) throw IoError("cannot read vocabulary " + vocab_file.string());
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ids_.emplace(lowercase(line), kFirstWordId + static_cast<int>(ids_.size()));
  }
  if (ids_.empty()) throw ConfigError("empty vocabulary " + vocab_file.string());
}

int VocabTokenizer::word_id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnkId : it->second;
}

std::unique_ptr<Tokenizer> make_tokenizer(const std::string& id) {
  if (id.rfind("hash:", 0) == 0) {
    try {
      return std::make_unique<HashTokenizer>(std::stoi(id.substr(5)));
    } catch (const std::logic_error&) {
      throw ConfigError("bad tokenizer id '" + id + "'");
    }
  }
  if (id.rfind("vocab:", 0) == 0) return std::make_unique<VocabTokenizer>(id.substr(6));
  throw ConfigError("unknown tokenizer '" + id + "' (expected hash:<n> or vocab:<file>)");
}

}  // namespace postcheck::textenc
