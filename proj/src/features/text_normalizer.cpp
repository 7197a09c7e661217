#include <regex>
#include <unordered_map>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "postcheck/common/error.hpp"
#include "postcheck/features.hpp"
#include "postcheck/text_patterns.hpp"

namespace postcheck::features {
namespace {

std::u32string to_u32(std::string_view s) {
  const auto us = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  std::u32string out(static_cast<std::size_t>(us.countChar32()), U'\0');
  UErrorCode err = U_ZERO_ERROR;
  us.toUTF32(reinterpret_cast<UChar32*>(out.data()), static_cast<int32_t>(out.size()), err);
  return out;
}

std::string to_utf8(std::u32string_view s) {
  const auto us = icu::UnicodeString::fromUTF32(reinterpret_cast<const UChar32*>(s.data()),
                                                static_cast<int32_t>(s.size()));
  std::string out;
  us.toUTF8String(out);
  return out;
}

// (tone-marked first vowel, second vowel) -> (plain first vowel, tone-marked second vowel)
using ToneMap = std::unordered_map<std::u32string, std::u32string>;

const ToneMap& tone_map() {
  static const ToneMap map = [] {
    using namespace patterns;
    ToneMap m;
    for (std::size_t t = 0; t < 5; ++t) {
      auto add = [&](std::u32string_view marked_first, char32_t second_plain, char32_t first_plain,
                     std::u32string_view marked_second) {
        std::u32string key(marked_first);
        key.push_back(second_plain);
        std::u32string value(1, first_plain);
        value += marked_second;
        m.emplace(std::move(key), std::move(value));
      };
      add(kToneO[t], U'a', U'o', kToneA[t]);
      add(kToneO[t], U'e', U'o', kToneE[t]);
      add(kToneU[t], U'y', U'u', kToneY[t]);
      add(kToneOUpper[t], U'a', U'O', kToneA[t]);
      add(kToneOUpper[t], U'e', U'O', kToneE[t]);
      add(kToneUUpper[t], U'y', U'U', kToneY[t]);
      add(kToneOUpper[t], U'A', U'O', kToneAUpper[t]);
      add(kToneOUpper[t], U'E', U'O', kToneEUpper[t]);
      add(kToneUUpper[t], U'Y', U'U', kToneYUpper[t]);
    }
    return m;
  }();
  return map;
}

bool is_emoji_component(char32_t c) {
  return c == 0x200D || c == 0xFE0F || c == 0xFE0E || c == 0x20E3 || (c >= 0x1F3FB && c <= 0x1F3FF) ||
         (c >= 0xE0020 && c <= 0xE007F);
}

bool is_emoji_start(char32_t c) {
  if (c < 0x80) return false;  // '#', '*' and digits are emoji only in keycap sequences
  return u_hasBinaryProperty(static_cast<UChar32>(c), UCHAR_EXTENDED_PICTOGRAPHIC) ||
         (c >= 0x1F1E6 && c <= 0x1F1FF);
}

// Replaces every emoji run with " <emoji> ".
std::u32string replace_emoji(std::u32string_view s, int& count) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (!is_emoji_start(s[i])) {
      out.push_back(s[i++]);
      continue;
    }
    std::size_t j = i + 1;
    while (j < s.size() && (is_emoji_start(s[j]) || is_emoji_component(s[j]))) ++j;
    out += U" <emoji> ";
    ++count;
    i = j;
  }
  return out;
}

std::u32string collapse_whitespace(std::u32string_view s) {
  std::u32string out;
  out.reserve(s.size());
  bool pending = false;
  for (char32_t c : s) {
    const bool space = u_isUWhiteSpace(static_cast<UChar32>(c)) || c == 0x200B;
    if (space) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(U' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

std::string decode_entities(const std::string& s) {
  static const std::regex entity(R"(&(amp|lt|gt|quot|apos|nbsp|#[0-9]{1,7}|#[xX][0-9a-fA-F]{1,6});)");
  std::string out;
  auto begin = std::sregex_iterator(s.begin(), s.end(), entity);
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out.append(s, last, static_cast<std::size_t>(m.position()) - last);
    const std::string name = m[1].str();
    std::u32string cp;
    if (name == "amp") cp = U"&";
    else if (name == "lt") cp = U"<";
    else if (name == "gt") cp = U">";
    else if (name == "quot") cp = U"\"";
    else if (name == "apos") cp = U"'";
    else if (name == "nbsp") cp = U" ";
    else {
      const bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
      const unsigned long v = std::stoul(name.substr(hex ? 2 : 1), nullptr, hex ? 16 : 10);
      cp = (v > 0 && v <= 0x10FFFF && !(v >= 0xD800 && v <= 0xDFFF)) ? std::u32string(1, static_cast<char32_t>(v))
                                                                       : std::u32string(U" ");
    }
    out += to_utf8(cp);
    last = static_cast<std::size_t>(m.position() + m.length());
  }
  out.append(s, last, std::string::npos);
  return out;
}

std::string strip_html(std::string s) {
  static const std::regex tag{std::string(patterns::kHtmlTag)};
  // Decoding and stripping can expose new markup; iterate to a fixpoint.
  for (int round = 0; round < 16; ++round) {
    std::string next = std::regex_replace(decode_entities(s), tag, " ");
    if (next == s) break;
    s = std::move(next);
  }
  return s;
}

}  // namespace

std::string nfc(std::string_view utf8) {
  UErrorCode err = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(err);
  if (U_FAILURE(err)) throw ConfigError("ICU NFC normalizer unavailable");
  const auto us = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  const icu::UnicodeString normalized = n->normalize(us, err);
  if (U_FAILURE(err)) throw ConfigError("NFC normalization failed");
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::string modernize_tone_marks(std::string_view utf8) {
  const std::u32string s = to_u32(utf8);
  const ToneMap& map = tone_map();
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    // Only open syllables: the cluster must end the word.
    if (i + 1 < s.size() && (i + 2 == s.size() || !u_isalpha(static_cast<UChar32>(s[i + 2])))) {
      if (auto it = map.find(s.substr(i, 2)); it != map.end()) {
        out += it->second;
        ++i;
        continue;
      }
    }
    out.push_back(s[i]);
  }
  return to_utf8(out);
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

NormalizedText normalize_text(std::string_view raw) {
  NormalizedText out;
  for (auto kind : patterns::kPlaceholderKinds) out.replacement_counts[std::string(kind)] = 0;
  if (raw.empty()) return out;

  std::string s = strip_html(modernize_tone_marks(nfc(raw)));

  static const std::vector<std::pair<std::string, std::regex>> compiled = [] {
    std::vector<std::pair<std::string, std::regex>> v;
    for (const auto& r : patterns::kReplacements) {
      v.emplace_back(std::string(r.kind), std::regex(std::string(r.regex)));
    }
    return v;
  }();
  for (const auto& [kind, re] : compiled) {
    const std::string token = " <" + kind + "> ";
    std::string next;
    int count = 0;
    std::size_t last = 0;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
      next.append(s, last, static_cast<std::size_t>(it->position()) - last);
      next += token;
      last = static_cast<std::size_t>(it->position() + it->length());
      ++count;
    }
    if (count == 0) continue;
    next.append(s, last, std::string::npos);
    s = std::move(next);
    out.replacement_counts[kind] += count;
  }

  int emoji = 0;
  const std::u32string replaced = replace_emoji(to_u32(s), emoji);
  out.replacement_counts[std::string(patterns::kEmojiKind)] = emoji;
  // Placeholder insertion can turn a syllable into an open one; fix those too.
  out.text = modernize_tone_marks(to_utf8(collapse_whitespace(replaced)));
  return out;
}

}  // namespace postcheck::features
