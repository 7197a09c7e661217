#pragma once

// The one place where the text-normalization pattern set lives. Any change to
// a pattern must bump kPatternSetVersion; tests pin behaviour against it.

#include <array>
#include <string_view>

namespace postcheck::features::patterns {

inline constexpr std::string_view kPatternSetVersion = "1.0.0";

struct Replacement {
  std::string_view kind;
  std::string_view regex;  // ECMAScript, applied to UTF-8 bytes
};

// HTML tags other than our own placeholders.
inline constexpr std::string_view kHtmlTag =
    R"(<(?!(?:email|url|phone|datetime|number|emoji)>)[^<>]*>)";

// Applied in this order; earlier kinds win over later ones.
inline constexpr std::array<Replacement, 5> kReplacements = {{
    {"email", R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,})"},
    {"url",
     R"((?:(?:https?|ftp)://|www\.)[^\s<>"]+|\b[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.(?:com|vn|net|org|info|io|gov|edu|co)\b(?:/[^\s<>"]*)?)"},
    {"phone", R"((?:\+84|\b0)\d{2,3}[ .\-]?\d{3}[ .\-]?\d{3,4}\b)"},
    {"datetime",
     R"(\b\d{1,4}[/\-.]\d{1,2}[/\-.]\d{2,4}\b|\b\d{1,2}/\d{1,2}\b|\b\d{1,2}(?::|h)\d{2}(?::\d{2})?\b)"},
    {"number", R"(\b\d+(?:[.,]\d+)*\b)"},
}};

// Emoji runs are found by Unicode property (Extended_Pictographic plus
// joiners, variation selectors, skin-tone modifiers and regional indicators).
inline constexpr std::string_view kEmojiKind = "emoji";

inline constexpr std::array<std::string_view, 6> kPlaceholderKinds = {"email", "url", "phone",
                                                                      "datetime", "number", "emoji"};

// Legacy -> modern tone placement on the open-syllable clusters oa, oe, uy.
// Index = tone: grave, acute, hook above, tilde, dot below.
inline constexpr std::array<std::u32string_view, 5> kToneO = {U"ò", U"ó", U"ỏ", U"õ", U"ọ"};
inline constexpr std::array<std::u32string_view, 5> kToneOUpper = {U"Ò", U"Ó", U"Ỏ", U"Õ", U"Ọ"};
inline constexpr std::array<std::u32string_view, 5> kToneU = {U"ù", U"ú", U"ủ", U"ũ", U"ụ"};
inline constexpr std::array<std::u32string_view, 5> kToneUUpper = {U"Ù", U"Ú", U"Ủ", U"Ũ", U"Ụ"};
inline constexpr std::array<std::u32string_view, 5> kToneA = {U"à", U"á", U"ả", U"ã", U"ạ"};
inline constexpr std::array<std::u32string_view, 5> kToneAUpper = {U"À", U"Á", U"Ả", U"Ã", U"Ạ"};
inline constexpr std::array<std::u32string_view, 5> kToneE = {U"è", U"é", U"ẻ", U"ẽ", U"ẹ"};
inline constexpr std::array<std::u32string_view, 5> kToneEUpper = {U"È", U"É", U"Ẻ", U"Ẽ", U"Ẹ"};
inline constexpr std::array<std::u32string_view, 5> kToneY = {U"ỳ", U"ý", U"ỷ", U"ỹ", U"ỵ"};
inline constexpr std::array<std::u32string_view, 5> kToneYUpper = {U"Ỳ", U"Ý", U"Ỷ", U"Ỹ", U"Ỵ"};

}  // namespace postcheck::features::patterns
