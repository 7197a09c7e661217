#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <string_view>

#include "postcheck/common/error.hpp"
#include "postcheck/dataset/synth.hpp"

namespace postcheck::dataset {
namespace {

// Filler vocabulary. A few entries use the legacy tone-mark placement
// ("hòa", "thủy", "khỏe") so normalization gets exercised.
constexpr std::array<std::string_view, 60> kFiller = {
    "hôm",   "nay",   "người", "dân",   "thành", "phố",  "đường", "mới",   "cho",    "biết",
    "việc",  "này",   "được",  "một",   "những", "các",  "tại",   "trong", "năm",    "khi",
    "chúng", "tôi",   "xã",    "hội",   "kinh",  "tế",   "giá",   "thị",   "trường", "học",
    "sinh",  "bệnh",  "viện",  "nhà",   "nước",  "công", "ty",    "hòa",   "thủy",   "khỏe",
    "lúc",   "sáng",  "chiều", "tối",   "trời",  "mưa",  "nắng",  "điện",  "xe",     "máy",
    "gia",   "đình",  "bạn",   "bè",    "chia",  "sẻ",   "thông", "tin",   "mạng",   "ảnh"};

// Planted tokens: triggers lean unreliable, markers lean reliable.
constexpr std::array<std::string_view, 6> kTriggers = {"sốc", "khẩn_cấp", "lan_truyền",
                                                        "bí_mật", "cảnh_báo", "tin_đồn"};
constexpr std::array<std::string_view, 5> kMarkers = {"chính_thức", "bộ_y_tế", "thông_cáo",
                                                       "báo_chí", "xác_nhận"};
constexpr std::array<std::string_view, 5> kEmoji = {"😀", "😱", "👍", "🔥", "❤️"};

struct Size {
  int w, h;
};
constexpr std::array<Size, 4> kLandscape = {{{800, 600}, {1024, 768}, {1280, 720}, {600, 600}}};
constexpr std::array<Size, 3> kPortrait = {{{720, 1280}, {600, 800}, {1080, 1920}}};

template <class Arr>
std::string_view pick(const Arr& a, std::mt19937_64& rng) {
  return a[std::uniform_int_distribution<std::size_t>(0, a.size() - 1)(rng)];
}

std::int64_t draw_count(std::mt19937_64& rng, double log_mean) {
  std::lognormal_distribution<double> ln(log_mean, 0.9);
  return static_cast<std::int64_t>(std::floor(ln(rng)));
}

std::string make_text(int label, double s, std::mt19937_64& rng, std::uniform_real_distribution<double>& u) {
  std::vector<std::string> words;
  const int n_words = std::uniform_int_distribution<int>(8, 20)(rng);
  for (int i = 0; i < n_words; ++i) words.emplace_back(pick(kFiller, rng));

  auto insert_word = [&](std::string w) {
    const auto at = std::uniform_int_distribution<std::size_t>(0, words.size())(rng);
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), std::move(w));
  };

  const double p_trigger = 0.05 + (label == kUnreliable ? 0.85 * s : 0.0);
  if (u(rng) < p_trigger) {
    const int k = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int i = 0; i < k; ++i) insert_word(std::string(pick(kTriggers, rng)));
  }
  const double p_marker = 0.1 + (label == kReliable ? 0.5 * s : 0.0);
  if (u(rng) < p_marker) insert_word(std::string(pick(kMarkers, rng)));

  // Decorations that the normalizer must replace; independent of the label.
  char buf[64];
  if (u(rng) < 0.10) {
    std::snprintf(buf, sizeof buf, "https://tin%d.vn/bai-viet/%d", static_cast<int>(rng() % 50),
                  static_cast<int>(rng() % 100000));
    insert_word(buf);
  }
  if (u(rng) < 0.05) {
    std::snprintf(buf, sizeof buf, "lienhe%d@gmail.com", static_cast<int>(rng() % 1000));
    insert_word(buf);
  }
  if (u(rng) < 0.05) {
    std::snprintf(buf, sizeof buf, "09%08d", static_cast<int>(rng() % 100000000));
    insert_word(buf);
  }
  if (u(rng) < 0.10) insert_word(std::to_string(rng() % 10000));
  if (u(rng) < 0.05) {
    std::snprintf(buf, sizeof buf, "%d/%d/2020", static_cast<int>(rng() % 28 + 1),
                  static_cast<int>(rng() % 12 + 1));
    insert_word(buf);
  }
  if (u(rng) < 0.10) insert_word(std::string(pick(kEmoji, rng)));

  std::string text;
  for (std::size_t i = 0; i < words.size(); ++i) text += (i ? " " : "") + words[i];
  if (u(rng) < 0.05) text = "<p>" + text + "</p><br/>";
  return text;
}

}  // namespace

std::vector<RawRecord> synthesize_corpus(int n, std::uint64_t seed, const SignalSpec& spec) {
  if (n <= 0) throw ConfigError("synthesize_corpus: n must be positive");
  const double s = std::clamp(spec.signal, 0.0, 1.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const int n_users = std::max(2, static_cast<int>(std::lround(spec.users_per_post * n)));
  // Users [0, n_bad) lean unreliable.
  const int n_bad = std::max(1, static_cast<int>(std::lround(0.2 * n_users)));

  std::vector<RawRecord> out;
  out.reserve(static_cast<std::size_t>(n));
  char buf[64];
  for (int i = 0; i < n; ++i) {
    RawRecord r;
    std::snprintf(buf, sizeof buf, "p%06d", i);
    r.id = buf;
    const int label = u(rng) < spec.unreliable_share ? kUnreliable : kReliable;
    r.label = label;

    int user = 0;
    if (u(rng) < 0.75 * s) {
      user = label == kUnreliable ? std::uniform_int_distribution<int>(0, n_bad - 1)(rng)
                                  : std::uniform_int_distribution<int>(n_bad, n_users - 1)(rng);
    } else {
      user = std::uniform_int_distribution<int>(0, n_users - 1)(rng);
    }
    std::snprintf(buf, sizeof buf, "u%05d", user);
    r.user_id = buf;

    const double bad = label == kUnreliable ? s : 0.0;
    r.likes = draw_count(rng, 3.0 - 0.4 * bad);
    r.comments = draw_count(rng, 1.5 + 0.8 * bad);
    r.shares = draw_count(rng, 1.0 + 1.2 * bad);

    const auto day = std::uniform_int_distribution<std::int64_t>(0, spec.time_span / 86400 - 1)(rng);
    int hour = std::uniform_int_distribution<int>(0, 23)(rng);
    if (u(rng) < 0.5 * bad) {
      constexpr std::array<int, 6> night = {22, 23, 0, 1, 2, 3};
      hour = night[std::uniform_int_distribution<std::size_t>(0, night.size() - 1)(rng)];
    }
    const int minute = std::uniform_int_distribution<int>(0, 59)(rng);
    r.timestamp = spec.start_time + day * 86400 + hour * 3600 + minute * 60 +
                  std::uniform_int_distribution<int>(0, 59)(rng);

    const double p_image = spec.image_rate * (label == kUnreliable ? 1.0 - 0.5 * s : 1.0);
    if (u(rng) < p_image) {
      const int k = std::uniform_int_distribution<int>(1, 4)(rng);
      const bool portrait = u(rng) < 0.2 + 0.6 * bad;
      for (int j = 0; j < k; ++j) {
        const Size sz = portrait ? kPortrait[rng() % kPortrait.size()] : kLandscape[rng() % kLandscape.size()];
        std::snprintf(buf, sizeof buf, "synthetic://%dx%d/%s_%d.jpg", sz.w, sz.h, r.id.c_str(), j);
        r.image_refs.emplace_back(buf);
      }
    }

    r.text = make_text(label, s, rng, u);

    if (u(rng) < spec.missing_rate) r.likes.reset();
    if (u(rng) < spec.missing_rate) r.comments.reset();
    if (u(rng) < spec.missing_rate) r.shares.reset();
    if (u(rng) < spec.missing_rate) r.timestamp.reset();
    if (u(rng) < spec.missing_rate / 2) r.text.reset();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace postcheck::dataset
