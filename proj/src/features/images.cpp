#include <charconv>
#include <memory>
#include <unordered_map>

#include "postcheck/common/json_util.hpp"
#include "postcheck/features.hpp"

namespace postcheck::features {

std::optional<ImageSize> synthetic_image_size(std::string_view ref) {
  constexpr std::string_view prefix = "synthetic://";
  if (ref.substr(0, prefix.size()) != prefix) return std::nullopt;
  ref.remove_prefix(prefix.size());
  int w = 0, h = 0;
  auto [p, ec] = std::from_chars(ref.data(), ref.data() + ref.size(), w);
  if (ec != std::errc() || p == ref.data() + ref.size() || *p != 'x') return std::nullopt;
  ++p;
  auto [q, ec2] = std::from_chars(p, ref.data() + ref.size(), h);
  if (ec2 != std::errc() || w <= 0 || h <= 0) return std::nullopt;
  return ImageSize{static_cast<double>(w), static_cast<double>(h)};
}

ImageResolver default_image_resolver() { return synthetic_image_size; }

ImageResolver table_image_resolver(const std::filesystem::path& json_table) {
  auto table = std::make_shared<std::unordered_map<std::string, ImageSize>>();
  for (const auto& [ref, wh] : read_json_file(json_table).items()) {
    (*table)[ref] = {wh.at(0).get<double>(), wh.at(1).get<double>()};
  }
  return [table](std::string_view ref) -> std::optional<ImageSize> {
    if (auto it = table->find(std::string(ref)); it != table->end()) return it->second;
    return synthetic_image_size(ref);
  };
}

ImageFeatures compute_image_features(std::span<const std::string> image_refs, const ImageResolver& resolver) {
  ImageFeatures f;
  f.image_count = static_cast<int>(image_refs.size());
  double sum = 0.0;
  int resolved = 0;
  for (const auto& ref : image_refs) {
    if (!resolver) break;
    const auto size = resolver(ref);
    if (!size || size->width <= 0 || size->height <= 0) continue;
    sum += size->width / size->height;
    ++resolved;
  }
  f.image_aspect_mean = resolved ? sum / resolved : 0.0;
  return f;
}

}  // namespace postcheck::features
