#include "postcheck/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "postcheck/common/error.hpp"
#include "postcheck/common/json_util.hpp"

namespace postcheck {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes a little-endian host");

constexpr char kMagic[4] = {'P', 'C', 'K', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T take(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw CheckpointError("truncated checkpoint " + path.string());
  return v;
}

bool starts_with_any(const std::string& s, const std::vector<std::string>& prefixes) {
  for (const auto& p : prefixes) {
    if (s.rfind(p, 0) == 0) return true;
  }
  return false;
}

}  // namespace

Checkpoint Checkpoint::from_parameters(const nn::ParameterSet& params, nlohmann::json manifest) {
  Checkpoint c;
  c.manifest = std::move(manifest);
  nlohmann::json list = nlohmann::json::array();
  for (const auto* p : params.all()) {
    c.tensors.emplace(p->name, p->value);
    list.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  }
  c.manifest["parameters"] = list;
  return c;
}

const nn::Matrix& Checkpoint::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw CheckpointError("checkpoint has no tensor " + name);
  return it->second;
}

void Checkpoint::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  const auto path = dir / "params.bin";
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(os, m(r, c));
  }
  if (!os) throw IoError("failed writing " + path.string());
  write_json_file(dir / "manifest.json", manifest);
}

Checkpoint Checkpoint::load(const std::filesystem::path& dir) {
  const auto path = dir / "params.bin";
  if (!std::filesystem::exists(path)) throw CheckpointError("checkpoint not found: " + path.string());
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError("bad checkpoint magic in " + path.string());
  }
  if (take<std::uint32_t>(is, path) != kVersion) throw CheckpointError("unsupported checkpoint version");
  const auto count = take<std::uint32_t>(is, path);
  Checkpoint c;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto len = take<std::uint32_t>(is, path);
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw CheckpointError("truncated checkpoint " + path.string());
    const auto rows = take<std::uint64_t>(is, path);
    const auto cols = take<std::uint64_t>(is, path);
    nn::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index col = 0; col < m.cols(); ++col) m(r, col) = take<double>(is, path);
    if (!c.tensors.emplace(std::move(name), std::move(m)).second) {
      throw CheckpointError("duplicate tensor name in " + path.string());
    }
  }
  const auto manifest_path = dir / "manifest.json";
  if (std::filesystem::exists(manifest_path)) c.manifest = read_json_file(manifest_path);
  return c;
}

std::vector<std::string> load_into(nn::ParameterSet& params, const Checkpoint& ckpt,
                                   const std::vector<std::string>& prefixes, const std::vector<std::string>& exclude) {
  std::vector<std::string> copied, problems;
  for (auto* p : params.all()) {
    if (!starts_with_any(p->name, prefixes) || starts_with_any(p->name, exclude)) continue;
    auto it = ckpt.tensors.find(p->name);
    if (it == ckpt.tensors.end()) {
      problems.push_back(p->name + " (missing)");
      continue;
    }
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols()) {
      problems.push_back(p->name + " (shape " + std::to_string(it->second.rows()) + "x" +
                         std::to_string(it->second.cols()) + ", expected " + std::to_string(p->value.rows()) + "x" +
                         std::to_string(p->value.cols()) + ")");
      continue;
    }
    p->value = it->second;
    copied.push_back(p->name);
  }
  if (!problems.empty()) {
    std::string msg = "checkpoint does not match the model:";
    for (const auto& s : problems) msg += " " + s + ";";
    throw CheckpointError(msg);
  }
  return copied;
}

}  // namespace postcheck
