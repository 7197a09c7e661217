#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "postcheck/nn/parameters.hpp"

namespace postcheck {

// Named tensors plus a JSON manifest. On disk: a directory holding
// params.bin (little-endian float64 payload) and manifest.json.
//
// params.bin layout: "PCKT", u32 version, u32 tensor count, then per tensor
// u32 name length, name bytes, u64 rows, u64 cols, rows*cols row-major f64.
struct Checkpoint {
  std::map<std::string, nn::Matrix> tensors;
  // Holds "config", "seed", "step", "metrics", "provenance" and "parameters".
  nlohmann::json manifest = nlohmann::json::object();

  static Checkpoint from_parameters(const nn::ParameterSet& params, nlohmann::json manifest = nlohmann::json::object());

  bool contains(const std::string& name) const { return tensors.count(name) > 0; }
  const nn::Matrix& at(const std::string& name) const;

  void save(const std::filesystem::path& dir) const;
  static Checkpoint load(const std::filesystem::path& dir);
};

// Copies every tensor whose name starts with one of `prefixes` (and is not in
// `exclude`) into `params`. Missing names and shape mismatches are collected
// and reported together in one CheckpointError. Returns the copied names.
std::vector<std::string> load_into(nn::ParameterSet& params, const Checkpoint& ckpt,
                                   const std::vector<std::string>& prefixes,
                                   const std::vector<std::string>& exclude = {});

}  // namespace postcheck
