#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "somn/model.hpp"
#include "somn/pretrain.hpp"

namespace somn {

// Sectioned binary container (versioned, little-endian; layout documented in
// docs/checkpoint_format.md). Holds an optional model graph, an optional
// filter bank, and free-form string metadata.
struct Checkpoint {
  std::optional<ModelGraph> model;
  std::optional<FilterBank> filterbank;
  std::map<std::string, std::string> meta;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace somn
