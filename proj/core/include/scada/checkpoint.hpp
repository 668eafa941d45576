#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scada/model.hpp"

namespace scada {

enum class Provenance { SourceOnly, Adapted, Unlearned };

std::string to_string(Provenance p);

struct CheckpointMeta {
  std::vector<int> forget_classes;
  Provenance provenance = Provenance::SourceOnly;
  std::uint64_t seed = 0;
  std::string config_hash;
};

struct Checkpoint {
  Classifier model;
  CheckpointMeta meta;
};

inline constexpr int kCheckpointFormatVersion = 1;

/// JSON container: {"format": "scada-checkpoint", "version": 1, "architecture",
/// "num_classes", "parameters", "meta"}. Doubles are written with round-trip
/// precision so a reload reproduces forward outputs bit for bit.
std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace scada
