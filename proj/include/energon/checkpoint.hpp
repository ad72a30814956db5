#pragma once

#include <string>

#include "energon/cnn.hpp"

namespace energon {

// Checkpoint layout:
//   text header ("key=value" lines, terminated by a blank line) holding the
//   architecture spec, stage/taxonomy names and class list, then every
//   parameter tensor flattened in declaration order as little-endian
//   float64, then a trailing FNV-1a 64 checksum of the parameter bytes.
struct CheckpointInfo {
  std::string stage;
  std::string taxonomy;
  std::vector<std::string> classes;
};

void save_checkpoint(const std::string& path, const CnnModel& model,
                     const CheckpointInfo& info);

struct LoadedCheckpoint {
  CnnModel model;
  CheckpointInfo info;
};

// DataError on malformed header, truncated payload, or checksum mismatch.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace energon
