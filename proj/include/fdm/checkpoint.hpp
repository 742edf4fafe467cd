#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fdm/tensor.hpp"

namespace fdm {

// Binary checkpoint container. Layout, all integers little-endian:
//   8-byte magic "FDMCKPT1"
//   u32 config length, config bytes (human-readable key=value lines)
//   records until end of file, each:
//     u32 name length, name bytes, u32 rank, rank x u64 extents,
//     float64 payload in row-major order.
// Records are written in parameter registration order.

struct CheckpointData {
    std::string config_text;
    std::vector<std::pair<std::string, Tensor>> records;
};

void save_checkpoint(const std::string& path, const ParamStore& ps,
                     const std::string& config_text);

CheckpointData load_checkpoint(const std::string& path);

// Copies record values into matching parameters. Every record must match an
// existing parameter in name and shape, and every parameter must be covered.
void restore_params(ParamStore& ps, const CheckpointData& data);

}  // namespace fdm
