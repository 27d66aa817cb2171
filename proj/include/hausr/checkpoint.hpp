#pragma once

#include <cstdint>
#include <string>

#include "hausr/params.hpp"

namespace hausr::nn {

/// Length-prefixed binary checkpoint. Layout, all little-endian:
///   magic "HAUSR1" | u64 entry count |
///   per entry: u32 name length | name bytes | u32 rank | u64 dims... |
///              f64 values (row-major) |
///   u64 version
struct Checkpoint {
  NamedTensors entries;
  std::uint64_t version = 0;
};

void save_checkpoint(const std::string& path, const NamedTensors& entries,
                     std::uint64_t version);
void save_checkpoint(const std::string& path, const ParamSet& params);

/// Throws std::runtime_error on any structural defect (bad magic, short
/// read, trailing bytes).
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hausr::nn
