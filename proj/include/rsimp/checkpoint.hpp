#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>

#include "rsimp/neural.hpp"
#include "rsimp/tensor.hpp"

namespace rsimp {

/// Complete training state: parameters plus Adam moments, step counter, RNG
/// state and validation bookkeeping. This is the unit of transfer learning.
struct Checkpoint {
  ModelConfig model_config;
  ParamMap<float> parameters;
  ParamMap<float> adam_m;
  ParamMap<float> adam_v;
  uint64_t step = 0;
  int64_t epoch = 0;
  std::array<uint64_t, 4> rng_state{};
  double best_val_loss = std::numeric_limits<double>::infinity();
};

/// Binary, little-endian, portable:
///   magic "RSCKPT\0", u32 version=1,
///   u64 config-JSON length, config JSON (model config + epoch),
///   parameter tensors in lexicographic name order
///     (u16 name length, name, u8 rank, u64 per dim, float32 payload),
///   Adam m then v tensors in the same order,
///   u64 step, 32 bytes RNG state, f64 best_val_loss.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

/// Throws std::runtime_error on bad magic, unsupported version or a
/// truncated file.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace rsimp
