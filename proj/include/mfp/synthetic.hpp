#pragma once

#include "mfp/safetensors.hpp"
#include "mfp/vit.hpp"

#include <cstdint>

namespace mfp {

/// Deterministic stand-in checkpoint with the published self-supervised
/// ViT naming and shapes (original-release keys, 4-D patch projection,
/// [1, 1 + g*g, d] positional table). Values come from a counter-based
/// integer generator, so the file is identical on every platform.
///
/// Per-tensor recipe (z ~ approx. N(0, 1), Irwin-Hall of four uniforms):
///   patch projection  z / sqrt(C*P*P)     qkv / fc1     z / sqrt(fan_in)
///   attn out / fc2    0.5 z / sqrt(fan_in)  biases      0.02-0.1 z
///   norm weights      1 + 0.1 z             norm biases 0.05 z
///   cls token         0.5 z                 positional  0.1 z
safetensors::Archive make_synthetic_checkpoint(const ViTConfig& config, std::uint64_t seed = 0x5eed,
                                               int pos_grid = 14);

// 64-bit FNV-1a, used for checkpoint fingerprints.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ull);

} // namespace mfp
