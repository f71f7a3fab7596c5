#pragma once

#include "mfp/image.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mfp {

struct ImagePair {
    std::string pair_id;
    std::filesystem::path generated;
    std::filesystem::path target;
};

struct PairManifest {
    std::vector<ImagePair> pairs;       // sorted by pair_id
    std::vector<std::string> warnings;  // unmatched or ambiguous files
};

// Matches image files (.png/.jpg/.jpeg) in the two directories by stem.
PairManifest discover_pairs(const std::filesystem::path& generated_dir, const std::filesystem::path& target_dir);

enum class DegradeKind { noise, blur, patch_shuffle };

DegradeKind parse_degrade_kind(std::string_view kind);

/// noise:         additive Gaussian per sample, sigma = magnitude (8-bit scale)
/// blur:          Gaussian blur, sigma = magnitude pixels
/// patch_shuffle: magnitude in [0, 1] is the fraction of whole tile x tile
///                blocks that are cyclically permuted (every selected tile moves)
struct DegradeSpec {
    DegradeKind kind = DegradeKind::noise;
    double magnitude = 0.0;
    std::uint64_t seed = 0;
    int tile = 16;
};

ImageBuffer degrade(const ImageBuffer& image, const DegradeSpec& spec);

} // namespace mfp
