#pragma once

#include "mfp/tensor.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mfp::safetensors {

// A decoded archive: string-keyed fp32 tensors (F16/BF16 entries are upcast)
// plus the optional "__metadata__" string map.
struct Archive {
    std::map<std::string, Tensor> tensors;
    std::map<std::string, std::string> metadata;
};

Archive read(const std::filesystem::path& path);
Archive parse(const std::vector<unsigned char>& bytes, const std::string& origin = "<memory>");

// Writes every tensor as little-endian F32, keys in lexicographic order.
void write(const std::filesystem::path& path, const Archive& archive);
std::vector<unsigned char> serialize(const Archive& archive);

float half_to_float(std::uint16_t h);

} // namespace mfp::safetensors
