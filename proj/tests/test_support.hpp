#pragma once

#include "mfp/image.hpp"
#include "mfp/safetensors.hpp"
#include "mfp/tensor.hpp"
#include "mfp/vit.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

namespace mfp::test {

inline std::filesystem::path fixture(const std::string& rel) {
    return std::filesystem::path(MFP_FIXTURE_DIR) / rel;
}

inline std::filesystem::path weights_path() {
    return std::filesystem::path(MFP_WEIGHTS_FILE);
}

inline std::string map_name(int i) {
    return "maps/map_" + std::string(i < 10 ? "0" : "") + std::to_string(i) + ".png";
}

// One model per process; construction parses ~86 MB of weights.
inline const VitModel& shared_model() {
    static const VitModel model(load_weights(weights_path(), ViTConfig::vit_small(16)), ViTConfig::vit_small(16));
    return model;
}

inline safetensors::Archive oracle(int i) {
    return safetensors::read(fixture("oracle/map_0" + std::to_string(i) + ".safetensors"));
}

struct DiffStats {
    double max_abs = 0.0;
    double mean_abs = 0.0;
};

inline DiffStats diff(const Tensor& a, const Tensor& b) {
    DiffStats s;
    const std::size_t n = std::min(a.numel(), b.numel());
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::abs(static_cast<double>(a[i]) - b[i]);
        s.max_abs = std::max(s.max_abs, d);
        s.mean_abs += d;
    }
    s.mean_abs /= static_cast<double>(n ? n : 1);
    return s;
}

} // namespace mfp::test
