#pragma once

#include "mfp/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mfp {

// 8-bit interleaved RGB, row-major.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    ImageBuffer() = default;
    ImageBuffer(int w, int h, std::uint8_t fill = 0);

    std::uint8_t* px(int x, int y) { return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
    const std::uint8_t* px(int x, int y) const {
        return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    bool valid() const {
        return width >= 1 && height >= 1 &&
               pixels.size() == 3 * static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

// Channels-first [3 x H x W] fp32 after mean/std normalization.
struct NormalizedImage {
    Tensor chw;
    int height() const { return static_cast<int>(chw.dim(1)); }
    int width() const { return static_cast<int>(chw.dim(2)); }
};

struct Normalization {
    float mean[3] = {0.485f, 0.456f, 0.406f};
    float std[3] = {0.229f, 0.224f, 0.225f};
};

// PNG (gray, palette, RGB, 16-bit, alpha) and baseline JPEG. Alpha is
// composited over white.
ImageBuffer decode_image(const std::filesystem::path& path);
ImageBuffer decode_image_bytes(std::span<const std::uint8_t> bytes, const std::string& origin);

void write_png(const std::filesystem::path& path, const ImageBuffer& image);
std::vector<std::uint8_t> encode_png(const ImageBuffer& image);

// Half-pixel-center bilinear resampling with edge clamping; returns
// interleaved RGB floats on the 0..255 scale (no requantization).
std::vector<float> resize_bilinear(const ImageBuffer& image, int out_w, int out_h);
ImageBuffer resize_bilinear_u8(const ImageBuffer& image, int out_w, int out_h);

NormalizedImage to_model_input(const ImageBuffer& image, int out_h, int out_w,
                               const Normalization& norm = {});

// ITU-R BT.601 luma rounded to 8 bits.
std::vector<std::uint8_t> to_luma(const ImageBuffer& image);

ImageBuffer mirror_horizontal(const ImageBuffer& image);

} // namespace mfp
