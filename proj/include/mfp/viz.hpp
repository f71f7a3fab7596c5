#pragma once

#include "mfp/image.hpp"
#include "mfp/metrics.hpp"
#include "mfp/vit.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace mfp {

using Rgb = std::array<std::uint8_t, 3>;

/// Single-hue ramp from near-white (0) to dark orange (1), 9 evenly spaced
/// stops interpolated linearly in sRGB:
/// fff5eb fee6ce fdd0a2 fdae6b fd8d3c f16913 d94801 a63603 7f2704
Rgb oranges(double t);

// Per-patch grid values in row-major [grid_h x grid_w].
struct PatchGrid {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;
    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

// Mean over heads of the CLS query's attention to patch tokens, renormalized to sum 1.
PatchGrid cls_attention_grid(const FeatureBundle& bundle, const ViTConfig& config);

// Affine map of the values onto [0, 1]; a constant grid maps to all zeros.
PatchGrid min_max_scaled(PatchGrid grid);

// Bilinear upsampling of a [0,1] grid to width x height, colormapped and
// blended over `base` with the given heat opacity.
ImageBuffer render_heatmap(const ImageBuffer& base, const PatchGrid& unit_grid, double alpha = 0.6);

ImageBuffer render_attention(const ImageBuffer& image, const FeatureBundle& bundle, const ViTConfig& config,
                             double alpha = 0.6);

// Patch rows of S reduced to three principal components, each min-max scaled
// to 0..255 and shown as R, G, B per patch; nearest-neighbour upsampled.
ImageBuffer render_pca(const SelfSimMatrix& s, const ViTConfig& config, int out_w, int out_h);

// Patch index under pixel (x, y) of an image of the given size; UsageError outside.
int query_patch(int x, int y, int image_w, int image_h, const ViTConfig& config);

// Cosine similarity of source patch `patch`'s key with every target patch key.
PatchGrid cross_similarity(const FeatureBundle& source, const FeatureBundle& target, int patch,
                           const ViTConfig& config);

ImageBuffer render_xsim(const ImageBuffer& target_image, const PatchGrid& similarity, double alpha = 0.6);

} // namespace mfp
