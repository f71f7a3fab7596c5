#include "mfp/viz.hpp"

#include "mfp/error.hpp"
#include "mfp/tensor_math.hpp"

#include <algorithm>
#include <cmath>

namespace mfp {

namespace {

constexpr std::uint32_t kOranges[9] = {0xfff5eb, 0xfee6ce, 0xfdd0a2, 0xfdae6b, 0xfd8d3c,
                                       0xf16913, 0xd94801, 0xa63603, 0x7f2704};

std::uint8_t channel(std::uint32_t rgb, int c) {
    return static_cast<std::uint8_t>((rgb >> (16 - 8 * c)) & 0xff);
}

std::uint8_t round_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

void check_grid(const FeatureBundle& b, const ViTConfig& config, const char* what) {
    const auto tokens = static_cast<std::size_t>(config.num_tokens());
    if (b.keys.rank() != 2 || b.keys.dim(0) != tokens) {
        throw ShapeError(std::string(what) + ": feature bundle does not match the backbone grid");
    }
}

} // namespace

Rgb oranges(double t) {
    t = std::isfinite(t) ? std::clamp(t, 0.0, 1.0) : 0.0;
    const double pos = t * 8.0;
    const int i = std::min(7, static_cast<int>(pos));
    const double f = pos - i;
    Rgb out{};
    for (int c = 0; c < 3; ++c) {
        const double a = channel(kOranges[i], c), b = channel(kOranges[i + 1], c);
        out[static_cast<std::size_t>(c)] = round_u8(a + (b - a) * f);
    }
    return out;
}

PatchGrid cls_attention_grid(const FeatureBundle& bundle, const ViTConfig& config) {
    const auto heads = static_cast<std::size_t>(config.num_heads);
    const auto n = static_cast<std::size_t>(config.num_patches());
    if (bundle.cls_attention.rank() != 2 || bundle.cls_attention.dim(0) != heads ||
        bundle.cls_attention.dim(1) != n + 1) {
        throw ShapeError("cls_attention_grid: attention is " + shape_to_string(bundle.cls_attention.shape()));
    }
    PatchGrid g{config.grid_h(), config.grid_w(), std::vector<double>(n, 0.0)};
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t j = 0; j < n; ++j) g.values[j] += bundle.cls_attention.at(h, j + 1);
    }
    double total = 0.0;
    for (double v : g.values) total += v;
    for (double& v : g.values) v = total > 0.0 ? v / total : 1.0 / static_cast<double>(n);
    return g;
}

PatchGrid min_max_scaled(PatchGrid grid) {
    if (grid.values.empty()) return grid;
    const auto [lo, hi] = std::minmax_element(grid.values.begin(), grid.values.end());
    const double a = *lo, span = *hi - *lo;
    for (double& v : grid.values) v = span > 0.0 ? (v - a) / span : 0.0;
    return grid;
}

ImageBuffer render_heatmap(const ImageBuffer& base, const PatchGrid& g, double alpha) {
    if (!base.valid()) {
        throw ShapeError("render_heatmap: invalid base image");
    }
    if (g.rows < 1 || g.cols < 1 || g.values.size() != static_cast<std::size_t>(g.rows) * g.cols) {
        throw ShapeError("render_heatmap: malformed grid");
    }
    ImageBuffer out(base.width, base.height);
    const double sy = static_cast<double>(g.rows) / base.height;
    const double sx = static_cast<double>(g.cols) / base.width;
    for (int y = 0; y < base.height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, g.rows - 1.0);
        const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, g.rows - 1);
        const double wy = fy - y0;
        for (int x = 0; x < base.width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, g.cols - 1.0);
            const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, g.cols - 1);
            const double wx = fx - x0;
            const double v = (1 - wy) * ((1 - wx) * g.at(y0, x0) + wx * g.at(y0, x1)) +
                             wy * ((1 - wx) * g.at(y1, x0) + wx * g.at(y1, x1));
            const Rgb heat = oranges(v);
            for (int c = 0; c < 3; ++c) {
                out.px(x, y)[c] = round_u8(alpha * heat[static_cast<std::size_t>(c)] + (1.0 - alpha) * base.px(x, y)[c]);
            }
        }
    }
    return out;
}

ImageBuffer render_attention(const ImageBuffer& image, const FeatureBundle& bundle, const ViTConfig& config,
                             double alpha) {
    return render_heatmap(image, min_max_scaled(cls_attention_grid(bundle, config)), alpha);
}

ImageBuffer render_pca(const SelfSimMatrix& s, const ViTConfig& config, int out_w, int out_h) {
    const auto n = static_cast<std::size_t>(config.num_patches());
    if (s.size() != n + 1) {
        throw ShapeError("render_pca: self-similarity matrix does not match the backbone grid");
    }
    if (out_w < 1 || out_h < 1) {
        throw ShapeError("render_pca: output size must be positive");
    }
    Tensor rows({n, n + 1});
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(s.s.raw() + (i + 1) * (n + 1), n + 1, rows.raw() + i * (n + 1));
    }
    const PcaResult pca = pca_top_k(rows, 3);
    std::vector<Rgb> colors(n);
    for (std::size_t c = 0; c < 3; ++c) {
        PatchGrid comp{config.grid_h(), config.grid_w(), std::vector<double>(n)};
        for (std::size_t i = 0; i < n; ++i) comp.values[i] = pca.projected.at(i, c);
        comp = min_max_scaled(std::move(comp));
        for (std::size_t i = 0; i < n; ++i) colors[i][c] = round_u8(255.0 * comp.values[i]);
    }
    ImageBuffer out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        const int gy = std::min(config.grid_h() - 1, static_cast<int>(static_cast<long long>(y) * config.grid_h() / out_h));
        for (int x = 0; x < out_w; ++x) {
            const int gx =
                std::min(config.grid_w() - 1, static_cast<int>(static_cast<long long>(x) * config.grid_w() / out_w));
            const Rgb& c = colors[static_cast<std::size_t>(gy) * config.grid_w() + gx];
            std::copy(c.begin(), c.end(), out.px(x, y));
        }
    }
    return out;
}

int query_patch(int x, int y, int image_w, int image_h, const ViTConfig& config) {
    if (x < 0 || y < 0 || x >= image_w || y >= image_h) {
        throw UsageError("query pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") is outside the " +
                         std::to_string(image_w) + "x" + std::to_string(image_h) + " image");
    }
    const int gx = static_cast<int>(static_cast<long long>(x) * config.grid_w() / image_w);
    const int gy = static_cast<int>(static_cast<long long>(y) * config.grid_h() / image_h);
    return gy * config.grid_w() + gx;
}

PatchGrid cross_similarity(const FeatureBundle& source, const FeatureBundle& target, int patch,
                           const ViTConfig& config) {
    check_grid(source, config, "cross_similarity");
    check_grid(target, config, "cross_similarity");
    const int n = config.num_patches();
    if (patch < 0 || patch >= n) {
        throw UsageError("cross_similarity: patch index out of range");
    }
    const auto q = source.keys.row(static_cast<std::size_t>(patch) + 1);
    PatchGrid g{config.grid_h(), config.grid_w(), std::vector<double>(static_cast<std::size_t>(n))};
    for (int j = 0; j < n; ++j) {
        g.values[static_cast<std::size_t>(j)] =
            cosine_similarity(q, target.keys.row(static_cast<std::size_t>(j) + 1)).value;
    }
    return g;
}

ImageBuffer render_xsim(const ImageBuffer& target_image, const PatchGrid& similarity, double alpha) {
    return render_heatmap(target_image, min_max_scaled(similarity), alpha);
}

} // namespace mfp
