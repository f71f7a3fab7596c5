#include "mfp/metrics.hpp"

#include "mfp/error.hpp"
#include "mfp/tensor_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfp {

void LossWeights::validate() const {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(lambda3 >= 0.0)) {
        throw ConfigError("loss weights must be nonnegative");
    }
}

SelfSimMatrix self_similarity(const Tensor& keys) {
    require_rank(keys, 2, "self_similarity");
    require_finite(keys, "self_similarity input");
    const std::size_t n = keys.dim(0), d = keys.dim(1);
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (float v : keys.row(i)) acc += static_cast<double>(v) * v;
        norms[i] = std::sqrt(acc);
    }

    SelfSimMatrix out{Tensor({n, n}), false};
    for (std::size_t i = 0; i < n; ++i) {
        const float* ki = keys.raw() + i * d;
        if (norms[i] == 0.0) out.degenerate = true;
        out.s.at(i, i) = 1.0f;
        for (std::size_t j = i + 1; j < n; ++j) {
            double value = 0.0;
            if (norms[i] != 0.0 && norms[j] != 0.0) {
                const float* kj = keys.raw() + j * d;
                double dot = 0.0;
                for (std::size_t t = 0; t < d; ++t) dot += static_cast<double>(ki[t]) * kj[t];
                value = std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
            }
            out.s.at(i, j) = static_cast<float>(value);
            out.s.at(j, i) = static_cast<float>(value);
        }
    }
    return out;
}

double global_feature_sim(const Tensor& cls_o, const Tensor& cls_t) {
    if (cls_o.numel() != cls_t.numel()) {
        throw ShapeError("global_feature_sim: CLS dimension mismatch " + shape_to_string(cls_o.shape()) +
                         " vs " + shape_to_string(cls_t.shape()));
    }
    return 1.0 - mse(cls_o.reshaped({cls_o.numel()}), cls_t.reshaped({cls_t.numel()}));
}

double spatial_similarity_dist(const SelfSimMatrix& s_o, const SelfSimMatrix& s_t) {
    if (s_o.s.shape() != s_t.s.shape()) {
        throw ShapeError("spatial_similarity_dist: size mismatch " + shape_to_string(s_o.s.shape()) + " vs " +
                         shape_to_string(s_t.s.shape()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < s_o.s.numel(); ++i) {
        const double diff = static_cast<double>(s_o.s[i]) - s_t.s[i];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

namespace {

void check_compatible(const FeatureBundle& a, const FeatureBundle& b) {
    if (a.keys.shape() != b.keys.shape() || a.cls.shape() != b.cls.shape()) {
        throw ConfigError("config mismatch: feature bundles have keys " + shape_to_string(a.keys.shape()) +
                          " and " + shape_to_string(b.keys.shape()));
    }
}

} // namespace

MfpScore mfp_score(const FeatureBundle& bundle_o, const SelfSimMatrix& s_o, const FeatureBundle& bundle_t,
                   const SelfSimMatrix& s_t) {
    check_compatible(bundle_o, bundle_t);
    MfpScore score;
    score.global_sim = global_feature_sim(bundle_o.cls, bundle_t.cls);
    score.spatial_dist = spatial_similarity_dist(s_o, s_t);
    score.spatial_dist_norm = score.spatial_dist / static_cast<double>(s_o.size());
    score.combined = 0.5 * std::clamp(score.global_sim, 0.0, 1.0) +
                     0.5 * std::max(0.0, 1.0 - score.spatial_dist_norm);
    return score;
}

MfpScore mfp_score(const FeatureBundle& bundle_o, const FeatureBundle& bundle_t) {
    check_compatible(bundle_o, bundle_t);
    return mfp_score(bundle_o, self_similarity(bundle_o.keys), bundle_t, self_similarity(bundle_t.keys));
}

double mfp_loss_value(const FeatureBundle& bundle_o, const FeatureBundle& bundle_t, const NormalizedImage& image_o,
                      const NormalizedImage& image_t, const LossWeights& weights) {
    weights.validate();
    check_compatible(bundle_o, bundle_t);
    if (image_o.chw.shape() != image_t.chw.shape()) {
        throw ShapeError("mfp_loss_value: image shape mismatch");
    }
    double loss = 0.0;
    if (weights.lambda1 != 0.0) loss += weights.lambda1 * mse(bundle_o.cls, bundle_t.cls);
    if (weights.lambda2 != 0.0) {
        loss += weights.lambda2 *
                spatial_similarity_dist(self_similarity(bundle_o.keys), self_similarity(bundle_t.keys));
    }
    if (weights.lambda3 != 0.0) loss += weights.lambda3 * mean_abs_diff(image_o.chw, image_t.chw);
    return loss;
}

namespace {

std::vector<double> gaussian_window(int window, double sigma) {
    std::vector<double> w(static_cast<std::size_t>(window));
    const int r = window / 2;
    double sum = 0.0;
    for (int i = 0; i < window; ++i) {
        const double x = i - r;
        w[static_cast<std::size_t>(i)] = std::exp(-0.5 * x * x / (sigma * sigma));
        sum += w[static_cast<std::size_t>(i)];
    }
    for (auto& v : w) v /= sum;
    return w;
}

// "Valid" separable filtering: output is (h - win + 1) x (w - win + 1).
std::vector<double> filter_valid(const std::vector<double>& img, int w, int h, const std::vector<double>& k) {
    const int win = static_cast<int>(k.size());
    const int ow = w - win + 1, oh = h - win + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = 0; t < win; ++t) acc += k[static_cast<std::size_t>(t)] * img[static_cast<std::size_t>(y) * w + x + t];
            tmp[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = 0; t < win; ++t) acc += k[static_cast<std::size_t>(t)] * tmp[static_cast<std::size_t>(y + t) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    return out;
}

void check_same_size(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
    if (!a.valid() || !b.valid()) {
        throw ShapeError(std::string(what) + ": invalid image buffer");
    }
    if (a.width != b.width || a.height != b.height) {
        throw ShapeError(std::string(what) + ": image sizes differ (" + std::to_string(a.width) + "x" +
                         std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                         std::to_string(b.height) + ")");
    }
}

} // namespace

double ssim_gray(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b, int width, int height,
                 const SsimOptions& opts) {
    if (width < opts.window || height < opts.window) {
        throw ShapeError("ssim: image " + std::to_string(width) + "x" + std::to_string(height) +
                         " is smaller than the " + std::to_string(opts.window) + "-pixel window");
    }
    const std::size_t count = static_cast<std::size_t>(width) * height;
    std::vector<double> x(count), y(count), xx(count), yy(count), xy(count);
    for (std::size_t i = 0; i < count; ++i) {
        x[i] = a[i];
        y[i] = b[i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto k = gaussian_window(opts.window, opts.sigma);
    const auto ux = filter_valid(x, width, height, k);
    const auto uy = filter_valid(y, width, height, k);
    const auto uxx = filter_valid(xx, width, height, k);
    const auto uyy = filter_valid(yy, width, height, k);
    const auto uxy = filter_valid(xy, width, height, k);
    const double c1 = (opts.k1 * opts.dynamic_range) * (opts.k1 * opts.dynamic_range);
    const double c2 = (opts.k2 * opts.dynamic_range) * (opts.k2 * opts.dynamic_range);
    double total = 0.0;
    for (std::size_t i = 0; i < ux.size(); ++i) {
        const double vx = uxx[i] - ux[i] * ux[i];
        const double vy = uyy[i] - uy[i] * uy[i];
        const double vxy = uxy[i] - ux[i] * uy[i];
        const double num = (2.0 * ux[i] * uy[i] + c1) * (2.0 * vxy + c2);
        const double den = (ux[i] * ux[i] + uy[i] * uy[i] + c1) * (vx + vy + c2);
        total += num / den;
    }
    return total / static_cast<double>(ux.size());
}

double ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimOptions& opts) {
    check_same_size(a, b, "ssim");
    return ssim_gray(to_luma(a), to_luma(b), a.width, a.height, opts);
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    check_same_size(a, b, "psnr");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
        acc += d * d;
    }
    if (acc == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    const double m = acc / static_cast<double>(a.pixels.size());
    return 20.0 * std::log10(255.0) - 10.0 * std::log10(m);
}

} // namespace mfp
