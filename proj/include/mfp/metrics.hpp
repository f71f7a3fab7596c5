#pragma once

#include "mfp/image.hpp"
#include "mfp/tensor.hpp"
#include "mfp/vit.hpp"

namespace mfp {

// Pairwise cosine similarity of an image's key vectors.
struct SelfSimMatrix {
    Tensor s;                // [(n+1) x (n+1)]
    bool degenerate = false; // some key row had zero norm
    std::size_t size() const { return s.empty() ? 0 : s.dim(0); }
};

struct MfpScore {
    double global_sim = 0.0;         // 1 - MSE of CLS tokens, unclamped
    double spatial_dist = 0.0;       // Frobenius distance of self-similarity matrices
    double spatial_dist_norm = 0.0;  // spatial_dist / (n+1)
    double combined = 0.0;           // in [0, 1], ascending with similarity
};

struct LossWeights {
    double lambda1 = 10.0;   // global feature term
    double lambda2 = 1.0;    // spatial term
    double lambda3 = 100.0;  // pixel L1 term
    void validate() const;
};

SelfSimMatrix self_similarity(const Tensor& keys);

double global_feature_sim(const Tensor& cls_o, const Tensor& cls_t);
double spatial_similarity_dist(const SelfSimMatrix& s_o, const SelfSimMatrix& s_t);

/// combined = 0.5 * clamp(global_sim, 0, 1) + 0.5 * max(0, 1 - spatial_dist / (n+1)).
/// The equal-weight merge is this project's convention; the raw components are
/// always carried alongside.
MfpScore mfp_score(const FeatureBundle& bundle_o, const FeatureBundle& bundle_t);
MfpScore mfp_score(const FeatureBundle& bundle_o, const SelfSimMatrix& s_o,
                   const FeatureBundle& bundle_t, const SelfSimMatrix& s_t);

// lambda1 * MSE(cls) + lambda2 * ||S_o - S_t||_F + lambda3 * mean|I_o - I_t|,
// images in normalized model-input units.
double mfp_loss_value(const FeatureBundle& bundle_o, const FeatureBundle& bundle_t,
                      const NormalizedImage& image_o, const NormalizedImage& image_t,
                      const LossWeights& weights = {});

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 255.0;
};

// Mean SSIM over all fully-contained Gaussian windows of the BT.601 luma.
double ssim(const ImageBuffer& a, const ImageBuffer& b, const SsimOptions& opts = {});
double ssim_gray(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b, int width,
                 int height, const SsimOptions& opts = {});

// PSNR over all RGB samples; +infinity for identical images.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

} // namespace mfp
