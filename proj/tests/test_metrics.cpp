#include "mfp/error.hpp"
#include "mfp/metrics.hpp"
#include "mfp/pipeline.hpp"
#include "mfp/synthetic.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace mfp;

namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    Tensor t({rows, cols});
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

FeatureBundle bundle(Tensor cls, Tensor keys) {
    FeatureBundle b;
    b.cls = std::move(cls);
    b.keys = std::move(keys);
    return b;
}

ImageBuffer textured(int w, int h, unsigned seed) {
    ImageBuffer img(w, h);
    std::mt19937 rng(seed);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.px(x, y)[c] = static_cast<std::uint8_t>((x * 7 + y * 3 + c * 50 + rng() % 40) & 0xff);
    return img;
}

ViTConfig tiny_config() {
    ViTConfig c;
    c.name = "tiny";
    c.patch_size = 4;
    c.embed_dim = 8;
    c.depth = 2;
    c.num_heads = 2;
    c.image_height = 16;
    c.image_width = 16;
    return c;
}

const VitModel& tiny_model() {
    static const VitModel model(resolve_weights(make_synthetic_checkpoint(tiny_config(), 7, 4).tensors, tiny_config()),
                                tiny_config());
    return model;
}

} // namespace

TEST(SelfSimilarity, SymmetricUnitDiagonalBounded) {
    const Tensor keys = random_matrix(17, 12, 1);
    const SelfSimMatrix s = self_similarity(keys);
    ASSERT_EQ(s.size(), 17u);
    EXPECT_FALSE(s.degenerate);
    for (std::size_t i = 0; i < 17; ++i) {
        EXPECT_FLOAT_EQ(s.s.at(i, i), 1.0f);
        for (std::size_t j = 0; j < 17; ++j) {
            EXPECT_EQ(s.s.at(i, j), s.s.at(j, i));
            EXPECT_LE(std::abs(s.s.at(i, j)), 1.0f);
        }
    }
}

TEST(SelfSimilarity, MatchesDirectCosine) {
    const Tensor keys = random_matrix(9, 5, 2);
    const SelfSimMatrix s = self_similarity(keys);
    for (std::size_t i = 0; i < 9; ++i) {
        for (std::size_t j = 0; j < 9; ++j) {
            double dot = 0, ni = 0, nj = 0;
            for (std::size_t t = 0; t < 5; ++t) {
                dot += double(keys.at(i, t)) * keys.at(j, t);
                ni += double(keys.at(i, t)) * keys.at(i, t);
                nj += double(keys.at(j, t)) * keys.at(j, t);
            }
            EXPECT_NEAR(s.s.at(i, j), dot / std::sqrt(ni * nj), 1e-6);
        }
    }
}

TEST(SelfSimilarity, ScaleInvariantPerRow) {
    Tensor keys = random_matrix(6, 4, 3);
    const SelfSimMatrix a = self_similarity(keys);
    for (std::size_t t = 0; t < 4; ++t) keys.at(2, t) *= 37.5f;
    const SelfSimMatrix b = self_similarity(keys);
    EXPECT_LT(test::diff(a.s, b.s).max_abs, 1e-6);
}

TEST(SelfSimilarity, ZeroNormRowIsFlaggedAndZeroed) {
    Tensor keys = random_matrix(5, 3, 4);
    for (std::size_t t = 0; t < 3; ++t) keys.at(3, t) = 0.0f;
    const SelfSimMatrix s = self_similarity(keys);
    EXPECT_TRUE(s.degenerate);
    EXPECT_FLOAT_EQ(s.s.at(3, 3), 1.0f);
    for (std::size_t j = 0; j < 5; ++j) {
        if (j == 3) continue;
        EXPECT_EQ(s.s.at(3, j), 0.0f);
        EXPECT_EQ(s.s.at(j, 3), 0.0f);
    }
}

TEST(SelfSimilarity, RejectsNonFiniteAndWrongRank) {
    Tensor keys = random_matrix(4, 3, 5);
    keys.at(1, 1) = std::numeric_limits<float>::quiet_NaN();
    EXPECT_THROW(self_similarity(keys), NumericError);
    EXPECT_THROW(self_similarity(Tensor({2, 2, 2})), ShapeError);
}

TEST(GlobalSim, IdentityAndKnownOffset) {
    const Tensor a = random_matrix(1, 384, 6).reshaped({384});
    EXPECT_DOUBLE_EQ(global_feature_sim(a, a), 1.0);
    Tensor b = a;
    for (auto& v : b.data()) v += 0.5f;
    EXPECT_NEAR(global_feature_sim(a, b), 0.75, 1e-6);
    for (auto& v : b.data()) v += 1.5f;
    EXPECT_NEAR(global_feature_sim(a, b), -3.0, 1e-5);  // unclamped
    EXPECT_THROW(global_feature_sim(a, Tensor({383})), ShapeError);
}

TEST(SpatialDist, ZeroForIdentityAndFrobeniusOtherwise) {
    const SelfSimMatrix a = self_similarity(random_matrix(8, 6, 7));
    const SelfSimMatrix b = self_similarity(random_matrix(8, 6, 8));
    EXPECT_DOUBLE_EQ(spatial_similarity_dist(a, a), 0.0);
    double acc = 0;
    for (std::size_t i = 0; i < a.s.numel(); ++i) acc += std::pow(double(a.s[i]) - b.s[i], 2);
    EXPECT_NEAR(spatial_similarity_dist(a, b), std::sqrt(acc), 1e-9);
    EXPECT_DOUBLE_EQ(spatial_similarity_dist(a, b), spatial_similarity_dist(b, a));
    EXPECT_THROW(spatial_similarity_dist(a, self_similarity(random_matrix(7, 6, 9))), ShapeError);
}

TEST(MfpScore, IdentityGivesPerfectScore) {
    const FeatureBundle f = bundle(random_matrix(1, 16, 10).reshaped({16}), random_matrix(11, 16, 11));
    const MfpScore s = mfp_score(f, f);
    EXPECT_DOUBLE_EQ(s.global_sim, 1.0);
    EXPECT_DOUBLE_EQ(s.spatial_dist, 0.0);
    EXPECT_DOUBLE_EQ(s.spatial_dist_norm, 0.0);
    EXPECT_DOUBLE_EQ(s.combined, 1.0);
}

TEST(MfpScore, CombinedFollowsComponents) {
    const FeatureBundle a = bundle(random_matrix(1, 16, 12).reshaped({16}), random_matrix(11, 16, 13));
    const FeatureBundle b = bundle(random_matrix(1, 16, 14).reshaped({16}), random_matrix(11, 16, 15));
    const MfpScore s = mfp_score(a, b);
    EXPECT_NEAR(s.spatial_dist_norm, s.spatial_dist / 11.0, 1e-12);
    const double expected =
        0.5 * std::clamp(s.global_sim, 0.0, 1.0) + 0.5 * std::max(0.0, 1.0 - s.spatial_dist_norm);
    EXPECT_NEAR(s.combined, expected, 1e-12);
    EXPECT_GE(s.combined, 0.0);
    EXPECT_LE(s.combined, 1.0);
    const MfpScore r = mfp_score(b, a);
    EXPECT_DOUBLE_EQ(s.combined, r.combined);
}

TEST(MfpScore, PrecomputedMatricesAgree) {
    const FeatureBundle a = bundle(random_matrix(1, 16, 16).reshaped({16}), random_matrix(11, 16, 17));
    const FeatureBundle b = bundle(random_matrix(1, 16, 18).reshaped({16}), random_matrix(11, 16, 19));
    const MfpScore x = mfp_score(a, b);
    const MfpScore y = mfp_score(a, self_similarity(a.keys), b, self_similarity(b.keys));
    EXPECT_DOUBLE_EQ(x.combined, y.combined);
    EXPECT_DOUBLE_EQ(x.spatial_dist, y.spatial_dist);
}

TEST(MfpScore, MismatchedBundlesAreConfigErrors) {
    const FeatureBundle a = bundle(random_matrix(1, 16, 20).reshaped({16}), random_matrix(11, 16, 21));
    const FeatureBundle b = bundle(random_matrix(1, 16, 22).reshaped({16}), random_matrix(17, 16, 23));
    EXPECT_THROW(mfp_score(a, b), ConfigError);
    const FeatureBundle c = bundle(random_matrix(1, 8, 24).reshaped({8}), random_matrix(11, 8, 25));
    EXPECT_THROW(mfp_score(a, c), ConfigError);
}

TEST(MfpLoss, ZeroForIdenticalInputs) {
    const auto& m = tiny_model();
    const ImageBuffer img = textured(16, 16, 1);
    const FeatureBundle f = m.extract(img);
    const NormalizedImage x = m.prepare(img);
    EXPECT_DOUBLE_EQ(mfp_loss_value(f, f, x, x), 0.0);
}

TEST(MfpLoss, WeightedSumOfTerms) {
    const auto& m = tiny_model();
    const ImageBuffer ia = textured(16, 16, 2), ib = textured(16, 16, 3);
    const FeatureBundle fa = m.extract(ia), fb = m.extract(ib);
    const NormalizedImage xa = m.prepare(ia), xb = m.prepare(ib);

    double mse = 0;
    for (std::size_t i = 0; i < fa.cls.numel(); ++i) mse += std::pow(double(fa.cls[i]) - fb.cls[i], 2);
    mse /= double(fa.cls.numel());
    const double frob = spatial_similarity_dist(self_similarity(fa.keys), self_similarity(fb.keys));
    double l1 = 0;
    for (std::size_t i = 0; i < xa.chw.numel(); ++i) l1 += std::abs(double(xa.chw[i]) - xb.chw[i]);
    l1 /= double(xa.chw.numel());

    EXPECT_NEAR(mfp_loss_value(fa, fb, xa, xb), 10.0 * mse + frob + 100.0 * l1, 1e-6);
    EXPECT_NEAR(mfp_loss_value(fa, fb, xa, xb, {1.0, 0.0, 0.0}), mse, 1e-9);
    EXPECT_NEAR(mfp_loss_value(fa, fb, xa, xb, {0.0, 1.0, 0.0}), frob, 1e-9);
    EXPECT_NEAR(mfp_loss_value(fa, fb, xa, xb, {0.0, 0.0, 1.0}), l1, 1e-9);
}

TEST(MfpLoss, RejectsNegativeWeightsAndShapeMismatch) {
    const auto& m = tiny_model();
    const ImageBuffer img = textured(16, 16, 4);
    const FeatureBundle f = m.extract(img);
    const NormalizedImage x = m.prepare(img);
    EXPECT_THROW(mfp_loss_value(f, f, x, x, {-1.0, 1.0, 1.0}), ConfigError);
    EXPECT_THROW((LossWeights{1.0, std::nan(""), 1.0}.validate()), ConfigError);
    EXPECT_NO_THROW((LossWeights{0.0, 0.0, 0.0}.validate()));
    NormalizedImage small{Tensor({3, 8, 8})};
    EXPECT_THROW(mfp_loss_value(f, f, x, small), ShapeError);
}

TEST(Ssim, IdentityIsOneAndSymmetric) {
    const ImageBuffer a = textured(32, 24, 5), b = textured(32, 24, 6);
    EXPECT_DOUBLE_EQ(ssim(a, a), 1.0);
    EXPECT_DOUBLE_EQ(ssim(a, b), ssim(b, a));
    EXPECT_LT(ssim(a, b), 1.0);
    EXPECT_GT(ssim(a, b), -1.0);
}

TEST(Ssim, ConstantImagesFollowLuminanceTerm) {
    const int n = 20;
    std::vector<std::uint8_t> a(n * n, 100), b(n * n, 150);
    const double c1 = std::pow(0.01 * 255, 2);
    const double expected = (2.0 * 100 * 150 + c1) / (100.0 * 100 + 150.0 * 150 + c1);
    EXPECT_NEAR(ssim_gray(a, b, n, n), expected, 1e-12);
}

TEST(Ssim, DecreasesWithNoise) {
    const ImageBuffer img = decode_image(test::fixture(test::map_name(0)));
    double prev = 1.0;
    for (double sigma : {5.0, 15.0, 40.0}) {
        const double v = ssim(img, degrade(img, {DegradeKind::noise, sigma, 3}));
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(Ssim, RejectsSmallAndMismatchedImages) {
    EXPECT_THROW(ssim(ImageBuffer(10, 40), ImageBuffer(10, 40)), ShapeError);
    EXPECT_THROW(ssim(ImageBuffer(40, 40), ImageBuffer(40, 41)), ShapeError);
    EXPECT_NO_THROW(ssim(ImageBuffer(11, 11), ImageBuffer(11, 11)));
    EXPECT_THROW(ssim_gray(std::vector<std::uint8_t>(100), std::vector<std::uint8_t>(99), 10, 10), ShapeError);
}

TEST(Psnr, KnownValuesAndInfinity) {
    ImageBuffer a(8, 8, 100), b(8, 8, 101);
    EXPECT_TRUE(std::isinf(psnr(a, a)));
    EXPECT_GT(psnr(a, a), 0.0);
    EXPECT_NEAR(psnr(a, b), 20.0 * std::log10(255.0), 1e-9);
    ImageBuffer c(8, 8, 110);
    EXPECT_NEAR(psnr(a, c), 20.0 * std::log10(255.0) - 20.0, 1e-9);
    EXPECT_THROW(psnr(a, ImageBuffer(8, 9)), ShapeError);
}
