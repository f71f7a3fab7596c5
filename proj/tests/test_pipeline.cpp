#include "mfp/error.hpp"
#include "mfp/metrics.hpp"
#include "mfp/pipeline.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>

using namespace mfp;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("mfp_pipeline_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_ / "gen");
        fs::create_directories(path_ / "tgt");
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path gen() const { return path_ / "gen"; }
    fs::path tgt() const { return path_ / "tgt"; }
    fs::path root() const { return path_; }

private:
    fs::path path_;
};

void touch(const fs::path& p) { std::ofstream(p) << "x"; }

ImageBuffer tile_coded(int w, int h, int tile) {
    ImageBuffer img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int id = (y / tile) * (w / tile + 1) + x / tile;
            auto* p = img.px(x, y);
            p[0] = static_cast<std::uint8_t>(id);
            p[1] = static_cast<std::uint8_t>(id >> 8);
            p[2] = static_cast<std::uint8_t>((x % tile) * 16 + y % tile);
        }
    return img;
}

} // namespace

TEST(DiscoverPairs, MatchesByStemAcrossExtensions) {
    TempDir d;
    touch(d.gen() / "b.png");
    touch(d.gen() / "a.jpg");
    touch(d.gen() / "c.JPEG");
    touch(d.tgt() / "a.png");
    touch(d.tgt() / "b.png");
    touch(d.tgt() / "c.png");
    const PairManifest m = discover_pairs(d.gen(), d.tgt());
    ASSERT_EQ(m.pairs.size(), 3u);
    EXPECT_EQ(m.pairs[0].pair_id, "a");
    EXPECT_EQ(m.pairs[1].pair_id, "b");
    EXPECT_EQ(m.pairs[2].pair_id, "c");
    EXPECT_EQ(m.pairs[0].generated.filename(), "a.jpg");
    EXPECT_EQ(m.pairs[0].target.filename(), "a.png");
    EXPECT_TRUE(m.warnings.empty());
}

TEST(DiscoverPairs, WarnsAboutUnmatchedAndIgnoresOtherFiles) {
    TempDir d;
    touch(d.gen() / "a.png");
    touch(d.gen() / "only_gen.png");
    touch(d.gen() / "notes.txt");
    touch(d.tgt() / "a.png");
    touch(d.tgt() / "only_tgt.jpg");
    fs::create_directories(d.tgt() / "sub.png");
    const PairManifest m = discover_pairs(d.gen(), d.tgt());
    ASSERT_EQ(m.pairs.size(), 1u);
    ASSERT_EQ(m.warnings.size(), 2u);
    EXPECT_NE(m.warnings[0].find("only_gen.png"), std::string::npos);
    EXPECT_NE(m.warnings[1].find("only_tgt.jpg"), std::string::npos);
}

TEST(DiscoverPairs, DuplicateStemKeepsFirstAndWarns) {
    TempDir d;
    touch(d.gen() / "a.png");
    touch(d.gen() / "a.jpg");
    touch(d.tgt() / "a.png");
    const PairManifest m = discover_pairs(d.gen(), d.tgt());
    ASSERT_EQ(m.pairs.size(), 1u);
    EXPECT_EQ(m.pairs[0].generated.filename(), "a.jpg");
    ASSERT_EQ(m.warnings.size(), 1u);
    EXPECT_NE(m.warnings[0].find("a.png"), std::string::npos);
}

TEST(DiscoverPairs, NoPairsAndMissingDirectories) {
    TempDir d;
    EXPECT_THROW(discover_pairs(d.gen(), d.tgt()), NoPairsError);
    touch(d.gen() / "a.png");
    touch(d.tgt() / "b.png");
    EXPECT_THROW(discover_pairs(d.gen(), d.tgt()), NoPairsError);
    EXPECT_THROW(discover_pairs(d.root() / "missing", d.tgt()), IoError);
    EXPECT_THROW(discover_pairs(d.gen(), d.root() / "missing"), IoError);
}

TEST(Degrade, ParseKind) {
    EXPECT_EQ(parse_degrade_kind("noise"), DegradeKind::noise);
    EXPECT_EQ(parse_degrade_kind("blur"), DegradeKind::blur);
    EXPECT_EQ(parse_degrade_kind("patch_shuffle"), DegradeKind::patch_shuffle);
    EXPECT_THROW(parse_degrade_kind("jpeg"), ConfigError);
    EXPECT_THROW(parse_degrade_kind(""), ConfigError);
}

TEST(Degrade, ZeroMagnitudeIsIdentity) {
    const ImageBuffer img = decode_image(test::fixture(test::map_name(1)));
    for (auto kind : {DegradeKind::noise, DegradeKind::blur, DegradeKind::patch_shuffle}) {
        EXPECT_EQ(degrade(img, {kind, 0.0, 5}), img);
    }
}

TEST(Degrade, RejectsInvalidArguments) {
    const ImageBuffer img(32, 32, 10);
    EXPECT_THROW(degrade(img, {DegradeKind::noise, -1.0, 0}), ConfigError);
    EXPECT_THROW(degrade(img, {DegradeKind::blur, std::nan(""), 0}), ConfigError);
    EXPECT_THROW(degrade(img, {DegradeKind::patch_shuffle, 1.5, 0}), ConfigError);
    EXPECT_THROW(degrade(img, {DegradeKind::patch_shuffle, 0.5, 0, 0}), ConfigError);
    EXPECT_THROW(degrade(ImageBuffer{}, {DegradeKind::noise, 1.0, 0}), ShapeError);
}

TEST(Degrade, NoiseIsSeededAndScalesWithSigma) {
    const ImageBuffer img(64, 64, 128);
    const ImageBuffer a = degrade(img, {DegradeKind::noise, 10.0, 1});
    EXPECT_EQ(a, degrade(img, {DegradeKind::noise, 10.0, 1}));
    EXPECT_NE(a, degrade(img, {DegradeKind::noise, 10.0, 2}));

    double mean = 0, var = 0;
    for (auto p : a.pixels) mean += p - 128.0;
    mean /= double(a.pixels.size());
    for (auto p : a.pixels) var += std::pow(p - 128.0 - mean, 2);
    var /= double(a.pixels.size());
    EXPECT_NEAR(mean, 0.0, 0.3);
    EXPECT_NEAR(std::sqrt(var), 10.0, 0.3);

    EXPECT_GT(psnr(img, a), psnr(img, degrade(img, {DegradeKind::noise, 20.0, 1})));
}

TEST(Degrade, BlurPreservesConstantsAndSmoothsEdges) {
    const ImageBuffer flat(40, 30, 77);
    EXPECT_EQ(degrade(flat, {DegradeKind::blur, 2.0, 0}), flat);

    ImageBuffer step(40, 8, 0);
    for (int y = 0; y < 8; ++y)
        for (int x = 20; x < 40; ++x) step.px(x, y)[0] = step.px(x, y)[1] = step.px(x, y)[2] = 200;
    const ImageBuffer b = degrade(step, {DegradeKind::blur, 2.0, 0});
    EXPECT_EQ(b, degrade(step, {DegradeKind::blur, 2.0, 99}));
    for (int x = 1; x < 40; ++x) EXPECT_GE(b.px(x, 4)[0], b.px(x - 1, 4)[0]);
    EXPECT_GT(b.px(19, 4)[0], 0);
    EXPECT_LT(b.px(20, 4)[0], 200);
    EXPECT_EQ(b.px(0, 4)[0], 0);
    EXPECT_EQ(b.px(39, 4)[0], 200);
    EXPECT_GT(psnr(step, b), psnr(step, degrade(step, {DegradeKind::blur, 4.0, 0})));
}

TEST(Degrade, ShufflePermutesWholeTiles) {
    const int tile = 16;
    const ImageBuffer img = tile_coded(100, 70, tile);  // 6 x 4 whole tiles plus ragged edges
    const ImageBuffer out = degrade(img, {DegradeKind::patch_shuffle, 0.5, 11, tile});
    EXPECT_EQ(out, degrade(img, {DegradeKind::patch_shuffle, 0.5, 11, tile}));
    EXPECT_NE(out, degrade(img, {DegradeKind::patch_shuffle, 0.5, 12, tile}));

    std::multiset<std::uint8_t> before(img.pixels.begin(), img.pixels.end());
    std::multiset<std::uint8_t> after(out.pixels.begin(), out.pixels.end());
    EXPECT_EQ(before, after);

    int moved = 0;
    std::set<int> sources;
    for (int ty = 0; ty < 4; ++ty)
        for (int tx = 0; tx < 6; ++tx) {
            const auto* o = out.px(tx * tile, ty * tile);
            const int src = o[0] | (o[1] << 8);
            sources.insert(src);
            // every pixel of the tile must come from the same source tile, undistorted
            for (int y = 0; y < tile; ++y)
                for (int x = 0; x < tile; ++x) {
                    const auto* p = out.px(tx * tile + x, ty * tile + y);
                    ASSERT_EQ(p[0] | (p[1] << 8), src);
                    ASSERT_EQ(p[2], x * 16 + y);
                }
            moved += src != ty * 7 + tx;
        }
    EXPECT_EQ(moved, 12);  // round(0.5 * 24), each selected tile leaves its slot
    EXPECT_EQ(sources.size(), 24u);

    for (int y = 0; y < 70; ++y)
        for (int x = 96; x < 100; ++x) EXPECT_EQ(out.px(x, y)[0], img.px(x, y)[0]);
    for (int y = 64; y < 70; ++y)
        for (int x = 0; x < 100; ++x) EXPECT_EQ(out.px(x, y)[0], img.px(x, y)[0]);
}

TEST(Degrade, FullShuffleMovesEveryTile) {
    const int tile = 16;
    const ImageBuffer img = tile_coded(64, 64, tile);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const ImageBuffer out = degrade(img, {DegradeKind::patch_shuffle, 1.0, seed, tile});
        for (int ty = 0; ty < 4; ++ty)
            for (int tx = 0; tx < 4; ++tx) {
                const auto* o = out.px(tx * tile, ty * tile);
                EXPECT_NE(o[0] | (o[1] << 8), ty * 5 + tx) << "seed " << seed;
            }
    }
}

TEST(Degrade, TooFewTilesIsIdentity) {
    const ImageBuffer img = tile_coded(32, 16, 16);  // two tiles
    EXPECT_EQ(degrade(img, {DegradeKind::patch_shuffle, 0.2, 3}), img);
    EXPECT_NE(degrade(img, {DegradeKind::patch_shuffle, 1.0, 3}), img);
    EXPECT_EQ(degrade(ImageBuffer(10, 10, 4), {DegradeKind::patch_shuffle, 1.0, 3}), ImageBuffer(10, 10, 4));
}
