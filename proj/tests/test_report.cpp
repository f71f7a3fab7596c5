#include "mfp/error.hpp"
#include "mfp/report.hpp"
#include "mfp/synthetic.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <limits>
#include <random>
#include <sstream>

using namespace mfp;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

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
    static const VitModel model(resolve_weights(make_synthetic_checkpoint(tiny_config(), 21, 4).tensors, tiny_config()),
                                tiny_config());
    return model;
}

ImageBuffer textured(int w, int h, unsigned seed) {
    ImageBuffer img(w, h);
    std::mt19937 rng(seed);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() & 0xff);
    return img;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class PairDirs {
public:
    PairDirs() {
        root_ = fs::temp_directory_path() /
                ("mfp_report_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root_);
        fs::create_directories(root_ / "gen");
        fs::create_directories(root_ / "tgt");
    }
    ~PairDirs() { fs::remove_all(root_); }
    void add(const std::string& stem, const ImageBuffer& g, const ImageBuffer& t) {
        write_png(root_ / "gen" / (stem + ".png"), g);
        write_png(root_ / "tgt" / (stem + ".png"), t);
    }
    PairManifest manifest() const { return discover_pairs(root_ / "gen", root_ / "tgt"); }
    fs::path root() const { return root_; }

private:
    fs::path root_;
};

MetricRecord record(const std::string& id, double base, double psnr_db) {
    return {id, base, base + 1, base + 2, base + 3, base + 4, psnr_db, base + 5};
}

} // namespace

TEST(FormatNumber, ShortestRoundTripAndSpecials) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(1.0), "1");
    EXPECT_EQ(format_number(-2.5e-7), "-2.5e-07");
    EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
    EXPECT_EQ(format_number(std::nan("")), "nan");
    const double v = 0.123456789012345678;
    EXPECT_EQ(std::stod(format_number(v)), v);
}

TEST(Aggregate, MeansAndPsnrExclusion) {
    const double inf = std::numeric_limits<double>::infinity();
    const Aggregate a = aggregate_records({record("a", 1.0, 30.0), record("b", 2.0, inf), record("c", 3.0, 40.0)});
    EXPECT_DOUBLE_EQ(a.mfp_global, 2.0);
    EXPECT_DOUBLE_EQ(a.mfp_spatial_dist, 3.0);
    EXPECT_DOUBLE_EQ(a.mfp_spatial_dist_norm, 4.0);
    EXPECT_DOUBLE_EQ(a.mfp_combined, 5.0);
    EXPECT_DOUBLE_EQ(a.ssim, 6.0);
    EXPECT_DOUBLE_EQ(a.mfp_loss, 7.0);
    EXPECT_DOUBLE_EQ(a.psnr_db, 35.0);
    EXPECT_EQ(a.psnr_excluded, 1u);

    const Aggregate all_inf = aggregate_records({record("a", 1.0, inf)});
    EXPECT_TRUE(std::isnan(all_inf.psnr_db));
    EXPECT_EQ(all_inf.psnr_excluded, 1u);
    EXPECT_TRUE(std::isnan(aggregate_records({}).mfp_combined));
}

TEST(ScoreImages, IdenticalImages) {
    const ImageBuffer img = textured(24, 20, 1);
    const MetricRecord r = score_images(tiny_model(), img, img, {}, "x");
    EXPECT_EQ(r.pair_id, "x");
    EXPECT_DOUBLE_EQ(r.mfp_combined, 1.0);
    EXPECT_DOUBLE_EQ(r.mfp_global, 1.0);
    EXPECT_DOUBLE_EQ(r.mfp_spatial_dist, 0.0);
    EXPECT_DOUBLE_EQ(r.ssim, 1.0);
    EXPECT_TRUE(std::isinf(r.psnr_db));
    EXPECT_DOUBLE_EQ(r.mfp_loss, 0.0);
}

TEST(ScoreImages, AgreesWithMetricFunctions) {
    const auto& m = tiny_model();
    const ImageBuffer a = textured(24, 20, 2), b = textured(24, 20, 3);
    const MetricRecord r = score_images(m, a, b);
    const FeatureBundle fa = m.extract(a), fb = m.extract(b);
    const MfpScore s = mfp_score(fa, fb);
    EXPECT_DOUBLE_EQ(r.mfp_combined, s.combined);
    EXPECT_DOUBLE_EQ(r.mfp_global, s.global_sim);
    EXPECT_DOUBLE_EQ(r.mfp_spatial_dist_norm, s.spatial_dist_norm);
    EXPECT_DOUBLE_EQ(r.ssim, ssim(a, b));
    EXPECT_DOUBLE_EQ(r.psnr_db, psnr(a, b));
    EXPECT_NEAR(r.mfp_loss, mfp_loss_value(fa, fb, m.prepare(a), m.prepare(b)), 1e-9);
    EXPECT_THROW(score_images(m, a, textured(20, 20, 4)), ShapeError);
    EXPECT_THROW(score_images(m, a, b, {1.0, -1.0, 1.0}), ConfigError);
}

TEST(EvaluatePairs, IdenticalPairsScorePerfectly) {
    PairDirs d;
    for (int i = 0; i < 5; ++i) {
        const ImageBuffer img = textured(24, 24, 10 + i);
        d.add("p" + std::to_string(i), img, img);
    }
    const EvalReport r = evaluate_pairs(tiny_model(), d.manifest(), 3);
    EXPECT_EQ(r.count(), 5u);
    EXPECT_TRUE(r.failures.empty());
    EXPECT_DOUBLE_EQ(r.aggregate.mfp_combined, 1.0);
    EXPECT_EQ(r.aggregate.psnr_excluded, 5u);
    EXPECT_TRUE(std::isnan(r.aggregate.psnr_db));
    EXPECT_EQ(r.backbone, "tiny");
    EXPECT_EQ(r.config_hash, tiny_config().hash());
}

TEST(EvaluatePairs, CorruptFileIsReportedAndSkipped) {
    PairDirs d;
    for (int i = 0; i < 5; ++i) d.add("p" + std::to_string(i), textured(24, 24, 20 + i), textured(24, 24, 30 + i));
    std::ofstream(d.root() / "gen" / "p2.png", std::ios::binary | std::ios::trunc) << "not a png";
    const EvalReport r = evaluate_pairs(tiny_model(), d.manifest(), 2);
    EXPECT_EQ(r.count(), 4u);
    ASSERT_EQ(r.failures.size(), 1u);
    EXPECT_EQ(r.failures[0].pair_id, "p2");
    EXPECT_FALSE(r.failures[0].error.empty());
    std::vector<std::string> ids;
    for (const auto& rec : r.records) ids.push_back(rec.pair_id);
    EXPECT_EQ(ids, (std::vector<std::string>{"p0", "p1", "p3", "p4"}));
}

TEST(EvaluatePairs, ResultIndependentOfThreadCount) {
    PairDirs d;
    for (int i = 0; i < 9; ++i) d.add("p" + std::to_string(i), textured(24, 24, 40 + i), textured(24, 24, 50 + i));
    const PairManifest m = d.manifest();
    const std::string one = report_to_json(evaluate_pairs(tiny_model(), m, 1));
    EXPECT_EQ(one, report_to_json(evaluate_pairs(tiny_model(), m, 4)));
    EXPECT_EQ(one, report_to_json(evaluate_pairs(tiny_model(), m, 64)));
}

TEST(ReportJson, SchemaAndAggregateConsistency) {
    PairDirs d;
    const ImageBuffer same = textured(24, 24, 60);
    d.add("a", same, same);
    d.add("b", textured(24, 24, 61), textured(24, 24, 62));
    d.add("c", textured(24, 24, 63), textured(24, 24, 64));
    const json j = json::parse(report_to_json(evaluate_pairs(tiny_model(), d.manifest(), 2)));

    EXPECT_EQ(j["backbone"], "tiny");
    EXPECT_EQ(j["count"], 3);
    ASSERT_EQ(j["records"].size(), 3u);
    EXPECT_TRUE(j["failures"].empty());
    EXPECT_EQ(j["records"][0]["psnr_db"], "inf");
    EXPECT_EQ(j["aggregate"]["psnr_excluded"], 1);

    for (const char* key : {"mfp_global", "mfp_spatial_dist", "mfp_spatial_dist_norm", "mfp_combined", "ssim",
                            "mfp_loss"}) {
        double sum = 0;
        for (const auto& rec : j["records"]) sum += rec[key].get<double>();
        EXPECT_NEAR(j["aggregate"][key].get<double>(), sum / 3.0, 1e-12) << key;
    }
    const double psnr_mean =
        (j["records"][1]["psnr_db"].get<double>() + j["records"][2]["psnr_db"].get<double>()) / 2.0;
    EXPECT_NEAR(j["aggregate"]["psnr_db"].get<double>(), psnr_mean, 1e-12);
}

TEST(ReportCsv, HeaderRowsAndQuoting) {
    EvalReport r;
    r.records = {record("plain", 0.5, std::numeric_limits<double>::infinity()), record("a,b", 0.25, 31.5)};
    const std::string csv = report_to_csv(r);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "pair_id,mfp_global,mfp_spatial_dist,mfp_spatial_dist_norm,mfp_combined,ssim,psnr_db,mfp_loss");
    std::getline(in, line);
    EXPECT_EQ(line, "plain,0.5,1.5,2.5,3.5,4.5,inf,5.5");
    std::getline(in, line);
    EXPECT_EQ(line, "\"a,b\",0.25,1.25,2.25,3.25,4.25,31.5,5.25");
    EXPECT_FALSE(std::getline(in, line));
}

TEST(WriteReport, ChoosesFormatByExtension) {
    PairDirs d;
    EvalReport r;
    r.backbone = "tiny";
    r.records = {record("a", 0.5, 20.0)};
    r.aggregate = aggregate_records(r.records);
    write_report(d.root() / "out.json", r);
    write_report(d.root() / "out.CSV", r);
    EXPECT_EQ(slurp(d.root() / "out.json"), report_to_json(r));
    EXPECT_EQ(slurp(d.root() / "out.CSV"), report_to_csv(r));
    EXPECT_THROW(write_report(d.root() / "out.txt", r), UsageError);
    EXPECT_THROW(write_report(d.root() / "out", r), UsageError);
    EXPECT_THROW(write_report(d.root() / "missing" / "out.json", r), IoError);
}

TEST(RecordFormats, JsonAndTable) {
    const MetricRecord rec = record("z", 0.5, std::numeric_limits<double>::infinity());
    const json j = json::parse(record_to_json(rec));
    EXPECT_EQ(j["pair_id"], "z");
    EXPECT_EQ(j["psnr_db"], "inf");
    EXPECT_DOUBLE_EQ(j["mfp_combined"].get<double>(), 3.5);
    const std::string table = record_to_table(rec);
    EXPECT_NE(table.find("mfp_combined"), std::string::npos);
    EXPECT_NE(table.find("3.5"), std::string::npos);
    EXPECT_NE(table.find("inf"), std::string::npos);
}
