// mfp: score image pairs, evaluate paired directories, render diagnostics.
//
// Exit codes: 0 success, 2 I/O / decode / usage, 3 weights, 4 no pairs.

#include "mfp/error.hpp"
#include "mfp/metrics.hpp"
#include "mfp/pipeline.hpp"
#include "mfp/report.hpp"
#include "mfp/vit.hpp"
#include "mfp/viz.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <thread>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 2;
constexpr int kExitWeights = 3;
constexpr int kExitNoPairs = 4;

struct GlobalFlags {
    std::string weights;
    std::string backbone = "vits16";
    std::string name_map;
    mfp::LossWeights loss;
};

mfp::VitModel load_model(const GlobalFlags& g) {
    const mfp::ViTConfig config = mfp::ViTConfig::from_name(g.backbone);
    if (g.weights.empty()) {
        throw mfp::WeightError("no weights given: pass --weights or set MFP_WEIGHTS");
    }
    std::optional<mfp::NameMap> custom;
    if (!g.name_map.empty()) custom = mfp::NameMap::load(g.name_map);
    try {
        mfp::WeightStore store = mfp::load_weights(g.weights, config, custom ? *custom : mfp::NameMap::dino());
        for (const auto& w : store.warnings) std::cerr << "warning: " << w << '\n';
        return mfp::VitModel(std::move(store), config);
    } catch (const mfp::WeightError&) {
        throw;
    } catch (const mfp::Error& e) {
        throw mfp::WeightError(std::string("cannot load weights: ") + e.what());
    }
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const mfp::WeightError*>(&e)) return kExitWeights;
    if (dynamic_cast<const mfp::NoPairsError*>(&e)) return kExitNoPairs;
    if (dynamic_cast<const mfp::IoError*>(&e) || dynamic_cast<const mfp::DecodeError*>(&e) ||
        dynamic_cast<const mfp::UsageError*>(&e) || dynamic_cast<const mfp::ConfigError*>(&e) ||
        dynamic_cast<const mfp::ShapeError*>(&e)) {
        return kExitIo;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Map feature perception metric: scoring, evaluation and diagnostics"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags g;
    app.add_option("--weights", g.weights, "safetensors checkpoint")->envname("MFP_WEIGHTS");
    app.add_option("--backbone", g.backbone, "vits16 or vits8")->check(CLI::IsMember({"vits16", "vits8"}));
    app.add_option("--lambda1", g.loss.lambda1, "loss weight of the global term");
    app.add_option("--lambda2", g.loss.lambda2, "loss weight of the spatial term");
    app.add_option("--lambda3", g.loss.lambda3, "loss weight of the pixel L1 term");
    app.add_option("--name-map", g.name_map, "checkpoint name map file (default: built-in DINO table)");

    auto* score = app.add_subcommand("score", "score one generated/target pair");
    std::string gen_path, tgt_path, format = "json";
    score->add_option("--generated", gen_path)->required();
    score->add_option("--target", tgt_path)->required();
    score->add_option("--format", format)->check(CLI::IsMember({"json", "table"}));

    auto* eval = app.add_subcommand("eval", "score all pairs of two directories matched by file stem");
    std::string gen_dir, tgt_dir, out_path;
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    eval->add_option("--generated-dir", gen_dir)->required();
    eval->add_option("--target-dir", tgt_dir)->required();
    eval->add_option("--out", out_path, "report path, .json or .csv")->required();
    eval->add_option("--threads", threads)->check(CLI::Range(1, 256));

    auto* viz = app.add_subcommand("viz", "render diagnostics");
    viz->require_subcommand(1);
    viz->fallthrough();
    std::string image_path, viz_out;
    double alpha = 0.6;
    auto* attention = viz->add_subcommand("attention", "last-layer CLS attention heatmap");
    attention->add_option("--image", image_path)->required();
    attention->add_option("--out", viz_out)->required();
    attention->add_option("--alpha", alpha)->check(CLI::Range(0.0, 1.0));
    auto* pca = viz->add_subcommand("pca", "three principal components of the self-similarity rows");
    pca->add_option("--image", image_path)->required();
    pca->add_option("--out", viz_out)->required();
    auto* xsim = viz->add_subcommand("xsim", "key similarity of one source patch against a target image");
    std::string source_path;
    int qx = 0, qy = 0;
    xsim->add_option("--source", source_path)->required();
    xsim->add_option("--target", tgt_path)->required();
    xsim->add_option("--query-x", qx)->required();
    xsim->add_option("--query-y", qy)->required();
    xsim->add_option("--out", viz_out)->required();
    xsim->add_option("--alpha", alpha)->check(CLI::Range(0.0, 1.0));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitIo;
    }

    try {
        g.loss.validate();
        if (*score) {
            const mfp::ImageBuffer gen = mfp::decode_image(gen_path);
            const mfp::ImageBuffer tgt = mfp::decode_image(tgt_path);
            const mfp::VitModel model = load_model(g);
            const auto record = mfp::score_images(model, gen, tgt, g.loss, std::filesystem::path(gen_path).stem().string());
            std::cout << (format == "json" ? mfp::record_to_json(record) + "\n" : mfp::record_to_table(record));
        } else if (*eval) {
            const std::filesystem::path out(out_path);
            std::string ext = out.extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
            if (ext != ".json" && ext != ".csv") {
                throw mfp::UsageError("--out must end in .json or .csv: " + out_path);
            }
            const mfp::PairManifest manifest = mfp::discover_pairs(gen_dir, tgt_dir);
            for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << '\n';
            const mfp::VitModel model = load_model(g);
            const auto t0 = std::chrono::steady_clock::now();
            const mfp::EvalReport report = mfp::evaluate_pairs(model, manifest, threads, g.loss);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            mfp::write_report(out, report);
            for (const auto& f : report.failures) std::cerr << "failed: " << f.pair_id << ": " << f.error << '\n';
            std::cerr << "scored " << report.count() << " of " << manifest.pairs.size() << " pairs in " << secs
                      << " s; mean mfp_combined " << mfp::format_number(report.aggregate.mfp_combined) << '\n';
        } else if (*attention || *pca) {
            const mfp::ImageBuffer img = mfp::decode_image(image_path);
            const mfp::VitModel model = load_model(g);
            const mfp::FeatureBundle b = model.extract(img);
            if (*attention) {
                mfp::write_png(viz_out, mfp::render_attention(img, b, model.config(), alpha));
            } else {
                mfp::write_png(viz_out, mfp::render_pca(mfp::self_similarity(b.keys), model.config(), img.width,
                                                        img.height));
            }
        } else if (*xsim) {
            const mfp::ImageBuffer src = mfp::decode_image(source_path);
            const mfp::ImageBuffer tgt = mfp::decode_image(tgt_path);
            const mfp::VitModel model = load_model(g);
            const int patch = mfp::query_patch(qx, qy, src.width, src.height, model.config());
            const auto sim = mfp::cross_similarity(model.extract(src), model.extract(tgt), patch, model.config());
            mfp::write_png(viz_out, mfp::render_xsim(tgt, sim, alpha));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kExitOk;
}
