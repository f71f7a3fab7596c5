#include "mfp/report.hpp"

#include "mfp/error.hpp"
#include "mfp/tensor_math.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace mfp {

using ojson = nlohmann::ordered_json;

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

MetricRecord score_images(const VitModel& model, const ImageBuffer& generated, const ImageBuffer& target,
                          const LossWeights& weights, std::string pair_id) {
    weights.validate();
    const NormalizedImage in_o = model.prepare(generated);
    const NormalizedImage in_t = model.prepare(target);
    const FeatureBundle b_o = model.encoder_forward(model.patchify_embed(in_o));
    const FeatureBundle b_t = model.encoder_forward(model.patchify_embed(in_t));
    const SelfSimMatrix s_o = self_similarity(b_o.keys);
    const SelfSimMatrix s_t = self_similarity(b_t.keys);
    const MfpScore score = mfp_score(b_o, s_o, b_t, s_t);

    MetricRecord r;
    r.pair_id = std::move(pair_id);
    r.mfp_global = score.global_sim;
    r.mfp_spatial_dist = score.spatial_dist;
    r.mfp_spatial_dist_norm = score.spatial_dist_norm;
    r.mfp_combined = score.combined;
    r.ssim = ssim(generated, target);
    r.psnr_db = psnr(generated, target);
    r.mfp_loss = weights.lambda1 * mse(b_o.cls, b_t.cls) + weights.lambda2 * score.spatial_dist +
                 weights.lambda3 * mean_abs_diff(in_o.chw, in_t.chw);
    return r;
}

Aggregate aggregate_records(const std::vector<MetricRecord>& records) {
    Aggregate a;
    if (records.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        a = {nan, nan, nan, nan, nan, nan, nan, 0};
        return a;
    }
    std::size_t finite_psnr = 0;
    for (const auto& r : records) {
        a.mfp_global += r.mfp_global;
        a.mfp_spatial_dist += r.mfp_spatial_dist;
        a.mfp_spatial_dist_norm += r.mfp_spatial_dist_norm;
        a.mfp_combined += r.mfp_combined;
        a.ssim += r.ssim;
        a.mfp_loss += r.mfp_loss;
        if (std::isfinite(r.psnr_db)) {
            a.psnr_db += r.psnr_db;
            ++finite_psnr;
        } else {
            ++a.psnr_excluded;
        }
    }
    const auto n = static_cast<double>(records.size());
    a.mfp_global /= n;
    a.mfp_spatial_dist /= n;
    a.mfp_spatial_dist_norm /= n;
    a.mfp_combined /= n;
    a.ssim /= n;
    a.mfp_loss /= n;
    a.psnr_db = finite_psnr ? a.psnr_db / static_cast<double>(finite_psnr) : std::numeric_limits<double>::quiet_NaN();
    return a;
}

EvalReport evaluate_pairs(const VitModel& model, const PairManifest& manifest, int threads,
                          const LossWeights& weights) {
    weights.validate();
    const std::size_t n = manifest.pairs.size();
    struct Slot {
        bool ok = false;
        MetricRecord record;
        std::string error;
    };
    std::vector<Slot> slots(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            const ImagePair& pair = manifest.pairs[i];
            try {
                const ImageBuffer g = decode_image(pair.generated);
                const ImageBuffer t = decode_image(pair.target);
                slots[i].record = score_images(model, g, t, weights, pair.pair_id);
                slots[i].ok = true;
            } catch (const std::exception& e) {
                slots[i].error = e.what();
            }
        }
    };
    const auto workers = static_cast<std::size_t>(std::clamp(threads, 1, 256));
    if (workers == 1 || n <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(work);
    }

    EvalReport report;
    report.backbone = model.config().name;
    report.config_hash = model.config().hash();
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i].ok) {
            report.records.push_back(std::move(slots[i].record));
        } else {
            report.failures.push_back({manifest.pairs[i].pair_id, std::move(slots[i].error)});
        }
    }
    report.aggregate = aggregate_records(report.records);
    return report;
}

namespace {

ojson number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

ojson record_json(const MetricRecord& r) {
    ojson j;
    j["pair_id"] = r.pair_id;
    j["mfp_global"] = number(r.mfp_global);
    j["mfp_spatial_dist"] = number(r.mfp_spatial_dist);
    j["mfp_spatial_dist_norm"] = number(r.mfp_spatial_dist_norm);
    j["mfp_combined"] = number(r.mfp_combined);
    j["ssim"] = number(r.ssim);
    j["psnr_db"] = number(r.psnr_db);
    j["mfp_loss"] = number(r.mfp_loss);
    return j;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

std::string record_to_json(const MetricRecord& record, int indent) {
    return record_json(record).dump(indent);
}

std::string record_to_table(const MetricRecord& r) {
    std::ostringstream os;
    auto row = [&](const char* key, const std::string& value) {
        os << key << std::string(24 - std::char_traits<char>::length(key), ' ') << value << '\n';
    };
    row("pair_id", r.pair_id.empty() ? "-" : r.pair_id);
    row("mfp_combined", format_number(r.mfp_combined));
    row("mfp_global", format_number(r.mfp_global));
    row("mfp_spatial_dist", format_number(r.mfp_spatial_dist));
    row("mfp_spatial_dist_norm", format_number(r.mfp_spatial_dist_norm));
    row("mfp_loss", format_number(r.mfp_loss));
    row("ssim", format_number(r.ssim));
    row("psnr_db", format_number(r.psnr_db));
    return os.str();
}

std::string report_to_json(const EvalReport& report) {
    ojson j;
    j["backbone"] = report.backbone;
    j["config_hash"] = report.config_hash;
    j["count"] = report.count();
    const Aggregate& a = report.aggregate;
    ojson agg;
    agg["mfp_global"] = number(a.mfp_global);
    agg["mfp_spatial_dist"] = number(a.mfp_spatial_dist);
    agg["mfp_spatial_dist_norm"] = number(a.mfp_spatial_dist_norm);
    agg["mfp_combined"] = number(a.mfp_combined);
    agg["ssim"] = number(a.ssim);
    agg["psnr_db"] = number(a.psnr_db);
    agg["mfp_loss"] = number(a.mfp_loss);
    agg["psnr_excluded"] = a.psnr_excluded;
    j["aggregate"] = std::move(agg);
    j["records"] = ojson::array();
    for (const auto& r : report.records) j["records"].push_back(record_json(r));
    j["failures"] = ojson::array();
    for (const auto& f : report.failures) j["failures"].push_back({{"pair_id", f.pair_id}, {"error", f.error}});
    return j.dump(2) + "\n";
}

std::string report_to_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "pair_id,mfp_global,mfp_spatial_dist,mfp_spatial_dist_norm,mfp_combined,ssim,psnr_db,mfp_loss\n";
    for (const auto& r : report.records) {
        os << csv_field(r.pair_id) << ',' << format_number(r.mfp_global) << ',' << format_number(r.mfp_spatial_dist)
           << ',' << format_number(r.mfp_spatial_dist_norm) << ',' << format_number(r.mfp_combined) << ','
           << format_number(r.ssim) << ',' << format_number(r.psnr_db) << ',' << format_number(r.mfp_loss) << '\n';
    }
    return os.str();
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    std::string body;
    if (ext == ".json") {
        body = report_to_json(report);
    } else if (ext == ".csv") {
        body = report_to_csv(report);
    } else {
        throw UsageError("--out must end in .json or .csv: " + path.string());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << body;
    if (!out.flush()) {
        throw IoError("failed writing " + path.string());
    }
}

} // namespace mfp
