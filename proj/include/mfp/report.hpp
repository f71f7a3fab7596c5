#pragma once

#include "mfp/metrics.hpp"
#include "mfp/pipeline.hpp"
#include "mfp/vit.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mfp {

struct MetricRecord {
    std::string pair_id;
    double mfp_global = 0.0;
    double mfp_spatial_dist = 0.0;
    double mfp_spatial_dist_norm = 0.0;
    double mfp_combined = 0.0;
    double ssim = 0.0;
    double psnr_db = 0.0;  // +inf for identical images
    double mfp_loss = 0.0;
};

struct PairFailure {
    std::string pair_id;
    std::string error;
};

struct Aggregate {
    double mfp_global = 0.0;
    double mfp_spatial_dist = 0.0;
    double mfp_spatial_dist_norm = 0.0;
    double mfp_combined = 0.0;
    double ssim = 0.0;
    double psnr_db = 0.0;  // over finite values only; NaN when none are finite
    double mfp_loss = 0.0;
    std::size_t psnr_excluded = 0;
};

struct EvalReport {
    std::string backbone;
    std::string config_hash;
    std::vector<MetricRecord> records;
    std::vector<PairFailure> failures;
    Aggregate aggregate;
    std::size_t count() const { return records.size(); }
};

MetricRecord score_images(const VitModel& model, const ImageBuffer& generated, const ImageBuffer& target,
                          const LossWeights& weights = {}, std::string pair_id = {});

// Means in record order, so the result does not depend on how records were produced.
Aggregate aggregate_records(const std::vector<MetricRecord>& records);

/// Scores every pair with up to `threads` workers sharing `model`. Records and
/// failures keep manifest order. A pair that fails to decode or score is
/// listed under failures and the run continues.
EvalReport evaluate_pairs(const VitModel& model, const PairManifest& manifest, int threads,
                          const LossWeights& weights = {});

std::string record_to_json(const MetricRecord& record, int indent = 2);
std::string record_to_table(const MetricRecord& record);
std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);

// Chooses JSON or CSV from the extension; throws UsageError for anything else.
void write_report(const std::filesystem::path& path, const EvalReport& report);

// Shortest round-trip decimal form; "inf", "-inf" and "nan" for non-finite values.
std::string format_number(double v);

} // namespace mfp
