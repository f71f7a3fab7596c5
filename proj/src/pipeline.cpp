#include "mfp/pipeline.hpp"

#include "mfp/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

namespace fs = std::filesystem;

namespace mfp {

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::map<std::string, fs::path> index_dir(const fs::path& dir, const char* role, std::vector<std::string>& warnings) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw IoError(std::string(role) + " directory does not exist: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
    }
    if (ec) {
        throw IoError("cannot list " + dir.string() + ": " + ec.message());
    }
    std::sort(files.begin(), files.end());
    std::map<std::string, fs::path> by_stem;
    for (const auto& f : files) {
        auto [it, inserted] = by_stem.emplace(f.stem().string(), f);
        if (!inserted) {
            warnings.push_back(std::string(role) + ": ignoring " + f.filename().string() + " (stem already taken by " +
                               it->second.filename().string() + ")");
        }
    }
    return by_stem;
}

// Box-Muller over mt19937_64, whose output sequence is fixed by the standard.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}
    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    std::uint64_t below(std::uint64_t bound) {
        // Rejection sampling on the top bits keeps the draw unbiased.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = rng_();
        } while (v >= limit);
        return v % bound;
    }

private:
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint8_t to_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

ImageBuffer add_noise(const ImageBuffer& img, double sigma, std::uint64_t seed) {
    ImageBuffer out = img;
    if (sigma == 0.0) return out;
    GaussianSource g(seed);
    for (auto& p : out.pixels) p = to_u8(p + sigma * g.next());
    return out;
}

ImageBuffer blur(const ImageBuffer& img, double sigma) {
    if (sigma == 0.0) return img;
    const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[static_cast<std::size_t>(i + r)];
    }
    for (auto& v : k) v /= sum;
    const int w = img.width, h = img.height;
    std::vector<double> tmp(img.pixels.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int t = -r; t <= r; ++t) {
                    const int xx = std::clamp(x + t, 0, w - 1);
                    acc += k[static_cast<std::size_t>(t + r)] * img.px(xx, y)[c];
                }
                tmp[3 * (static_cast<std::size_t>(y) * w + x) + c] = acc;
            }
    ImageBuffer out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int t = -r; t <= r; ++t) {
                    const int yy = std::clamp(y + t, 0, h - 1);
                    acc += k[static_cast<std::size_t>(t + r)] * tmp[3 * (static_cast<std::size_t>(yy) * w + x) + c];
                }
                out.px(x, y)[c] = to_u8(acc);
            }
    return out;
}

ImageBuffer shuffle_tiles(const ImageBuffer& img, double fraction, std::uint64_t seed, int tile) {
    if (tile < 1) {
        throw ConfigError("patch_shuffle: tile size must be positive");
    }
    if (fraction < 0.0 || fraction > 1.0) {
        throw ConfigError("patch_shuffle: magnitude must be a fraction in [0, 1]");
    }
    const int tw = img.width / tile, th = img.height / tile;
    const std::size_t total = static_cast<std::size_t>(tw) * th;
    const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
    if (count < 2) return img;

    GaussianSource rng(seed);
    std::vector<std::size_t> ids(total);
    for (std::size_t i = 0; i < total; ++i) ids[i] = i;
    // Partial Fisher-Yates: the first `count` entries are a uniform sample.
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng.below(total - i);
        std::swap(ids[i], ids[j]);
    }
    std::vector<std::size_t> chosen(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(chosen.begin(), chosen.end());
    // Sattolo's algorithm: a uniformly random single cycle, so no tile stays put.
    std::vector<std::size_t> source = chosen;
    for (std::size_t i = count - 1; i > 0; --i) {
        const std::size_t j = rng.below(i);
        std::swap(source[i], source[j]);
    }

    ImageBuffer out = img;
    for (std::size_t i = 0; i < count; ++i) {
        const int dx = static_cast<int>(chosen[i] % tw) * tile, dy = static_cast<int>(chosen[i] / tw) * tile;
        const int sx = static_cast<int>(source[i] % tw) * tile, sy = static_cast<int>(source[i] / tw) * tile;
        for (int y = 0; y < tile; ++y) {
            std::copy_n(img.px(sx, sy + y), 3 * tile, out.px(dx, dy + y));
        }
    }
    return out;
}

} // namespace

PairManifest discover_pairs(const fs::path& generated_dir, const fs::path& target_dir) {
    PairManifest manifest;
    const auto gen = index_dir(generated_dir, "generated", manifest.warnings);
    const auto tgt = index_dir(target_dir, "target", manifest.warnings);
    for (const auto& [stem, path] : gen) {
        auto it = tgt.find(stem);
        if (it == tgt.end()) {
            manifest.warnings.push_back("generated file without target: " + path.filename().string());
            continue;
        }
        manifest.pairs.push_back({stem, path, it->second});
    }
    for (const auto& [stem, path] : tgt) {
        if (!gen.count(stem)) {
            manifest.warnings.push_back("target file without generated: " + path.filename().string());
        }
    }
    if (manifest.pairs.empty()) {
        throw NoPairsError("no image pairs with matching file stems in " + generated_dir.string() + " and " +
                           target_dir.string());
    }
    return manifest;
}

DegradeKind parse_degrade_kind(std::string_view kind) {
    if (kind == "noise") return DegradeKind::noise;
    if (kind == "blur") return DegradeKind::blur;
    if (kind == "patch_shuffle") return DegradeKind::patch_shuffle;
    throw ConfigError("unknown degradation kind '" + std::string(kind) + "'");
}

ImageBuffer degrade(const ImageBuffer& image, const DegradeSpec& spec) {
    if (!image.valid()) {
        throw ShapeError("degrade: invalid image buffer");
    }
    if (!(spec.magnitude >= 0.0)) {
        throw ConfigError("degrade: magnitude must be nonnegative");
    }
    switch (spec.kind) {
    case DegradeKind::noise: return add_noise(image, spec.magnitude, spec.seed);
    case DegradeKind::blur: return blur(image, spec.magnitude);
    case DegradeKind::patch_shuffle: return shuffle_tiles(image, spec.magnitude, spec.seed, spec.tile);
    }
    throw ConfigError("degrade: unknown kind");
}

} // namespace mfp
