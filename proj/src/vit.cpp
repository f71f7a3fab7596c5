#include "mfp/vit.hpp"

#include "mfp/error.hpp"
#include "mfp/safetensors.hpp"
#include "mfp/tensor_math.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mfp {

// ---------------------------------------------------------------------------
// Config

ViTConfig ViTConfig::vit_small(int patch_size) {
    ViTConfig c;
    c.patch_size = patch_size;
    c.name = "vits" + std::to_string(patch_size);
    return c;
}

ViTConfig ViTConfig::from_name(std::string_view backbone) {
    if (backbone == "vits16") return vit_small(16);
    if (backbone == "vits8") return vit_small(8);
    throw ConfigError("unknown backbone '" + std::string(backbone) + "' (expected vits16 or vits8)");
}

void ViTConfig::validate() const {
    if (patch_size < 1 || embed_dim < 1 || depth < 1 || num_heads < 1 || channels < 1) {
        throw ConfigError("ViT config fields must be positive");
    }
    if (image_height % patch_size != 0 || image_width % patch_size != 0) {
        throw ConfigError("image size " + std::to_string(image_height) + "x" + std::to_string(image_width) +
                          " is not divisible by patch size " + std::to_string(patch_size));
    }
    if (embed_dim % num_heads != 0) {
        throw ConfigError("embed_dim must be divisible by num_heads");
    }
    if (!(layer_norm_eps > 0.0f) || !(mlp_ratio > 0.0)) {
        throw ConfigError("layer_norm_eps and mlp_ratio must be positive");
    }
}

std::string ViTConfig::canonical_string() const {
    std::ostringstream os;
    os << "name=" << name << ";patch=" << patch_size << ";dim=" << embed_dim << ";depth=" << depth
       << ";heads=" << num_heads << ";mlp_hidden=" << mlp_hidden() << ";image=" << image_height << "x"
       << image_width << ";channels=" << channels << ";eps=" << layer_norm_eps;
    return os.str();
}

std::string ViTConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : canonical_string()) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Name mapping

const char* const kDinoNameMapText = R"(# Original self-supervised ViT release (and timm) naming -> canonical names.
cls_token                   embed.cls
pos_embed                   embed.pos
patch_embed.proj.weight     embed.patch.weight
patch_embed.proj.bias       embed.patch.bias
blocks.{i}.norm1.weight     layer.{i}.ln1.weight
blocks.{i}.norm1.bias       layer.{i}.ln1.bias
blocks.{i}.attn.qkv.weight  layer.{i}.attn.qkv.weight
blocks.{i}.attn.qkv.bias    layer.{i}.attn.qkv.bias
blocks.{i}.attn.proj.weight layer.{i}.attn.out.weight
blocks.{i}.attn.proj.bias   layer.{i}.attn.out.bias
blocks.{i}.norm2.weight     layer.{i}.ln2.weight
blocks.{i}.norm2.bias       layer.{i}.ln2.bias
blocks.{i}.mlp.fc1.weight   layer.{i}.mlp.fc1.weight
blocks.{i}.mlp.fc1.bias     layer.{i}.mlp.fc1.bias
blocks.{i}.mlp.fc2.weight   layer.{i}.mlp.fc2.weight
blocks.{i}.mlp.fc2.bias     layer.{i}.mlp.fc2.bias
norm.weight                 final_norm.weight
norm.bias                   final_norm.bias
)";

NameMap NameMap::parse(std::string_view text) {
    NameMap map;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        Rule rule;
        if (!(fields >> rule.checkpoint)) continue;
        if (!(fields >> rule.canonical)) {
            throw ConfigError("name map line " + std::to_string(line_no) + ": missing canonical name");
        }
        std::string extra;
        if (fields >> extra) {
            int part = 0, parts = 0;
            if (std::sscanf(extra.c_str(), "rows=%d/%d", &part, &parts) != 2 || parts < 1 || part < 0 ||
                part >= parts) {
                throw ConfigError("name map line " + std::to_string(line_no) + ": bad slice '" + extra + "'");
            }
            rule.part = part;
            rule.parts = parts;
        }
        const bool ck_idx = rule.checkpoint.find("{i}") != std::string::npos;
        const bool cn_idx = rule.canonical.find("{i}") != std::string::npos;
        if (ck_idx != cn_idx) {
            throw ConfigError("name map line " + std::to_string(line_no) + ": {i} must appear in both names");
        }
        map.rules_.push_back(std::move(rule));
    }
    return map;
}

NameMap NameMap::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open name map: " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const NameMap& NameMap::dino() {
    static const NameMap map = parse(kDinoNameMapText);
    return map;
}

std::optional<NameMap::Match> NameMap::resolve(std::string_view name) const {
    for (const Rule& rule : rules_) {
        const auto idx = rule.checkpoint.find("{i}");
        if (idx == std::string::npos) {
            if (name == rule.checkpoint) return Match{rule.canonical, rule.part, rule.parts};
            continue;
        }
        const std::string_view prefix = std::string_view(rule.checkpoint).substr(0, idx);
        const std::string_view suffix = std::string_view(rule.checkpoint).substr(idx + 3);
        if (name.size() <= prefix.size() + suffix.size()) continue;
        if (name.substr(0, prefix.size()) != prefix) continue;
        if (name.substr(name.size() - suffix.size()) != suffix) continue;
        const std::string_view digits = name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
        if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
        std::string canonical = rule.canonical;
        canonical.replace(canonical.find("{i}"), 3, digits);
        return Match{std::move(canonical), rule.part, rule.parts};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Weight store

namespace {

std::string layer_name(int i, const char* suffix) {
    return "layer." + std::to_string(i) + "." + suffix;
}

// Expected canonical shape; dimension 0 of embed.pos is left as 0 (any).
std::map<std::string, Shape> expected_shapes(const ViTConfig& c) {
    const auto d = static_cast<std::size_t>(c.embed_dim);
    const auto h = static_cast<std::size_t>(c.mlp_hidden());
    std::map<std::string, Shape> s;
    s["embed.patch.weight"] = {d, static_cast<std::size_t>(c.patch_features())};
    s["embed.patch.bias"] = {d};
    s["embed.cls"] = {d};
    s["embed.pos"] = {0, d};
    for (int i = 0; i < c.depth; ++i) {
        s[layer_name(i, "ln1.weight")] = {d};
        s[layer_name(i, "ln1.bias")] = {d};
        s[layer_name(i, "attn.qkv.weight")] = {3 * d, d};
        s[layer_name(i, "attn.qkv.bias")] = {3 * d};
        s[layer_name(i, "attn.out.weight")] = {d, d};
        s[layer_name(i, "attn.out.bias")] = {d};
        s[layer_name(i, "ln2.weight")] = {d};
        s[layer_name(i, "ln2.bias")] = {d};
        s[layer_name(i, "mlp.fc1.weight")] = {h, d};
        s[layer_name(i, "mlp.fc1.bias")] = {h};
        s[layer_name(i, "mlp.fc2.weight")] = {d, h};
        s[layer_name(i, "mlp.fc2.bias")] = {d};
    }
    s["final_norm.weight"] = {d};
    s["final_norm.bias"] = {d};
    return s;
}

Shape squeeze_leading(Shape s) {
    while (s.size() > 1 && s.front() == 1) s.erase(s.begin());
    return s;
}

bool is_square(std::size_t v) {
    const auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(v))));
    return r * r == v;
}

// Coerces a checkpoint tensor to the expected canonical shape, or throws.
Tensor coerce_shape(const std::string& canonical, const Tensor& t, Shape expected) {
    Shape s = squeeze_leading(t.shape());
    if (expected[0] == 0) {
        if (s.size() == 2 && s[1] == expected[1] && s[0] >= 2 && is_square(s[0] - 1)) {
            return t.reshaped(s);
        }
        throw TensorShapeError(canonical, "expected [1 + g*g, " + std::to_string(expected[1]) + "], got " +
                                              shape_to_string(t.shape()));
    }
    if (s == expected) return t.reshaped(expected);
    if (s.size() > 2 && expected.size() == 2 && s[0] == expected[0] &&
        shape_numel(s) / s[0] == expected[1]) {
        return t.reshaped(expected);
    }
    throw TensorShapeError(canonical, "expected " + shape_to_string(expected) + ", got " +
                                          shape_to_string(t.shape()));
}

} // namespace

std::vector<std::string> canonical_weight_names(const ViTConfig& c) {
    std::vector<std::string> names = {"embed.patch.weight", "embed.patch.bias", "embed.cls", "embed.pos"};
    static const char* per_layer[] = {"ln1.weight",      "ln1.bias",       "attn.qkv.weight", "attn.qkv.bias",
                                      "attn.out.weight", "attn.out.bias",  "ln2.weight",      "ln2.bias",
                                      "mlp.fc1.weight",  "mlp.fc1.bias",   "mlp.fc2.weight",  "mlp.fc2.bias"};
    for (int i = 0; i < c.depth; ++i)
        for (const char* s : per_layer) names.push_back(layer_name(i, s));
    names.push_back("final_norm.weight");
    names.push_back("final_norm.bias");
    return names;
}

const Tensor& WeightStore::get(std::string_view canonical) const {
    auto it = tensors_.find(canonical);
    if (it == tensors_.end()) {
        throw TensorAbsentError(std::string(canonical));
    }
    return it->second;
}

bool WeightStore::contains(std::string_view canonical) const {
    return tensors_.find(canonical) != tensors_.end();
}

void WeightStore::insert(std::string canonical, Tensor tensor) {
    tensors_.insert_or_assign(std::move(canonical), std::move(tensor));
}

WeightStore resolve_weights(std::map<std::string, Tensor> checkpoint, const ViTConfig& config,
                            const NameMap& names) {
    config.validate();
    const auto shapes = expected_shapes(config);

    struct Pending {
        int parts = 1;
        std::vector<std::optional<Tensor>> blocks;
    };
    std::map<std::string, Pending> pending;
    WeightStore store;

    for (auto& [ck_name, tensor] : checkpoint) {
        auto match = names.resolve(ck_name);
        if (!match || !shapes.count(match->canonical)) {
            store.warnings.push_back("ignoring unmapped checkpoint tensor '" + ck_name + "'");
            continue;
        }
        Shape expected = shapes.at(match->canonical);
        if (match->parts > 1) {
            if (expected[0] == 0 || expected[0] % static_cast<std::size_t>(match->parts) != 0) {
                throw TensorShapeError(match->canonical, "cannot be split into " + std::to_string(match->parts) +
                                                             " row blocks");
            }
            expected[0] /= static_cast<std::size_t>(match->parts);
        }
        Tensor coerced = coerce_shape(match->canonical, tensor, expected);
        Pending& p = pending[match->canonical];
        if (p.blocks.empty()) {
            p.parts = match->parts;
            p.blocks.resize(static_cast<std::size_t>(match->parts));
        } else if (p.parts != match->parts) {
            throw TensorShapeError(match->canonical, "inconsistent row-block counts in name map");
        }
        p.blocks[static_cast<std::size_t>(match->part)] = std::move(coerced);
    }

    for (const std::string& name : canonical_weight_names(config)) {
        auto it = pending.find(name);
        if (it == pending.end()) {
            throw TensorAbsentError(name);
        }
        Pending& p = it->second;
        if (p.parts == 1) {
            store.insert(name, std::move(*p.blocks[0]));
            continue;
        }
        Shape full = shapes.at(name);
        std::vector<float> data;
        data.reserve(shape_numel(full));
        for (auto& block : p.blocks) {
            if (!block) {
                throw TensorAbsentError(name);
            }
            data.insert(data.end(), block->data().begin(), block->data().end());
        }
        store.insert(name, Tensor(full, std::move(data)));
    }
    return store;
}

WeightStore load_weights(const std::filesystem::path& archive_path, const ViTConfig& config,
                         const NameMap& names) {
    auto archive = safetensors::read(archive_path);
    return resolve_weights(std::move(archive.tensors), config, names);
}

// ---------------------------------------------------------------------------
// Positional embeddings

namespace {

constexpr double kCubicA = -0.75;

void cubic_weights(double t, double w[4]) {
    const double a = kCubicA;
    auto near = [a](double x) { return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0; };
    auto far = [a](double x) { return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a; };
    w[0] = far(t + 1.0);
    w[1] = near(t);
    w[2] = near(1.0 - t);
    w[3] = far(2.0 - t);
}

struct CubicTaps {
    int idx[4];
    double w[4];
};

std::vector<CubicTaps> cubic_taps(int in_n, int out_n) {
    std::vector<CubicTaps> taps(static_cast<std::size_t>(out_n));
    const double scale = static_cast<double>(in_n) / out_n;
    for (int o = 0; o < out_n; ++o) {
        const double real = scale * (o + 0.5) - 0.5;
        const double base = std::floor(real);
        CubicTaps& tp = taps[static_cast<std::size_t>(o)];
        cubic_weights(real - base, tp.w);
        for (int k = 0; k < 4; ++k) {
            tp.idx[k] = std::clamp(static_cast<int>(base) - 1 + k, 0, in_n - 1);
        }
    }
    return taps;
}

} // namespace

Tensor interpolate_pos_embeddings(const Tensor& pos, int src_h, int src_w, int dst_h, int dst_w) {
    require_rank(pos, 2, "interpolate_pos_embeddings");
    const std::size_t rows = pos.dim(0);
    const std::size_t d = pos.dim(1);
    if (src_h != src_w || static_cast<std::size_t>(src_h) * src_w + 1 != rows) {
        throw ConfigError("unsupported positional layout: " + std::to_string(rows - 1) +
                          " patch rows do not form the square grid " + std::to_string(src_h) + "x" +
                          std::to_string(src_w));
    }
    if (dst_h < 1 || dst_w < 1) {
        throw ShapeError("interpolate_pos_embeddings: target grid must be positive");
    }
    if (src_h == dst_h && src_w == dst_w) {
        return pos;
    }
    const auto ty = cubic_taps(src_h, dst_h);
    const auto tx = cubic_taps(src_w, dst_w);
    Tensor out({static_cast<std::size_t>(dst_h) * dst_w + 1, d});
    std::copy_n(pos.raw(), d, out.raw());
    auto src = [&](int y, int x, std::size_t c) {
        return static_cast<double>(pos[(1 + static_cast<std::size_t>(y) * src_w + x) * d + c]);
    };
    for (int y = 0; y < dst_h; ++y) {
        const CubicTaps& vy = ty[static_cast<std::size_t>(y)];
        for (int x = 0; x < dst_w; ++x) {
            const CubicTaps& vx = tx[static_cast<std::size_t>(x)];
            float* dst = out.raw() + (1 + static_cast<std::size_t>(y) * dst_w + x) * d;
            for (std::size_t c = 0; c < d; ++c) {
                double acc = 0.0;
                for (int r = 0; r < 4; ++r) {
                    double row = 0.0;
                    for (int k = 0; k < 4; ++k) row += vx.w[k] * src(vy.idx[r], vx.idx[k], c);
                    acc += vy.w[r] * row;
                }
                dst[c] = static_cast<float>(acc);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Forward pass

namespace {

Tensor resample_positional(const WeightStore& w, int grid_h, int grid_w) {
    const Tensor& pos = w.get("embed.pos");
    const int src = static_cast<int>(std::llround(std::sqrt(static_cast<double>(pos.dim(0) - 1))));
    return interpolate_pos_embeddings(pos, src, src, grid_h, grid_w);
}

Tensor embed_impl(const NormalizedImage& image, const WeightStore& w, const ViTConfig& cfg, const Tensor* pos_cached) {
    const Tensor& img = image.chw;
    require_rank(img, 3, "patchify_embed");
    const int C = static_cast<int>(img.dim(0));
    const int H = static_cast<int>(img.dim(1));
    const int W = static_cast<int>(img.dim(2));
    const int P = cfg.patch_size;
    if (C != cfg.channels) {
        throw ShapeError("patchify_embed: expected " + std::to_string(cfg.channels) + " channels, got " +
                         std::to_string(C));
    }
    if (H % P != 0 || W % P != 0) {
        throw ShapeError("patchify_embed: image " + std::to_string(H) + "x" + std::to_string(W) +
                         " not divisible by patch size " + std::to_string(P));
    }
    const int gh = H / P, gw = W / P;
    const std::size_t n = static_cast<std::size_t>(gh) * gw;
    const std::size_t f = static_cast<std::size_t>(C) * P * P;
    const std::size_t d = static_cast<std::size_t>(cfg.embed_dim);

    std::vector<float> patches(n * f);
    for (int gy = 0; gy < gh; ++gy) {
        for (int gx = 0; gx < gw; ++gx) {
            float* dst = patches.data() + (static_cast<std::size_t>(gy) * gw + gx) * f;
            for (int c = 0; c < C; ++c) {
                for (int py = 0; py < P; ++py) {
                    const float* src = img.raw() + (static_cast<std::size_t>(c) * H + gy * P + py) * W + gx * P;
                    std::copy_n(src, P, dst + (static_cast<std::size_t>(c) * P + py) * P);
                }
            }
        }
    }

    Tensor pos_local;
    const Tensor* pos = pos_cached;
    if (!pos || pos->dim(0) != n + 1) {
        pos_local = resample_positional(w, gh, gw);
        pos = &pos_local;
    }
    const Tensor& proj = w.get("embed.patch.weight");
    const Tensor& bias = w.get("embed.patch.bias");
    const Tensor& cls = w.get("embed.cls");

    Tensor tokens({n + 1, d});
    gemm(n, d, f, patches.data(), f, proj.raw(), f, true, tokens.raw() + d, d);
    for (std::size_t j = 0; j < d; ++j) tokens[j] = cls[j] + (*pos)[j];
    for (std::size_t i = 1; i <= n; ++i) {
        float* row = tokens.raw() + i * d;
        const float* pr = pos->raw() + i * d;
        for (std::size_t j = 0; j < d; ++j) row[j] = (row[j] + bias[j]) + pr[j];
    }
    require_finite(tokens, "patchify_embed");
    return tokens;
}

void add_bias_rows(float* data, std::size_t rows, std::size_t width, const Tensor& bias) {
    for (std::size_t r = 0; r < rows; ++r) {
        float* row = data + r * width;
        for (std::size_t j = 0; j < width; ++j) row[j] += bias[j];
    }
}

FeatureBundle forward_impl(const Tensor& tokens, const WeightStore& w, const ViTConfig& cfg, Tensor* final_tokens) {
    require_rank(tokens, 2, "encoder_forward");
    const std::size_t N = tokens.dim(0);
    const std::size_t d = static_cast<std::size_t>(cfg.embed_dim);
    const std::size_t heads = static_cast<std::size_t>(cfg.num_heads);
    const std::size_t dh = d / heads;
    const std::size_t hidden = static_cast<std::size_t>(cfg.mlp_hidden());
    if (tokens.dim(1) != d) {
        throw ShapeError("encoder_forward: token width " + std::to_string(tokens.dim(1)) + " != embed_dim " +
                         std::to_string(d));
    }
    const float scale = 1.0f / std::sqrt(static_cast<float>(dh));

    std::vector<float> z(tokens.data().begin(), tokens.data().end());
    std::vector<float> xn(N * d), qkv(N * 3 * d), scores(N * N), attn(N * d), tmp(N * d), mlp(N * hidden);

    FeatureBundle out;
    out.cls_attention = Tensor({heads, N});

    for (int l = 0; l < cfg.depth; ++l) {
        const bool last = l == cfg.depth - 1;
        const auto get = [&](const char* s) -> const Tensor& { return w.get(layer_name(l, s)); };

        layer_norm_rows(z, N, d, get("ln1.weight").data(), get("ln1.bias").data(), cfg.layer_norm_eps, xn);
        gemm(N, 3 * d, d, xn.data(), d, get("attn.qkv.weight").raw(), d, true, qkv.data(), 3 * d);
        add_bias_rows(qkv.data(), N, 3 * d, get("attn.qkv.bias"));

        for (std::size_t h = 0; h < heads; ++h) {
            const float* q = qkv.data() + h * dh;
            const float* k = qkv.data() + d + h * dh;
            const float* v = qkv.data() + 2 * d + h * dh;
            gemm(N, N, dh, q, 3 * d, k, 3 * d, true, scores.data(), N);
            for (std::size_t r = 0; r < N; ++r) {
                std::span<float> row(scores.data() + r * N, N);
                for (float& s : row) s *= scale;
                softmax_inplace(row);
            }
            if (last) {
                std::copy_n(scores.data(), N, out.cls_attention.raw() + h * N);
            }
            gemm(N, dh, N, scores.data(), N, v, 3 * d, false, attn.data() + h * dh, d);
        }

        if (last) {
            out.last_layer_input = Tensor({N, d}, xn);
            out.keys = Tensor({N, d});
            for (std::size_t r = 0; r < N; ++r) {
                std::copy_n(qkv.data() + r * 3 * d + d, d, out.keys.raw() + r * d);
            }
        }

        gemm(N, d, d, attn.data(), d, get("attn.out.weight").raw(), d, true, tmp.data(), d);
        const Tensor& out_bias = get("attn.out.bias");
        for (std::size_t r = 0; r < N; ++r)
            for (std::size_t j = 0; j < d; ++j) z[r * d + j] += tmp[r * d + j] + out_bias[j];

        layer_norm_rows(z, N, d, get("ln2.weight").data(), get("ln2.bias").data(), cfg.layer_norm_eps, xn);
        gemm(N, hidden, d, xn.data(), d, get("mlp.fc1.weight").raw(), d, true, mlp.data(), hidden);
        add_bias_rows(mlp.data(), N, hidden, get("mlp.fc1.bias"));
        gelu_inplace(mlp);
        gemm(N, d, hidden, mlp.data(), hidden, get("mlp.fc2.weight").raw(), hidden, true, tmp.data(), d);
        const Tensor& fc2_bias = get("mlp.fc2.bias");
        for (std::size_t r = 0; r < N; ++r)
            for (std::size_t j = 0; j < d; ++j) z[r * d + j] += tmp[r * d + j] + fc2_bias[j];
    }

    layer_norm_rows(z, N, d, w.get("final_norm.weight").data(), w.get("final_norm.bias").data(),
                    cfg.layer_norm_eps, xn);
    out.cls = Tensor({d}, std::vector<float>(xn.begin(), xn.begin() + static_cast<std::ptrdiff_t>(d)));
    if (final_tokens) {
        *final_tokens = Tensor({N, d}, xn);
    }
    require_finite(out.cls, "encoder_forward");
    require_finite(out.keys, "encoder_forward");
    require_finite(out.cls_attention, "encoder_forward");
    return out;
}

} // namespace

VitModel::VitModel(WeightStore weights, ViTConfig config) : weights_(std::move(weights)), config_(std::move(config)) {
    config_.validate();
    for (const auto& name : canonical_weight_names(config_)) {
        (void)weights_.get(name);
    }
    pos_ = resample_positional(weights_, config_.grid_h(), config_.grid_w());
}

Tensor VitModel::patchify_embed(const NormalizedImage& image) const {
    return embed_impl(image, weights_, config_, &pos_);
}

FeatureBundle VitModel::encoder_forward(const Tensor& tokens) const {
    return forward_impl(tokens, weights_, config_, nullptr);
}

FeatureBundle VitModel::encoder_forward(const Tensor& tokens, Tensor* final_tokens) const {
    return forward_impl(tokens, weights_, config_, final_tokens);
}

NormalizedImage VitModel::prepare(const ImageBuffer& image) const {
    return mfp::to_model_input(image, config_);
}

FeatureBundle VitModel::extract(const ImageBuffer& image) const {
    return encoder_forward(patchify_embed(prepare(image)));
}

FeatureBundle VitModel::extract(const std::filesystem::path& path) const {
    return extract(decode_image(path));
}

Tensor patchify_embed(const NormalizedImage& image, const WeightStore& weights, const ViTConfig& config) {
    return embed_impl(image, weights, config, nullptr);
}

FeatureBundle encoder_forward(const Tensor& tokens, const WeightStore& weights, const ViTConfig& config) {
    return forward_impl(tokens, weights, config, nullptr);
}

NormalizedImage to_model_input(const ImageBuffer& image, const ViTConfig& config) {
    return to_model_input(image, config.image_height, config.image_width);
}

} // namespace mfp
