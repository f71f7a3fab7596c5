#include "mfp/synthetic.hpp"

#include <cmath>
#include <string>

namespace mfp {

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    // Exact in double: 24-bit mantissa scaled by a power of two.
    double uniform() { return static_cast<double>(next() >> 40) * 0x1.0p-24; }
    double gaussian_like() {
        static const double root3 = std::sqrt(3.0);
        return (uniform() + uniform() + uniform() + uniform() - 2.0) * root3;
    }

private:
    std::uint64_t state_;
};

Tensor fill(const std::string& name, Shape shape, std::uint64_t seed, double mean, double stddev) {
    SplitMix64 rng(seed ^ fnv1a64(name.data(), name.size()));
    Tensor t(std::move(shape));
    for (float& v : t.data()) {
        v = static_cast<float>(mean + stddev * rng.gaussian_like());
    }
    return t;
}

} // namespace

safetensors::Archive make_synthetic_checkpoint(const ViTConfig& c, std::uint64_t seed, int pos_grid) {
    c.validate();
    const auto d = static_cast<std::size_t>(c.embed_dim);
    const auto h = static_cast<std::size_t>(c.mlp_hidden());
    const auto P = static_cast<std::size_t>(c.patch_size);
    const auto C = static_cast<std::size_t>(c.channels);
    const double f = static_cast<double>(C * P * P);

    safetensors::Archive a;
    auto put = [&](const std::string& name, Shape shape, double mean, double stddev) {
        a.tensors.emplace(name, fill(name, std::move(shape), seed, mean, stddev));
    };
    put("patch_embed.proj.weight", {d, C, P, P}, 0.0, 1.0 / std::sqrt(f));
    put("patch_embed.proj.bias", {d}, 0.0, 0.1);
    put("cls_token", {1, 1, d}, 0.0, 0.5);
    put("pos_embed", {1, static_cast<std::size_t>(pos_grid * pos_grid + 1), d}, 0.0, 0.1);
    const double inv_d = 1.0 / std::sqrt(static_cast<double>(d));
    const double inv_h = 1.0 / std::sqrt(static_cast<double>(h));
    for (int i = 0; i < c.depth; ++i) {
        const std::string b = "blocks." + std::to_string(i) + ".";
        put(b + "norm1.weight", {d}, 1.0, 0.1);
        put(b + "norm1.bias", {d}, 0.0, 0.05);
        put(b + "attn.qkv.weight", {3 * d, d}, 0.0, inv_d);
        put(b + "attn.qkv.bias", {3 * d}, 0.0, 0.05);
        put(b + "attn.proj.weight", {d, d}, 0.0, 0.5 * inv_d);
        put(b + "attn.proj.bias", {d}, 0.0, 0.02);
        put(b + "norm2.weight", {d}, 1.0, 0.1);
        put(b + "norm2.bias", {d}, 0.0, 0.05);
        put(b + "mlp.fc1.weight", {h, d}, 0.0, inv_d);
        put(b + "mlp.fc1.bias", {h}, 0.0, 0.05);
        put(b + "mlp.fc2.weight", {d, h}, 0.0, 0.5 * inv_h);
        put(b + "mlp.fc2.bias", {d}, 0.0, 0.02);
    }
    put("norm.weight", {d}, 1.0, 0.1);
    put("norm.bias", {d}, 0.0, 0.05);
    a.metadata["generator"] = "mfp-synthetic";
    a.metadata["backbone"] = c.name;
    a.metadata["seed"] = std::to_string(seed);
    return a;
}

} // namespace mfp
