#pragma once

#include "mfp/image.hpp"
#include "mfp/tensor.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mfp {

struct ViTConfig {
    std::string name = "vits16";
    int patch_size = 16;
    int embed_dim = 384;
    int depth = 12;
    int num_heads = 6;
    double mlp_ratio = 4.0;
    int image_height = 256;
    int image_width = 256;
    int channels = 3;
    float layer_norm_eps = 1e-6f;

    // Self-supervised ViT-Small at 256x256 with patch 16 or 8.
    static ViTConfig vit_small(int patch_size);
    // "vits16" or "vits8"; throws ConfigError otherwise.
    static ViTConfig from_name(std::string_view backbone);

    void validate() const;
    int grid_h() const { return image_height / patch_size; }
    int grid_w() const { return image_width / patch_size; }
    int num_patches() const { return grid_h() * grid_w(); }
    int num_tokens() const { return num_patches() + 1; }
    int head_dim() const { return embed_dim / num_heads; }
    int mlp_hidden() const { return static_cast<int>(embed_dim * mlp_ratio + 0.5); }
    int patch_features() const { return channels * patch_size * patch_size; }

    std::string canonical_string() const;
    // 16 hex digits of FNV-1a over canonical_string().
    std::string hash() const;
};

/// Maps checkpoint tensor names onto canonical names.
///
/// Text format, one rule per line, `#` starts a comment:
///
///     <checkpoint-name> <canonical-name> [rows=<index>/<count>]
///
/// `{i}` in both names matches a layer index. A `rows=` suffix says the
/// checkpoint tensor supplies row block `index` of `count` equal blocks of the
/// canonical tensor (used to fuse separate q/k/v projections).
class NameMap {
public:
    struct Rule {
        std::string checkpoint;
        std::string canonical;
        int part = 0;
        int parts = 1;
    };

    static NameMap parse(std::string_view text);
    static NameMap load(const std::filesystem::path& path);
    // The table for the original self-supervised ViT release naming.
    static const NameMap& dino();

    struct Match {
        std::string canonical;
        int part = 0;
        int parts = 1;
    };
    std::optional<Match> resolve(std::string_view checkpoint_name) const;
    const std::vector<Rule>& rules() const { return rules_; }

private:
    std::vector<Rule> rules_;
};

extern const char* const kDinoNameMapText;

// Canonical names in forward order; load_weights reports the first absent one.
std::vector<std::string> canonical_weight_names(const ViTConfig& config);

class WeightStore {
public:
    const Tensor& get(std::string_view canonical) const;
    bool contains(std::string_view canonical) const;
    void insert(std::string canonical, Tensor tensor);
    std::size_t size() const { return tensors_.size(); }
    const std::map<std::string, Tensor, std::less<>>& tensors() const { return tensors_; }

    std::vector<std::string> warnings;  // ignored checkpoint tensors, etc.

private:
    std::map<std::string, Tensor, std::less<>> tensors_;
};

/// Loads a safetensors archive and resolves it through `names`.
/// Unknown checkpoint tensors are ignored and listed in `warnings`.
/// Shapes are validated against `config`; the positional table may hold any
/// square grid and is resampled at embedding time.
WeightStore load_weights(const std::filesystem::path& archive_path, const ViTConfig& config,
                         const NameMap& names = NameMap::dino());
WeightStore resolve_weights(std::map<std::string, Tensor> checkpoint, const ViTConfig& config,
                            const NameMap& names = NameMap::dino());

struct FeatureBundle {
    Tensor cls;               // [d], final-norm CLS token
    Tensor keys;              // [(n+1) x d], last-layer key projections incl. bias
    Tensor last_layer_input;  // [(n+1) x d], LN1 output feeding the last attention
    Tensor cls_attention;     // [h x (n+1)], last-layer attention of the CLS query

    friend bool operator==(const FeatureBundle&, const FeatureBundle&) = default;
};

// Bicubic (a = -0.75, half-pixel centers, clamped taps) resampling of the
// patch part of a positional table; row 0 (CLS) is copied.
Tensor interpolate_pos_embeddings(const Tensor& pos, int src_h, int src_w, int dst_h, int dst_w);

/// Forward pass of a pre-norm ViT over one image. Immutable after
/// construction; `extract` may be called concurrently.
class VitModel {
public:
    VitModel(WeightStore weights, ViTConfig config);

    const ViTConfig& config() const { return config_; }
    const WeightStore& weights() const { return weights_; }
    const Tensor& positional() const { return pos_; }

    Tensor patchify_embed(const NormalizedImage& image) const;
    FeatureBundle encoder_forward(const Tensor& tokens) const;
    // Also returns the final-norm output for every token.
    FeatureBundle encoder_forward(const Tensor& tokens, Tensor* final_tokens) const;

    NormalizedImage prepare(const ImageBuffer& image) const;
    FeatureBundle extract(const ImageBuffer& image) const;
    FeatureBundle extract(const std::filesystem::path& path) const;

private:
    WeightStore weights_;
    ViTConfig config_;
    Tensor pos_;  // [(n+1) x d] at the configured grid
};

// Free-function forms of the model surface.
Tensor patchify_embed(const NormalizedImage& image, const WeightStore& weights, const ViTConfig& config);
FeatureBundle encoder_forward(const Tensor& tokens, const WeightStore& weights, const ViTConfig& config);
NormalizedImage to_model_input(const ImageBuffer& image, const ViTConfig& config);

} // namespace mfp
