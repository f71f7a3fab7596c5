// Writes a deterministic randomly initialized ViT checkpoint with the
// original self-supervised release's tensor names.

#include "mfp/safetensors.hpp"
#include "mfp/synthetic.hpp"
#include "mfp/vit.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic ViT-S safetensors checkpoint"};
    std::string out, backbone = "vits16";
    std::uint64_t seed = 0x5eed;
    int pos_grid = 14;
    app.add_option("--out", out)->required();
    app.add_option("--backbone", backbone)->check(CLI::IsMember({"vits16", "vits8"}));
    app.add_option("--seed", seed);
    app.add_option("--pos-grid", pos_grid, "side of the stored positional grid")->check(CLI::Range(1, 128));
    CLI11_PARSE(app, argc, argv);
    try {
        const auto config = mfp::ViTConfig::from_name(backbone);
        mfp::safetensors::write(out, mfp::make_synthetic_checkpoint(config, seed, pos_grid));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
