#!/usr/bin/env python3
"""Regenerates tests/fixtures.

Images are procedural; reference activations come from timm's VisionTransformer
loaded with the checkpoint written by `mfp-synth-weights`, SSIM/PSNR references
from scikit-image, decode references from Pillow.

    build/tools/mfp-synth-weights --out /tmp/w.safetensors
    python3 tools/fixtures/make_fixtures.py --weights /tmp/w.safetensors --out tests/fixtures
"""

import argparse
import json
import pathlib

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image, ImageDraw, ImageFilter
from safetensors.numpy import save_file
from safetensors.torch import load_file
from skimage.metrics import peak_signal_noise_ratio, structural_similarity
from timm.models.vision_transformer import VisionTransformer

SIZE = 256
LAND = (242, 239, 233)
PARK = (200, 250, 204)
WOOD = (173, 209, 158)
WATER = (170, 211, 223)
BUILDING = (217, 208, 201)
ROAD = (255, 255, 255)
ROAD_EDGE = (205, 196, 186)
MAJOR = (252, 214, 164)
MAJOR_EDGE = (226, 160, 96)

MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


def polyline(rng, size, horizontal):
    pts = []
    fixed = rng.uniform(0.1, 0.9) * size
    for t in np.linspace(-0.1, 1.1, 6):
        along = t * size
        off = fixed + rng.normal(0, size * 0.04)
        pts.append((along, off) if horizontal else (off, along))
    return pts


def road_layout(rng, size):
    roads = []
    for _ in range(rng.integers(2, 4)):
        roads.append(("minor", polyline(rng, size, True)))
    for _ in range(rng.integers(2, 4)):
        roads.append(("minor", polyline(rng, size, False)))
    roads.append(("major", polyline(rng, size, bool(rng.integers(0, 2)))))
    return roads


def draw_roads(draw, roads, style):
    for kind, pts in roads:
        width = 9 if kind == "major" else 5
        if style == "map":
            edge, fill = (MAJOR_EDGE, MAJOR) if kind == "major" else (ROAD_EDGE, ROAD)
            draw.line(pts, fill=edge, width=width + 3, joint="curve")
            draw.line(pts, fill=fill, width=width, joint="curve")
        elif style == "aerial":
            draw.line(pts, fill=(118, 116, 112), width=width + 2, joint="curve")
        else:
            draw.line(pts, fill=255, width=width + 2, joint="curve")


def make_map(rng, size=SIZE):
    img = Image.new("RGB", (size, size), LAND)
    d = ImageDraw.Draw(img)
    for _ in range(rng.integers(1, 4)):
        cx, cy = rng.uniform(0, size, 2)
        r = rng.uniform(20, 60)
        pts = [(cx + r * np.cos(a) * rng.uniform(0.6, 1.2), cy + r * np.sin(a) * rng.uniform(0.6, 1.2))
               for a in np.linspace(0, 2 * np.pi, 9)[:-1]]
        d.polygon(pts, fill=PARK if rng.random() < 0.6 else WOOD)
    if rng.random() < 0.6:
        pts = polyline(rng, size, bool(rng.integers(0, 2)))
        d.line(pts, fill=WATER, width=int(rng.integers(14, 30)), joint="curve")
    for _ in range(rng.integers(25, 60)):
        x, y = rng.uniform(0, size, 2)
        w, h = rng.uniform(5, 16, 2)
        d.rectangle([x, y, x + w, y + h], fill=BUILDING, outline=(196, 185, 175))
    draw_roads(d, road_layout(rng, size), "map")
    return img


def make_aerial(rng, size=SIZE):
    roads = road_layout(rng, size)
    noise = rng.normal(0, 1, (size // 8, size // 8))
    field = np.array(Image.fromarray(((noise - noise.min()) / np.ptp(noise) * 255).astype(np.uint8))
                     .resize((size, size), Image.BICUBIC), dtype=np.float32) / 255.0
    grass = np.array([78, 104, 58], dtype=np.float32)
    soil = np.array([138, 120, 92], dtype=np.float32)
    base = grass[None, None] * (1 - field[..., None]) + soil[None, None] * field[..., None]
    base += rng.normal(0, 6, base.shape)
    aerial = Image.fromarray(np.clip(base, 0, 255).astype(np.uint8))
    d = ImageDraw.Draw(aerial)
    for _ in range(rng.integers(20, 40)):
        x, y = rng.uniform(0, size, 2)
        w, h = rng.uniform(6, 14, 2)
        roof = (170, 90, 70) if rng.random() < 0.5 else (180, 180, 176)
        d.rectangle([x, y, x + w, y + h], fill=roof)
    draw_roads(d, roads, "aerial")
    aerial = aerial.filter(ImageFilter.GaussianBlur(0.6))

    plan = Image.new("RGB", (size, size), LAND)
    draw_roads(ImageDraw.Draw(plan), roads, "map")
    mask = Image.new("L", (size, size), 0)
    draw_roads(ImageDraw.Draw(mask), roads, "mask")
    return aerial, plan, mask


def build_model(weights_path, grid):
    sd = load_file(str(weights_path))
    model = VisionTransformer(img_size=SIZE, patch_size=16, embed_dim=384, depth=12, num_heads=6, mlp_ratio=4.0,
                              qkv_bias=True, num_classes=0, global_pool="token")
    pos = sd["pos_embed"]
    src = int(round((pos.shape[1] - 1) ** 0.5))
    patch = pos[:, 1:].reshape(1, src, src, -1).permute(0, 3, 1, 2)
    patch = F.interpolate(patch, size=(grid, grid), mode="bicubic", align_corners=False, antialias=False)
    sd["pos_embed"] = torch.cat([pos[:, :1], patch.permute(0, 2, 3, 1).reshape(1, grid * grid, -1)], dim=1)
    model.load_state_dict(sd, strict=True)
    model.eval()
    return model, sd["pos_embed"][0].clone()


def model_input(img):
    a = np.asarray(img, dtype=np.float32) / np.float32(255.0)
    a = (a - MEAN) / STD
    return torch.from_numpy(a.transpose(2, 0, 1).copy())[None]


@torch.no_grad()
def reference_features(model, img):
    captured = {}
    last = model.blocks[-1]
    hooks = [
        last.norm1.register_forward_hook(lambda m, i, o: captured.__setitem__("lli", o)),
        last.attn.qkv.register_forward_hook(lambda m, i, o: captured.__setitem__("qkv", o)),
        model.pos_drop.register_forward_hook(lambda m, i, o: captured.__setitem__("embed", o)),
    ]
    x = model_input(img)
    tokens = model.forward_features(x)
    for h in hooks:
        h.remove()
    d, heads = 384, 6
    qkv = captured["qkv"][0]
    q, k = qkv[:, :d], qkv[:, d:2 * d]
    dh = d // heads
    qh = q.reshape(-1, heads, dh).permute(1, 0, 2)
    kh = k.reshape(-1, heads, dh).permute(1, 0, 2)
    attn = torch.softmax((qh[:, :1] @ kh.transpose(1, 2)) * dh ** -0.5, dim=-1)[:, 0]
    return {
        "cls": tokens[0, 0].numpy().copy(),
        "keys": k.numpy().copy(),
        "cls_attention": attn.numpy().copy(),
        "last_layer_input": captured["lli"][0].numpy().copy(),
        "embed": captured["embed"][0].numpy().copy(),
    }


def luma(img):
    a = np.asarray(img, dtype=np.float64)
    return np.floor(0.299 * a[..., 0] + 0.587 * a[..., 1] + 0.114 * a[..., 2] + 0.5).astype(np.uint8)


def perturb(rng, img, kind):
    a = np.asarray(img)
    if kind == "noise":
        return Image.fromarray(np.clip(a + rng.normal(0, 12, a.shape), 0, 255).round().astype(np.uint8))
    if kind == "blur":
        return img.filter(ImageFilter.GaussianBlur(1.5))
    if kind == "shift":
        return Image.fromarray(np.roll(a, (3, -5), axis=(0, 1)))
    if kind == "contrast":
        return Image.fromarray(np.clip((a.astype(np.float64) - 128) * 0.8 + 140, 0, 255).round().astype(np.uint8))
    raise ValueError(kind)


def weights_manifest(weights_path):
    sd = load_file(str(weights_path))
    out = {}
    for name in sorted(sd):
        v = sd[name].numpy().astype(np.float64).ravel()
        out[name] = {"shape": list(sd[name].shape), "sum": float(v.sum()), "sum_sq": float((v * v).sum()),
                     "head": [float(x) for x in sd[name].numpy().ravel()[:8]]}
    return out


def decode_fixtures(rng, out):
    dec = out / "decode"
    dec.mkdir(exist_ok=True)
    base = make_map(rng).resize((64, 48))
    base.quantize(colors=32).save(dec / "palette.png")
    gray = np.asarray(base.convert("L"))
    alpha = np.tile(np.linspace(0, 255, 64).round().astype(np.uint8), (48, 1))
    Image.fromarray(np.dstack([gray, alpha]), "LA").save(dec / "gray_alpha.png")
    rgba = np.dstack([np.asarray(base), alpha])
    Image.fromarray(rgba, "RGBA").save(dec / "rgba.png")
    Image.fromarray(gray.astype(np.uint16) * 257).save(dec / "gray16.png")
    base.save(dec / "photo.jpg", quality=90)

    refs = {
        "palette.png": np.asarray(Image.open(dec / "palette.png").convert("RGB")),
        "photo.jpg": np.asarray(Image.open(dec / "photo.jpg").convert("RGB")),
        "gray16.png": np.repeat(gray[..., None], 3, axis=2),
    }

    def over_white(rgb, a):
        rgb = rgb.astype(np.uint32)
        a = a.astype(np.uint32)[..., None]
        return ((rgb * a + 255 * (255 - a) + 127) // 255).astype(np.uint8)

    refs["gray_alpha.png"] = over_white(np.repeat(gray[..., None], 3, axis=2), alpha)
    refs["rgba.png"] = over_white(np.asarray(base), alpha)
    for name, arr in refs.items():
        Image.fromarray(arr, "RGB").save(dec / (name.replace(".", "_") + "_ref.png"))
    (dec / "corrupt.png").write_bytes(b"\x89PNG\r\n\x1a\n" + bytes(range(64)))
    (dec / "not_an_image.png").write_bytes(b"plain text, not pixels\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--weights", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=20240611)
    args = ap.parse_args()
    torch.set_num_threads(4)
    out = pathlib.Path(args.out)
    (out / "maps").mkdir(parents=True, exist_ok=True)
    (out / "oracle").mkdir(exist_ok=True)
    (out / "ssim").mkdir(exist_ok=True)
    rng = np.random.default_rng(args.seed)

    maps = []
    for i in range(10):
        img = make_map(rng)
        img.save(out / "maps" / f"map_{i:02d}.png")
        maps.append(img)
    aerial, plan, mask = make_aerial(rng)
    aerial.save(out / "maps" / "aerial.png")
    plan.save(out / "maps" / "aerial_map.png")
    mask.save(out / "road_mask.png")

    model, pos = build_model(args.weights, SIZE // 16)
    for i in range(5):
        f = reference_features(model, maps[i])
        keep = ["cls", "keys", "cls_attention"] + (["last_layer_input", "embed"] if i == 0 else [])
        tensors = {k: np.ascontiguousarray(f[k]) for k in keep}
        if i == 0:
            tensors["pos_resampled"] = pos.numpy().copy()
        save_file(tensors, str(out / "oracle" / f"map_{i:02d}.safetensors"))

    kinds = ["noise", "blur", "shift", "contrast"]
    pairs = []
    for i in range(10):
        kind = kinds[i % len(kinds)]
        a = maps[i]
        b = perturb(rng, a, kind) if i < 8 else maps[(i + 3) % 10]
        name = f"pair_{i:02d}.png"
        b.save(out / "ssim" / name)
        b = Image.open(out / "ssim" / name).convert("RGB")
        ssim = structural_similarity(luma(a), luma(b), gaussian_weights=True, sigma=1.5,
                                     use_sample_covariance=False, data_range=255)
        psnr = peak_signal_noise_ratio(np.asarray(a), np.asarray(b), data_range=255)
        pairs.append({"reference": f"maps/map_{i:02d}.png", "distorted": f"ssim/{name}",
                      "kind": kind if i < 8 else "other_map", "ssim": float(ssim), "psnr_db": float(psnr)})
    (out / "ssim_psnr_reference.json").write_text(json.dumps(pairs, indent=2) + "\n")
    (out / "weights_manifest.json").write_text(json.dumps(weights_manifest(args.weights), indent=1) + "\n")
    decode_fixtures(rng, out)


if __name__ == "__main__":
    main()
