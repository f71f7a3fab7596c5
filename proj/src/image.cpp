#include "mfp/image.hpp"

#include "mfp/error.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cmath>
#include <cstring>
#include <fstream>
#include <algorithm>

#include <jpeglib.h>

namespace mfp {

ImageBuffer::ImageBuffer(int w, int h, std::uint8_t fill) : width(w), height(h) {
    if (w < 1 || h < 1) {
        throw ShapeError("image dimensions must be positive");
    }
    pixels.assign(3 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
}

namespace {

bool is_png(std::span<const std::uint8_t> b) {
    static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    return b.size() >= 8 && std::memcmp(b.data(), sig, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> b) {
    return b.size() >= 3 && b[0] == 0xff && b[1] == 0xd8 && b[2] == 0xff;
}

ImageBuffer decode_png(std::span<const std::uint8_t> bytes, const std::string& origin) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
        throw DecodeError(origin + ": " + img.message);
    }
    if (img.format & PNG_FORMAT_FLAG_LINEAR) {
        // 16-bit samples: the simplified API would gamma-encode them on the way
        // to 8 bits, so read them unchanged (alpha premultiplied) and rescale.
        img.format = PNG_FORMAT_LINEAR_RGB_ALPHA;
        std::vector<std::uint16_t> rgba(PNG_IMAGE_SIZE(img) / sizeof(std::uint16_t));
        if (!png_image_finish_read(&img, nullptr, rgba.data(), 0, nullptr)) {
            png_image_free(&img);
            throw DecodeError(origin + ": " + img.message);
        }
        ImageBuffer out(static_cast<int>(img.width), static_cast<int>(img.height));
        const std::size_t count = static_cast<std::size_t>(out.width) * out.height;
        for (std::size_t i = 0; i < count; ++i) {
            const std::uint32_t a = rgba[4 * i + 3];
            for (int c = 0; c < 3; ++c) {
                const std::uint32_t v = rgba[4 * i + c] + (65535u - a);
                out.pixels[3 * i + c] = static_cast<std::uint8_t>((v * 255u + 32767u) / 65535u);
            }
        }
        return out;
    }
    img.format = PNG_FORMAT_RGBA;
    std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, rgba.data(), 0, nullptr)) {
        png_image_free(&img);
        throw DecodeError(origin + ": " + img.message);
    }
    ImageBuffer out(static_cast<int>(img.width), static_cast<int>(img.height));
    const std::size_t count = static_cast<std::size_t>(out.width) * out.height;
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned a = rgba[4 * i + 3];
        for (int c = 0; c < 3; ++c) {
            const unsigned v = rgba[4 * i + c];
            // Over white, rounded half up.
            out.pixels[3 * i + c] = static_cast<std::uint8_t>((v * a + 255u * (255u - a) + 127u) / 255u);
        }
    }
    return out;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, mgr->message);
    std::longjmp(mgr->jump, 1);
}

// Returns false and fills `message` on failure; no C++ objects with
// destructors are created between setjmp and the decode loop.
bool decode_jpeg_raw(const std::uint8_t* data, std::size_t size, std::vector<std::uint8_t>& out,
                     int& width, int& height, std::string& message) {
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    err.message[0] = '\0';
    if (setjmp(err.jump)) {
        message = err.message;
        jpeg_destroy_decompress(&cinfo);
        return false;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, const_cast<unsigned char*>(data), static_cast<unsigned long>(size));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    width = static_cast<int>(cinfo.output_width);
    height = static_cast<int>(cinfo.output_height);
    out.resize(3 * static_cast<std::size_t>(width) * height);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = out.data() + 3 * static_cast<std::size_t>(width) * cinfo.output_scanline;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return true;
}

ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes, const std::string& origin) {
    std::vector<std::uint8_t> pixels;
    int w = 0, h = 0;
    std::string message;
    if (!decode_jpeg_raw(bytes.data(), bytes.size(), pixels, w, h, message)) {
        throw DecodeError(origin + ": " + message);
    }
    if (w < 1 || h < 1) {
        throw DecodeError(origin + ": empty JPEG");
    }
    ImageBuffer out;
    out.width = w;
    out.height = h;
    out.pixels = std::move(pixels);
    return out;
}

} // namespace

ImageBuffer decode_image_bytes(std::span<const std::uint8_t> bytes, const std::string& origin) {
    if (is_png(bytes)) return decode_png(bytes, origin);
    if (is_jpeg(bytes)) return decode_jpeg(bytes, origin);
    throw DecodeError(origin + ": unsupported or corrupt image format");
}

ImageBuffer decode_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open image: " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_image_bytes(bytes, path.string());
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& image) {
    if (!image.valid()) {
        throw ShapeError("encode_png: invalid image buffer");
    }
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
        throw IoError(std::string("PNG encode failed: ") + img.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
        throw IoError(std::string("PNG encode failed: ") + img.message);
    }
    out.resize(size);
    return out;
}

void write_png(const std::filesystem::path& path, const ImageBuffer& image) {
    const auto bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write PNG: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing PNG: " + path.string());
    }
}

std::vector<float> resize_bilinear(const ImageBuffer& image, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) {
        throw ShapeError("resize_bilinear: target size must be positive");
    }
    std::vector<float> out(3 * static_cast<std::size_t>(out_w) * out_h);
    if (out_w == image.width && out_h == image.height) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = image.pixels[i];
        return out;
    }
    const double sx = static_cast<double>(image.width) / out_w;
    const double sy = static_cast<double>(image.height) / out_h;
    struct Tap {
        int i0, i1;
        float w1;
    };
    auto taps = [](int out_n, int in_n, double scale) {
        std::vector<Tap> t(static_cast<std::size_t>(out_n));
        for (int o = 0; o < out_n; ++o) {
            double src = (o + 0.5) * scale - 0.5;
            src = std::clamp(src, 0.0, static_cast<double>(in_n - 1));
            const int i0 = static_cast<int>(std::floor(src));
            const int i1 = std::min(i0 + 1, in_n - 1);
            t[static_cast<std::size_t>(o)] = {i0, i1, static_cast<float>(src - i0)};
        }
        return t;
    };
    const auto tx = taps(out_w, image.width, sx);
    const auto ty = taps(out_h, image.height, sy);
    for (int y = 0; y < out_h; ++y) {
        const Tap& vy = ty[static_cast<std::size_t>(y)];
        for (int x = 0; x < out_w; ++x) {
            const Tap& vx = tx[static_cast<std::size_t>(x)];
            const std::uint8_t* p00 = image.px(vx.i0, vy.i0);
            const std::uint8_t* p01 = image.px(vx.i1, vy.i0);
            const std::uint8_t* p10 = image.px(vx.i0, vy.i1);
            const std::uint8_t* p11 = image.px(vx.i1, vy.i1);
            float* dst = out.data() + 3 * (static_cast<std::size_t>(y) * out_w + x);
            for (int c = 0; c < 3; ++c) {
                const float top = p00[c] + vx.w1 * (static_cast<float>(p01[c]) - p00[c]);
                const float bot = p10[c] + vx.w1 * (static_cast<float>(p11[c]) - p10[c]);
                dst[c] = top + vy.w1 * (bot - top);
            }
        }
    }
    return out;
}

ImageBuffer resize_bilinear_u8(const ImageBuffer& image, int out_w, int out_h) {
    const auto values = resize_bilinear(image, out_w, out_h);
    ImageBuffer out(out_w, out_h);
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(values[i]), 0L, 255L));
    }
    return out;
}

NormalizedImage to_model_input(const ImageBuffer& image, int out_h, int out_w, const Normalization& norm) {
    if (!image.valid()) {
        throw ShapeError("to_model_input: invalid image buffer");
    }
    const auto rgb = resize_bilinear(image, out_w, out_h);
    NormalizedImage out{Tensor({3, static_cast<std::size_t>(out_h), static_cast<std::size_t>(out_w)})};
    const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
    for (int c = 0; c < 3; ++c) {
        float* dst = out.chw.raw() + c * plane;
        for (std::size_t i = 0; i < plane; ++i) {
            dst[i] = (rgb[3 * i + c] / 255.0f - norm.mean[c]) / norm.std[c];
        }
    }
    return out;
}

std::vector<std::uint8_t> to_luma(const ImageBuffer& image) {
    const std::size_t count = static_cast<std::size_t>(image.width) * image.height;
    std::vector<std::uint8_t> y(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double v = 0.299 * image.pixels[3 * i] + 0.587 * image.pixels[3 * i + 1] +
                         0.114 * image.pixels[3 * i + 2];
        y[i] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
    }
    return y;
}

ImageBuffer mirror_horizontal(const ImageBuffer& image) {
    ImageBuffer out = image;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            std::copy_n(image.px(image.width - 1 - x, y), 3, out.px(x, y));
        }
    }
    return out;
}

} // namespace mfp
