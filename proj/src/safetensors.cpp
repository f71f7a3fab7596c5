#include "mfp/safetensors.hpp"

#include "mfp/error.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace mfp::safetensors {

static_assert(std::endian::native == std::endian::little, "safetensors payloads are little-endian");

namespace {

using json = nlohmann::json;

std::size_t dtype_size(const std::string& dtype) {
    if (dtype == "F32") return 4;
    if (dtype == "F16" || dtype == "BF16") return 2;
    return 0;
}

} // namespace

float half_to_float(std::uint16_t h) {
    const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
    std::uint32_t exp = (h >> 10) & 0x1fu;
    std::uint32_t mant = h & 0x3ffu;
    std::uint32_t bits = 0;
    if (exp == 0) {
        if (mant == 0) {
            bits = sign;
        } else {
            // Subnormal half: renormalize.
            int e = -1;
            do {
                ++e;
                mant <<= 1;
            } while ((mant & 0x400u) == 0);
            mant &= 0x3ffu;
            bits = sign | (static_cast<std::uint32_t>(127 - 15 - e) << 23) | (mant << 13);
        }
    } else if (exp == 0x1f) {
        bits = sign | 0x7f800000u | (mant << 13);
    } else {
        bits = sign | ((exp + 127 - 15) << 23) | (mant << 13);
    }
    return std::bit_cast<float>(bits);
}

Archive parse(const std::vector<unsigned char>& bytes, const std::string& origin) {
    if (bytes.size() < 8) {
        throw WeightError(origin + ": not a safetensors archive (too short)");
    }
    std::uint64_t header_len = 0;
    std::memcpy(&header_len, bytes.data(), 8);
    if (header_len > bytes.size() - 8) {
        throw WeightError(origin + ": safetensors header length exceeds file size");
    }
    json header;
    try {
        header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(header_len));
    } catch (const json::exception& e) {
        throw WeightError(origin + ": malformed safetensors header: " + e.what());
    }
    if (!header.is_object()) {
        throw WeightError(origin + ": safetensors header is not an object");
    }
    const std::size_t data_start = 8 + header_len;
    const std::size_t data_len = bytes.size() - data_start;
    const unsigned char* data = bytes.data() + data_start;

    Archive archive;
    for (auto it = header.begin(); it != header.end(); ++it) {
        if (it.key() == "__metadata__") {
            if (it->is_object()) {
                for (auto m = it->begin(); m != it->end(); ++m) {
                    if (m->is_string()) archive.metadata[m.key()] = m->get<std::string>();
                }
            }
            continue;
        }
        const json& entry = *it;
        try {
            const std::string dtype = entry.at("dtype").get<std::string>();
            const std::size_t esize = dtype_size(dtype);
            if (esize == 0) {
                throw WeightError(origin + ": tensor '" + it.key() + "' has unsupported dtype " + dtype);
            }
            Shape shape = entry.at("shape").get<Shape>();
            if (shape.empty()) shape = {1};
            const auto offsets = entry.at("data_offsets").get<std::vector<std::size_t>>();
            if (offsets.size() != 2 || offsets[0] > offsets[1] || offsets[1] > data_len) {
                throw WeightError(origin + ": tensor '" + it.key() + "' has invalid data offsets");
            }
            const std::size_t count = shape_numel(shape);
            if (count * esize != offsets[1] - offsets[0]) {
                throw WeightError(origin + ": tensor '" + it.key() + "' byte length does not match shape");
            }
            std::vector<float> values(count);
            const unsigned char* src = data + offsets[0];
            if (dtype == "F32") {
                std::memcpy(values.data(), src, count * 4);
            } else {
                for (std::size_t i = 0; i < count; ++i) {
                    std::uint16_t h = 0;
                    std::memcpy(&h, src + 2 * i, 2);
                    values[i] = dtype == "F16" ? half_to_float(h)
                                               : std::bit_cast<float>(static_cast<std::uint32_t>(h) << 16);
                }
            }
            archive.tensors.emplace(it.key(), Tensor(std::move(shape), std::move(values)));
        } catch (const json::exception& e) {
            throw WeightError(origin + ": malformed entry '" + it.key() + "': " + e.what());
        } catch (const ShapeError& e) {
            throw WeightError(origin + ": tensor '" + it.key() + "': " + e.what());
        }
    }
    return archive;
}

Archive read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open weight archive: " + path.string());
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("failed reading weight archive: " + path.string());
    }
    return parse(bytes, path.string());
}

std::vector<unsigned char> serialize(const Archive& archive) {
    json header = json::object();
    std::size_t offset = 0;
    for (const auto& [name, tensor] : archive.tensors) {
        const std::size_t len = tensor.numel() * 4;
        header[name] = {{"dtype", "F32"}, {"shape", tensor.shape()}, {"data_offsets", {offset, offset + len}}};
        offset += len;
    }
    if (!archive.metadata.empty()) {
        header["__metadata__"] = archive.metadata;
    }
    std::string text = header.dump();
    // Pad so the payload starts 8-byte aligned.
    while ((text.size() + 8) % 8 != 0) text.push_back(' ');

    std::vector<unsigned char> out(8 + text.size() + offset);
    const std::uint64_t header_len = text.size();
    std::memcpy(out.data(), &header_len, 8);
    std::memcpy(out.data() + 8, text.data(), text.size());
    unsigned char* dst = out.data() + 8 + text.size();
    for (const auto& [name, tensor] : archive.tensors) {
        std::memcpy(dst, tensor.raw(), tensor.numel() * 4);
        dst += tensor.numel() * 4;
    }
    return out;
}

void write(const std::filesystem::path& path, const Archive& archive) {
    const auto bytes = serialize(archive);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write archive: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing archive: " + path.string());
    }
}

} // namespace mfp::safetensors
