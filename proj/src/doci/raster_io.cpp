#include "doci/raster_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace doci {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<std::uint8_t> header_bytes(std::size_t w, std::size_t h, RasterDtype dtype) {
    require(w <= UINT32_MAX && h <= UINT32_MAX, "raster too large for the file format");
    std::vector<std::uint8_t> out{'D', 'O', 'C', 'R'};
    put_u16(out, kRasterVersion);
    put_u32(out, static_cast<std::uint32_t>(w));
    put_u32(out, static_cast<std::uint32_t>(h));
    out.push_back(static_cast<std::uint8_t>(dtype));
    out.push_back(0);
    return out;
}

RasterHeader expect(const std::vector<std::uint8_t>& bytes, RasterDtype dtype) {
    RasterHeader h = read_header(bytes);
    if (h.dtype != dtype) fail(ErrorCode::UnsupportedDtype, "raster holds a different element type");
    return h;
}

}  // namespace

std::size_t RasterHeader::payload_size() const {
    const std::uint64_t n = static_cast<std::uint64_t>(width) * height;
    switch (dtype) {
        case RasterDtype::Float32: return static_cast<std::size_t>(n * 4);
        case RasterDtype::UInt16: return static_cast<std::size_t>(n * 2);
        case RasterDtype::Mask: return static_cast<std::size_t>((n + 7) / 8);
    }
    return 0;
}

RasterHeader read_header(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "DOCR", 4) != 0) {
        fail(ErrorCode::BadMagic, "not a DOCR raster");
    }
    if (bytes.size() < kRasterHeaderSize) fail(ErrorCode::TruncatedPayload, "raster header is truncated");
    RasterHeader h;
    h.version = get_u16(bytes.data() + 4);
    if (h.version != kRasterVersion) {
        fail(ErrorCode::UnsupportedVersion, "raster version " + std::to_string(h.version) + " is not supported");
    }
    h.width = get_u32(bytes.data() + 6);
    h.height = get_u32(bytes.data() + 10);
    const std::uint8_t dtype = bytes[14];
    if (dtype < 1 || dtype > 3) fail(ErrorCode::UnsupportedDtype, "unknown raster dtype " + std::to_string(dtype));
    h.dtype = static_cast<RasterDtype>(dtype);
    const std::uint64_t need = kRasterHeaderSize + static_cast<std::uint64_t>(h.payload_size());
    if (bytes.size() < need) fail(ErrorCode::TruncatedPayload, "raster payload is truncated");
    if (bytes.size() > need) fail(ErrorCode::ShapeMismatch, "raster file has trailing bytes");
    return h;
}

std::vector<std::uint8_t> encode_raster(const RasterF& raster) {
    auto out = header_bytes(raster.width(), raster.height(), RasterDtype::Float32);
    out.reserve(out.size() + 4 * raster.size());
    for (float v : raster.pixels()) {
        if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "raster holds a non-finite value");
        put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

std::vector<std::uint8_t> encode_raster(const RasterU16& raster) {
    auto out = header_bytes(raster.width(), raster.height(), RasterDtype::UInt16);
    out.reserve(out.size() + 2 * raster.size());
    for (std::uint16_t v : raster.pixels()) put_u16(out, v);
    return out;
}

std::vector<std::uint8_t> encode_mask(const Mask& mask) {
    auto out = header_bytes(mask.width(), mask.height(), RasterDtype::Mask);
    const std::size_t base = out.size();
    out.resize(base + (mask.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) out[base + i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    }
    return out;
}

RasterF decode_f32(const std::vector<std::uint8_t>& bytes) {
    const RasterHeader h = expect(bytes, RasterDtype::Float32);
    std::vector<float> data(static_cast<std::size_t>(h.width) * h.height);
    const std::uint8_t* p = bytes.data() + kRasterHeaderSize;
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = std::bit_cast<float>(get_u32(p + 4 * i));
        if (!std::isfinite(data[i])) fail(ErrorCode::NonFinite, "raster holds a non-finite value");
    }
    return RasterF(h.width, h.height, std::move(data));
}

RasterU16 decode_u16(const std::vector<std::uint8_t>& bytes) {
    const RasterHeader h = expect(bytes, RasterDtype::UInt16);
    std::vector<std::uint16_t> data(static_cast<std::size_t>(h.width) * h.height);
    const std::uint8_t* p = bytes.data() + kRasterHeaderSize;
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = get_u16(p + 2 * i);
    return RasterU16(h.width, h.height, std::move(data));
}

Mask decode_mask(const std::vector<std::uint8_t>& bytes) {
    const RasterHeader h = expect(bytes, RasterDtype::Mask);
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
    std::vector<std::uint8_t> data(n);
    const std::uint8_t* p = bytes.data() + kRasterHeaderSize;
    for (std::size_t i = 0; i < n; ++i) data[i] = (p[i / 8] >> (i % 8)) & 1u;
    // Padding bits past the last pixel must be clear.
    if (n % 8 != 0 && (p[n / 8] >> (n % 8)) != 0) fail(ErrorCode::ShapeMismatch, "mask padding bits are set");
    return Mask(h.width, h.height, std::move(data));
}

RasterF to_f32(const RasterD& raster) {
    std::vector<float> data(raster.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(raster[i]);
    return RasterF(raster.width(), raster.height(), std::move(data));
}

RasterD to_f64(const RasterF& raster) {
    std::vector<double> data(raster.pixels().begin(), raster.pixels().end());
    return RasterD(raster.width(), raster.height(), std::move(data));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::Io, "cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) fail(ErrorCode::Io, "write failed for " + path.string());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace doci
