#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "doci/raster.hpp"

namespace doci {

// DOCR raster file: 16-byte header then a row-major little-endian payload.
//   0  "DOCR"
//   4  u16 version (1)
//   6  u32 width
//  10  u32 height
//  14  u8  dtype
//  15  u8  reserved (0)
inline constexpr std::size_t kRasterHeaderSize = 16;
inline constexpr std::uint16_t kRasterVersion = 1;

enum class RasterDtype : std::uint8_t {
    Float32 = 1,
    UInt16 = 2,
    /// One bit per pixel, LSB first, rows not padded.
    Mask = 3,
};

struct RasterHeader {
    std::uint16_t version = kRasterVersion;
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    RasterDtype dtype = RasterDtype::Float32;

    std::size_t payload_size() const;
};

std::vector<std::uint8_t> encode_raster(const RasterF& raster);
std::vector<std::uint8_t> encode_raster(const RasterU16& raster);
std::vector<std::uint8_t> encode_mask(const Mask& mask);

/// Parses and checks the header against the buffer length.
RasterHeader read_header(const std::vector<std::uint8_t>& bytes);

RasterF decode_f32(const std::vector<std::uint8_t>& bytes);
RasterU16 decode_u16(const std::vector<std::uint8_t>& bytes);
Mask decode_mask(const std::vector<std::uint8_t>& bytes);

RasterF to_f32(const RasterD& raster);
RasterD to_f64(const RasterF& raster);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace doci
