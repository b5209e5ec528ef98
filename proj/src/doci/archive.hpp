#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "doci/config_json.hpp"
#include "doci/imaging.hpp"
#include "doci/pipeline.hpp"

namespace doci {

// A stack archive is a directory holding manifest.json and one DOCR file per
// (channel, gate) plus an optional label plane. The manifest records every
// file's CRC-32 and its own checksum over everything except the "volatile"
// block (creation time). Manifests are written in canonical form and must be
// read back byte-for-byte canonical.

inline constexpr const char* kStackFormat = "doci-stack";
inline constexpr const char* kMapsFormat = "doci-maps";
inline constexpr int kArchiveVersion = 1;

std::string crc32_hex(const std::vector<std::uint8_t>& bytes);

/// Serialized manifest text with the checksum filled in.
std::string seal_manifest(Json manifest);
/// Parses, checks canonical form and the manifest checksum.
Json open_manifest(const std::string& text);

std::string utc_timestamp();

struct SaveOptions {
    /// Stored in the volatile block; empty means "now".
    std::string created_utc;
};

void save_stack(const ChannelStack& stack, const std::filesystem::path& dir, const SaveOptions& options = {});
ChannelStack load_stack(const std::filesystem::path& dir);

struct MapsSaveOptions {
    std::string created_utc;
    HeatmapOptions heatmap;
    bool write_png = true;
};

std::string map_file_stem(int channel_number);

void save_maps(const std::vector<DociMap>& maps, const std::filesystem::path& dir, const MapsSaveOptions& options = {});
std::vector<DociMap> load_maps(const std::filesystem::path& dir);

}  // namespace doci
