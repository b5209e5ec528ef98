#include "doci/archive.hpp"

#include <zlib.h>

#include <chrono>
#include <cstdio>
#include <ctime>

#include "doci/png_image.hpp"
#include "doci/raster_io.hpp"

namespace doci {

namespace fs = std::filesystem;

std::string crc32_hex(const std::vector<std::uint8_t>& bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t off = 0;
    while (off < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
        crc = crc32(crc, bytes.data() + off, chunk);
        off += chunk;
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
    return buf;
}

namespace {

std::string checksum_of(const Json& manifest) {
    Json body = manifest;
    body.erase("manifest_checksum");
    body.erase("volatile");
    const std::string text = body.dump();
    return crc32_hex(std::vector<std::uint8_t>(text.begin(), text.end()));
}

Json file_entry(const std::string& name, const std::vector<std::uint8_t>& bytes, int channel, const std::string& plane,
                const std::string& dtype, std::size_t w, std::size_t h) {
    return {{"name", name}, {"channel", channel}, {"plane", plane}, {"dtype", dtype},
            {"width", w},   {"height", h},        {"crc32", crc32_hex(bytes)}};
}

std::vector<std::uint8_t> read_checked(const fs::path& dir, const Json& entry, std::size_t w, std::size_t h) {
    const std::string name = entry.at("name").get<std::string>();
    require(name.find('/') == std::string::npos && name.find('\\') == std::string::npos && name != ".." && name != ".",
            "manifest file names must be plain names");
    auto bytes = read_file(dir / name);
    if (crc32_hex(bytes) != entry.at("crc32").get<std::string>()) {
        fail(ErrorCode::ChecksumMismatch, "checksum mismatch for " + name);
    }
    const RasterHeader hdr = read_header(bytes);
    if (hdr.width != w || hdr.height != h || entry.at("width").get<std::size_t>() != w ||
        entry.at("height").get<std::size_t>() != h) {
        fail(ErrorCode::ShapeMismatch, name + " does not match the manifest dimensions");
    }
    return bytes;
}

std::string created(const std::string& given) { return given.empty() ? utc_timestamp() : given; }

void prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

Json read_manifest(const fs::path& dir, const char* format) {
    const auto bytes = read_file(dir / "manifest.json");
    Json m = open_manifest(std::string(bytes.begin(), bytes.end()));
    if (!m.contains("format") || m.at("format") != format) {
        fail(ErrorCode::BadMagic, dir.string() + " is not a " + format + " archive");
    }
    if (m.at("version") != kArchiveVersion) {
        fail(ErrorCode::UnsupportedVersion, "archive version is not supported");
    }
    return m;
}

const Json* find_entry(const Json& files, int channel, const std::string& plane) {
    for (const auto& f : files) {
        if (f.at("channel").get<int>() == channel && f.at("plane").get<std::string>() == plane) return &f;
    }
    return nullptr;
}

}  // namespace

std::string seal_manifest(Json manifest) {
    manifest["manifest_checksum"] = checksum_of(manifest);
    return manifest.dump(2) + "\n";
}

Json open_manifest(const std::string& text) {
    Json m;
    try {
        m = Json::parse(text);
    } catch (const Json::parse_error&) {
        fail(ErrorCode::ChecksumMismatch, "manifest is corrupt (not valid JSON)");
    }
    if (!m.is_object() || !m.contains("manifest_checksum") || !m.at("manifest_checksum").is_string()) {
        fail(ErrorCode::ChecksumMismatch, "manifest has no checksum");
    }
    if (m.dump(2) + "\n" != text) fail(ErrorCode::ChecksumMismatch, "manifest is not in canonical form");
    if (checksum_of(m) != m.at("manifest_checksum").get<std::string>()) {
        fail(ErrorCode::ChecksumMismatch, "manifest checksum mismatch");
    }
    return m;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void save_stack(const ChannelStack& stack, const fs::path& dir, const SaveOptions& options) {
    stack.validate();
    prepare_dir(dir);
    const std::size_t w = stack.width();
    const std::size_t h = stack.height();
    Json files = Json::array();
    Json channels = Json::array();
    for (std::size_t i = 0; i < stack.triplets.size(); ++i) {
        const int ch = stack.channel_numbers[i];
        const FrameTriplet& t = stack.triplets[i];
        const std::pair<const char*, const RasterD*> planes[] = {
            {"reference", &t.reference}, {"decay", &t.decay}, {"background", &t.background}};
        for (const auto& [plane, raster] : planes) {
            char name[64];
            std::snprintf(name, sizeof name, "ch%02d_%s.docr", ch, plane);
            const auto bytes = encode_raster(to_f32(*raster));
            write_file(dir / name, bytes);
            files.push_back(file_entry(name, bytes, ch, plane, "float32", w, h));
        }
        channels.push_back(ch);
    }
    if (stack.labels) {
        const auto bytes = encode_raster(*stack.labels);
        write_file(dir / "labels.docr", bytes);
        files.push_back(file_entry("labels.docr", bytes, 0, "labels", "uint16", w, h));
    }
    Json m = {{"format", kStackFormat},
              {"version", kArchiveVersion},
              {"phantom_id", stack.phantom_id},
              {"dimensions", {{"width", w}, {"height", h}}},
              {"pixel_pitch_mm", stack.pixel_pitch_mm},
              {"cancer_label", stack.cancer_label},
              {"channels", channels},
              {"config", to_json(stack.config)},
              {"files", files},
              {"volatile", {{"created_utc", created(options.created_utc)}}}};
    write_file(dir / "manifest.json", seal_manifest(std::move(m)));
}

ChannelStack load_stack(const fs::path& dir) {
    const Json m = read_manifest(dir, kStackFormat);
    try {
        ChannelStack s;
        const std::size_t w = m.at("dimensions").at("width").get<std::size_t>();
        const std::size_t h = m.at("dimensions").at("height").get<std::size_t>();
        s.phantom_id = m.at("phantom_id").get<std::string>();
        s.pixel_pitch_mm = m.at("pixel_pitch_mm").get<double>();
        s.cancer_label = m.at("cancer_label").get<int>();
        s.config = acquisition_from_json(m.at("config"));
        const Json& files = m.at("files");
        for (const auto& chj : m.at("channels")) {
            const int ch = chj.get<int>();
            FrameTriplet t;
            RasterD* planes[] = {&t.reference, &t.decay, &t.background};
            const char* names[] = {"reference", "decay", "background"};
            for (int p = 0; p < 3; ++p) {
                const Json* e = find_entry(files, ch, names[p]);
                if (!e) fail(ErrorCode::NotFound, "manifest lacks the " + std::string(names[p]) + " plane of channel " +
                                                      std::to_string(ch));
                *planes[p] = to_f64(decode_f32(read_checked(dir, *e, w, h)));
            }
            s.channel_numbers.push_back(ch);
            s.triplets.push_back(std::move(t));
        }
        if (const Json* e = find_entry(files, 0, "labels")) s.labels = decode_u16(read_checked(dir, *e, w, h));
        s.validate();
        return s;
    } catch (const Json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("malformed stack manifest: ") + e.what());
    }
}

std::string map_file_stem(int channel_number) {
    char name[32];
    std::snprintf(name, sizeof name, "ch%02d", channel_number);
    return name;
}

void save_maps(const std::vector<DociMap>& maps, const fs::path& dir, const MapsSaveOptions& options) {
    require(!maps.empty(), "no maps to save");
    prepare_dir(dir);
    const std::size_t w = maps.front().values.width();
    const std::size_t h = maps.front().values.height();
    Json files = Json::array();
    Json channels = Json::array();
    for (const auto& map : maps) {
        require_same_shape(map.values, maps.front().values, "save_maps");
        require_same_shape(map.valid, map.values, "save_maps");
        const std::string stem = map_file_stem(map.channel_number);
        const auto values = encode_raster(to_f32(map.values));
        const auto valid = encode_mask(map.valid);
        write_file(dir / (stem + "_doci.docr"), values);
        write_file(dir / (stem + "_valid.docr"), valid);
        files.push_back(file_entry(stem + "_doci.docr", values, map.channel_number, "doci", "float32", w, h));
        files.push_back(file_entry(stem + "_valid.docr", valid, map.channel_number, "valid", "mask", w, h));
        if (options.write_png) write_png(dir / (stem + "_doci.png"), render_heatmap(map, options.heatmap));
        channels.push_back({{"channel", map.channel_number},
                            {"denominator_floor", map.denominator_floor},
                            {"invalid_fraction", map.invalid_fraction()}});
    }
    Json m = {{"format", kMapsFormat},
              {"version", kArchiveVersion},
              {"dimensions", {{"width", w}, {"height", h}}},
              {"channels", channels},
              {"files", files},
              {"volatile", {{"created_utc", created(options.created_utc)}}}};
    write_file(dir / "manifest.json", seal_manifest(std::move(m)));
}

std::vector<DociMap> load_maps(const fs::path& dir) {
    const Json m = read_manifest(dir, kMapsFormat);
    try {
        const std::size_t w = m.at("dimensions").at("width").get<std::size_t>();
        const std::size_t h = m.at("dimensions").at("height").get<std::size_t>();
        std::vector<DociMap> out;
        for (const auto& c : m.at("channels")) {
            DociMap map;
            map.channel_number = c.at("channel").get<int>();
            map.denominator_floor = c.at("denominator_floor").get<double>();
            const Json* v = find_entry(m.at("files"), map.channel_number, "doci");
            const Json* k = find_entry(m.at("files"), map.channel_number, "valid");
            if (!v || !k) fail(ErrorCode::NotFound, "manifest lacks planes for channel " + std::to_string(map.channel_number));
            map.values = to_f64(decode_f32(read_checked(dir, *v, w, h)));
            map.valid = decode_mask(read_checked(dir, *k, w, h));
            out.push_back(std::move(map));
        }
        return out;
    } catch (const Json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("malformed maps manifest: ") + e.what());
    }
}

}  // namespace doci
