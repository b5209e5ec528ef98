#include "doci/doci.h"

#include <cstdio>
#include <cstring>
#include <memory>
#include <new>

#include "doci/archive.hpp"
#include "doci/commands.hpp"
#include "doci/http_server.hpp"
#include "doci/raster_io.hpp"
#include "doci/service.hpp"

struct doci_stack {
    doci::ChannelStack stack;
};

struct doci_maps {
    std::vector<doci::DociMap> maps;
};

struct doci_service {
    std::unique_ptr<doci::InstrumentService> service;
    std::unique_ptr<doci::HttpServer> http;
};

namespace {

thread_local std::string g_last_error;

doci_status set_error(doci_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

template <class F>
doci_status guard(F&& f) noexcept {
    try {
        f();
        g_last_error.clear();
        return DOCI_OK;
    } catch (const doci::Error& e) {
        return set_error(static_cast<doci_status>(e.code()), e.what());
    } catch (const doci::Json::exception& e) {
        return set_error(DOCI_E_INVALID_ARGUMENT, e.what());
    } catch (const std::bad_alloc&) {
        return set_error(DOCI_E_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(DOCI_E_INTERNAL, e.what());
    } catch (...) {
        return set_error(DOCI_E_INTERNAL, "unknown failure");
    }
}

void need(const void* p, const char* what) {
    if (!p) doci::fail(doci::ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

doci::Json json_arg(const char* text, const char* what) {
    if (!text || !*text) return doci::Json::object();
    return doci::parse_json(text, what);
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.data(), s.size() + 1);
    return out;
}

doci::PumpPulse pulse_arg(const char* pulse_json) {
    const doci::Json j = json_arg(pulse_json, "pulse");
    return j.empty() ? doci::PumpPulse{} : doci::pulse_from_json(j);
}

std::vector<double> values(const double* p, std::size_t n, const char* what) {
    if (n > 0) need(p, what);
    return std::vector<double>(p, p + n);
}

const std::vector<doci::DociMap>& maps_or_compute(const doci_stack* stack, const doci_maps* maps,
                                                  std::vector<doci::DociMap>& scratch) {
    if (maps) return maps->maps;
    scratch = doci::compute_maps(stack->stack);
    return scratch;
}

bool is_dark(const doci::ChannelStack& stack) {
    for (const auto& t : stack.triplets) {
        for (std::size_t i = 0; i < t.reference.size(); ++i) {
            if (t.reference[i] - t.background[i] > 0.0) return false;
        }
    }
    return true;
}

}  // namespace

extern "C" {

const char* doci_version(void) { return "1.0.0"; }

const char* doci_status_name(doci_status status) {
    if (status == DOCI_OK) return "Ok";
    return doci::error_code_name(static_cast<doci::ErrorCode>(status));
}

const char* doci_last_error(void) { return g_last_error.c_str(); }

void doci_string_free(char* s) { std::free(s); }

doci_status doci_model_value(const char* pulse_json, double amplitude, double lifetime_ns, double gate_width_ns,
                             double* out) {
    return guard([&] {
        need(out, "out");
        const doci::PumpPulse pulse = pulse_arg(pulse_json);
        *out = doci::doci_value(pulse, doci::Fluorophore{amplitude, lifetime_ns},
                                doci::GateConfig::standard(pulse, gate_width_ns));
    });
}

doci_status doci_model_surface(const char* pulse_json, const double* lifetimes_ns, size_t n_lifetimes,
                               const double* widths_ns, size_t n_widths, double* out) {
    return guard([&] {
        need(out, "out");
        const auto taus = values(lifetimes_ns, n_lifetimes, "lifetimes_ns");
        const auto widths = values(widths_ns, n_widths, "widths_ns");
        const doci::DociSurface s = doci::doci_surface(pulse_arg(pulse_json), taus, widths);
        std::copy(s.values.begin(), s.values.end(), out);
    });
}

doci_status doci_model_surface_csv(const char* pulse_json, const double* lifetimes_ns, size_t n_lifetimes,
                                   const double* widths_ns, size_t n_widths, char** csv) {
    return guard([&] {
        need(csv, "csv");
        const auto taus = values(lifetimes_ns, n_lifetimes, "lifetimes_ns");
        const auto widths = values(widths_ns, n_widths, "widths_ns");
        *csv = dup(doci::surface_csv(doci::doci_surface(pulse_arg(pulse_json), taus, widths)));
    });
}

doci_status doci_acquire(const char* phantom_json, const char* config_json, doci_stack** out) {
    return guard([&] {
        need(out, "out");
        *out = nullptr;
        auto sim = doci::simulate(json_arg(phantom_json, "phantom spec"), json_arg(config_json, "config"));
        *out = new doci_stack{std::move(sim.stack)};
    });
}

doci_status doci_stack_load(const char* dir, doci_stack** out) {
    return guard([&] {
        need(dir, "dir");
        need(out, "out");
        *out = nullptr;
        *out = new doci_stack{doci::load_stack(dir)};
    });
}

doci_status doci_stack_save(const doci_stack* stack, const char* dir, const char* created_utc) {
    return guard([&] {
        need(stack, "stack");
        need(dir, "dir");
        doci::SaveOptions opts;
        if (created_utc) opts.created_utc = created_utc;
        doci::save_stack(stack->stack, dir, opts);
    });
}

doci_status doci_stack_info(const doci_stack* stack, char** info_json) {
    return guard([&] {
        need(stack, "stack");
        need(info_json, "info_json");
        const auto& s = stack->stack;
        const doci::Json info = {{"width", s.width()},
                                 {"height", s.height()},
                                 {"channels", s.channel_numbers},
                                 {"phantom_id", s.phantom_id},
                                 {"pixel_pitch_mm", s.pixel_pitch_mm},
                                 {"has_labels", s.labels.has_value()},
                                 {"dark", is_dark(s)}};
        *info_json = dup(info.dump());
    });
}

void doci_stack_free(doci_stack* stack) { delete stack; }

doci_status doci_compute_maps(const doci_stack* stack, double floor, doci_maps** out) {
    return guard([&] {
        need(stack, "stack");
        need(out, "out");
        *out = nullptr;
        *out = new doci_maps{doci::compute_maps(stack->stack, floor)};
    });
}

doci_status doci_maps_save(const doci_maps* maps, const char* dir, const char* options_json) {
    return guard([&] {
        need(maps, "maps");
        need(dir, "dir");
        const doci::Json j = json_arg(options_json, "map options");
        doci::check_keys(j, {"palette", "range", "png", "created_utc"}, "map options");
        doci::MapsSaveOptions opts;
        if (j.contains("palette")) {
            const std::string p = j.at("palette").get<std::string>();
            if (p == "hot") {
                opts.heatmap.palette = doci::Palette::Hot;
            } else if (p == "gray") {
                opts.heatmap.palette = doci::Palette::Gray;
            } else {
                doci::fail(doci::ErrorCode::InvalidArgument, "palette must be hot or gray");
            }
        }
        if (j.contains("range") && !j.at("range").is_null()) {
            const auto& r = j.at("range");
            doci::require(r.is_array() && r.size() == 2, "range must be [low, high]");
            const double lo = r.at(0).get<double>();
            const double hi = r.at(1).get<double>();
            doci::require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, "range must satisfy low < high");
            opts.heatmap.range = std::make_pair(lo, hi);
        }
        if (j.contains("png")) opts.write_png = j.at("png").get<bool>();
        if (j.contains("created_utc")) opts.created_utc = j.at("created_utc").get<std::string>();
        doci::save_maps(maps->maps, dir, opts);
    });
}

doci_status doci_maps_load(const char* dir, doci_maps** out) {
    return guard([&] {
        need(dir, "dir");
        need(out, "out");
        *out = nullptr;
        *out = new doci_maps{doci::load_maps(dir)};
    });
}

doci_status doci_maps_info(const doci_maps* maps, char** info_json) {
    return guard([&] {
        need(maps, "maps");
        need(info_json, "info_json");
        doci::Json info = doci::Json::array();
        for (const auto& m : maps->maps) {
            info.push_back({{"channel", m.channel_number},
                            {"denominator_floor", m.denominator_floor},
                            {"valid_count", m.valid_count()},
                            {"invalid_fraction", m.invalid_fraction()}});
        }
        *info_json = dup(info.dump());
    });
}

void doci_maps_free(doci_maps* maps) { delete maps; }

doci_status doci_classify(const doci_stack* stack, const doci_maps* maps, const char* request_json,
                          const char* out_dir, char** result_json) {
    return guard([&] {
        need(stack, "stack");
        need(result_json, "result_json");
        std::vector<doci::DociMap> scratch;
        const auto& m = maps_or_compute(stack, maps, scratch);
        const doci::ClassifyOutcome out = doci::classify(stack->stack, m, json_arg(request_json, "classify request"));
        if (out_dir) doci::write_classify_outputs(out, out_dir);
        *result_json = dup(out.result.dump());
    });
}

doci_status doci_sweep(const doci_stack* stack, const doci_maps* maps, const char* request_json, char** csv) {
    return guard([&] {
        need(stack, "stack");
        need(csv, "csv");
        std::vector<doci::DociMap> scratch;
        const auto& m = maps_or_compute(stack, maps, scratch);
        *csv = dup(doci::sweep(stack->stack, m, json_arg(request_json, "sweep request")).csv);
    });
}

doci_status doci_metrics(const char* channels, uint64_t tn, uint64_t fn, uint64_t tp, uint64_t fp, char** csv_row,
                         char** row_json) {
    return guard([&] {
        constexpr uint64_t limit = uint64_t{1} << 62;
        doci::require(tn < limit && fn < limit && tp < limit && fp < limit, "counts are out of range");
        const doci::ConfusionCounts counts{static_cast<std::int64_t>(tn), static_cast<std::int64_t>(fn),
                                           static_cast<std::int64_t>(tp), static_cast<std::int64_t>(fp)};
        const doci::MetricsRow row =
            doci::metrics(counts, channels && *channels ? doci::parse_channels(channels) : std::vector<int>{});
        std::string csv = doci::metrics_csv_row(row);
        std::string js = doci::metrics_to_json(row).dump();
        if (csv_row) *csv_row = dup(csv);
        if (row_json) {
            try {
                *row_json = dup(js);
            } catch (...) {
                if (csv_row) {
                    std::free(*csv_row);
                    *csv_row = nullptr;
                }
                throw;
            }
        }
    });
}

const char* doci_metrics_csv_header(void) {
    static const std::string header = doci::metrics_csv_header();
    return header.c_str();
}

doci_status doci_calibrate(const char* request_json, const char* out_dir, char** result_json) {
    return guard([&] {
        need(result_json, "result_json");
        std::optional<std::filesystem::path> dir;
        if (out_dir) dir = out_dir;
        *result_json = dup(doci::calibrate(json_arg(request_json, "calibration request"), dir).dump());
    });
}

doci_status doci_resolve(const char* request_json, const char* out_dir, char** result_json) {
    return guard([&] {
        need(result_json, "result_json");
        std::optional<std::filesystem::path> dir;
        if (out_dir) dir = out_dir;
        *result_json = dup(doci::resolve(json_arg(request_json, "resolution request"), dir).dump());
    });
}

doci_status doci_temporal_resolution(double avg_std, double flim_doci_ratio, double* value_ns, char display[16]) {
    return guard([&] {
        const double v = doci::temporal_resolution(avg_std, flim_doci_ratio);
        if (value_ns) *value_ns = v;
        if (display) std::snprintf(display, 16, "%s", doci::format_ns(v).c_str());
    });
}

doci_status doci_raster_check(const char* path, char** info_json) {
    return guard([&] {
        need(path, "path");
        const auto bytes = doci::read_file(path);
        const doci::RasterHeader h = doci::read_header(bytes);
        const char* dtype = "float32";
        switch (h.dtype) {
            case doci::RasterDtype::Float32: doci::decode_f32(bytes); break;
            case doci::RasterDtype::UInt16:
                doci::decode_u16(bytes);
                dtype = "uint16";
                break;
            case doci::RasterDtype::Mask:
                doci::decode_mask(bytes);
                dtype = "mask";
                break;
        }
        if (info_json) {
            *info_json = dup(doci::Json({{"width", h.width}, {"height", h.height}, {"dtype", dtype},
                                         {"bytes", bytes.size()}})
                                 .dump());
        }
    });
}

doci_status doci_overlay_color(doci_overlay which, uint8_t rgb[3]) {
    return guard([&] {
        need(rgb, "rgb");
        doci::Rgb c;
        switch (which) {
            case DOCI_OVERLAY_BOUNDARY: c = doci::kOverlayBoundary; break;
            case DOCI_OVERLAY_FALSE_NEGATIVE: c = doci::kOverlayFalseNegative; break;
            case DOCI_OVERLAY_FALSE_POSITIVE: c = doci::kOverlayFalsePositive; break;
            case DOCI_OVERLAY_TRUE_POSITIVE: c = doci::kOverlayTruePositive; break;
            case DOCI_OVERLAY_INVALID: c = doci::kInvalidColor; break;
            default: doci::fail(doci::ErrorCode::InvalidArgument, "unknown overlay element");
        }
        rgb[0] = c.r;
        rgb[1] = c.g;
        rgb[2] = c.b;
    });
}

doci_status doci_service_create(const char* options_json, doci_service** out) {
    return guard([&] {
        need(out, "out");
        *out = nullptr;
        const doci::Json j = json_arg(options_json, "service options");
        doci::check_keys(j, {"phantom", "config", "data_dir", "frame_interval_ms", "realtime", "channel"},
                         "service options");
        doci::ServiceOptions opts;
        if (j.contains("phantom")) opts.phantom = j.at("phantom");
        if (j.contains("config")) opts.config = j.at("config");
        if (j.contains("data_dir")) opts.data_dir = j.at("data_dir").get<std::string>();
        if (j.contains("frame_interval_ms")) opts.frame_interval_ms = j.at("frame_interval_ms").get<int>();
        if (j.contains("realtime")) opts.realtime = j.at("realtime").get<bool>();
        if (j.contains("channel")) opts.channel = j.at("channel").get<int>();
        auto svc = std::make_unique<doci_service>();
        svc->service = std::make_unique<doci::InstrumentService>(std::move(opts));
        *out = svc.release();
    });
}

doci_status doci_service_listen(doci_service* service, const char* host, int port, int* bound_port) {
    return guard([&] {
        need(service, "service");
        if (service->http) doci::fail(doci::ErrorCode::Conflict, "service is already listening");
        doci::require(port >= 0 && port <= 65535, "port must be within [0, 65535]");
        auto http = std::make_unique<doci::HttpServer>(*service->service);
        const int p = http->bind(host ? host : "127.0.0.1", port);
        http->start();
        service->http = std::move(http);
        if (bound_port) *bound_port = p;
    });
}

doci_status doci_service_status(const doci_service* service, char** status_json) {
    return guard([&] {
        need(service, "service");
        need(status_json, "status_json");
        *status_json = dup(service->service->status().dump());
    });
}

doci_status doci_service_stop(doci_service* service) {
    return guard([&] {
        need(service, "service");
        if (service->http) service->http->stop();
        service->service->stop();
    });
}

void doci_service_free(doci_service* service) {
    if (!service) return;
    doci_service_stop(service);
    delete service;
}

}  // extern "C"
