#include "doci/config_json.hpp"

#include <cmath>

namespace doci {

Json parse_json(const std::string& text, const char* what) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        fail(ErrorCode::InvalidArgument, std::string(what) + " is not valid JSON: " + e.what());
    }
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
    require(j.is_object(), std::string(what) + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        require(ok, std::string("unknown field '") + key + "' in " + what);
    }
}

double get_number(const Json& j, const char* key, double fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    const Json& v = j.at(key);
    require(v.is_number(), std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

namespace {

bool get_bool(const Json& j, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    require(j.at(key).is_boolean(), std::string("field '") + key + "' must be true or false");
    return j.at(key).get<bool>();
}

std::int64_t get_int(const Json& j, const char* key, std::int64_t fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    require(v.is_number_integer(), std::string("field '") + key + "' must be an integer");
    return v.get<std::int64_t>();
}

std::uint64_t get_seed(const Json& j, const char* key, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
            std::string("field '") + key + "' must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

}  // namespace

Json to_json(const PumpPulse& p) {
    return {{"peak_intensity", p.peak_intensity},
            {"fall_start_ns", p.fall_start_ns},
            {"fall_tau_ns", p.fall_tau_ns},
            {"pulse_width_ns", p.pulse_width_ns},
            {"rep_rate_hz", p.rep_rate_hz}};
}

Json to_json(const GateConfig& g) {
    return {{"width_ns", g.width_ns},
            {"reference_start_ns", g.reference_start_ns},
            {"decay_start_ns", g.decay_start_ns},
            {"background_start_ns", g.background_start_ns}};
}

Json to_json(const NoiseConfig& n) {
    return {{"shot_noise", n.shot_noise},
            {"read_noise_sigma", n.read_noise_sigma},
            {"dark_level", n.dark_level},
            {"ambient_level", n.ambient_level}};
}

Json to_json(const FilterChannel& c) {
    Json yields = Json::object();
    for (const auto& [label, y] : c.relative_yield) yields[std::to_string(label)] = y;
    return {{"number", c.number},
            {"center_nm", c.center_nm},
            {"passband_nm", {c.pass_low_nm, c.pass_high_nm}},
            {"relative_yield", yields}};
}

Json to_json(const AcquisitionConfig& c) {
    Json channels = Json::array();
    for (const auto& ch : c.channels) channels.push_back(to_json(ch));
    return {{"pulse", to_json(c.pulse)},
            {"gate", to_json(c.gate)},
            {"channels", channels},
            {"pulses_averaged", c.pulses_averaged},
            {"noise", to_json(c.noise)},
            {"seed", c.seed},
            {"psf_sigma_px", c.psf_sigma_px}};
}

PumpPulse pulse_from_json(const Json& j) {
    check_keys(j, {"peak_intensity", "fall_start_ns", "fall_tau_ns", "pulse_width_ns", "rep_rate_hz"}, "pulse");
    PumpPulse p;
    p.pulse_width_ns = get_number(j, "pulse_width_ns", p.pulse_width_ns);
    // The fall instant follows the nominal width unless given explicitly.
    p.fall_start_ns = get_number(j, "fall_start_ns", p.pulse_width_ns);
    p.peak_intensity = get_number(j, "peak_intensity", p.peak_intensity);
    p.fall_tau_ns = get_number(j, "fall_tau_ns", p.fall_tau_ns);
    p.rep_rate_hz = get_number(j, "rep_rate_hz", p.rep_rate_hz);
    p.validate();
    return p;
}

NoiseConfig noise_from_json(const Json& j, const NoiseConfig& base) {
    check_keys(j, {"shot_noise", "read_noise_sigma", "dark_level", "ambient_level"}, "noise");
    NoiseConfig n = base;
    n.shot_noise = get_bool(j, "shot_noise", n.shot_noise);
    n.read_noise_sigma = get_number(j, "read_noise_sigma", n.read_noise_sigma);
    n.dark_level = get_number(j, "dark_level", n.dark_level);
    n.ambient_level = get_number(j, "ambient_level", n.ambient_level);
    n.validate();
    return n;
}

FilterChannel channel_from_json(const Json& j) {
    if (j.is_number_integer()) {
        const int number = j.get<int>();
        if (!is_channel_number(number)) fail(ErrorCode::NotFound, "unknown filter channel " + std::to_string(number));
        return standard_channel(number);
    }
    check_keys(j, {"number", "center_nm", "passband_nm", "relative_yield"}, "channel");
    require(j.contains("number"), "channel entry needs a number");
    const int number = static_cast<int>(get_int(j, "number", 0));
    if (!is_channel_number(number)) fail(ErrorCode::NotFound, "unknown filter channel " + std::to_string(number));
    FilterChannel c = standard_channel(number);
    c.center_nm = get_number(j, "center_nm", c.center_nm);
    if (j.contains("passband_nm")) {
        const Json& pb = j.at("passband_nm");
        require(pb.is_array() && pb.size() == 2 && pb[0].is_number() && pb[1].is_number(),
                "passband_nm must be [low, high]");
        c.pass_low_nm = pb[0].get<double>();
        c.pass_high_nm = pb[1].get<double>();
    }
    if (j.contains("relative_yield")) {
        const Json& y = j.at("relative_yield");
        require(y.is_object(), "relative_yield must map class labels to multipliers");
        for (const auto& [label, value] : y.items()) {
            require(value.is_number(), "relative yield must be a number");
            int l = 0;
            try {
                l = std::stoi(label);
            } catch (const std::exception&) {
                fail(ErrorCode::InvalidArgument, "relative_yield keys must be class labels");
            }
            c.relative_yield[l] = value.get<double>();
        }
    }
    c.validate();
    return c;
}

AcquisitionConfig acquisition_from_json(const Json& j) {
    check_keys(j, {"pulse", "gate", "gate_width_ns", "channels", "pulses_averaged", "noise", "seed", "psf_sigma_px"},
               "acquisition config");
    AcquisitionConfig c;
    if (j.contains("pulse")) c.pulse = pulse_from_json(j.at("pulse"));
    const double width = get_number(j, "gate_width_ns", 20.0);
    require(std::isfinite(width) && width > 0.0, "gate width must be positive");
    c.gate = GateConfig::standard(c.pulse, width);
    if (j.contains("gate")) {
        const Json& g = j.at("gate");
        check_keys(g, {"width_ns", "reference_start_ns", "decay_start_ns", "background_start_ns"}, "gate");
        const double w = get_number(g, "width_ns", width);
        GateConfig std_gate = GateConfig::standard(c.pulse, w);
        c.gate.width_ns = w;
        c.gate.reference_start_ns = get_number(g, "reference_start_ns", std_gate.reference_start_ns);
        c.gate.decay_start_ns = get_number(g, "decay_start_ns", std_gate.decay_start_ns);
        c.gate.background_start_ns = get_number(g, "background_start_ns", std_gate.background_start_ns);
    }
    if (j.contains("channels")) {
        const Json& chs = j.at("channels");
        c.channels.clear();
        if (chs.is_string()) {
            fail(ErrorCode::InvalidArgument, "channels must be a JSON array of channel numbers or objects");
        }
        require(chs.is_array() && !chs.empty(), "channels must be a non-empty array");
        for (const auto& ch : chs) c.channels.push_back(channel_from_json(ch));
    }
    c.pulses_averaged = get_int(j, "pulses_averaged", c.pulses_averaged);
    if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
    c.seed = get_seed(j, "seed", c.seed);
    c.psf_sigma_px = get_number(j, "psf_sigma_px", c.psf_sigma_px);
    c.validate();
    return c;
}

}  // namespace doci
