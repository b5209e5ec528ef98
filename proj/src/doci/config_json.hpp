#pragma once

#include <json.hpp>

#include "doci/imaging.hpp"
#include "doci/lifetime_model.hpp"

namespace doci {

using Json = nlohmann::json;

Json to_json(const PumpPulse& pulse);
Json to_json(const GateConfig& gate);
Json to_json(const NoiseConfig& noise);
Json to_json(const FilterChannel& channel);
Json to_json(const AcquisitionConfig& config);

PumpPulse pulse_from_json(const Json& j);
NoiseConfig noise_from_json(const Json& j, const NoiseConfig& base = {});
FilterChannel channel_from_json(const Json& j);

/// Missing fields keep their defaults. "gate_width_ns" alone selects the
/// standard gate placement for that width; a "gate" object overrides it.
AcquisitionConfig acquisition_from_json(const Json& j);

/// Parses text, mapping syntax errors to InvalidArgument.
Json parse_json(const std::string& text, const char* what = "JSON document");

/// Rejects keys outside `allowed` so that typos do not pass silently.
void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what);

double get_number(const Json& j, const char* key, double fallback);

}  // namespace doci
