#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "doci/characterize.hpp"
#include "doci/classifier.hpp"
#include "doci/config_json.hpp"
#include "doci/phantom_spec.hpp"

namespace doci {

// JSON-driven operations shared by the C API, the CLI and the service.

struct Simulation {
    Phantom phantom;
    ChannelStack stack;
};

Simulation simulate(const Json& phantom_spec, const Json& config);

/// One map per channel; floor <= 0 selects the default floor per channel.
std::vector<DociMap> compute_maps(const ChannelStack& stack, double floor = 0.0);

Json metrics_to_json(const MetricsRow& row);

struct ClassifyRequest {
    std::vector<int> channels;
    EvaluationMode mode = EvaluationMode::Resubstitution;
    std::vector<LabeledRoi> rois;
    std::size_t rois_per_class = 6;
    std::size_t roi_size = 8;
    std::uint64_t seed = 7;
    LdaOptions lda;
    double block_size_mm = 0.65;
    std::optional<int> positive_label;
};

ClassifyRequest classify_request_from_json(const Json& j);

/// Tissue mask, benign classes and training regions for a labelled stack.
EvaluationSetup make_setup(const ChannelStack& stack, std::vector<DociMap> maps, const ClassifyRequest& request);

struct ClassifyOutcome {
    std::optional<Evaluation> evaluation;
    PredictionMap prediction;
    LdaModel model;
    RgbImage overlay;
    /// {"channels", "mode", "metrics" (or null), "model"}.
    Json result;
};

ClassifyOutcome classify(const ChannelStack& stack, const std::vector<DociMap>& maps, const Json& request);
void write_classify_outputs(const ClassifyOutcome& outcome, const std::filesystem::path& dir);

struct SweepOutcome {
    std::vector<MetricsRow> rows;
    std::string csv;
};

/// Request: {"sizes": [1, 2, 3, 9], "mode": ..., plus classify training fields}.
SweepOutcome sweep(const ChannelStack& stack, const std::vector<DociMap>& maps, const Json& request);
std::string metrics_csv(const std::vector<MetricsRow>& rows);

/// Linearity fit, optional fall-constant fit, noise calibration on the
/// dye-drop phantom and the temporal-resolution chain.
Json calibrate(const Json& request, const std::optional<std::filesystem::path>& out_dir);

/// Bar-target spatial resolution.
Json resolve(const Json& request, const std::optional<std::filesystem::path>& out_dir);

/// "tau_ns,<width>,<width>..." rows of doci_surface.
std::string surface_csv(const DociSurface& surface);

}  // namespace doci
