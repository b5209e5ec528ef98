#include "doci/commands.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "doci/archive.hpp"
#include "doci/camera_sim.hpp"
#include "doci/parallel.hpp"
#include "doci/png_image.hpp"
#include "doci/raster_io.hpp"

namespace doci {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

Json optional_number(const std::optional<double>& v) {
    return v ? Json(*v) : Json(nullptr);
}

std::vector<double> number_list(const Json& j, const char* what) {
    require(j.is_array() && !j.empty(), std::string(what) + " must be a non-empty array");
    std::vector<double> out;
    for (const auto& v : j) {
        require(v.is_number(), std::string(what) + " entries must be numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

Mask tissue_of(const RasterU16& labels, int background) {
    Mask m(labels.width(), labels.height(), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) m[i] = labels[i] != background ? 1 : 0;
    return m;
}

}  // namespace

Simulation simulate(const Json& phantom_spec, const Json& config) {
    PhantomDocument doc = phantom_from_json(phantom_spec);
    const AcquisitionConfig cfg = merged_acquisition(doc, config);
    Simulation out;
    out.stack = acquire(doc.phantom, cfg);
    out.phantom = std::move(doc.phantom);
    return out;
}

std::vector<DociMap> compute_maps(const ChannelStack& stack, double floor) {
    stack.validate();
    require(std::isfinite(floor), "denominator floor must be finite");
    std::vector<DociMap> maps(stack.triplets.size());
    parallel_for(maps.size(), [&](std::size_t i) {
        const FrameTriplet& t = stack.triplets[i];
        maps[i] = floor > 0.0 ? compute_doci(t, floor, stack.channel_numbers[i])
                              : compute_doci(t, stack.channel_numbers[i]);
    });
    return maps;
}

Json metrics_to_json(const MetricsRow& row) {
    return {{"channels", format_channels(row.channels)},
            {"channel_list", row.channels},
            {"tn", row.counts.tn},
            {"fn", row.counts.fn},
            {"tp", row.counts.tp},
            {"fp", row.counts.fp},
            {"sensitivity", optional_number(row.sensitivity)},
            {"specificity", optional_number(row.specificity)},
            {"accuracy", optional_number(row.accuracy)},
            {"sensitivity_pct", format_percent(row.sensitivity)},
            {"specificity_pct", format_percent(row.specificity)},
            {"accuracy_pct", format_percent(row.accuracy)},
            {"mode", row.mode}};
}

ClassifyRequest classify_request_from_json(const Json& j) {
    ClassifyRequest r;
    if (j.is_null()) return r;
    check_keys(j, {"channels", "mode", "rois", "rois_per_class", "roi_size", "seed", "lambda", "equal_priors",
                   "block_size_mm", "positive_label", "sizes"},
               "classification request");
    if (j.contains("channels")) {
        const Json& c = j.at("channels");
        if (c.is_string()) {
            r.channels = parse_channels(c.get<std::string>());
        } else {
            require(c.is_array(), "channels must be a list or a bracket string");
            std::set<int> s;
            for (const auto& v : c) {
                const int ch = v.get<int>();
                if (!is_channel_number(ch)) fail(ErrorCode::NotFound, "unknown filter channel " + std::to_string(ch));
                s.insert(ch);
            }
            r.channels.assign(s.begin(), s.end());
        }
    }
    if (j.contains("mode")) r.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("rois")) {
        for (const auto& roi : j.at("rois")) {
            check_keys(roi, {"x", "y", "w", "h", "label"}, "roi");
            LabeledRoi l;
            l.rect = PixelRect{roi.at("x").get<std::size_t>(), roi.at("y").get<std::size_t>(),
                               roi.at("w").get<std::size_t>(), roi.at("h").get<std::size_t>()};
            l.label = roi.at("label").get<int>();
            require(l.rect.w > 0 && l.rect.h > 0, "roi must have positive size");
            r.rois.push_back(l);
        }
    }
    if (j.contains("rois_per_class")) r.rois_per_class = j.at("rois_per_class").get<std::size_t>();
    if (j.contains("roi_size")) r.roi_size = j.at("roi_size").get<std::size_t>();
    if (j.contains("seed")) r.seed = j.at("seed").get<std::uint64_t>();
    r.lda.lambda = get_number(j, "lambda", r.lda.lambda);
    if (j.contains("equal_priors")) r.lda.equal_priors = j.at("equal_priors").get<bool>();
    r.block_size_mm = get_number(j, "block_size_mm", r.block_size_mm);
    if (j.contains("positive_label")) r.positive_label = j.at("positive_label").get<int>();
    return r;
}

EvaluationSetup make_setup(const ChannelStack& stack, std::vector<DociMap> maps, const ClassifyRequest& request) {
    if (!stack.labels) fail(ErrorCode::MissingClass, "stack carries no ground-truth labels");
    EvaluationSetup s;
    s.maps = std::move(maps);
    s.labels = *stack.labels;
    s.positive_label = request.positive_label.value_or(stack.cancer_label);
    s.tissue = tissue_of(s.labels, 0);
    s.pixel_pitch_mm = stack.pixel_pitch_mm;
    s.block_size_mm = request.block_size_mm;
    s.rois = request.rois;
    s.rois_per_class = request.rois_per_class;
    s.roi_size = request.roi_size;
    s.seed = request.seed;
    s.mode = request.mode;
    s.lda = request.lda;
    std::set<int> benign;
    bool has_positive = false;
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
        if (!s.tissue[i]) continue;
        if (s.labels[i] == s.positive_label) has_positive = true;
        else benign.insert(s.labels[i]);
    }
    if (!has_positive || benign.empty()) {
        fail(ErrorCode::MissingClass, "ground truth needs both cancer and benign tissue");
    }
    s.prepare(std::vector<int>(benign.begin(), benign.end()));
    return s;
}

ClassifyOutcome classify(const ChannelStack& stack, const std::vector<DociMap>& maps, const Json& request) {
    ClassifyRequest req = classify_request_from_json(request);
    if (req.channels.empty()) req.channels = stack.channel_numbers;
    std::sort(req.channels.begin(), req.channels.end());
    ClassifyOutcome out;
    const RasterD& base = stack.triplet(req.channels.front()).reference;

    if (stack.labels) {
        const EvaluationSetup setup = make_setup(stack, maps, req);
        Evaluation ev = evaluate_channels(setup, req.channels);
        out.overlay = render_overlay(ev, setup.tissue, base);
        out.prediction = ev.prediction;
        out.model = ev.model;
        out.result["metrics"] = metrics_to_json(ev.row);
        out.result["blocks_evaluated"] = ev.truth.included_count();
        out.evaluation = std::move(ev);
    } else {
        // Without ground truth only explicit training regions can be used.
        if (req.rois.empty()) fail(ErrorCode::MissingClass, "stack has no labels; training regions are required");
        const int positive = req.positive_label.value_or(stack.cancer_label);
        const FeatureMatrix fm = build_features(maps, req.channels, req.rois, positive);
        out.model = train_lda(fm, req.lda);
        out.prediction = predict_map(out.model, maps);
        out.overlay = render_intensity(base);
        for (std::size_t i = 0; i < out.overlay.size(); ++i) {
            if (out.prediction.cancer[i]) out.overlay[i] = kOverlayFalsePositive;
        }
        out.result["metrics"] = nullptr;
    }
    out.result["channels"] = format_channels(req.channels);
    out.result["mode"] = mode_name(req.mode);
    out.result["model"] = {{"channels", out.model.channels},
                           {"weights", out.model.weights},
                           {"bias", out.model.bias},
                           {"prior_positive", out.model.prior_positive},
                           {"lambda", out.model.lambda}};
    return out;
}

void write_classify_outputs(const ClassifyOutcome& outcome, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create " + dir.string());
    write_file(dir / "prediction.docr", encode_mask(outcome.prediction.cancer));
    write_file(dir / "predicted.docr", encode_mask(outcome.prediction.predicted));
    write_png(dir / "overlay.png", outcome.overlay);
    write_file(dir / "result.json", outcome.result.dump(2) + "\n");
    if (outcome.evaluation) {
        write_file(dir / "metrics.csv", metrics_csv({outcome.evaluation->row}));
    }
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::string s = metrics_csv_header() + "\n";
    for (const auto& r : rows) s += metrics_csv_row(r) + "\n";
    return s;
}

SweepOutcome sweep(const ChannelStack& stack, const std::vector<DociMap>& maps, const Json& request) {
    std::vector<int> sizes{1, 2, 3, 9};
    Json rest = request.is_null() ? Json::object() : request;
    if (rest.contains("sizes")) {
        sizes.clear();
        for (const auto& v : rest.at("sizes")) sizes.push_back(v.get<int>());
        rest.erase("sizes");
    }
    require(!rest.contains("channels"), "a sweep enumerates channels itself");
    const ClassifyRequest req = classify_request_from_json(rest);
    const EvaluationSetup setup = make_setup(stack, maps, req);
    SweepOutcome out;
    out.rows = channel_sweep(setup, sizes);
    out.csv = metrics_csv(out.rows);
    return out;
}

std::string surface_csv(const DociSurface& surface) {
    std::ostringstream s;
    s << "tau_ns";
    for (double w : surface.widths_ns) s << ',' << fmt(w);
    s << '\n';
    for (std::size_t i = 0; i < surface.lifetimes_ns.size(); ++i) {
        s << fmt(surface.lifetimes_ns[i]);
        for (std::size_t j = 0; j < surface.widths_ns.size(); ++j) s << ',' << fmt(surface.at(i, j), "%.9g");
        s << '\n';
    }
    return s.str();
}

Json calibrate(const Json& request_in, const std::optional<fs::path>& out_dir) {
    const Json request = request_in.is_null() ? Json::object() : request_in;
    check_keys(request, {"pulse", "gate_width_ns", "lifetimes_ns", "target_inv_slope", "avg_std", "flim_doci_ratio",
                         "target_std", "dye_drops", "acquisition", "channel", "surface"},
               "calibration request");
    const PumpPulse pulse = request.contains("pulse") ? pulse_from_json(request.at("pulse")) : PumpPulse{};
    const double width = get_number(request, "gate_width_ns", 20.0);
    const std::vector<double> lifetimes = request.contains("lifetimes_ns")
                                              ? number_list(request.at("lifetimes_ns"), "lifetimes_ns")
                                              : default_calibration_lifetimes();

    Json report;
    const CalibrationFit fit = linearity_fit(pulse, width, lifetimes);
    report["linearity"] = {{"gate_width_ns", width},       {"fall_tau_ns", pulse.fall_tau_ns},
                           {"slope", fit.slope},           {"intercept", fit.intercept},
                           {"r_squared", fit.r_squared},   {"inv_slope", fit.inv_slope},
                           {"lifetime_count", lifetimes.size()}};

    if (request.contains("target_inv_slope")) {
        const double target = get_number(request, "target_inv_slope", 0.0);
        const FallTauFit f = fit_fall_tau(pulse, width, lifetimes, target);
        report["fall_tau_fit"] = {{"target_inv_slope", target},    {"fall_tau_ns", f.fall_tau_ns},
                                  {"inv_slope", f.fit.inv_slope},  {"r_squared", f.fit.r_squared},
                                  {"iterations", f.iterations}};
    }

    std::optional<double> measured_std;
    if (request.contains("target_std")) {
        const double target = get_number(request, "target_std", 0.0);
        Json spec = {{"generator", "dye_drops"}};
        if (request.contains("dye_drops")) spec.merge_patch(request.at("dye_drops"));
        PhantomDocument doc = phantom_from_json(spec);
        Json acq = {{"noise", {{"shot_noise", true}}}, {"pulse", to_json(pulse)}, {"gate_width_ns", width}};
        if (request.contains("acquisition")) acq.merge_patch(request.at("acquisition"));
        AcquisitionConfig cfg = merged_acquisition(doc, acq);
        const int channel = static_cast<int>(get_number(request, "channel", 2));
        DyeDropSpec dspec;
        dspec.width = doc.phantom.width;
        dspec.height = doc.phantom.height;
        const auto rois = dye_drop_rois(dspec);
        const NoiseCalibration nc = calibrate_read_noise(doc.phantom, cfg, channel, rois, target);

        cfg.noise.read_noise_sigma = nc.read_noise_sigma;
        const FrameTriplet t = sample_triplet(expected_triplet(doc.phantom, cfg.channel(channel), cfg), cfg.noise,
                                              channel_stream_seed(cfg.seed, channel));
        const DociMap map = compute_doci(t, channel);
        Json drops = Json::array();
        std::vector<double> true_tau, means;
        for (std::size_t k = 0; k < rois.size(); ++k) {
            const RoiStats s = roi_stats(map, rois[k]);
            const double tau = doc.phantom.lifetime_for(channel)(rois[k].x + rois[k].w / 2, rois[k].y + rois[k].h / 2);
            drops.push_back({{"drop", k + 1}, {"lifetime_ns", tau}, {"mean", s.mean}, {"std", s.std}, {"n", s.n}});
            true_tau.push_back(tau);
            means.push_back(s.mean);
        }
        const CalibrationFit dfit = fit_line(true_tau, means);
        measured_std = nc.achieved_std;
        report["noise_calibration"] = {{"target_std", target},
                                       {"read_noise_sigma", nc.read_noise_sigma},
                                       {"achieved_std", nc.achieved_std},
                                       {"iterations", nc.iterations},
                                       {"channel", channel},
                                       {"drops", drops},
                                       {"drop_fit_inv_slope", dfit.inv_slope},
                                       {"drop_fit_r_squared", dfit.r_squared}};
    }

    std::optional<double> avg_std;
    if (request.contains("avg_std")) avg_std = get_number(request, "avg_std", 0.0);
    else avg_std = measured_std;
    if (avg_std) {
        const double ratio = get_number(request, "flim_doci_ratio", fit.inv_slope);
        const double tr = temporal_resolution(*avg_std, ratio);
        report["temporal_resolution"] = {
            {"avg_std", *avg_std}, {"flim_doci_ratio", ratio}, {"value_ns", tr}, {"display_ns", format_ns(tr)}};
    }

    if (out_dir) {
        std::error_code ec;
        fs::create_directories(*out_dir, ec);
        if (ec) fail(ErrorCode::Io, "cannot create " + out_dir->string());
        const GateConfig gate = GateConfig::standard(pulse, width);
        std::string csv = "tau_ns,doci,fit\n";
        PlotSeries pts{{}, {}, Rgb{200, 0, 0}, false};
        PlotSeries line{{}, {}, Rgb{0, 0, 0}, true};
        for (double tau : lifetimes) {
            const double d = doci_value(pulse, Fluorophore{1.0, tau}, gate);
            const double f = fit.slope * tau + fit.intercept;
            csv += fmt(tau) + "," + fmt(d, "%.9g") + "," + fmt(f, "%.9g") + "\n";
            pts.x.push_back(tau);
            pts.y.push_back(d);
            line.x.push_back(tau);
            line.y.push_back(f);
        }
        write_file(*out_dir / "calibration.csv", csv);
        write_png(*out_dir / "calibration.png", render_plot({line, pts}));
        if (request.contains("surface")) {
            const Json& s = request.at("surface");
            const auto taus = number_list(s.at("lifetimes_ns"), "surface lifetimes");
            const auto widths = number_list(s.at("widths_ns"), "surface widths");
            write_file(*out_dir / "surface.csv", surface_csv(doci_surface(pulse, taus, widths)));
        }
        write_file(*out_dir / "calibration.json", report.dump(2) + "\n");
    }
    return report;
}

Json resolve(const Json& request_in, const std::optional<fs::path>& out_dir) {
    const Json request = request_in.is_null() ? Json::object() : request_in;
    check_keys(request, {"phantom", "psf_sigma_px", "psf_sigma_bar_widths", "criterion", "acquisition", "channel"},
               "resolution request");
    Json spec = {{"generator", "usaf"}};
    if (request.contains("phantom")) spec.merge_patch(request.at("phantom"));
    require(spec.at("generator") == "usaf", "resolution needs a usaf bar target");
    PhantomDocument doc = phantom_from_json(spec);
    Json acq = request.contains("acquisition") ? request.at("acquisition") : Json::object();
    const std::size_t finest = doc.phantom.bar_groups.back().bar_width_px;
    if (request.contains("psf_sigma_bar_widths")) {
        require(!request.contains("psf_sigma_px"), "give the PSF in pixels or in bar widths, not both");
        acq["psf_sigma_px"] = get_number(request, "psf_sigma_bar_widths", 0.0) * static_cast<double>(finest);
    } else if (request.contains("psf_sigma_px")) {
        acq["psf_sigma_px"] = request.at("psf_sigma_px");
    }
    const AcquisitionConfig cfg = merged_acquisition(doc, acq);
    const int channel = static_cast<int>(get_number(request, "channel", cfg.channels.front().number));
    const double criterion = get_number(request, "criterion", 0.26);

    const FrameTriplet t = sample_triplet(expected_triplet(doc.phantom, cfg.channel(channel), cfg), cfg.noise,
                                          channel_stream_seed(cfg.seed, channel));
    const DociMap map = compute_doci(t, channel);
    const ResolutionReport rep = spatial_resolution(t, map, doc.phantom, criterion);

    Json groups = Json::array();
    std::string csv = "spacing_um,bar_width_px,intensity_contrast,doci_contrast,resolved\n";
    PlotSeries curve{{}, {}, Rgb{0, 0, 200}, true};
    for (const auto& g : rep.groups) {
        groups.push_back({{"spacing_um", g.spacing_um},
                          {"bar_width_px", g.bar_width_px},
                          {"intensity_contrast", g.intensity_contrast},
                          {"doci_contrast", g.doci_contrast},
                          {"resolved", g.resolved}});
        csv += fmt(g.spacing_um) + "," + std::to_string(g.bar_width_px) + "," + fmt(g.intensity_contrast) + "," +
               fmt(g.doci_contrast) + "," + (g.resolved ? "1" : "0") + "\n";
        curve.x.push_back(g.spacing_um);
        curve.y.push_back(g.intensity_contrast);
    }
    Json report = {{"criterion", criterion},
                   {"psf_sigma_px", cfg.psf_sigma_px},
                   {"pixel_pitch_um", doc.phantom.pixel_pitch_mm * 1000.0},
                   {"groups", groups},
                   {"finest_resolved_spacing_um", optional_number(rep.finest_resolved_spacing_um)},
                   {"summary", rep.summary()},
                   {"doci_spread", rep.doci_spread},
                   {"doci_mean", rep.doci_mean},
                   {"invalid_fraction", map.invalid_fraction()}};
    if (out_dir) {
        std::error_code ec;
        fs::create_directories(*out_dir, ec);
        if (ec) fail(ErrorCode::Io, "cannot create " + out_dir->string());
        write_file(*out_dir / "resolution.csv", csv);
        write_file(*out_dir / "resolution.json", report.dump(2) + "\n");
        write_png(*out_dir / "resolution_doci.png", render_heatmap(map));
        write_png(*out_dir / "contrast.png", render_plot({curve}));
    }
    return report;
}

}  // namespace doci
