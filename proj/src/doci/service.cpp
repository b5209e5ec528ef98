#include "doci/service.hpp"

#include <cstdio>
#include <ctime>

#include "doci/archive.hpp"
#include "doci/camera_sim.hpp"
#include "doci/png_image.hpp"
#include "doci/raster_io.hpp"

namespace doci {

namespace {

constexpr std::size_t kRetainedFrames = 32;

std::string timestamp_ms() {
    const auto now = std::chrono::system_clock::now();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[48];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[64];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

}  // namespace

const char* mode_name(Mode mode) {
    switch (mode) {
        case Mode::Video: return "video";
        case Mode::Imaging: return "imaging";
        case Mode::Manual: return "manual";
    }
    return "manual";
}

Mode parse_instrument_mode(const std::string& name) {
    if (name == "video") return Mode::Video;
    if (name == "imaging") return Mode::Imaging;
    if (name == "manual") return Mode::Manual;
    fail(ErrorCode::InvalidArgument, "mode must be video, imaging or manual");
}

InstrumentService::InstrumentService(ServiceOptions options)
    : channel_(options.channel),
      frame_interval_ms_(options.frame_interval_ms),
      realtime_(options.realtime),
      data_dir_(std::move(options.data_dir)) {
    PhantomDocument doc = phantom_from_json(options.phantom);
    config_ = merged_acquisition(doc, options.config);
    phantom_ = std::move(doc.phantom);
    acquisition_defaults_ = std::move(doc.acquisition_defaults);
    require(frame_interval_ms_ >= 1, "frame interval must be at least 1 ms");
    config_.channel(channel_);
    worker_ = std::thread([this] { worker(); });
}

InstrumentService::~InstrumentService() { stop(); }

void InstrumentService::stop() {
    {
        std::lock_guard lk(mu_);
        stop_ = true;
    }
    cv_.notify_all();
    frame_cv_.notify_all();
    if (worker_.joinable() && worker_.get_id() != std::this_thread::get_id()) worker_.join();
}

bool InstrumentService::stopped() const {
    std::lock_guard lk(mu_);
    return stop_;
}

Json InstrumentService::status() const {
    std::lock_guard lk(mu_);
    Json cfg = to_json(config_);
    cfg["gate_width_ns"] = config_.gate.width_ns;
    cfg["channel"] = channel_;
    cfg["frame_interval_ms"] = frame_interval_ms_;
    return {{"mode", mode_name(mode_)},
            {"seq", seq_},
            {"phantom_id", phantom_.id},
            {"width", phantom_.width},
            {"height", phantom_.height},
            {"config", cfg},
            {"imaging",
             {{"running", imaging_pending_ || imaging_running_},
              {"completed_channels", imaging_done_},
              {"total_channels", config_.channels.size()}}},
            {"has_imaging_data", static_cast<bool>(last_stack_)},
            {"last_archive", last_archive_.empty() ? Json(nullptr) : Json(last_archive_)},
            {"last_error", last_error_.empty() ? Json(nullptr) : Json(last_error_)}};
}

Json InstrumentService::update_config(const Json& patch) {
    check_keys(patch, {"gate_width_ns", "channel", "pulses_averaged", "noise", "seed", "psf_sigma_px", "frame_interval_ms"},
               "config update");
    {
        std::lock_guard lk(mu_);
        if (mode_ == Mode::Imaging) fail(ErrorCode::Conflict, "configuration is locked while imaging");
        AcquisitionConfig next = config_;
        int channel = channel_;
        int interval = frame_interval_ms_;
        if (patch.contains("gate_width_ns")) {
            const double w = get_number(patch, "gate_width_ns", 0.0);
            require(std::isfinite(w) && w > 0.0, "gate width must be positive");
            next.gate = GateConfig::standard(next.pulse, w);
        }
        if (patch.contains("channel")) {
            require(patch.at("channel").is_number_integer(), "channel must be an integer");
            channel = patch.at("channel").get<int>();
            next.channel(channel);
        }
        if (patch.contains("pulses_averaged")) {
            require(patch.at("pulses_averaged").is_number_integer(), "pulses_averaged must be an integer");
            next.pulses_averaged = patch.at("pulses_averaged").get<std::int64_t>();
        }
        if (patch.contains("noise")) next.noise = noise_from_json(patch.at("noise"), next.noise);
        if (patch.contains("seed")) {
            require(patch.at("seed").is_number_unsigned(), "seed must be a nonnegative integer");
            next.seed = patch.at("seed").get<std::uint64_t>();
        }
        if (patch.contains("psf_sigma_px")) next.psf_sigma_px = get_number(patch, "psf_sigma_px", 0.0);
        if (patch.contains("frame_interval_ms")) {
            require(patch.at("frame_interval_ms").is_number_integer(), "frame_interval_ms must be an integer");
            interval = patch.at("frame_interval_ms").get<int>();
            require(interval >= 1, "frame interval must be at least 1 ms");
        }
        next.validate();
        config_ = std::move(next);
        channel_ = channel;
        frame_interval_ms_ = interval;
    }
    cv_.notify_all();
    return status();
}

Json InstrumentService::set_mode(const std::string& name) {
    const Mode m = parse_instrument_mode(name);
    {
        std::lock_guard lk(mu_);
        if (stop_) fail(ErrorCode::Conflict, "service is stopping");
        if (mode_ == Mode::Imaging) fail(ErrorCode::Conflict, "an imaging sequence is running");
        mode_ = m;
        if (m == Mode::Imaging) {
            imaging_pending_ = true;
            imaging_done_ = 0;
            last_error_.clear();
        }
    }
    cv_.notify_all();
    return status();
}

std::optional<Frame> InstrumentService::wait_frame(std::uint64_t since, std::chrono::milliseconds timeout) {
    std::unique_lock lk(mu_);
    auto newer = [&]() -> const Frame* {
        for (const auto& f : frames_) {
            if (f.seq > since) return &f;
        }
        return nullptr;
    };
    frame_cv_.wait_for(lk, timeout, [&] { return stop_ || newer() != nullptr; });
    if (const Frame* f = newer()) return *f;
    return std::nullopt;
}

bool InstrumentService::wait_until_idle(std::chrono::milliseconds timeout) {
    std::unique_lock lk(mu_);
    return frame_cv_.wait_for(lk, timeout, [&] { return stop_ || (!imaging_pending_ && !imaging_running_); });
}

void InstrumentService::publish(Frame frame) {
    {
        std::lock_guard lk(mu_);
        frame.seq = ++seq_;
        frames_.push_back(std::move(frame));
        while (frames_.size() > kRetainedFrames) frames_.pop_front();
    }
    frame_cv_.notify_all();
}

Frame InstrumentService::render_frame(Mode mode, const AcquisitionConfig& cfg, int channel, std::uint64_t stream) {
    Frame f;
    f.width = phantom_.width;
    f.height = phantom_.height;
    f.timestamp = timestamp_ms();
    f.mode = mode_name(mode);
    if (mode == Mode::Video) {
        // The blank window passes everything; the long-pass channel stands in.
        const FrameTriplet t = sample_triplet(expected_triplet(phantom_, cfg.channel(kFirstChannel), cfg), cfg.noise,
                                              stream);
        f.channel = 1;
        f.kind = "intensity";
        f.png = encode_png(render_intensity(t.reference));
    } else {
        const FrameTriplet t = sample_triplet(expected_triplet(phantom_, cfg.channel(channel), cfg), cfg.noise, stream);
        f.channel = channel;
        f.kind = "doci";
        f.png = encode_png(render_heatmap(compute_doci(t, channel)));
    }
    return f;
}

void InstrumentService::run_imaging(const AcquisitionConfig& cfg) {
    auto stack = std::make_shared<ChannelStack>();
    auto maps = std::make_shared<std::vector<DociMap>>();
    stack->config = cfg;
    stack->phantom_id = phantom_.id;
    stack->pixel_pitch_mm = phantom_.pixel_pitch_mm;
    stack->cancer_label = phantom_.cancer_label;
    for (const FilterChannel& ch : cfg.channels) {
        const auto begin = std::chrono::steady_clock::now();
        FrameTriplet t = sample_triplet(expected_triplet(phantom_, ch, cfg), cfg.noise,
                                        channel_stream_seed(cfg.seed, ch.number));
        DociMap map = compute_doci(t, ch.number);
        Frame f;
        f.channel = ch.number;
        f.kind = "doci";
        f.mode = mode_name(Mode::Imaging);
        f.width = phantom_.width;
        f.height = phantom_.height;
        f.timestamp = timestamp_ms();
        f.png = encode_png(render_heatmap(map));
        stack->channel_numbers.push_back(ch.number);
        stack->triplets.push_back(std::move(t));
        maps->push_back(std::move(map));
        if (realtime_) {
            std::unique_lock lk(mu_);
            cv_.wait_until(lk, begin + std::chrono::seconds(2), [&] { return stop_; });
            if (stop_) return;
        }
        publish(std::move(f));
        {
            std::lock_guard lk(mu_);
            ++imaging_done_;
            if (stop_) return;
        }
    }
    RasterU16 labels(phantom_.width, phantom_.height);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = phantom_.labels[i];
    stack->labels = std::move(labels);

    std::string archive;
    if (!data_dir_.empty()) {
        std::string stamp = utc_timestamp();
        for (char& c : stamp) {
            if (c == ':') c = '-';
        }
        std::uint64_t seq;
        {
            std::lock_guard lk(mu_);
            seq = seq_;
        }
        const auto dir = data_dir_ / ("imaging-" + stamp + "-" + std::to_string(seq));
        save_stack(*stack, dir / "stack");
        save_maps(*maps, dir / "maps");
        archive = dir.string();
    }
    std::lock_guard lk(mu_);
    last_stack_ = std::move(stack);
    last_maps_ = std::move(maps);
    last_archive_ = archive;
}

void InstrumentService::worker() {
    auto next_due = std::chrono::steady_clock::now();
    std::unique_lock lk(mu_);
    while (!stop_) {
        if (imaging_pending_) {
            imaging_pending_ = false;
            imaging_running_ = true;
            const AcquisitionConfig cfg = config_;
            lk.unlock();
            std::string error;
            try {
                run_imaging(cfg);
            } catch (const std::exception& e) {
                error = e.what();
            }
            lk.lock();
            imaging_running_ = false;
            if (!error.empty()) last_error_ = error;
            if (mode_ == Mode::Imaging) mode_ = Mode::Manual;
            next_due = std::chrono::steady_clock::now();
            frame_cv_.notify_all();
            continue;
        }
        cv_.wait_until(lk, next_due, [&] { return stop_ || imaging_pending_; });
        if (stop_ || imaging_pending_) continue;
        if (std::chrono::steady_clock::now() < next_due) continue;

        const Mode mode = mode_;
        const AcquisitionConfig cfg = config_;
        const int channel = channel_;
        const std::uint64_t stream = channel_stream_seed(cfg.seed ^ splitmix64(++frame_counter_), channel);
        next_due = std::chrono::steady_clock::now() + std::chrono::milliseconds(frame_interval_ms_);
        lk.unlock();
        try {
            publish(render_frame(mode, cfg, channel, stream));
        } catch (const std::exception& e) {
            std::lock_guard g(mu_);
            last_error_ = e.what();
        }
        lk.lock();
    }
}

InstrumentService::ClassifyResult InstrumentService::classify(const Json& request) {
    std::shared_ptr<const ChannelStack> stack;
    std::shared_ptr<const std::vector<DociMap>> maps;
    {
        std::lock_guard lk(mu_);
        stack = last_stack_;
        maps = last_maps_;
    }
    if (!stack) fail(ErrorCode::Conflict, "no imaging data yet; run an imaging sequence first");
    ClassifyOutcome out = doci::classify(*stack, *maps, request);
    return {out.result, encode_png(out.overlay)};
}

std::vector<std::uint8_t> InstrumentService::raster(int channel, const std::string& plane) const {
    std::shared_ptr<const ChannelStack> stack;
    std::shared_ptr<const std::vector<DociMap>> maps;
    {
        std::lock_guard lk(mu_);
        stack = last_stack_;
        maps = last_maps_;
    }
    if (!stack) fail(ErrorCode::NotFound, "no imaging data yet");
    if (plane == "doci" || plane == "valid") {
        for (const auto& m : *maps) {
            if (m.channel_number != channel) continue;
            return plane == "doci" ? encode_raster(to_f32(m.values)) : encode_mask(m.valid);
        }
        fail(ErrorCode::NotFound, "channel " + std::to_string(channel) + " is not in the last imaging sequence");
    }
    const FrameTriplet& t = stack->triplet(channel);
    if (plane == "reference") return encode_raster(to_f32(t.reference));
    if (plane == "decay") return encode_raster(to_f32(t.decay));
    if (plane == "background") return encode_raster(to_f32(t.background));
    fail(ErrorCode::InvalidArgument, "plane must be doci, valid, reference, decay or background");
}

}  // namespace doci
