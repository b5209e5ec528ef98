#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "doci/commands.hpp"

namespace doci {

enum class Mode { Video, Imaging, Manual };

const char* mode_name(Mode mode);
Mode parse_instrument_mode(const std::string& name);

struct ServiceOptions {
    Json phantom = {{"generator", "tissue"}};
    Json config = Json::object();
    /// Imaging archives are written below this directory when set.
    std::filesystem::path data_dir;
    /// Cadence of Video and Manual frames.
    int frame_interval_ms = 500;
    /// Pace imaging at the instrument's 2 s per channel.
    bool realtime = false;
    /// Channel shown in Manual mode.
    int channel = 2;
};

struct Frame {
    std::uint64_t seq = 0;
    /// 1 is the blank window; 2..10 the filter channels.
    int channel = 0;
    std::string kind;
    /// Mode that produced the frame.
    std::string mode;
    std::string timestamp;
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> png;
};

/// The simulated instrument. All state lives behind one mutex; a worker
/// thread produces frames and runs imaging sequences on snapshots of the
/// configuration, so a sequence never sees a change made while it runs.
class InstrumentService {
public:
    explicit InstrumentService(ServiceOptions options);
    ~InstrumentService();
    InstrumentService(const InstrumentService&) = delete;
    InstrumentService& operator=(const InstrumentService&) = delete;

    Json status() const;
    /// Partial update; Conflict while imaging, NotFound for unknown channels.
    Json update_config(const Json& patch);
    Json set_mode(const std::string& mode);

    /// The oldest retained frame newer than `since`, waiting up to `timeout`.
    std::optional<Frame> wait_frame(std::uint64_t since, std::chrono::milliseconds timeout);
    /// Blocks until no imaging sequence is pending or running.
    bool wait_until_idle(std::chrono::milliseconds timeout);

    struct ClassifyResult {
        Json result;
        std::vector<std::uint8_t> overlay_png;
    };
    /// Classifies the stack of the last imaging sequence.
    ClassifyResult classify(const Json& request);
    /// DOCR bytes of a plane from the last imaging sequence: doci, valid,
    /// reference, decay or background.
    std::vector<std::uint8_t> raster(int channel, const std::string& plane) const;

    void stop();
    bool stopped() const;

private:
    void worker();
    void run_imaging(const AcquisitionConfig& cfg);
    Frame render_frame(Mode mode, const AcquisitionConfig& cfg, int channel, std::uint64_t stream);
    void publish(Frame frame);

    Phantom phantom_;
    Json acquisition_defaults_;

    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable frame_cv_;
    AcquisitionConfig config_;
    int channel_;
    int frame_interval_ms_;
    bool realtime_;
    std::filesystem::path data_dir_;
    Mode mode_ = Mode::Manual;
    bool imaging_pending_ = false;
    bool imaging_running_ = false;
    std::size_t imaging_done_ = 0;
    bool stop_ = false;
    std::uint64_t seq_ = 0;
    std::uint64_t frame_counter_ = 0;
    std::deque<Frame> frames_;
    std::shared_ptr<const ChannelStack> last_stack_;
    std::shared_ptr<const std::vector<DociMap>> last_maps_;
    std::string last_archive_;
    std::string last_error_;
    std::thread worker_;
};

}  // namespace doci
