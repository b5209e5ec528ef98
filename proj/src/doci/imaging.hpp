#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "doci/lifetime_model.hpp"
#include "doci/raster.hpp"

namespace doci {

/// Filter-wheel positions carrying emission filters, numbered as on the
/// instrument: 2 is the 405 nm long-pass, 3..10 the bandpass filters.
inline constexpr int kFirstChannel = 2;
inline constexpr int kLastChannel = 10;
inline constexpr std::size_t kChannelCount = 9;

inline std::size_t channel_slot(int number) { return static_cast<std::size_t>(number - kFirstChannel); }
bool is_channel_number(int number);

struct FilterChannel {
    int number = kFirstChannel;
    double center_nm = 0.0;
    double pass_low_nm = 0.0;
    double pass_high_nm = 0.0;
    /// Per-class amplitude multiplier; classes not listed use 1.
    std::map<int, double> relative_yield;

    double yield_for(int label) const;
    void validate() const;
};

/// The nine emission channels (long-pass plus eight bandpass filters).
std::vector<FilterChannel> standard_channels();
FilterChannel standard_channel(int number);

struct NoiseConfig {
    bool shot_noise = false;
    double read_noise_sigma = 0.0;
    double dark_level = 0.0;
    /// Optional common-mode light added to all three gates.
    double ambient_level = 0.0;

    bool stochastic() const { return shot_noise || read_noise_sigma > 0.0; }
    void validate() const;
};

struct AcquisitionConfig {
    PumpPulse pulse;
    GateConfig gate = GateConfig::standard(PumpPulse{}, 20.0);
    std::vector<FilterChannel> channels = standard_channels();
    /// Nominal pulse count behind one averaged frame (half a second at 500 kHz).
    std::int64_t pulses_averaged = 250000;
    NoiseConfig noise;
    std::uint64_t seed = 0;
    /// Gaussian PSF sigma in pixels; 0 disables blurring.
    double psf_sigma_px = 0.8;

    void validate() const;
    const FilterChannel& channel(int number) const;
};

struct FrameTriplet {
    RasterD reference;
    RasterD decay;
    RasterD background;

    std::size_t width() const { return reference.width(); }
    std::size_t height() const { return reference.height(); }
    void validate() const;
};

struct ChannelStack {
    std::vector<int> channel_numbers;
    std::vector<FrameTriplet> triplets;
    AcquisitionConfig config;
    std::string phantom_id;
    double pixel_pitch_mm = 0.0;
    /// Ground-truth class labels, when the stack came from a phantom.
    std::optional<RasterU16> labels;
    int cancer_label = 3;

    std::size_t width() const { return triplets.empty() ? 0 : triplets.front().width(); }
    std::size_t height() const { return triplets.empty() ? 0 : triplets.front().height(); }
    const FrameTriplet& triplet(int channel_number) const;
    void validate() const;
};

/// Deterministic 64-bit mixer used to split random streams.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace doci
