#include "doci/imaging.hpp"

#include <cmath>
#include <set>

namespace doci {

namespace {

struct ChannelBand {
    int number;
    double center;
    double low;
    double high;
};

// Long-pass proxy plus the eight bandpass filters (10-30 nm wide).
constexpr std::array<ChannelBand, kChannelCount> kBands{{
    {2, 512.0, 405.0, 620.0},
    {3, 415.0, 405.0, 425.0},
    {4, 434.0, 424.0, 444.0},
    {5, 465.0, 455.0, 475.0},
    {6, 494.0, 484.0, 504.0},
    {7, 520.0, 510.0, 530.0},
    {8, 542.0, 528.0, 556.0},
    {9, 572.0, 558.0, 586.0},
    {10, 605.0, 597.0, 613.0},
}};

bool all_finite(const RasterD& r) {
    for (double v : r.pixels()) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace

bool is_channel_number(int number) { return number >= kFirstChannel && number <= kLastChannel; }

double FilterChannel::yield_for(int label) const {
    auto it = relative_yield.find(label);
    return it == relative_yield.end() ? 1.0 : it->second;
}

void FilterChannel::validate() const {
    require(is_channel_number(number), "filter channel number must be within 2..10");
    require(pass_low_nm < pass_high_nm, "filter passband must have low < high");
    for (const auto& [label, y] : relative_yield) {
        require(std::isfinite(y) && y >= 0.0, "relative yield must be nonnegative");
    }
}

std::vector<FilterChannel> standard_channels() {
    std::vector<FilterChannel> out;
    out.reserve(kBands.size());
    for (const auto& band : kBands) {
        out.push_back(FilterChannel{band.number, band.center, band.low, band.high, {}});
    }
    return out;
}

FilterChannel standard_channel(int number) {
    require(is_channel_number(number), "unknown filter channel " + std::to_string(number));
    const auto& band = kBands[channel_slot(number)];
    return FilterChannel{band.number, band.center, band.low, band.high, {}};
}

void NoiseConfig::validate() const {
    require(std::isfinite(read_noise_sigma) && read_noise_sigma >= 0.0, "read noise sigma must be nonnegative");
    require(std::isfinite(dark_level) && dark_level >= 0.0, "dark level must be nonnegative");
    require(std::isfinite(ambient_level) && ambient_level >= 0.0, "ambient level must be nonnegative");
}

void AcquisitionConfig::validate() const {
    pulse.validate();
    gate.validate(pulse);
    noise.validate();
    require(pulses_averaged >= 1, "pulses_averaged must be at least 1");
    require(std::isfinite(psf_sigma_px) && psf_sigma_px >= 0.0, "PSF sigma must be nonnegative");
    require(!channels.empty(), "acquisition needs at least one channel");
    std::set<int> seen;
    for (const auto& ch : channels) {
        ch.validate();
        require(seen.insert(ch.number).second, "duplicate channel " + std::to_string(ch.number));
    }
}

const FilterChannel& AcquisitionConfig::channel(int number) const {
    for (const auto& ch : channels) {
        if (ch.number == number) return ch;
    }
    fail(ErrorCode::NotFound, "channel " + std::to_string(number) + " is not configured");
}

void FrameTriplet::validate() const {
    require_same_shape(reference, decay, "frame triplet");
    require_same_shape(reference, background, "frame triplet");
    if (!all_finite(reference) || !all_finite(decay) || !all_finite(background)) {
        fail(ErrorCode::NonFinite, "frame triplet contains non-finite values");
    }
}

const FrameTriplet& ChannelStack::triplet(int channel_number) const {
    for (std::size_t i = 0; i < channel_numbers.size(); ++i) {
        if (channel_numbers[i] == channel_number) return triplets[i];
    }
    fail(ErrorCode::NotFound, "channel " + std::to_string(channel_number) + " is not in the stack");
}

void ChannelStack::validate() const {
    require(channel_numbers.size() == triplets.size(), "stack channel list does not match its frames");
    require(!triplets.empty(), "stack holds no channels");
    for (const auto& t : triplets) {
        t.validate();
        require_same_shape(t.reference, triplets.front().reference, "channel stack");
    }
    if (labels) {
        require_same_shape(*labels, triplets.front().reference, "stack labels");
    }
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace doci
