#include "doci/camera_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "doci/parallel.hpp"

namespace doci {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

std::size_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
    const std::ptrdiff_t period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return static_cast<std::size_t>(i < n ? i : period - 1 - i);
}

}  // namespace

RasterD gaussian_blur(const RasterD& in, double sigma_px) {
    require(std::isfinite(sigma_px) && sigma_px >= 0.0, "blur sigma must be nonnegative");
    if (sigma_px == 0.0 || in.empty()) return in;

    const std::vector<double> k = gaussian_kernel(sigma_px);
    const auto radius = static_cast<std::ptrdiff_t>(k.size() / 2);
    const auto w = static_cast<std::ptrdiff_t>(in.width());
    const auto h = static_cast<std::ptrdiff_t>(in.height());

    RasterD tmp(in.width(), in.height());
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
                acc += k[static_cast<std::size_t>(j + radius)] *
                       in(reflect(x + j, w), static_cast<std::size_t>(y));
            }
            tmp(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = acc;
        }
    }
    RasterD out(in.width(), in.height());
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
                acc += k[static_cast<std::size_t>(j + radius)] *
                       tmp(static_cast<std::size_t>(x), reflect(y + j, h));
            }
            out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = acc;
        }
    }
    return out;
}

FrameTriplet expected_triplet(const Phantom& phantom, const FilterChannel& channel, const PumpPulse& pulse,
                              const GateConfig& gate, const NoiseConfig& noise, double psf_sigma_px) {
    phantom.validate();
    channel.validate();
    pulse.validate();
    gate.validate(pulse);
    noise.validate();

    const RasterD& lifetimes = phantom.lifetime_for(channel.number);
    const std::size_t w = phantom.width;
    const std::size_t h = phantom.height;
    FrameTriplet out{RasterD(w, h), RasterD(w, h), RasterD(w, h)};

    // Unit-amplitude gated signals depend only on the lifetime; neighbouring
    // pixels usually share one, so the last evaluation is reused.
    double cached_tau = -1.0;
    GatedSignals unit;
    for (std::size_t i = 0; i < phantom.amplitude.size(); ++i) {
        const double tau = lifetimes[i];
        if (tau != cached_tau) {
            unit = gated_signals(pulse, Fluorophore{1.0, tau}, gate);
            cached_tau = tau;
        }
        const int label = phantom.labels[i];
        const double gain = phantom.illumination[i] * phantom.amplitude[i] * channel.yield_for(label) *
                            phantom.yield_for(label, channel.number);
        out.reference[i] = gain * unit.reference;
        out.decay[i] = gain * unit.decay;
        out.background[i] = gain * unit.background;
    }

    if (psf_sigma_px > 0.0) {
        out.reference = gaussian_blur(out.reference, psf_sigma_px);
        out.decay = gaussian_blur(out.decay, psf_sigma_px);
        out.background = gaussian_blur(out.background, psf_sigma_px);
    }

    const double offset = noise.dark_level + noise.ambient_level;
    if (offset != 0.0) {
        for (RasterD* r : {&out.reference, &out.decay, &out.background}) {
            for (double& v : r->pixels()) v += offset;
        }
    }
    return out;
}

FrameTriplet expected_triplet(const Phantom& phantom, const FilterChannel& channel, const AcquisitionConfig& config) {
    return expected_triplet(phantom, channel, config.pulse, config.gate, config.noise, config.psf_sigma_px);
}

std::uint64_t channel_stream_seed(std::uint64_t seed, int channel_number) {
    return splitmix64(splitmix64(seed) ^ (static_cast<std::uint64_t>(channel_number) * 0xD1B54A32D192ED03ULL));
}

FrameTriplet sample_triplet(const FrameTriplet& expected, const NoiseConfig& noise, std::uint64_t stream_seed) {
    noise.validate();
    if (!noise.stochastic()) return expected;

    std::mt19937_64 rng(stream_seed);
    std::normal_distribution<double> read(0.0, noise.read_noise_sigma > 0.0 ? noise.read_noise_sigma : 1.0);
    FrameTriplet out = expected;
    for (RasterD* r : {&out.reference, &out.decay, &out.background}) {
        for (double& v : r->pixels()) {
            double x = v;
            if (noise.shot_noise) {
                x = v > 0.0 ? static_cast<double>(std::poisson_distribution<std::int64_t>(v)(rng)) : 0.0;
            }
            if (noise.read_noise_sigma > 0.0) {
                x += read(rng);
            }
            v = std::max(0.0, x);
        }
    }
    return out;
}

ChannelStack acquire(const Phantom& phantom, const AcquisitionConfig& config) {
    config.validate();
    phantom.validate();

    ChannelStack stack;
    stack.config = config;
    stack.phantom_id = phantom.id;
    stack.pixel_pitch_mm = phantom.pixel_pitch_mm;
    stack.cancer_label = phantom.cancer_label;
    stack.channel_numbers.reserve(config.channels.size());
    for (const auto& ch : config.channels) stack.channel_numbers.push_back(ch.number);
    stack.triplets.resize(config.channels.size());

    parallel_for(config.channels.size(), [&](std::size_t i) {
        const FilterChannel& ch = config.channels[i];
        FrameTriplet expected = expected_triplet(phantom, ch, config);
        stack.triplets[i] = sample_triplet(expected, config.noise, channel_stream_seed(config.seed, ch.number));
    });

    RasterU16 labels(phantom.width, phantom.height);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = phantom.labels[i];
    stack.labels = std::move(labels);
    return stack;
}

}  // namespace doci
