#pragma once

#include <cstdint>

#include "doci/imaging.hpp"
#include "doci/phantom.hpp"

namespace doci {

/// Isotropic Gaussian blur, kernel truncated at 4 sigma and normalized.
/// Borders use half-sample symmetric reflection (d c b a | a b c d), which
/// preserves the raster sum for kernels shorter than the raster.
RasterD gaussian_blur(const RasterD& in, double sigma_px);

/// Noiseless gated rasters for one channel: illumination * yield * amplitude *
/// gated emission, blurred by the PSF, plus dark and ambient levels.
FrameTriplet expected_triplet(const Phantom& phantom, const FilterChannel& channel, const PumpPulse& pulse,
                              const GateConfig& gate, const NoiseConfig& noise = {}, double psf_sigma_px = 0.0);

FrameTriplet expected_triplet(const Phantom& phantom, const FilterChannel& channel, const AcquisitionConfig& config);

/// Independent random stream per channel so that channel order and
/// threading never change the output.
std::uint64_t channel_stream_seed(std::uint64_t seed, int channel_number);

/// Draws one Poisson count per pixel with the expected value as its mean
/// (equivalent to summing per-pulse draws), then adds Gaussian read noise.
FrameTriplet sample_triplet(const FrameTriplet& expected, const NoiseConfig& noise, std::uint64_t stream_seed);

/// Simulated gated acquisition through every configured channel.
ChannelStack acquire(const Phantom& phantom, const AcquisitionConfig& config);

}  // namespace doci
