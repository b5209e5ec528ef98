#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "doci/imaging.hpp"
#include "doci/lifetime_model.hpp"
#include "doci/phantom.hpp"
#include "doci/pipeline.hpp"

namespace doci {

struct CalibrationFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    /// ns per DOCI unit; infinite when the slope is zero.
    double inv_slope = 0.0;
};

/// Ordinary least squares of y on x.
CalibrationFit fit_line(std::span<const double> x, std::span<const double> y);

/// 0.1, 0.2, ..., 6.0 ns.
std::vector<double> default_calibration_lifetimes();

/// DOCI value against true lifetime under the standard gate of width T.
CalibrationFit linearity_fit(const PumpPulse& pulse, double gate_width_ns, std::span<const double> lifetimes_ns,
                             const ModelOptions& options = {});

struct FallTauFit {
    double fall_tau_ns = 0.0;
    CalibrationFit fit;
    int iterations = 0;
};

/// Bisection on the pump fall constant until 1/k matches the target.
FallTauFit fit_fall_tau(const PumpPulse& pulse, double gate_width_ns, std::span<const double> lifetimes_ns,
                        double target_inv_slope, double tolerance = 1e-4, double lo_ns = 0.05, double hi_ns = 10.0);

/// avg_std * ratio, in ns.
double temporal_resolution(double avg_std, double flim_doci_ratio);
/// Two decimals, the way the resolution is reported ("0.14").
std::string format_ns(double value);

/// Mean of the ROI standard deviations.
double measure_stack_std(const DociMap& map, const std::vector<PixelRect>& rois);

/// tau = (value - intercept) / slope on valid pixels; invalid pixels hold 0.
RasterD absolute_lifetime(const DociMap& map, const CalibrationFit& fit);

struct GroupContrast {
    double spacing_um = 0.0;
    std::size_t bar_width_px = 0;
    /// Michelson contrast of the background-subtracted reference profile.
    double intensity_contrast = 0.0;
    /// Same on the DOCI profile with invalid pixels counted as zero.
    double doci_contrast = 0.0;
    bool resolved = false;
};

struct ResolutionReport {
    double criterion = 0.26;
    std::vector<GroupContrast> groups;
    std::optional<double> finest_resolved_spacing_um;
    /// Spread (max - min) of valid DOCI values over the bars of resolved groups.
    double doci_spread = 0.0;
    double doci_mean = 0.0;

    std::string summary() const;
};

ResolutionReport spatial_resolution(const FrameTriplet& triplet, const DociMap& map, const Phantom& phantom,
                                    double criterion = 0.26);

struct NoiseCalibration {
    double read_noise_sigma = 0.0;
    double achieved_std = 0.0;
    int iterations = 0;
};

/// Bisection on read-noise sigma so the average ROI standard deviation of
/// one channel's DOCI map meets the target.
NoiseCalibration calibrate_read_noise(const Phantom& phantom, const AcquisitionConfig& config, int channel_number,
                                      const std::vector<PixelRect>& rois, double target_std,
                                      double relative_tolerance = 1e-3);

}  // namespace doci
