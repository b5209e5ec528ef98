#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "doci/imaging.hpp"
#include "doci/raster.hpp"

namespace doci {

/// Per-pixel relative lifetime with its validity plane. Invalid pixels hold 0.
struct DociMap {
    RasterD values;
    Mask valid;
    int channel_number = 0;
    double denominator_floor = 0.0;

    std::size_t valid_count() const;
    double invalid_fraction() const;
};

/// 1e-3 of the 99th percentile of (reference - background); never below the
/// smallest positive double, so an all-dark triplet yields a usable floor.
double default_floor(const FrameTriplet& triplet);

/// Percentile by linear interpolation between order statistics, q in [0, 1].
double percentile(std::vector<double> values, double q);

DociMap compute_doci(const FrameTriplet& triplet, double floor, int channel_number = 0);
DociMap compute_doci(const FrameTriplet& triplet, int channel_number = 0);

struct RoiStats {
    double mean = 0.0;
    /// Sample standard deviation (n - 1); zero for a single pixel.
    double std = 0.0;
    std::size_t n = 0;
    int channel_number = 0;
};

/// Statistics over the valid pixels of the rectangle (clipped to the map).
RoiStats roi_stats(const DociMap& map, const PixelRect& roi);
/// Statistics over the valid pixels among the given linear indices.
RoiStats roi_stats(const DociMap& map, const std::vector<std::size_t>& pixels);

struct Significance {
    double t = 0.0;
    double dof = 0.0;
    /// Two-sided, from the Student t distribution with Welch's dof.
    double p_value = 1.0;
};

Significance roi_compare(const RoiStats& a, const RoiStats& b);

enum class Palette { Hot, Gray };

struct HeatmapOptions {
    Palette palette = Palette::Hot;
    /// Fixed normalization range; min-max over valid pixels otherwise.
    std::optional<std::pair<double, double>> range;
};

inline constexpr Rgb kInvalidColor{0, 0, 255};

/// Palette lookup for u in [0, 1]; Hot runs dark red to white and never
/// produces the reserved invalid color.
Rgb palette_color(Palette palette, double u);

RgbImage render_heatmap(const DociMap& map, const HeatmapOptions& options = {});

/// Grayscale intensity frame scaled to its 99th percentile.
RgbImage render_intensity(const RasterD& frame);

}  // namespace doci
