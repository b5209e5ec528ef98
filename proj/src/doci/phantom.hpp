#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "doci/imaging.hpp"
#include "doci/raster.hpp"

namespace doci {

/// Three vertical bars of equal width separated by equal gaps.
struct BarGroup {
    double spacing_um = 0.0;
    std::size_t bar_width_px = 0;
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t length_px = 0;

    std::size_t extent_px() const { return 5 * bar_width_px; }
};

/// Synthetic scene with known per-pixel ground truth.
struct Phantom {
    std::string id;
    std::size_t width = 0;
    std::size_t height = 0;
    double pixel_pitch_mm = 0.0;
    /// One lifetime raster per channel slot (channel number - 2).
    std::vector<RasterD> lifetime_ns;
    RasterD amplitude;
    RasterD illumination;
    RasterU8 labels;
    int background_label = 0;
    int cancer_label = 3;
    std::map<int, std::string> class_names;
    /// Spectral yield per class and channel slot; missing entries mean 1.
    std::map<int, std::array<double, kChannelCount>> class_yield;
    std::vector<BarGroup> bar_groups;

    const RasterD& lifetime_for(int channel_number) const;
    double yield_for(int label, int channel_number) const;
    Mask tissue_mask() const;
    void validate() const;
};

struct IlluminationModel {
    enum class Kind { Uniform, Radial };
    Kind kind = Kind::Uniform;
    /// Center-to-edge illumination ratio at the inscribed radius.
    double edge_ratio = 1.0;
    /// Illumination is zero beyond this radius (in inscribed radii).
    std::optional<double> cutoff_radius;
    double center_x = 0.5;
    double center_y = 0.5;
};

RasterD make_illumination(std::size_t width, std::size_t height, const IlluminationModel& model);

struct Shape {
    enum class Kind { Disk, Polygon, Rect };
    Kind kind = Kind::Disk;
    int label = 0;
    double cx = 0.0, cy = 0.0, radius = 0.0;
    double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
    std::vector<std::pair<double, double>> points;

    /// Pixel (px, py) is inside when its center is.
    bool contains(std::size_t px, std::size_t py) const;
    static Shape disk(int label, double cx, double cy, double radius);
    static Shape rect(int label, double x, double y, double w, double h);
    static Shape polygon(int label, std::vector<std::pair<double, double>> points);
};

struct BarTargetSpec {
    std::string id = "usaf";
    std::size_t width = 512;
    std::size_t height = 512;
    /// Zero selects a 20 mm field of view across the width.
    double pixel_pitch_mm = 0.0;
    double finest_spacing_um = 70.0;
    int groups = 4;
    double lifetime_ns = 3.0;
    double amplitude = 1000.0;
    IlluminationModel illumination{IlluminationModel::Kind::Radial, 2.0, 1.3, 0.5, 0.5};
};

Phantom make_usaf_phantom(const BarTargetSpec& spec);

struct ClassSpec {
    int label = 0;
    std::string name;
    std::array<double, kChannelCount> lifetime_ns{};
    double amplitude = 1.0;
    std::array<double, kChannelCount> yield{1, 1, 1, 1, 1, 1, 1, 1, 1};
    /// Per-pixel lifetime heterogeneity (Gaussian sigma, ns).
    double lifetime_jitter_ns = 0.0;
    /// Relative amplitude texture (smooth, Gaussian sigma of the multiplier).
    double amplitude_texture = 0.0;
};

struct TissueSpec {
    std::string id = "tissue";
    std::size_t width = 512;
    std::size_t height = 512;
    double pixel_pitch_mm = 0.0;
    std::vector<ClassSpec> classes;
    int background_label = 0;
    /// Class filling the specimen outline.
    int base_label = 2;
    int cancer_label = 3;
    std::optional<Shape> specimen;
    std::vector<Shape> regions;
    IlluminationModel illumination;
    std::uint64_t seed = 1;
};

/// Corkboard, cartilage, fibrous tissue and cancer. Cancer lifetimes differ
/// from fibrous tissue only in kDefaultSeparatingChannels.
TissueSpec default_tissue_spec(std::size_t width = 512, std::size_t height = 512);
inline constexpr std::array<int, 5> kDefaultSeparatingChannels{3, 7, 8, 9, 10};

Phantom make_tissue_phantom(const TissueSpec& spec);

struct DyeDropSpec {
    std::string id = "dye-drops";
    std::size_t width = 512;
    std::size_t height = 512;
    double pixel_pitch_mm = 0.0;
    std::array<double, 3> lifetimes_ns{0.45, 2.6, 4.2};
    double base_amplitude = 4000.0;
    double concentration_ratio = 10.0;
    double drop_radius_px = 64.0;
    IlluminationModel illumination{IlluminationModel::Kind::Radial, 3.0, std::nullopt, 0.5, 0.5};
};

/// Three dyes at two concentrations; drop k (0..5) has label k + 1, dye k % 3,
/// and sits at drop_center(k).
Phantom make_dye_drop_phantom(const DyeDropSpec& spec);
std::pair<double, double> drop_center(const DyeDropSpec& spec, int k);
/// The 50x50 ROI centered on each drop.
std::vector<PixelRect> dye_drop_rois(const DyeDropSpec& spec, std::size_t roi_size = 50);

}  // namespace doci
