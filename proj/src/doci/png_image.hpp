#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "doci/raster.hpp"

namespace doci {

std::vector<std::uint8_t> encode_png(const RgbImage& image);
RgbImage decode_png(const std::vector<std::uint8_t>& bytes);
void write_png(const std::filesystem::path& path, const RgbImage& image);

/// Minimal line plot on a white canvas: axes, scatter points, optional line.
struct PlotSeries {
    std::vector<double> x;
    std::vector<double> y;
    Rgb color{200, 0, 0};
    bool connect = false;
};

RgbImage render_plot(const std::vector<PlotSeries>& series, std::size_t width = 480, std::size_t height = 360);

}  // namespace doci
