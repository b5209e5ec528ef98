#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "doci/error.hpp"

namespace doci {

/// Dense 2-D raster, row-major with the origin at the top-left pixel.
template <typename T>
class Raster {
public:
    using value_type = T;

    Raster() = default;
    Raster(std::size_t width, std::size_t height, T fill = T{})
        : width_(width), height_(height), data_(width * height, fill) {}
    Raster(std::size_t width, std::size_t height, std::vector<T> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (data_.size() != width_ * height_) {
            fail(ErrorCode::ShapeMismatch, "raster payload does not match its dimensions");
        }
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }
    const T& operator()(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> pixels() noexcept { return data_; }
    std::span<const T> pixels() const noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    bool same_shape(std::size_t w, std::size_t h) const noexcept { return w == width_ && h == height_; }
    template <typename U>
    bool same_shape(const Raster<U>& other) const noexcept {
        return other.width() == width_ && other.height() == height_;
    }

    bool operator==(const Raster&) const = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<T> data_;
};

using RasterD = Raster<double>;
using RasterF = Raster<float>;
using RasterU16 = Raster<std::uint16_t>;
using RasterU8 = Raster<std::uint8_t>;
/// Boolean plane stored one byte per pixel; nonzero is true.
using Mask = Raster<std::uint8_t>;

template <typename A, typename B>
void require_same_shape(const Raster<A>& a, const Raster<B>& b, const std::string& what) {
    if (!a.same_shape(b)) {
        fail(ErrorCode::ShapeMismatch, what + ": raster dimensions differ");
    }
}

/// Axis-aligned pixel rectangle; clipped against the raster by consumers.
struct PixelRect {
    std::size_t x = 0;
    std::size_t y = 0;
    std::size_t w = 0;
    std::size_t h = 0;
};

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    bool operator==(const Rgb&) const = default;
};

using RgbImage = Raster<Rgb>;

}  // namespace doci
