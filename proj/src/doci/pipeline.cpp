#include "doci/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

namespace doci {

std::size_t DociMap::valid_count() const {
    return static_cast<std::size_t>(std::count_if(valid.pixels().begin(), valid.pixels().end(),
                                                   [](std::uint8_t v) { return v != 0; }));
}

double DociMap::invalid_fraction() const {
    if (valid.empty()) return 0.0;
    return 1.0 - static_cast<double>(valid_count()) / static_cast<double>(valid.size());
}

double percentile(std::vector<double> values, double q) {
    require(!values.empty(), "percentile of an empty set");
    require(q >= 0.0 && q <= 1.0, "percentile rank must lie in [0, 1]");
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
    const double a = values[lo];
    if (hi == lo) return a;
    const double b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(hi), values.end());
    return a + (pos - static_cast<double>(lo)) * (b - a);
}

double default_floor(const FrameTriplet& triplet) {
    triplet.validate();
    std::vector<double> diff(triplet.reference.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = triplet.reference[i] - triplet.background[i];
    const double p99 = diff.empty() ? 0.0 : percentile(std::move(diff), 0.99);
    return std::max(1e-3 * p99, std::numeric_limits<double>::min());
}

DociMap compute_doci(const FrameTriplet& triplet, double floor, int channel_number) {
    triplet.validate();
    require(std::isfinite(floor) && floor > 0.0, "denominator floor must be positive");
    DociMap map;
    map.channel_number = channel_number;
    map.denominator_floor = floor;
    map.values = RasterD(triplet.width(), triplet.height(), 0.0);
    map.valid = Mask(triplet.width(), triplet.height(), 0);
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        const double denom = triplet.reference[i] - triplet.background[i];
        if (!(denom > floor)) continue;
        const double v = (triplet.decay[i] - triplet.background[i]) / denom;
        if (!std::isfinite(v)) continue;
        map.values[i] = v;
        map.valid[i] = 1;
    }
    return map;
}

DociMap compute_doci(const FrameTriplet& triplet, int channel_number) {
    return compute_doci(triplet, default_floor(triplet), channel_number);
}

namespace {

RoiStats summarize(const DociMap& map, const std::vector<double>& v) {
    if (v.empty()) fail(ErrorCode::EmptyRoi, "region of interest holds no valid pixels");
    RoiStats s;
    s.n = v.size();
    s.channel_number = map.channel_number;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    return s;
}

}  // namespace

RoiStats roi_stats(const DociMap& map, const PixelRect& roi) {
    require_same_shape(map.values, map.valid, "roi_stats");
    const std::size_t x1 = std::min(map.values.width(), roi.x + roi.w);
    const std::size_t y1 = std::min(map.values.height(), roi.y + roi.h);
    std::vector<double> v;
    for (std::size_t y = roi.y; y < y1; ++y) {
        for (std::size_t x = roi.x; x < x1; ++x) {
            if (map.valid(x, y)) v.push_back(map.values(x, y));
        }
    }
    return summarize(map, v);
}

RoiStats roi_stats(const DociMap& map, const std::vector<std::size_t>& pixels) {
    require_same_shape(map.values, map.valid, "roi_stats");
    std::vector<double> v;
    for (std::size_t i : pixels) {
        if (i < map.valid.size() && map.valid[i]) v.push_back(map.values[i]);
    }
    return summarize(map, v);
}

Significance roi_compare(const RoiStats& a, const RoiStats& b) {
    require(a.n >= 2 && b.n >= 2, "significance test needs at least two pixels per region");
    require(a.std >= 0.0 && b.std >= 0.0 && std::isfinite(a.mean) && std::isfinite(b.mean),
            "region statistics must be finite");
    const double va = a.std * a.std / static_cast<double>(a.n);
    const double vb = b.std * b.std / static_cast<double>(b.n);
    const double se2 = va + vb;
    Significance s;
    if (se2 == 0.0) {
        if (a.mean == b.mean) return s;
        s.t = a.mean < b.mean ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
        s.dof = static_cast<double>(a.n + b.n - 2);
        s.p_value = 0.0;
        return s;
    }
    s.t = (a.mean - b.mean) / std::sqrt(se2);
    s.dof = se2 * se2 / (va * va / static_cast<double>(a.n - 1) + vb * vb / static_cast<double>(b.n - 1));
    boost::math::students_t dist(s.dof);
    s.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(s.t))));
    return s;
}

Rgb palette_color(Palette palette, double u) {
    u = std::isfinite(u) ? std::clamp(u, 0.0, 1.0) : 0.0;
    if (palette == Palette::Gray) {
        const auto g = static_cast<std::uint8_t>(std::lround(255.0 * u));
        return {g, g, g};
    }
    struct Stop {
        double at;
        double r, g, b;
    };
    static constexpr std::array<Stop, 5> stops{{
        {0.0, 64, 0, 0},
        {0.35, 220, 0, 0},
        {0.6, 255, 140, 0},
        {0.85, 255, 255, 0},
        {1.0, 255, 255, 255},
    }};
    std::size_t k = 1;
    while (k + 1 < stops.size() && u > stops[k].at) ++k;
    const Stop& lo = stops[k - 1];
    const Stop& hi = stops[k];
    const double f = (u - lo.at) / (hi.at - lo.at);
    auto mix = [f](double a, double b) { return static_cast<std::uint8_t>(std::lround(a + f * (b - a))); };
    return {mix(lo.r, hi.r), mix(lo.g, hi.g), mix(lo.b, hi.b)};
}

RgbImage render_heatmap(const DociMap& map, const HeatmapOptions& options) {
    require_same_shape(map.values, map.valid, "render_heatmap");
    double lo = 0.0;
    double hi = 0.0;
    if (options.range) {
        std::tie(lo, hi) = *options.range;
        require(std::isfinite(lo) && std::isfinite(hi) && hi > lo, "heatmap range must be increasing");
    } else {
        bool any = false;
        for (std::size_t i = 0; i < map.values.size(); ++i) {
            if (!map.valid[i]) continue;
            lo = any ? std::min(lo, map.values[i]) : map.values[i];
            hi = any ? std::max(hi, map.values[i]) : map.values[i];
            any = true;
        }
    }
    RgbImage out(map.values.width(), map.values.height(), kInvalidColor);
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        if (!map.valid[i]) continue;
        const double u = hi > lo ? (map.values[i] - lo) / (hi - lo) : 0.5;
        out[i] = palette_color(options.palette, u);
    }
    return out;
}

RgbImage render_intensity(const RasterD& frame) {
    RgbImage out(frame.width(), frame.height());
    if (frame.empty()) return out;
    const double top = percentile(std::vector<double>(frame.pixels().begin(), frame.pixels().end()), 0.99);
    for (std::size_t i = 0; i < frame.size(); ++i) {
        out[i] = palette_color(Palette::Gray, top > 0.0 ? frame[i] / top : 0.0);
    }
    return out;
}

}  // namespace doci
