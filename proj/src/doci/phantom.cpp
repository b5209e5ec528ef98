#include "doci/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "doci/camera_sim.hpp"

namespace doci {

namespace {

double default_pitch(std::size_t width, double pitch) {
    return pitch > 0.0 ? pitch : 20.0 / static_cast<double>(width);
}

void require_dimensions(std::size_t width, std::size_t height) {
    require(width > 0 && height > 0, "phantom dimensions must be positive");
    require(width <= 16384 && height <= 16384, "phantom dimensions are unreasonably large");
}

// Smooth zero-mean, unit-variance random field.
RasterD smooth_field(std::size_t w, std::size_t h, double correlation_px, std::mt19937_64& rng) {
    std::normal_distribution<double> n01;
    RasterD field(w, h);
    for (double& v : field.pixels()) v = n01(rng);
    field = gaussian_blur(field, correlation_px);
    double mean = 0.0;
    for (double v : field.pixels()) mean += v;
    mean /= static_cast<double>(field.size());
    double var = 0.0;
    for (double v : field.pixels()) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(field.size()));
    for (double& v : field.pixels()) v = sd > 0.0 ? (v - mean) / sd : 0.0;
    return field;
}

}  // namespace

const RasterD& Phantom::lifetime_for(int channel_number) const {
    require(is_channel_number(channel_number), "unknown filter channel " + std::to_string(channel_number));
    return lifetime_ns.at(channel_slot(channel_number));
}

double Phantom::yield_for(int label, int channel_number) const {
    auto it = class_yield.find(label);
    if (it == class_yield.end() || !is_channel_number(channel_number)) return 1.0;
    return it->second[channel_slot(channel_number)];
}

Mask Phantom::tissue_mask() const {
    Mask mask(width, height);
    for (std::size_t i = 0; i < labels.size(); ++i) mask[i] = labels[i] != background_label ? 1 : 0;
    return mask;
}

void Phantom::validate() const {
    require_dimensions(width, height);
    require(std::isfinite(pixel_pitch_mm) && pixel_pitch_mm > 0.0, "pixel pitch must be positive");
    require(lifetime_ns.size() == kChannelCount, "phantom needs one lifetime map per channel");
    for (const auto& map : lifetime_ns) {
        require(map.same_shape(width, height), "lifetime map dimensions differ from the phantom");
        for (double t : map.pixels()) {
            require(t > 0.0 && t <= 20.0, "phantom lifetimes must lie in (0, 20] ns");
        }
    }
    require(amplitude.same_shape(width, height), "amplitude map dimensions differ from the phantom");
    require(illumination.same_shape(width, height), "illumination map dimensions differ from the phantom");
    require(labels.same_shape(width, height), "label map dimensions differ from the phantom");
    for (double a : amplitude.pixels()) require(std::isfinite(a) && a >= 0.0, "amplitudes must be nonnegative");
    for (double v : illumination.pixels()) require(std::isfinite(v) && v >= 0.0, "illumination must be nonnegative");
}

RasterD make_illumination(std::size_t width, std::size_t height, const IlluminationModel& model) {
    RasterD out(width, height, 1.0);
    if (model.kind == IlluminationModel::Kind::Uniform) return out;
    require(std::isfinite(model.edge_ratio) && model.edge_ratio >= 1.0, "illumination edge ratio must be >= 1");
    const double cx = model.center_x * static_cast<double>(width);
    const double cy = model.center_y * static_cast<double>(height);
    const double radius = 0.5 * static_cast<double>(std::min(width, height));
    const double falloff = std::log(model.edge_ratio);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double r = std::hypot(static_cast<double>(x) + 0.5 - cx, static_cast<double>(y) + 0.5 - cy) / radius;
            out(x, y) = (model.cutoff_radius && r > *model.cutoff_radius) ? 0.0 : std::exp(-falloff * r * r);
        }
    }
    return out;
}

bool Shape::contains(std::size_t px, std::size_t py) const {
    const double x0 = static_cast<double>(px) + 0.5;
    const double y0 = static_cast<double>(py) + 0.5;
    switch (kind) {
        case Kind::Disk:
            return (x0 - cx) * (x0 - cx) + (y0 - cy) * (y0 - cy) <= radius * radius;
        case Kind::Rect:
            return x0 >= x && x0 < x + w && y0 >= y && y0 < y + h;
        case Kind::Polygon: {
            bool inside = false;
            for (std::size_t i = 0, j = points.size() - 1; i < points.size(); j = i++) {
                const auto [xi, yi] = points[i];
                const auto [xj, yj] = points[j];
                if ((yi > y0) != (yj > y0) && x0 < (xj - xi) * (y0 - yi) / (yj - yi) + xi) inside = !inside;
            }
            return inside;
        }
    }
    return false;
}

Shape Shape::disk(int label, double cx, double cy, double radius) {
    require(radius > 0.0, "disk radius must be positive");
    Shape s;
    s.kind = Kind::Disk;
    s.label = label;
    s.cx = cx;
    s.cy = cy;
    s.radius = radius;
    return s;
}

Shape Shape::rect(int label, double x, double y, double w, double h) {
    require(w > 0.0 && h > 0.0, "rectangle must have positive size");
    Shape s;
    s.kind = Kind::Rect;
    s.label = label;
    s.x = x;
    s.y = y;
    s.w = w;
    s.h = h;
    return s;
}

Shape Shape::polygon(int label, std::vector<std::pair<double, double>> points) {
    require(points.size() >= 3, "polygon needs at least three vertices");
    Shape s;
    s.kind = Kind::Polygon;
    s.label = label;
    s.points = std::move(points);
    return s;
}

Phantom make_usaf_phantom(const BarTargetSpec& spec) {
    require_dimensions(spec.width, spec.height);
    require(spec.groups >= 1 && spec.groups <= 12, "bar target needs 1..12 groups");
    require(spec.lifetime_ns > 0.0 && spec.lifetime_ns <= 20.0, "bar lifetime must lie in (0, 20] ns");
    require(spec.amplitude >= 0.0, "bar amplitude must be nonnegative");
    const double pitch_mm = default_pitch(spec.width, spec.pixel_pitch_mm);
    const double pitch_um = pitch_mm * 1000.0;
    if (!(spec.finest_spacing_um > pitch_um)) {
        fail(ErrorCode::InvalidArgument, "finest bar spacing is below the Nyquist limit of the pixel grid");
    }

    Phantom p;
    p.id = spec.id;
    p.width = spec.width;
    p.height = spec.height;
    p.pixel_pitch_mm = pitch_mm;
    p.amplitude = RasterD(spec.width, spec.height, 0.0);
    p.labels = RasterU8(spec.width, spec.height, 0);
    p.illumination = make_illumination(spec.width, spec.height, spec.illumination);
    p.lifetime_ns.assign(kChannelCount, RasterD(spec.width, spec.height, spec.lifetime_ns));
    p.class_names = {{0, "substrate"}, {1, "bars"}};

    // Coarsest group first, halving the spacing down to the finest.
    std::vector<BarGroup> groups;
    std::size_t total = 0;
    for (int g = 0; g < spec.groups; ++g) {
        BarGroup group;
        group.spacing_um = spec.finest_spacing_um * std::ldexp(1.0, spec.groups - 1 - g);
        group.bar_width_px = static_cast<std::size_t>(std::ceil(group.spacing_um / pitch_um - 1e-9));
        group.length_px = std::max<std::size_t>(5 * group.bar_width_px, 12);
        groups.push_back(group);
        total += group.extent_px();
    }
    const std::size_t gap = std::max<std::size_t>(groups.front().bar_width_px * 2, 16);
    total += gap * (groups.size() - 1);
    const std::size_t tallest = groups.front().length_px;
    require(total + 2 * gap <= spec.width && tallest + 2 <= spec.height, "bar target does not fit the phantom");

    std::size_t x = (spec.width - total) / 2;
    for (auto& group : groups) {
        group.x = x;
        group.y = (spec.height - group.length_px) / 2;
        for (int bar = 0; bar < 3; ++bar) {
            const std::size_t x0 = group.x + static_cast<std::size_t>(2 * bar) * group.bar_width_px;
            for (std::size_t yy = group.y; yy < group.y + group.length_px; ++yy) {
                for (std::size_t xx = x0; xx < x0 + group.bar_width_px; ++xx) {
                    p.amplitude(xx, yy) = spec.amplitude;
                    p.labels(xx, yy) = 1;
                }
            }
        }
        x += group.extent_px() + gap;
    }
    p.bar_groups = std::move(groups);
    p.background_label = 0;
    p.cancer_label = -1;
    return p;
}

TissueSpec default_tissue_spec(std::size_t width, std::size_t height) {
    TissueSpec spec;
    spec.id = "tissue-default";
    spec.width = width;
    spec.height = height;
    spec.background_label = 0;
    spec.base_label = 2;
    spec.cancer_label = 3;
    spec.seed = 20210601;

    std::array<double, kChannelCount> fibrous{};
    for (std::size_t s = 0; s < kChannelCount; ++s) fibrous[s] = 1.8 + 0.1 * static_cast<double>(s);
    // Cancer departs from fibrous tissue in the separating channels only;
    // cartilage departs everywhere, by less in the separating channels.
    constexpr std::array<double, kChannelCount> cancer_delta{0.0, 0.45, 0.0, 0.0, 0.0, 0.5, 0.55, 0.5, 0.6};
    constexpr std::array<double, kChannelCount> cartilage_delta{0.6, 0.25, 0.6, 0.6, 0.6, 0.3, 0.3, 0.3, 0.35};

    ClassSpec cork{0, "corkboard", {}, 3000.0};
    cork.lifetime_ns.fill(1.0);
    cork.lifetime_jitter_ns = 0.03;
    cork.amplitude_texture = 0.2;
    ClassSpec cartilage{1, "cartilage", {}, 8000.0};
    ClassSpec fib{2, "fibrous", fibrous, 6000.0};
    ClassSpec cancer{3, "cancer", {}, 5000.0};
    for (std::size_t s = 0; s < kChannelCount; ++s) {
        cartilage.lifetime_ns[s] = fibrous[s] + cartilage_delta[s];
        cancer.lifetime_ns[s] = fibrous[s] + cancer_delta[s];
    }
    for (ClassSpec* c : {&cartilage, &fib, &cancer}) {
        c->lifetime_jitter_ns = 0.03;
        c->amplitude_texture = 0.25;
        c->yield[0] = 2.5;
    }
    spec.classes = {cork, cartilage, fib, cancer};

    const double sx = static_cast<double>(width) / 512.0;
    const double sy = static_cast<double>(height) / 512.0;
    auto scaled = [&](std::vector<std::pair<double, double>> pts) {
        for (auto& [x, y] : pts) {
            x *= sx;
            y *= sy;
        }
        return pts;
    };
    spec.specimen = Shape::polygon(2, scaled({{70, 120}, {200, 50}, {360, 60}, {460, 150}, {470, 300},
                                              {400, 440}, {250, 470}, {110, 420}, {50, 280}}));
    spec.regions = {
        Shape::polygon(1, scaled({{80, 290}, {260, 320}, {270, 390}, {90, 380}})),
        Shape::polygon(3, scaled({{280, 120}, {430, 200}, {300, 300}})),
        Shape::disk(3, 200 * sx, 180 * sy, 40 * std::min(sx, sy)),
    };
    return spec;
}

Phantom make_tissue_phantom(const TissueSpec& spec) {
    require_dimensions(spec.width, spec.height);
    require(!spec.classes.empty(), "tissue phantom needs a class table");
    std::map<int, const ClassSpec*> table;
    for (const auto& c : spec.classes) {
        require(c.label >= 0 && c.label <= 255, "class labels must fit in 0..255");
        require(table.emplace(c.label, &c).second, "duplicate class label " + std::to_string(c.label));
        for (double t : c.lifetime_ns) require(t > 0.0 && t <= 20.0, "class lifetimes must lie in (0, 20] ns");
        require(c.amplitude >= 0.0, "class amplitude must be nonnegative");
        require(c.lifetime_jitter_ns >= 0.0 && c.amplitude_texture >= 0.0, "texture parameters must be nonnegative");
    }
    auto known = [&](int label) {
        if (!table.count(label)) fail(ErrorCode::InvalidArgument, "label " + std::to_string(label) + " has no class entry");
    };
    known(spec.background_label);
    known(spec.base_label);
    for (const auto& r : spec.regions) known(r.label);

    const std::size_t w = spec.width;
    const std::size_t h = spec.height;
    Phantom p;
    p.id = spec.id;
    p.width = w;
    p.height = h;
    p.pixel_pitch_mm = default_pitch(w, spec.pixel_pitch_mm);
    p.background_label = spec.background_label;
    p.cancer_label = spec.cancer_label;
    p.labels = RasterU8(w, h, static_cast<std::uint8_t>(spec.background_label));
    for (const auto& c : spec.classes) {
        p.class_names[c.label] = c.name;
        p.class_yield[c.label] = c.yield;
    }

    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            if (!spec.specimen || spec.specimen->contains(x, y)) {
                p.labels(x, y) = static_cast<std::uint8_t>(spec.base_label);
            }
        }
    }
    // Cancer and benign regions may not claim the same pixel.
    std::vector<int> claimed(w * h, -1);
    for (const auto& region : spec.regions) {
        const bool is_cancer = region.label == spec.cancer_label;
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                if (!region.contains(x, y)) continue;
                if (spec.specimen && !spec.specimen->contains(x, y)) continue;
                int& owner = claimed[y * w + x];
                if (owner >= 0 && (owner == spec.cancer_label) != is_cancer) {
                    fail(ErrorCode::InvalidArgument, "cancer and benign regions overlap");
                }
                owner = region.label;
                p.labels(x, y) = static_cast<std::uint8_t>(region.label);
            }
        }
    }

    std::mt19937_64 rng(spec.seed);
    const RasterD texture = smooth_field(w, h, 8.0, rng);
    std::normal_distribution<double> n01;
    p.amplitude = RasterD(w, h);
    for (std::size_t i = 0; i < p.amplitude.size(); ++i) {
        const ClassSpec& c = *table.at(p.labels[i]);
        p.amplitude[i] = std::max(0.0, c.amplitude * (1.0 + c.amplitude_texture * texture[i]));
    }
    p.lifetime_ns.assign(kChannelCount, RasterD(w, h));
    for (std::size_t s = 0; s < kChannelCount; ++s) {
        RasterD& map = p.lifetime_ns[s];
        for (std::size_t i = 0; i < map.size(); ++i) {
            const ClassSpec& c = *table.at(p.labels[i]);
            const double jitter = n01(rng);
            const double tau = c.lifetime_ns[s] + c.lifetime_jitter_ns * jitter;
            map[i] = std::clamp(tau, 0.01, 20.0);
        }
    }
    p.illumination = make_illumination(w, h, spec.illumination);
    return p;
}

std::pair<double, double> drop_center(const DyeDropSpec& spec, int k) {
    const double col = static_cast<double>(k % 3);
    const double row = static_cast<double>(k / 3);
    return {static_cast<double>(spec.width) * (1.0 + 2.0 * col) / 6.0,
            static_cast<double>(spec.height) * (row == 0.0 ? 0.3 : 0.7)};
}

Phantom make_dye_drop_phantom(const DyeDropSpec& spec) {
    require_dimensions(spec.width, spec.height);
    require(spec.base_amplitude > 0.0 && spec.concentration_ratio > 0.0, "dye amplitudes must be positive");
    require(spec.drop_radius_px >= 30.0, "dye drops must be large enough to hold a 50x50 ROI");
    for (double t : spec.lifetimes_ns) require(t > 0.0 && t <= 20.0, "dye lifetimes must lie in (0, 20] ns");

    Phantom p;
    p.id = spec.id;
    p.width = spec.width;
    p.height = spec.height;
    p.pixel_pitch_mm = default_pitch(spec.width, spec.pixel_pitch_mm);
    p.background_label = 0;
    p.cancer_label = -1;
    p.amplitude = RasterD(spec.width, spec.height, 0.0);
    p.labels = RasterU8(spec.width, spec.height, 0);
    RasterD lifetime(spec.width, spec.height, spec.lifetimes_ns[0]);
    p.class_names[0] = "slide";

    const double r = spec.drop_radius_px;
    for (int k = 0; k < 6; ++k) {
        const auto [cx, cy] = drop_center(spec, k);
        const double concentration = k < 3 ? 1.0 : spec.concentration_ratio;
        const double tau = spec.lifetimes_ns[static_cast<std::size_t>(k % 3)];
        p.class_names[k + 1] = "dye" + std::to_string(k % 3 + 1) + (k < 3 ? "-low" : "-high");
        for (std::size_t y = 0; y < spec.height; ++y) {
            for (std::size_t x = 0; x < spec.width; ++x) {
                const double dx = static_cast<double>(x) + 0.5 - cx;
                const double dy = static_cast<double>(y) + 0.5 - cy;
                const double rr = (dx * dx + dy * dy) / (r * r);
                if (rr >= 1.0) continue;
                // Dome-shaped drop: thickness falls toward the rim.
                p.amplitude(x, y) = spec.base_amplitude * concentration * std::sqrt(1.0 - rr);
                p.labels(x, y) = static_cast<std::uint8_t>(k + 1);
                lifetime(x, y) = tau;
            }
        }
    }
    p.lifetime_ns.assign(kChannelCount, lifetime);
    p.illumination = make_illumination(spec.width, spec.height, spec.illumination);
    return p;
}

std::vector<PixelRect> dye_drop_rois(const DyeDropSpec& spec, std::size_t roi_size) {
    std::vector<PixelRect> out;
    for (int k = 0; k < 6; ++k) {
        const auto [cx, cy] = drop_center(spec, k);
        out.push_back(PixelRect{static_cast<std::size_t>(std::lround(cx - 0.5 * static_cast<double>(roi_size))),
                                static_cast<std::size_t>(std::lround(cy - 0.5 * static_cast<double>(roi_size))),
                                roi_size, roi_size});
    }
    return out;
}

}  // namespace doci
