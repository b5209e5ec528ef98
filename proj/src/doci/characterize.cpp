#include "doci/characterize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

#include "doci/camera_sim.hpp"

namespace doci {

CalibrationFit fit_line(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), "fit needs matching x and y");
    require(x.size() >= 2, "fit needs at least two points");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(std::isfinite(x[i]) && std::isfinite(y[i]), "fit inputs must be finite");
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0.0, "fit needs at least two distinct x values");
    CalibrationFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        sse += r * r;
    }
    f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    f.inv_slope = f.slope != 0.0 ? 1.0 / f.slope : std::numeric_limits<double>::infinity();
    return f;
}

std::vector<double> default_calibration_lifetimes() {
    std::vector<double> t;
    for (int i = 1; i <= 60; ++i) t.push_back(0.1 * i);
    return t;
}

CalibrationFit linearity_fit(const PumpPulse& pulse, double gate_width_ns, std::span<const double> lifetimes_ns,
                             const ModelOptions& options) {
    require(lifetimes_ns.size() >= 5, "linearity fit needs at least five lifetimes");
    const GateConfig gate = GateConfig::standard(pulse, gate_width_ns);
    std::vector<double> d;
    d.reserve(lifetimes_ns.size());
    for (double tau : lifetimes_ns) d.push_back(doci_value(pulse, Fluorophore{1.0, tau}, gate, options));
    return fit_line(lifetimes_ns, d);
}

FallTauFit fit_fall_tau(const PumpPulse& pulse, double gate_width_ns, std::span<const double> lifetimes_ns,
                        double target_inv_slope, double tolerance, double lo_ns, double hi_ns) {
    require(std::isfinite(target_inv_slope) && target_inv_slope > 0.0, "target 1/k must be positive");
    require(lo_ns > 0.0 && hi_ns > lo_ns, "bad fall-constant bracket");
    auto eval = [&](double tau0) {
        PumpPulse p = pulse;
        p.fall_tau_ns = tau0;
        return linearity_fit(p, gate_width_ns, lifetimes_ns);
    };
    // 1/k grows with the fall constant.
    CalibrationFit flo = eval(lo_ns);
    CalibrationFit fhi = eval(hi_ns);
    if (!(flo.inv_slope <= target_inv_slope && target_inv_slope <= fhi.inv_slope)) {
        fail(ErrorCode::InvalidArgument, "target 1/k is outside the reachable range for this gate width");
    }
    FallTauFit out;
    double lo = lo_ns, hi = hi_ns;
    for (out.iterations = 1; out.iterations <= 100; ++out.iterations) {
        const double mid = 0.5 * (lo + hi);
        const CalibrationFit f = eval(mid);
        out.fall_tau_ns = mid;
        out.fit = f;
        if (std::fabs(f.inv_slope - target_inv_slope) <= tolerance) break;
        (f.inv_slope < target_inv_slope ? lo : hi) = mid;
    }
    return out;
}

double temporal_resolution(double avg_std, double flim_doci_ratio) {
    require(std::isfinite(avg_std) && avg_std > 0.0, "average standard deviation must be positive");
    require(std::isfinite(flim_doci_ratio) && flim_doci_ratio > 0.0, "FLIM/DOCI ratio must be positive");
    return avg_std * flim_doci_ratio;
}

std::string format_ns(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", value);
    return buf;
}

double measure_stack_std(const DociMap& map, const std::vector<PixelRect>& rois) {
    require(!rois.empty(), "no regions of interest");
    double sum = 0.0;
    for (const auto& r : rois) sum += roi_stats(map, r).std;
    return sum / static_cast<double>(rois.size());
}

RasterD absolute_lifetime(const DociMap& map, const CalibrationFit& fit) {
    require(std::isfinite(fit.slope) && fit.slope != 0.0, "calibration slope must be nonzero");
    RasterD out(map.values.width(), map.values.height(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (map.valid[i]) out[i] = (map.values[i] - fit.intercept) / fit.slope;
    }
    return out;
}

namespace {

double michelson(double hi, double lo) {
    return hi + lo > 0.0 ? (hi - lo) / (hi + lo) : 0.0;
}

// Column profile across a group, averaged over the inner rows of the bars.
std::vector<double> column_profile(const BarGroup& g, const std::function<double(std::size_t, std::size_t)>& at) {
    const std::size_t trim = std::min(g.bar_width_px, g.length_px / 4);
    std::vector<double> prof(g.extent_px(), 0.0);
    std::size_t rows = 0;
    for (std::size_t y = g.y + trim; y < g.y + g.length_px - trim; ++y, ++rows) {
        for (std::size_t k = 0; k < prof.size(); ++k) prof[k] += at(g.x + k, y);
    }
    for (double& v : prof) v /= static_cast<double>(std::max<std::size_t>(rows, 1));
    return prof;
}

double bar_contrast(const BarGroup& g, const std::vector<double>& prof) {
    const std::size_t w = g.bar_width_px;
    double hi = -INFINITY, lo = INFINITY;
    for (std::size_t k = 0; k < prof.size(); ++k) {
        const bool gap = (k / w) % 2 == 1;
        if (gap) lo = std::min(lo, prof[k]);
        else hi = std::max(hi, prof[k]);
    }
    return michelson(hi, lo);
}

}  // namespace

ResolutionReport spatial_resolution(const FrameTriplet& triplet, const DociMap& map, const Phantom& phantom,
                                    double criterion) {
    require(criterion > 0.0 && criterion < 1.0, "contrast criterion must lie in (0, 1)");
    require(!phantom.bar_groups.empty(), "phantom is not a bar target");
    triplet.validate();
    require(triplet.reference.same_shape(phantom.width, phantom.height), "frames do not match the phantom");
    require_same_shape(map.values, triplet.reference, "DOCI map vs frames");

    ResolutionReport rep;
    rep.criterion = criterion;
    double dmin = INFINITY, dmax = -INFINITY, dsum = 0.0;
    std::size_t dn = 0;
    for (const BarGroup& g : phantom.bar_groups) {
        GroupContrast c;
        c.spacing_um = g.spacing_um;
        c.bar_width_px = g.bar_width_px;
        c.intensity_contrast = bar_contrast(g, column_profile(g, [&](std::size_t x, std::size_t y) {
                                                return triplet.reference(x, y) - triplet.background(x, y);
                                            }));
        c.doci_contrast = bar_contrast(g, column_profile(g, [&](std::size_t x, std::size_t y) {
                                           return map.valid(x, y) ? map.values(x, y) : 0.0;
                                       }));
        c.resolved = c.intensity_contrast >= criterion;
        if (c.resolved) {
            if (!rep.finest_resolved_spacing_um || g.spacing_um < *rep.finest_resolved_spacing_um) {
                rep.finest_resolved_spacing_um = g.spacing_um;
            }
            for (std::size_t y = g.y; y < g.y + g.length_px; ++y) {
                for (std::size_t x = g.x; x < g.x + g.extent_px(); ++x) {
                    if (phantom.labels(x, y) == 0 || !map.valid(x, y)) continue;
                    dmin = std::min(dmin, map.values(x, y));
                    dmax = std::max(dmax, map.values(x, y));
                    dsum += map.values(x, y);
                    ++dn;
                }
            }
        }
        rep.groups.push_back(c);
    }
    if (dn > 0) {
        rep.doci_spread = dmax - dmin;
        rep.doci_mean = dsum / static_cast<double>(dn);
    }
    return rep;
}

std::string ResolutionReport::summary() const {
    if (!finest_resolved_spacing_um) return "unresolved at coarsest spacing";
    char buf[96];
    std::snprintf(buf, sizeof buf, "finest resolved spacing %.0f um", *finest_resolved_spacing_um);
    return buf;
}

NoiseCalibration calibrate_read_noise(const Phantom& phantom, const AcquisitionConfig& config, int channel_number,
                                      const std::vector<PixelRect>& rois, double target_std,
                                      double relative_tolerance) {
    require(std::isfinite(target_std) && target_std > 0.0, "target standard deviation must be positive");
    config.validate();
    const FilterChannel& ch = config.channel(channel_number);
    const FrameTriplet expected = expected_triplet(phantom, ch, config);
    const std::uint64_t stream = channel_stream_seed(config.seed, channel_number);

    auto measure = [&](double sigma) {
        NoiseConfig noise = config.noise;
        noise.read_noise_sigma = sigma;
        const FrameTriplet t = sample_triplet(expected, noise, stream);
        return measure_stack_std(compute_doci(t, channel_number), rois);
    };

    NoiseCalibration out;
    const double base = measure(0.0);
    if (base >= target_std) {
        fail(ErrorCode::InvalidArgument, "shot noise alone already exceeds the target standard deviation");
    }
    double lo = 0.0, hi = 1.0;
    while (measure(hi) < target_std) {
        lo = hi;
        hi *= 2.0;
        require(hi < 1e12, "read noise needed for the target is unreasonably large");
    }
    for (out.iterations = 1; out.iterations <= 200; ++out.iterations) {
        const double mid = 0.5 * (lo + hi);
        const double s = measure(mid);
        out.read_noise_sigma = mid;
        out.achieved_std = s;
        if (std::fabs(s - target_std) <= relative_tolerance * target_std) break;
        (s < target_std ? lo : hi) = mid;
    }
    return out;
}

}  // namespace doci
