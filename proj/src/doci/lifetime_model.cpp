#include "doci/lifetime_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "doci/error.hpp"

namespace doci {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

// Integral of (1 - exp(-t / tau)) over [a, b], 0 <= a <= b.
double rise_integral(double tau, double a, double b) {
    double w = b - a;
    return tau * w + tau * tau * std::exp(-a / tau) * std::expm1(-w / tau);
}

// exp(-x u) - exp(-x v), divided by x: integral of exp(-x s) over [u, v].
double exp_window(double x, double u, double v) {
    return -std::exp(-x * u) * std::expm1(-x * (v - u)) / x;
}

// Integral of s^n exp(-x s) over [u, v] for n in {1, 3, 5}.
double moment(int n, double x, double u, double v) {
    auto partial = [&](double s) {
        // sum_k n!/k! s^k / x^(n-k+1)
        double sum = 0.0;
        double coeff = 1.0;  // n!/k!, built from k = n downward
        for (int k = n; k >= 0; --k) {
            sum += coeff * std::pow(s, k) / std::pow(x, n - k + 1);
            coeff *= k;
        }
        return sum;
    };
    return std::exp(-x * u) * partial(u) - std::exp(-x * v) * partial(v);
}

// Integral over [u, v] of g(s) = (exp(-a s) - exp(-b s)) / (b - a), the
// response of the emitter (rate a) to an exponentially falling pump (rate b).
// Near a == b the divided difference is expanded about the midpoint rate.
double fall_mix_integral(double a, double b, double u, double v) {
    double h = b - a;
    double m = 0.5 * (a + b);
    if (std::abs(h) <= 1e-3 * m) {
        return moment(1, m, u, v) + moment(3, m, u, v) * h * h / 24.0 +
               moment(5, m, u, v) * h * h * h * h / 1920.0;
    }
    return (exp_window(a, u, v) - exp_window(b, u, v)) / h;
}

}  // namespace

void Fluorophore::validate() const {
    require(positive_finite(lifetime_ns), "fluorophore lifetime must be positive");
    require(std::isfinite(amplitude) && amplitude >= 0.0, "fluorophore amplitude must be nonnegative");
}

void PumpPulse::validate() const {
    require(positive_finite(peak_intensity), "pump peak intensity must be positive");
    require(positive_finite(fall_start_ns), "pump fall start must be positive");
    require(positive_finite(fall_tau_ns), "pump fall constant must be positive");
    require(positive_finite(pulse_width_ns), "pump pulse width must be positive");
    require(positive_finite(rep_rate_hz), "pump repetition rate must be positive");
}

GateConfig GateConfig::standard(const PumpPulse& pulse, double width_ns, double max_lifetime_ns) {
    GateConfig gate;
    gate.width_ns = width_ns;
    gate.reference_start_ns = pulse.fall_start_ns - width_ns;
    gate.decay_start_ns = pulse.fall_start_ns;
    gate.background_start_ns = pulse.fall_start_ns + 10.0 * (pulse.fall_tau_ns + max_lifetime_ns);
    return gate;
}

void GateConfig::validate(const PumpPulse& pulse) const {
    require(positive_finite(width_ns), "gate width must be positive");
    require(std::isfinite(reference_start_ns) && reference_start_ns >= 0.0,
            "reference gate must start at or after the pulse onset");
    require(reference_end_ns() <= pulse.fall_start_ns + 1e-9,
            "reference gate must end at or before the pump fall instant");
    require(std::isfinite(decay_start_ns) && decay_start_ns >= pulse.fall_start_ns - 1e-9,
            "decay gate must start at or after the pump fall instant");
    require(std::isfinite(background_start_ns) && background_start_ns >= decay_end_ns() - 1e-9,
            "background gate must follow the decay gate");
    require(background_end_ns() <= pulse.period_ns(), "background gate extends past the pulse period");
}

double pump_intensity(const PumpPulse& pulse, double t_ns) {
    if (t_ns < 0.0) return 0.0;
    if (t_ns < pulse.fall_start_ns) return pulse.peak_intensity;
    return pulse.peak_intensity * std::exp(-(t_ns - pulse.fall_start_ns) / pulse.fall_tau_ns);
}

double emission_at(const PumpPulse& pulse, const Fluorophore& f, double t_ns) {
    if (t_ns <= 0.0) return 0.0;
    const double c = pulse.peak_intensity * f.amplitude;
    const double tau = f.lifetime_ns;
    const double t0 = pulse.fall_start_ns;
    if (t_ns <= t0) {
        return -c * tau * std::expm1(-t_ns / tau);
    }
    const double s = t_ns - t0;
    const double at_fall = -c * tau * std::expm1(-t0 / tau);
    const double a = 1.0 / tau;
    const double h = 1.0 / pulse.fall_tau_ns - a;
    const double mix = (h == 0.0) ? s * std::exp(-a * s) : -std::exp(-a * s) * std::expm1(-h * s) / h;
    return at_fall * std::exp(-a * s) + c * mix;
}

double emission_integral(const PumpPulse& pulse, const Fluorophore& f, double start_ns, double width_ns) {
    double lo = std::max(start_ns, 0.0);
    double hi = start_ns + width_ns;
    if (hi <= lo) return 0.0;

    const double c = pulse.peak_intensity * f.amplitude;
    const double tau = f.lifetime_ns;
    const double t0 = pulse.fall_start_ns;
    double total = 0.0;

    if (lo < t0) {
        total += c * rise_integral(tau, lo, std::min(hi, t0));
    }
    if (hi > t0) {
        const double u = std::max(lo, t0) - t0;
        const double v = hi - t0;
        const double at_fall = -c * tau * std::expm1(-t0 / tau);
        total += at_fall * exp_window(1.0 / tau, u, v);
        total += c * fall_mix_integral(1.0 / tau, 1.0 / pulse.fall_tau_ns, u, v);
    }
    return total;
}

EmissionCurve emission_response(const PumpPulse& pulse, const Fluorophore& f, const SampleGrid& grid,
                                EmissionMethod method) {
    pulse.validate();
    f.validate();
    require(positive_finite(grid.dt_ns), "sample grid step must be positive");
    require(std::isfinite(grid.end_ns) && grid.end_ns > 0.0, "sample grid must cover a positive span");

    const auto steps = static_cast<std::size_t>(std::ceil(grid.end_ns / grid.dt_ns - 1e-9));
    EmissionCurve curve;
    curve.dt_ns = grid.dt_ns;
    curve.phi.resize(steps + 1);

    if (method == EmissionMethod::ClosedForm) {
        for (std::size_t i = 0; i <= steps; ++i) {
            curve.phi[i] = emission_at(pulse, f, curve.t_at(i));
        }
        return curve;
    }

    // First-order-hold exponential integrator: the pump is linear between
    // samples and the kernel exp(-(t - t') / tau) is integrated exactly.
    const double tau = f.lifetime_ns;
    const double h = grid.dt_ns;
    const double decay = std::exp(-h / tau);
    const double w0 = -tau * std::expm1(-h / tau);
    const double w1 = (tau * h + tau * tau * std::expm1(-h / tau)) / h;
    double pump_prev = pump_intensity(pulse, 0.0);
    curve.phi[0] = 0.0;
    for (std::size_t i = 1; i <= steps; ++i) {
        const double pump_next = pump_intensity(pulse, curve.t_at(i));
        const double drive = pump_prev * w0 + (pump_next - pump_prev) * w1;
        curve.phi[i] = std::max(0.0, curve.phi[i - 1] * decay + f.amplitude * drive);
        pump_prev = pump_next;
    }
    return curve;
}

EmissionCurve emission_response(const PumpPulse& pulse, const Fluorophore& f, const GateConfig& gate,
                                double dt_ns, EmissionMethod method) {
    gate.validate(pulse);
    SampleGrid grid{dt_ns, std::max({gate.reference_end_ns(), gate.decay_end_ns(), gate.background_end_ns()})};
    return emission_response(pulse, f, grid, method);
}

double gated_integral(const EmissionCurve& curve, double start_ns, double width_ns) {
    require(positive_finite(width_ns), "gate width must be positive");
    require(curve.phi.size() >= 2, "emission curve needs at least two samples");
    const double dt = curve.dt_ns;
    const double a = start_ns;
    const double b = start_ns + width_ns;
    const double slack = 1e-9 * dt;
    if (!(a >= -slack && b <= curve.end_ns() + slack)) {
        fail(ErrorCode::InvalidArgument, "gate window lies outside the emission curve domain");
    }

    const std::size_t last = curve.phi.size() - 1;
    auto snap = [&](double t) {
        double k = t / dt;
        double r = std::round(k);
        return std::abs(k - r) < 1e-9 ? r : k;
    };
    auto value_at = [&](double k) {
        k = std::clamp(k, 0.0, static_cast<double>(last));
        auto i = static_cast<std::size_t>(std::floor(k));
        if (i >= last) return curve.phi[last];
        double frac = k - static_cast<double>(i);
        return curve.phi[i] + frac * (curve.phi[i + 1] - curve.phi[i]);
    };

    const double ka = std::clamp(snap(a), 0.0, static_cast<double>(last));
    const double kb = std::clamp(snap(b), 0.0, static_cast<double>(last));
    const double first = std::ceil(ka);
    const double final = std::floor(kb);
    if (first > final) {
        return 0.5 * (value_at(ka) + value_at(kb)) * (kb - ka) * dt;
    }

    const auto i0 = static_cast<std::size_t>(first);
    const auto i1 = static_cast<std::size_t>(final);
    double sum = 0.5 * (value_at(ka) + curve.phi[i0]) * (first - ka) * dt;
    for (std::size_t i = i0; i < i1; ++i) {
        sum += 0.5 * (curve.phi[i] + curve.phi[i + 1]) * dt;
    }
    sum += 0.5 * (curve.phi[i1] + value_at(kb)) * (kb - final) * dt;
    return sum;
}

GatedSignals gated_signals(const PumpPulse& pulse, const Fluorophore& f, const GateConfig& gate,
                           const ModelOptions& options) {
    pulse.validate();
    f.validate();
    gate.validate(pulse);
    require(std::isfinite(options.ambient_per_ns) && options.ambient_per_ns >= 0.0,
            "ambient level must be nonnegative");

    GatedSignals out;
    if (options.method == EmissionMethod::ClosedForm) {
        out.reference = emission_integral(pulse, f, gate.reference_start_ns, gate.width_ns);
        out.decay = emission_integral(pulse, f, gate.decay_start_ns, gate.width_ns);
        out.background = emission_integral(pulse, f, gate.background_start_ns, gate.width_ns);
    } else {
        EmissionCurve curve = emission_response(pulse, f, gate, options.dt_ns, EmissionMethod::Quadrature);
        out.reference = gated_integral(curve, gate.reference_start_ns, gate.width_ns);
        out.decay = gated_integral(curve, gate.decay_start_ns, gate.width_ns);
        out.background = gated_integral(curve, gate.background_start_ns, gate.width_ns);
    }
    const double ambient = options.ambient_per_ns * gate.width_ns;
    out.reference += ambient;
    out.decay += ambient;
    out.background += ambient;
    return out;
}

double doci_value(const PumpPulse& pulse, const Fluorophore& f, const GateConfig& gate,
                  const ModelOptions& options) {
    GatedSignals m = gated_signals(pulse, f, gate, options);
    const double denominator = m.reference - m.background;
    const double scale = pulse.peak_intensity * f.lifetime_ns * gate.width_ns;
    if (!(denominator > options.denominator_epsilon * scale)) {
        fail(ErrorCode::DenominatorTooSmall, "reference minus background is below the denominator floor");
    }
    return (m.decay - m.background) / denominator;
}

DociSurface doci_surface(const PumpPulse& pulse, std::span<const double> lifetimes_ns,
                         std::span<const double> widths_ns, const ModelOptions& options) {
    require(!lifetimes_ns.empty() && !widths_ns.empty(), "surface needs at least one lifetime and one width");
    for (double t : lifetimes_ns) require(positive_finite(t), "surface lifetimes must be positive");
    for (double w : widths_ns) require(positive_finite(w), "surface gate widths must be positive");

    DociSurface surface;
    surface.lifetimes_ns.assign(lifetimes_ns.begin(), lifetimes_ns.end());
    surface.widths_ns.assign(widths_ns.begin(), widths_ns.end());
    surface.values.resize(lifetimes_ns.size() * widths_ns.size());
    const double max_lifetime = std::max(20.0, *std::max_element(lifetimes_ns.begin(), lifetimes_ns.end()));
    for (std::size_t j = 0; j < widths_ns.size(); ++j) {
        GateConfig gate = GateConfig::standard(pulse, widths_ns[j], max_lifetime);
        for (std::size_t i = 0; i < lifetimes_ns.size(); ++i) {
            Fluorophore f{1.0, lifetimes_ns[i]};
            surface.values[i * widths_ns.size() + j] = doci_value(pulse, f, gate, options);
        }
    }
    return surface;
}

}  // namespace doci
