#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace doci {

/// Single-exponential emitter: f(t) = amplitude * exp(-t / lifetime).
struct Fluorophore {
    double amplitude = 1.0;
    double lifetime_ns = 1.0;

    void validate() const;
};

/// Square excitation pulse whose trailing edge falls off exponentially.
struct PumpPulse {
    double peak_intensity = 1.0;
    /// Instant the plateau starts to fall; defaults to the nominal pulse width.
    double fall_start_ns = 80.0;
    double fall_tau_ns = 1.0;
    double pulse_width_ns = 80.0;
    double rep_rate_hz = 5e5;

    void validate() const;
    double period_ns() const { return 1e9 / rep_rate_hz; }
};

/// Three equal-width integration windows: reference (plateau), decay
/// (after the fall instant) and background (after everything has died out).
struct GateConfig {
    double width_ns = 20.0;
    double reference_start_ns = 60.0;
    double decay_start_ns = 80.0;
    double background_start_ns = 290.0;

    /// Reference window [t0 - T, t0], decay window at t0, background window at
    /// t0 + 10 * (fall_tau + max_lifetime).
    static GateConfig standard(const PumpPulse& pulse, double width_ns, double max_lifetime_ns = 20.0);

    void validate(const PumpPulse& pulse) const;
    double reference_end_ns() const { return reference_start_ns + width_ns; }
    double decay_end_ns() const { return decay_start_ns + width_ns; }
    double background_end_ns() const { return background_start_ns + width_ns; }
};

/// phi(t) sampled on a uniform grid starting at t = 0.
struct EmissionCurve {
    double dt_ns = 0.0;
    std::vector<double> phi;

    double t_at(std::size_t i) const { return static_cast<double>(i) * dt_ns; }
    double end_ns() const { return phi.empty() ? 0.0 : t_at(phi.size() - 1); }
};

struct SampleGrid {
    double dt_ns = 0.01;
    double end_ns = 0.0;
};

enum class EmissionMethod {
    /// Piecewise analytic solution of the convolution.
    ClosedForm,
    /// Numerical convolution on the grid plus trapezoidal gating.
    Quadrature,
};

struct ModelOptions {
    EmissionMethod method = EmissionMethod::ClosedForm;
    double dt_ns = 0.01;
    /// Constant common-mode light per ns, present in all three gates.
    double ambient_per_ns = 0.0;
    /// Denominator floor relative to peak_intensity * lifetime * width.
    double denominator_epsilon = 1e-12;
};

struct GatedSignals {
    double reference = 0.0;
    double decay = 0.0;
    double background = 0.0;
};

double pump_intensity(const PumpPulse& pulse, double t_ns);

/// Closed-form phi(t) of the pump convolved with the emitter response.
double emission_at(const PumpPulse& pulse, const Fluorophore& f, double t_ns);

/// Analytic integral of phi over [start, start + width].
double emission_integral(const PumpPulse& pulse, const Fluorophore& f, double start_ns, double width_ns);

EmissionCurve emission_response(const PumpPulse& pulse, const Fluorophore& f, const SampleGrid& grid,
                                EmissionMethod method = EmissionMethod::ClosedForm);

/// Grid covering every window of `gate`; rejects gates the grid cannot hold.
EmissionCurve emission_response(const PumpPulse& pulse, const Fluorophore& f, const GateConfig& gate,
                                double dt_ns, EmissionMethod method = EmissionMethod::ClosedForm);

/// Trapezoidal integral of the sampled curve; window ends are linearly interpolated.
double gated_integral(const EmissionCurve& curve, double start_ns, double width_ns);

GatedSignals gated_signals(const PumpPulse& pulse, const Fluorophore& f, const GateConfig& gate,
                           const ModelOptions& options = {});

/// (decay - background) / (reference - background).
double doci_value(const PumpPulse& pulse, const Fluorophore& f, const GateConfig& gate,
                  const ModelOptions& options = {});

struct DociSurface {
    std::vector<double> lifetimes_ns;
    std::vector<double> widths_ns;
    /// Row i = lifetime i, column j = gate width j.
    std::vector<double> values;

    double at(std::size_t i, std::size_t j) const { return values[i * widths_ns.size() + j]; }
};

DociSurface doci_surface(const PumpPulse& pulse, std::span<const double> lifetimes_ns,
                         std::span<const double> widths_ns, const ModelOptions& options = {});

}  // namespace doci
