#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "../common/oracles.hpp"
#include "doci/error.hpp"
#include "doci/lifetime_model.hpp"

using namespace doci;

namespace {

PumpPulse pulse(double tau0 = 1.0) {
    PumpPulse p;
    p.fall_tau_ns = tau0;
    return p;
}

// Frozen from oracle::gates(tau = 2, tau0 = 1, T = 20) at dt = 0.001 ns.
constexpr double kTau2Doci = 0.149990920116921;

}  // namespace

TEST(Pump, PlateauFallAndBeforeStart) {
    const PumpPulse p = pulse();
    EXPECT_DOUBLE_EQ(pump_intensity(p, 40.0), 1.0);
    EXPECT_DOUBLE_EQ(pump_intensity(p, 80.0), 1.0);
    EXPECT_NEAR(pump_intensity(p, 81.0), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(pump_intensity(p, 81.0), 0.367879, 1e-6);
    EXPECT_EQ(pump_intensity(p, -0.5), 0.0);
}

TEST(Emission, StepResponseReachesSteadyState) {
    const Fluorophore f{1.0, 2.0};
    EXPECT_NEAR(emission_at(pulse(), f, 40.0), 2.0, 1e-4);
    const EmissionCurve c = emission_response(pulse(), f, SampleGrid{0.01, 60.0}, EmissionMethod::Quadrature);
    EXPECT_NEAR(c.phi[4000], 2.0, 1e-4);
}

TEST(Emission, ZeroAmplitudeIsZeroEverywhere) {
    const EmissionCurve c = emission_response(pulse(), Fluorophore{0.0, 2.0}, SampleGrid{0.01, 200.0});
    for (double v : c.phi) ASSERT_EQ(v, 0.0);
}

TEST(Emission, EqualRatesUseTheDegenerateForm) {
    const Fluorophore f{1.0, 1.0};
    const oracle::Pulse op{1.0, 80.0, 1.0};
    const double dt = 0.001;
    const auto phi = oracle::emission_rk4(op, 1.0, 1.0, 100.0, dt);
    for (double s : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
        const double expected = (1.0 + s) * std::exp(-s);
        EXPECT_NEAR(emission_at(pulse(), f, 80.0 + s), expected, 1e-12) << s;
        EXPECT_NEAR(phi[static_cast<std::size_t>(std::llround((80.0 + s) / dt))], expected, 1e-9) << s;
    }
}

TEST(Emission, RejectsBadLifetimeAndShortGrid) {
    EXPECT_THROW(emission_response(pulse(), Fluorophore{1.0, 0.0}, SampleGrid{0.01, 100.0}), Error);
    EXPECT_THROW(emission_response(pulse(), Fluorophore{1.0, -1.0}, SampleGrid{0.01, 100.0}), Error);
    const GateConfig gate = GateConfig::standard(pulse(), 20.0);
    EXPECT_THROW(gated_integral(emission_response(pulse(), Fluorophore{}, SampleGrid{0.01, 100.0}),
                                gate.background_start_ns, gate.width_ns),
                 Error);
}

TEST(GatedIntegral, ConstantZeroAndExponential) {
    EmissionCurve c;
    c.dt_ns = 0.01;
    c.phi.assign(3001, 2.5);
    EXPECT_NEAR(gated_integral(c, 3.0, 20.0), 50.0, 1e-9);
    c.phi.assign(3001, 0.0);
    EXPECT_EQ(gated_integral(c, 0.0, 20.0), 0.0);

    c.dt_ns = 0.001;
    c.phi.resize(20001);
    for (std::size_t i = 0; i < c.phi.size(); ++i) c.phi[i] = std::exp(-c.t_at(i));
    EXPECT_NEAR(gated_integral(c, 0.0, 20.0), 1.0 - std::exp(-20.0), 1e-6);
}

TEST(DociValue, AmplitudeCancels) {
    const GateConfig gate = GateConfig::standard(pulse(), 20.0);
    const double a = doci_value(pulse(), Fluorophore{1.0, 2.0}, gate);
    const double b = doci_value(pulse(), Fluorophore{10.0, 2.0}, gate);
    EXPECT_NEAR(a, b, 1e-12 * std::fabs(a));
}

TEST(DociValue, ShortLifetimeTracksThePumpTail) {
    const GateConfig gate = GateConfig::standard(pulse(), 20.0);
    const double expected = (1.0 - std::exp(-20.0)) / 20.0;
    EXPECT_NEAR(doci_value(pulse(), Fluorophore{1.0, 1e-3}, gate), expected, 1e-3);
    EXPECT_NEAR(expected, 0.05, 1e-6);
}

TEST(DociValue, MatchesTheQuadratureOracle) {
    const oracle::Gates g = oracle::gates(oracle::Pulse{}, 1.0, 2.0, 20.0);
    EXPECT_NEAR(g.ratio(), kTau2Doci, 1e-12);
    const GateConfig gate = GateConfig::standard(pulse(), 20.0);
    EXPECT_NEAR(doci_value(pulse(), Fluorophore{1.0, 2.0}, gate), kTau2Doci, 1e-9);
    ModelOptions q;
    q.method = EmissionMethod::Quadrature;
    q.dt_ns = 0.001;
    EXPECT_NEAR(doci_value(pulse(), Fluorophore{1.0, 2.0}, gate, q), kTau2Doci, 1e-6 * kTau2Doci);
}

TEST(DociValue, OracleAgreesAcrossLifetimesAndWidths) {
    for (double tau : {0.3, 1.0, 3.5, 6.0}) {
        for (double width : {10.0, 25.0}) {
            const oracle::Gates g = oracle::gates(oracle::Pulse{}, 1.0, tau, width);
            const GateConfig gate = GateConfig::standard(pulse(), width);
            EXPECT_NEAR(doci_value(pulse(), Fluorophore{1.0, tau}, gate), g.ratio(), 1e-8) << tau << " " << width;
        }
    }
}

TEST(DociValue, DenominatorTooSmall) {
    const GateConfig gate = GateConfig::standard(pulse(), 20.0);
    try {
        doci_value(pulse(), Fluorophore{0.0, 2.0}, gate);
        FAIL() << "expected DenominatorTooSmall";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DenominatorTooSmall);
    }
}

TEST(DociValue, AmbientLightCancels) {
    const GateConfig gate = GateConfig::standard(pulse(), 20.0);
    ModelOptions o;
    o.ambient_per_ns = 0.7;
    const GatedSignals s = gated_signals(pulse(), Fluorophore{1.0, 2.0}, gate, o);
    EXPECT_NEAR(s.background, 0.7 * 20.0, 1e-9);
    EXPECT_NEAR(doci_value(pulse(), Fluorophore{1.0, 2.0}, gate, o), kTau2Doci, 1e-9);
}

TEST(ClosedFormVsQuadrature, EveryGatedIntegralWithin1e5) {
    ModelOptions q;
    q.method = EmissionMethod::Quadrature;
    q.dt_ns = 0.001;
    for (double tau0 : {0.5, 1.0, 2.0}) {
        for (double tau : {0.1, 0.5, 1.0, 2.0, 4.0, 6.0}) {
            const PumpPulse p = pulse(tau0);
            const GateConfig gate = GateConfig::standard(p, 20.0);
            const GatedSignals c = gated_signals(p, Fluorophore{1.0, tau}, gate);
            const GatedSignals n = gated_signals(p, Fluorophore{1.0, tau}, gate, q);
            EXPECT_NEAR(n.reference, c.reference, 1e-5 * c.reference);
            EXPECT_NEAR(n.decay, c.decay, 1e-5 * c.decay);
            EXPECT_NEAR(n.background, c.background, 1e-5 * c.reference);
        }
    }
}

TEST(Quadrature, HalvingTheStepChangesLittle) {
    ModelOptions coarse;
    coarse.method = EmissionMethod::Quadrature;
    ModelOptions fine = coarse;
    fine.dt_ns = coarse.dt_ns / 2;
    for (double tau : {0.1, 1.0, 6.0}) {
        const GateConfig gate = GateConfig::standard(pulse(), 20.0);
        const double a = doci_value(pulse(), Fluorophore{1.0, tau}, gate, coarse);
        const double b = doci_value(pulse(), Fluorophore{1.0, tau}, gate, fine);
        EXPECT_LT(std::fabs(a - b), 1e-4 * std::fabs(b)) << tau;
    }
}

TEST(Surface, MonotoneAndBounded) {
    std::vector<double> taus, widths;
    for (int i = 0; i < 50; ++i) taus.push_back(0.1 + 5.9 * i / 49.0);
    for (int j = 0; j < 7; ++j) widths.push_back(10.0 + 5.0 * j);
    for (double tau0 : {0.5, 1.0, 2.0}) {
        const DociSurface s = doci_surface(pulse(tau0), taus, widths);
        for (std::size_t i = 0; i < taus.size(); ++i) {
            for (std::size_t j = 0; j < widths.size(); ++j) {
                ASSERT_GT(s.at(i, j), 0.0);
                ASSERT_LT(s.at(i, j), 1.0);
                if (i > 0) ASSERT_GT(s.at(i, j), s.at(i - 1, j));
                if (j > 0) ASSERT_LT(s.at(i, j), s.at(i, j - 1));
            }
        }
    }
}

TEST(Surface, DegenerateGridEqualsSingleValue) {
    const std::vector<double> tau{2.0}, width{20.0};
    const DociSurface s = doci_surface(pulse(), tau, width);
    ASSERT_EQ(s.values.size(), 1u);
    EXPECT_EQ(s.at(0, 0), doci_value(pulse(), Fluorophore{1.0, 2.0}, GateConfig::standard(pulse(), 20.0)));
    EXPECT_THROW(doci_surface(pulse(), std::vector<double>{-1.0}, width), Error);
}

TEST(Gate, StandardPlacement) {
    const GateConfig g = GateConfig::standard(pulse(), 20.0);
    EXPECT_DOUBLE_EQ(g.reference_start_ns, 60.0);
    EXPECT_DOUBLE_EQ(g.decay_start_ns, 80.0);
    EXPECT_DOUBLE_EQ(g.background_start_ns, 80.0 + 10.0 * 21.0);
    GateConfig bad = g;
    bad.reference_start_ns = 70.0;
    EXPECT_THROW(bad.validate(pulse()), Error);
}
