#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doci/camera_sim.hpp"
#include "doci/lifetime_model.hpp"
#include "doci/phantom.hpp"
#include "doci/pipeline.hpp"

using namespace doci;

namespace {

Phantom uniform_phantom(std::size_t w, std::size_t h, double tau, double amplitude) {
    Phantom p;
    p.id = "uniform";
    p.width = w;
    p.height = h;
    p.pixel_pitch_mm = 0.04;
    p.lifetime_ns.assign(kChannelCount, RasterD(w, h, tau));
    p.amplitude = RasterD(w, h, amplitude);
    p.illumination = RasterD(w, h, 1.0);
    p.labels = RasterU8(w, h, 1);
    return p;
}

AcquisitionConfig noiseless() {
    AcquisitionConfig c;
    c.psf_sigma_px = 0.0;
    return c;
}

}  // namespace

TEST(ExpectedTriplet, UniformPhantomRatioEqualsModel) {
    const Phantom p = uniform_phantom(8, 6, 2.0, 100.0);
    const AcquisitionConfig c = noiseless();
    const FrameTriplet t = expected_triplet(p, c.channel(5), c);
    const double model = doci_value(c.pulse, Fluorophore{1.0, 2.0}, c.gate);
    for (std::size_t i = 0; i < t.reference.size(); ++i) {
        ASSERT_DOUBLE_EQ(t.reference[i], t.reference[0]);
        ASSERT_LT(t.background[i], 1e-30 * t.reference[i]);
        const double ratio = (t.decay[i] - t.background[i]) / (t.reference[i] - t.background[i]);
        ASSERT_NEAR(ratio, model, 1e-9);
    }
}

TEST(ExpectedTriplet, LinearInAmplitude) {
    const AcquisitionConfig c = noiseless();
    const FrameTriplet a = expected_triplet(uniform_phantom(4, 4, 1.5, 50.0), c.channel(2), c);
    const FrameTriplet b = expected_triplet(uniform_phantom(4, 4, 1.5, 100.0), c.channel(2), c);
    for (std::size_t i = 0; i < a.reference.size(); ++i) {
        EXPECT_DOUBLE_EQ(b.reference[i], 2.0 * a.reference[i]);
        EXPECT_DOUBLE_EQ(b.decay[i], 2.0 * a.decay[i]);
        EXPECT_DOUBLE_EQ(b.background[i], 2.0 * a.background[i]);
    }
}

TEST(ExpectedTriplet, TwoRegionsMatchIndependentModelCalls) {
    Phantom p = uniform_phantom(10, 4, 1.0, 100.0);
    for (auto& m : p.lifetime_ns) {
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t x = 5; x < 10; ++x) m(x, y) = 4.0;
    }
    const AcquisitionConfig c = noiseless();
    const FrameTriplet t = expected_triplet(p, c.channel(3), c);
    const double d1 = doci_value(c.pulse, Fluorophore{1.0, 1.0}, c.gate);
    const double d4 = doci_value(c.pulse, Fluorophore{1.0, 4.0}, c.gate);
    EXPECT_NEAR(t.decay(1, 1) / t.reference(1, 1), d1, 1e-9);
    EXPECT_NEAR(t.decay(8, 2) / t.reference(8, 2), d4, 1e-9);
}

TEST(ExpectedTriplet, DarkAndAmbientAppearInAllGates) {
    AcquisitionConfig c = noiseless();
    c.noise.dark_level = 3.0;
    c.noise.ambient_level = 2.0;
    const FrameTriplet t = expected_triplet(uniform_phantom(3, 3, 2.0, 10.0), c.channel(2), c);
    EXPECT_NEAR(t.background[0], 5.0, 1e-12);
    const DociMap m = compute_doci(t, 1e-9);
    EXPECT_NEAR(m.values[4], doci_value(c.pulse, Fluorophore{1.0, 2.0}, c.gate), 1e-9);
}

TEST(ExpectedTriplet, IlluminationScalingLeavesRatioUnchanged) {
    Phantom p = uniform_phantom(16, 16, 2.5, 80.0);
    AcquisitionConfig c = noiseless();
    const DociMap flat = compute_doci(expected_triplet(p, c.channel(4), c), 1e-9);
    for (std::size_t y = 0; y < 16; ++y)
        for (std::size_t x = 0; x < 16; ++x) p.illumination(x, y) = 0.2 + 0.05 * static_cast<double>(x + y);
    const DociMap lit = compute_doci(expected_triplet(p, c.channel(4), c), 1e-9);
    for (std::size_t i = 0; i < flat.values.size(); ++i) ASSERT_NEAR(lit.values[i], flat.values[i], 1e-12);
}

TEST(Acquire, SameSeedIsBitIdentical) {
    const Phantom p = uniform_phantom(12, 9, 2.0, 200.0);
    AcquisitionConfig c;
    c.noise.shot_noise = true;
    c.noise.read_noise_sigma = 2.0;
    c.seed = 42;
    const ChannelStack a = acquire(p, c);
    const ChannelStack b = acquire(p, c);
    for (std::size_t k = 0; k < a.triplets.size(); ++k) {
        EXPECT_EQ(a.triplets[k].reference, b.triplets[k].reference);
        EXPECT_EQ(a.triplets[k].decay, b.triplets[k].decay);
        EXPECT_EQ(a.triplets[k].background, b.triplets[k].background);
    }
    c.seed = 43;
    EXPECT_NE(acquire(p, c).triplets[0].reference, a.triplets[0].reference);
}

TEST(Acquire, NoiselessEqualsExpected) {
    const Phantom p = uniform_phantom(7, 5, 3.0, 90.0);
    const AcquisitionConfig c;
    const ChannelStack s = acquire(p, c);
    ASSERT_EQ(s.triplets.size(), 9u);
    for (std::size_t k = 0; k < s.triplets.size(); ++k) {
        const FrameTriplet e = expected_triplet(p, c.channels[k], c);
        EXPECT_EQ(s.triplets[k].reference, e.reference);
        EXPECT_EQ(s.triplets[k].decay, e.decay);
    }
    ASSERT_TRUE(s.labels.has_value());
}

TEST(Acquire, ShotNoiseMeanConverges) {
    const Phantom p = uniform_phantom(1, 1, 2.0, 5.0);
    NoiseConfig n;
    n.shot_noise = true;
    const AcquisitionConfig c = noiseless();
    const FrameTriplet e = expected_triplet(p, c.channel(2), c);
    const int reps = 10000;
    double sum = 0.0;
    for (int r = 0; r < reps; ++r) sum += sample_triplet(e, n, static_cast<std::uint64_t>(r)).reference[0];
    const double mean = sum / reps;
    const double sigma = std::sqrt(e.reference[0]);
    EXPECT_LT(std::fabs(mean - e.reference[0]), 5.0 * sigma / std::sqrt(static_cast<double>(reps)));
}

TEST(Acquire, ShotNoiseVarianceEqualsMean) {
    const Phantom p = uniform_phantom(4, 4, 2.0, 10.0);
    NoiseConfig n;
    n.shot_noise = true;
    const AcquisitionConfig c = noiseless();
    const FrameTriplet e = expected_triplet(p, c.channel(2), c);
    ASSERT_GE(e.reference[0], 100.0);
    const int seeds = 2000;
    std::vector<double> sum(e.reference.size(), 0.0), sq(e.reference.size(), 0.0);
    for (int s = 0; s < seeds; ++s) {
        const FrameTriplet t = sample_triplet(e, n, 1000 + static_cast<std::uint64_t>(s));
        for (std::size_t i = 0; i < sum.size(); ++i) {
            sum[i] += t.reference[i];
            sq[i] += t.reference[i] * t.reference[i];
        }
    }
    // Per-pixel ratios pooled over the 16 pixels.
    double ratio = 0.0;
    for (std::size_t i = 0; i < sum.size(); ++i) {
        const double mean = sum[i] / seeds;
        const double var = (sq[i] - seeds * mean * mean) / (seeds - 1);
        ratio += var / mean;
    }
    EXPECT_NEAR(ratio / static_cast<double>(sum.size()), 1.0, 0.05);
}

TEST(Acquire, ReadNoiseNeverProducesNegativeCounts) {
    const Phantom p = uniform_phantom(32, 32, 2.0, 0.01);
    NoiseConfig n;
    n.read_noise_sigma = 10.0;
    const AcquisitionConfig c = noiseless();
    const FrameTriplet t = sample_triplet(expected_triplet(p, c.channel(2), c), n, 9);
    for (double v : t.background.pixels()) ASSERT_GE(v, 0.0);
}

TEST(Blur, PreservesSumAndSpreads) {
    RasterD r(21, 17, 0.0);
    r(10, 8) = 1000.0;
    r(0, 0) = 50.0;
    r(20, 16) = 7.0;
    const RasterD b = gaussian_blur(r, 1.7);
    const double s0 = std::accumulate(r.pixels().begin(), r.pixels().end(), 0.0);
    const double s1 = std::accumulate(b.pixels().begin(), b.pixels().end(), 0.0);
    EXPECT_NEAR(s1, s0, 1e-6 * s0);
    EXPECT_LT(b(10, 8), 1000.0);
    EXPECT_GT(b(11, 8), 0.0);
    EXPECT_EQ(gaussian_blur(r, 0.0), r);
}

TEST(Phantom, UsafBarsAtPitch) {
    BarTargetSpec s;
    const Phantom p = make_usaf_phantom(s);
    ASSERT_EQ(p.bar_groups.back().bar_width_px, 2u);
    EXPECT_NEAR(p.pixel_pitch_mm * 1000.0, 39.0625, 1e-9);
    for (std::size_t i = 0; i < p.amplitude.size(); ++i) {
        if (p.labels[i] == 0) ASSERT_EQ(p.amplitude[i], 0.0);
        else ASSERT_EQ(p.amplitude[i], s.amplitude);
        ASSERT_EQ(p.lifetime_ns[0][i], s.lifetime_ns);
    }
    s.finest_spacing_um = 30.0;
    EXPECT_THROW(make_usaf_phantom(s), Error);
}

TEST(Phantom, TissueDiskHasTwoClasses) {
    TissueSpec s = default_tissue_spec(64, 64);
    s.specimen.reset();
    s.regions = {Shape::disk(3, 32, 32, 10)};
    s.background_label = 2;
    s.base_label = 2;
    const Phantom p = make_tissue_phantom(s);
    std::set<int> seen;
    for (auto v : p.labels.pixels()) seen.insert(v);
    EXPECT_EQ(seen, (std::set<int>{2, 3}));
}

TEST(Phantom, SeparatingChannelsCarryTheDelta) {
    TissueSpec s = default_tissue_spec(64, 64);
    for (auto& c : s.classes) c.lifetime_jitter_ns = 0.0;
    const Phantom p = make_tissue_phantom(s);
    const ClassSpec* fib = nullptr;
    const ClassSpec* cancer = nullptr;
    for (const auto& c : s.classes) {
        if (c.label == 2) fib = &c;
        if (c.label == 3) cancer = &c;
    }
    for (int ch = kFirstChannel; ch <= kLastChannel; ++ch) {
        const bool separating =
            std::find(kDefaultSeparatingChannels.begin(), kDefaultSeparatingChannels.end(), ch) !=
            kDefaultSeparatingChannels.end();
        const double d = cancer->lifetime_ns[channel_slot(ch)] - fib->lifetime_ns[channel_slot(ch)];
        if (separating) EXPECT_GT(d, 0.0) << ch;
        else EXPECT_EQ(d, 0.0) << ch;
    }
    for (std::size_t i = 0; i < p.labels.size(); ++i) {
        if (p.labels[i] == 3) {
            EXPECT_EQ(p.lifetime_for(10)[i], cancer->lifetime_ns[channel_slot(10)]);
            break;
        }
    }
}

TEST(Phantom, OverlappingCancerAndBenignRegionsRejected) {
    TissueSpec s = default_tissue_spec(64, 64);
    s.regions = {Shape::disk(1, 30, 30, 8), Shape::disk(3, 34, 30, 8)};
    EXPECT_THROW(make_tissue_phantom(s), Error);
}

TEST(Phantom, DyeDropsAndRois) {
    DyeDropSpec s;
    const Phantom p = make_dye_drop_phantom(s);
    const auto rois = dye_drop_rois(s);
    ASSERT_EQ(rois.size(), 6u);
    for (int k = 0; k < 6; ++k) {
        const auto& r = rois[static_cast<std::size_t>(k)];
        EXPECT_EQ(r.w, 50u);
        EXPECT_EQ(r.h, 50u);
        for (std::size_t y = r.y; y < r.y + r.h; ++y)
            for (std::size_t x = r.x; x < r.x + r.w; ++x) ASSERT_EQ(p.labels(x, y), k + 1);
    }
}
