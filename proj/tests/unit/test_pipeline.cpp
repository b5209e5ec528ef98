#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "doci/error.hpp"
#include "doci/pipeline.hpp"

using namespace doci;

namespace {

FrameTriplet triplet(std::size_t w, std::size_t h, double ref, double decay, double bg) {
    return {RasterD(w, h, ref), RasterD(w, h, decay), RasterD(w, h, bg)};
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Internal;
}

}  // namespace

TEST(ComputeDoci, BackgroundSubtractedRatio) {
    FrameTriplet t = triplet(3, 2, 100.0, 40.0, 10.0);
    t.decay(2, 1) = 10.0;
    const DociMap m = compute_doci(t, 1e-6, 7);
    EXPECT_EQ(m.channel_number, 7);
    EXPECT_NEAR(m.values(0, 0), 30.0 / 90.0, 1e-15);
    EXPECT_EQ(m.values(2, 1), 0.0);
    EXPECT_EQ(m.valid(2, 1), 1);
    EXPECT_EQ(m.valid_count(), 6u);
}

TEST(ComputeDoci, PixelsAtOrBelowTheFloorAreInvalid) {
    FrameTriplet t = triplet(4, 1, 100.0, 40.0, 10.0);
    t.reference[1] = 10.0;
    t.reference[2] = 5.0;
    t.reference[3] = 10.5;
    const DociMap m = compute_doci(t, 0.5);
    EXPECT_EQ(m.valid[0], 1);
    EXPECT_EQ(m.valid[1], 0);
    EXPECT_EQ(m.valid[2], 0);
    EXPECT_EQ(m.valid[3], 0);
    EXPECT_EQ(m.values[1], 0.0);
    EXPECT_DOUBLE_EQ(m.invalid_fraction(), 0.75);
}

TEST(ComputeDoci, AllDarkTripletIsEntirelyInvalid) {
    const FrameTriplet t = triplet(5, 5, 0.0, 0.0, 0.0);
    const DociMap m = compute_doci(t);
    EXPECT_EQ(m.valid_count(), 0u);
    EXPECT_GT(m.denominator_floor, 0.0);
}

TEST(ComputeDoci, RejectsMismatchAndBadFloor) {
    FrameTriplet t = triplet(3, 3, 1.0, 1.0, 0.0);
    t.decay = RasterD(3, 4, 0.0);
    EXPECT_EQ(code_of([&] { compute_doci(t, 1e-3); }), ErrorCode::ShapeMismatch);
    EXPECT_EQ(code_of([&] { compute_doci(triplet(2, 2, 1, 1, 0), 0.0); }), ErrorCode::InvalidArgument);
}

TEST(ComputeDoci, UniformScalingLeavesMapUnchanged) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FrameTriplet t = triplet(20, 20, 0.0, 0.0, 0.0);
    for (std::size_t i = 0; i < t.reference.size(); ++i) {
        t.background[i] = 5.0 * u(rng);
        t.reference[i] = t.background[i] + 100.0 * u(rng);
        t.decay[i] = t.background[i] + 30.0 * u(rng);
    }
    FrameTriplet s = t;
    for (auto* r : {&s.reference, &s.decay, &s.background})
        for (double& v : r->pixels()) v *= 7.5;
    const DociMap a = compute_doci(t);
    const DociMap b = compute_doci(s);
    EXPECT_EQ(a.valid, b.valid);
    for (std::size_t i = 0; i < a.values.size(); ++i) ASSERT_NEAR(a.values[i], b.values[i], 1e-12);
}

TEST(Percentile, LinearInterpolation) {
    EXPECT_DOUBLE_EQ(percentile({3.0, 1.0, 2.0, 4.0}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(percentile({3.0, 1.0, 2.0, 4.0}, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(percentile({7.0}, 0.99), 7.0);
    EXPECT_THROW(percentile({}, 0.5), Error);
}

TEST(RoiStats, MeanAndSampleDeviation) {
    DociMap m;
    m.values = RasterD(4, 4, 0.0);
    m.valid = Mask(4, 4, 0);
    m.values(1, 1) = 0.2;
    m.values(2, 1) = 0.4;
    m.valid(1, 1) = m.valid(2, 1) = 1;
    const RoiStats s = roi_stats(m, PixelRect{0, 0, 4, 4});
    EXPECT_EQ(s.n, 2u);
    EXPECT_NEAR(s.mean, 0.3, 1e-15);
    EXPECT_NEAR(s.std, 0.141421, 1e-6);
    const RoiStats one = roi_stats(m, std::vector<std::size_t>{5});
    EXPECT_EQ(one.std, 0.0);
    EXPECT_EQ(code_of([&] { roi_stats(m, PixelRect{3, 3, 1, 1}); }), ErrorCode::EmptyRoi);
    EXPECT_EQ(code_of([&] { roi_stats(m, PixelRect{10, 10, 5, 5}); }), ErrorCode::EmptyRoi);
}

TEST(RoiCompare, WelchStatistic) {
    const RoiStats a{0.2, 0.01, 400, 2};
    const RoiStats b{0.3, 0.01, 400, 2};
    const Significance s = roi_compare(a, b);
    EXPECT_NEAR(s.t, -0.1 / std::sqrt(2.0 * 1e-4 / 400.0), 1e-9);
    EXPECT_NEAR(s.t, -141.4, 0.05);
    EXPECT_NEAR(s.dof, 798.0, 1e-9);
    EXPECT_LT(s.p_value, 1e-100);
}

TEST(RoiCompare, TwoSidedPValueAtTheTableQuantile) {
    // Equal n = 6 and equal spread give 10 degrees of freedom; 2.228139 is the
    // 97.5% quantile of t(10).
    const double se = std::sqrt(2.0 / 6.0);
    const RoiStats a{1.0 + 2.228139 * se, 1.0, 6, 0};
    const RoiStats b{1.0, 1.0, 6, 0};
    const Significance s = roi_compare(a, b);
    EXPECT_NEAR(s.dof, 10.0, 1e-12);
    EXPECT_NEAR(s.p_value, 0.05, 1e-6);
}

TEST(RoiCompare, IdenticalRegionsAndTooFewPixels) {
    const RoiStats a{0.3, 0.02, 50, 0};
    EXPECT_EQ(roi_compare(a, a).t, 0.0);
    EXPECT_EQ(roi_compare(a, a).p_value, 1.0);
    const RoiStats one{0.3, 0.0, 1, 0};
    EXPECT_EQ(code_of([&] { roi_compare(a, one); }), ErrorCode::InvalidArgument);
}

TEST(Heatmap, InvalidPixelsAreBlueAndPaletteNeverIs) {
    DociMap m;
    m.values = RasterD(3, 1, 0.0);
    m.valid = Mask(3, 1, 1);
    m.values[0] = 0.1;
    m.values[1] = 0.3;
    m.valid[2] = 0;
    const RgbImage img = render_heatmap(m);
    EXPECT_EQ(img[2], kInvalidColor);
    EXPECT_EQ(img[0], palette_color(Palette::Hot, 0.0));
    EXPECT_EQ(img[1], palette_color(Palette::Hot, 1.0));
    for (int i = 0; i <= 1000; ++i) ASSERT_NE(palette_color(Palette::Hot, i / 1000.0), kInvalidColor);
    EXPECT_EQ(palette_color(Palette::Hot, 1.0), (Rgb{255, 255, 255}));
    EXPECT_EQ(palette_color(Palette::Gray, 0.5), (Rgb{128, 128, 128}));
}

TEST(Heatmap, FixedRangeClampsAndRejectsReversedRange) {
    DociMap m;
    m.values = RasterD(2, 1, 0.0);
    m.valid = Mask(2, 1, 1);
    m.values[0] = -1.0;
    m.values[1] = 5.0;
    HeatmapOptions o;
    o.range = std::make_pair(0.0, 1.0);
    const RgbImage img = render_heatmap(m, o);
    EXPECT_EQ(img[0], palette_color(Palette::Hot, 0.0));
    EXPECT_EQ(img[1], palette_color(Palette::Hot, 1.0));
    o.range = std::make_pair(1.0, 0.0);
    EXPECT_THROW(render_heatmap(m, o), Error);
}

TEST(Heatmap, ConstantMapUsesMidPalette) {
    DociMap m;
    m.values = RasterD(2, 2, 0.25);
    m.valid = Mask(2, 2, 1);
    const RgbImage img = render_heatmap(m);
    for (const Rgb& c : img.pixels()) EXPECT_EQ(c, palette_color(Palette::Hot, 0.5));
}
