#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "common/oracles.hpp"
#include "common/reference_table.hpp"
#include "doci/classifier.hpp"
#include "doci/error.hpp"

using namespace doci;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Internal;
}

FeatureMatrix random_features(std::mt19937_64& rng, std::size_t d, std::size_t n_pos, std::size_t n_neg) {
    std::normal_distribution<double> g(0.0, 1.0);
    FeatureMatrix fm;
    fm.cols = d;
    for (std::size_t j = 0; j < d; ++j) fm.channels.push_back(static_cast<int>(2 + j));
    std::vector<double> shift(d), mix(d * d);
    for (auto& s : shift) s = g(rng);
    for (auto& m : mix) m = g(rng);
    for (std::size_t i = 0; i < n_pos + n_neg; ++i) {
        const bool pos = i < n_pos;
        std::vector<double> z(d), x(d, 0.0);
        for (auto& v : z) v = g(rng);
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t c = 0; c < d; ++c) x[a] += mix[a * d + c] * z[c];
            if (pos) x[a] += shift[a];
        }
        fm.add_row(x, pos ? 3 : 2);
    }
    return fm;
}

std::vector<int> positives(const FeatureMatrix& fm) {
    std::vector<int> p;
    for (std::size_t i = 0; i < fm.rows(); ++i) p.push_back(fm.is_positive(i) ? 1 : 0);
    return p;
}

}  // namespace

TEST(Metrics, ReproducesEveryReportedRow) {
    for (const auto& r : fixture::kReportedRows) {
        const MetricsRow m = metrics(ConfusionCounts{r.tn, r.fn, r.tp, r.fp}, parse_channels(r.channels));
        EXPECT_EQ(format_channels(m.channels), r.channels);
        // Printed values carry two decimals, so half a unit in the last place.
        EXPECT_NEAR(100.0 * *m.sensitivity, r.sensitivity, 0.005 + 1e-9) << r.channels;
        EXPECT_NEAR(100.0 * *m.specificity, r.specificity, 0.005 + 1e-9) << r.channels;
        EXPECT_NEAR(100.0 * *m.accuracy, r.accuracy, 0.005 + 1e-9) << r.channels;
        EXPECT_EQ(m.counts.total(), r.tn + r.fn + r.tp + r.fp);
    }
}

TEST(Metrics, UndefinedRatiosPrintAsNA) {
    const MetricsRow m = metrics(ConfusionCounts{5, 0, 0, 0}, {2});
    EXPECT_FALSE(m.sensitivity.has_value());
    EXPECT_DOUBLE_EQ(*m.specificity, 1.0);
    EXPECT_EQ(metrics_csv_row(m), "[2],5,0,0,0,NA,100.00%,100.00%,resubstitution");
    const MetricsRow empty = metrics(ConfusionCounts{}, {2});
    EXPECT_EQ(format_percent(empty.accuracy), "NA");
    EXPECT_EQ(code_of([] { metrics(ConfusionCounts{-1, 0, 0, 0}); }), ErrorCode::InvalidArgument);
}

TEST(Metrics, CsvHeaderAndRow) {
    EXPECT_EQ(metrics_csv_header(), "Channels,TN,FN,TP,FP,Sensitivity,Specificity,Accuracy,Mode");
    const MetricsRow m = metrics(ConfusionCounts{1196, 450, 1737, 308}, {10});
    EXPECT_EQ(metrics_csv_row(m), "[10],1196,450,1737,308,79.42%,79.52%,79.46%,resubstitution");
}

TEST(Channels, FormatAndParse) {
    EXPECT_EQ(format_channels({2, 3, 4, 5, 6, 7, 8, 9, 10}), "[2 - 10]");
    EXPECT_EQ(format_channels({6, 8, 10}), "[6 8 10]");
    EXPECT_EQ(format_channels({4, 5}), "[4 5]");
    EXPECT_EQ(format_channels({8, 9, 10}), "[8 9 10]");
    EXPECT_EQ(format_channels({7, 8, 9, 10}), "[7 - 10]");
    EXPECT_EQ(parse_channels("[2 - 10]").size(), 9u);
    EXPECT_EQ(parse_channels("2-4,8"), (std::vector<int>{2, 3, 4, 8}));
    EXPECT_EQ(parse_channels("10 6 8"), (std::vector<int>{6, 8, 10}));
    EXPECT_EQ(code_of([] { parse_channels("[1 2]"); }), ErrorCode::NotFound);
    EXPECT_EQ(code_of([] { parse_channels("[2 x]"); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { parse_channels(""); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { parse_channels("5 - 3"); }), ErrorCode::InvalidArgument);
}

TEST(Combinations, SubsetCounts) {
    const std::vector<int> all{2, 3, 4, 5, 6, 7, 8, 9, 10};
    EXPECT_EQ(combinations(all, 1).size(), 9u);
    EXPECT_EQ(combinations(all, 2).size(), 36u);
    EXPECT_EQ(combinations(all, 3).size(), 84u);
    EXPECT_EQ(combinations(all, 9).size(), 1u);
    EXPECT_EQ(choose(9, 3), 84u);
    std::size_t total = 0;
    for (std::size_t k = 1; k <= 9; ++k) total += combinations(all, k).size();
    EXPECT_EQ(total, 511u);
    EXPECT_EQ(combinations(all, 2).front(), (std::vector<int>{2, 3}));
    EXPECT_EQ(combinations(all, 2).back(), (std::vector<int>{9, 10}));
}

TEST(Lda, MatchesTheTextbookOracle) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 1 + static_cast<std::size_t>(trial % 4);
        const FeatureMatrix fm = random_features(rng, d, 30 + static_cast<std::size_t>(trial), 45);
        LdaOptions o;
        o.lambda = trial % 2 ? 1e-3 : 1e-6;
        const LdaModel m = train_lda(fm, o);
        const oracle::Lda ref = oracle::lda(fm.values, positives(fm), d, o.lambda);
        for (std::size_t j = 0; j < d; ++j)
            EXPECT_NEAR(m.weights[j], ref.w[j], 1e-8 * (1.0 + std::fabs(ref.w[j]))) << trial;
        EXPECT_NEAR(m.bias, ref.b, 1e-8 * (1.0 + std::fabs(ref.b))) << trial;
        for (std::size_t i = 0; i < fm.rows(); ++i)
            ASSERT_EQ(m.predict(fm.row(i)), ref.score(fm.row(i)) > 0.0) << trial << " " << i;
    }
}

TEST(Lda, AffineInvariantWithoutRidge) {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t d = 3;
        const FeatureMatrix fm = random_features(rng, d, 40, 40);
        std::vector<double> a(d * d), c(d);
        for (auto& v : a) v = g(rng);
        for (std::size_t j = 0; j < d; ++j) a[j * d + j] += 3.0;
        for (auto& v : c) v = g(rng);
        FeatureMatrix tf;
        tf.cols = d;
        tf.channels = fm.channels;
        for (std::size_t i = 0; i < fm.rows(); ++i) {
            std::vector<double> y(c);
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t k = 0; k < d; ++k) y[r] += a[r * d + k] * fm.row(i)[k];
            tf.add_row(y, fm.labels[i]);
        }
        LdaOptions o;
        o.lambda = 0.0;
        const LdaModel m1 = train_lda(fm, o);
        const LdaModel m2 = train_lda(tf, o);
        for (std::size_t i = 0; i < fm.rows(); ++i)
            EXPECT_NEAR(m1.score(fm.row(i)), m2.score(tf.row(i)), 1e-8 * (1.0 + std::fabs(m1.score(fm.row(i)))));
    }
}

TEST(Lda, OneDimensionalThresholdAtTheMidpoint) {
    FeatureMatrix fm;
    fm.cols = 1;
    for (double v : {-0.1, 0.1}) fm.add_row({v}, 2);
    for (double v : {0.9, 1.1}) fm.add_row({v}, 3);
    const LdaModel m = train_lda(fm);
    const double half = 0.5;
    EXPECT_NEAR(m.score(&half), 0.0, 1e-9);
    EXPECT_GT(m.weights[0], 0.0);
    const double a = 0.49, b = 0.51;
    EXPECT_FALSE(m.predict(&a));
    EXPECT_TRUE(m.predict(&b));
}

TEST(Lda, SwappingLabelsNegatesTheScore) {
    std::mt19937_64 rng(7);
    FeatureMatrix fm = random_features(rng, 2, 25, 25);
    FeatureMatrix swapped = fm;
    for (auto& l : swapped.labels) l = l == 3 ? 2 : 3;
    const LdaModel a = train_lda(fm);
    const LdaModel b = train_lda(swapped);
    for (std::size_t i = 0; i < fm.rows(); ++i) EXPECT_NEAR(a.score(fm.row(i)), -b.score(fm.row(i)), 1e-9);
}

TEST(Lda, ErrorCases) {
    FeatureMatrix one_class;
    one_class.cols = 1;
    for (double v : {0.1, 0.2, 0.3}) one_class.add_row({v}, 2);
    EXPECT_EQ(code_of([&] { train_lda(one_class); }), ErrorCode::MissingClass);

    FeatureMatrix collinear;
    collinear.cols = 2;
    for (double v : {0.1, 0.2, 0.3}) collinear.add_row({v, 2.0 * v}, 2);
    for (double v : {0.6, 0.8, 0.9}) collinear.add_row({v, 2.0 * v}, 3);
    LdaOptions o;
    o.lambda = 0.0;
    EXPECT_EQ(code_of([&] { train_lda(collinear, o); }), ErrorCode::SingularCovariance);
    EXPECT_NO_THROW(train_lda(collinear));

    FeatureMatrix bad;
    bad.cols = 1;
    bad.add_row({std::nan("")}, 3);
    EXPECT_EQ(code_of([&] { train_lda(bad); }), ErrorCode::InvalidArgument);
}

TEST(Blocks, FourBlockExample) {
    // 2x2 blocks of 2x2 pixels: truth {T, T, F, F}, prediction {T, F, T, F}.
    const BlockGrid grid(4, 4, 0.5, 1.0);
    ASSERT_EQ(grid.block_count(), 4u);
    Mask truth(4, 4, 0), pred(4, 4, 0), tissue(4, 4, 1);
    truth(0, 0) = 1;
    truth(3, 1) = 1;
    pred(1, 1) = 1;
    pred(0, 3) = 1;
    const ConfusionCounts c = confusion(blockify(truth, grid, tissue), blockify(pred, grid, tissue));
    EXPECT_EQ(c, (ConfusionCounts{1, 1, 1, 1}));
}

TEST(Blocks, RandomGridsMatchPlainRecount) {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> coin(0, 99);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t block_px = 4;
        const std::size_t w = 10 * block_px - static_cast<std::size_t>(trial % 3);
        const std::size_t h = 10 * block_px - static_cast<std::size_t>(trial % 4);
        Mask truth(w, h, 0), pred(w, h, 0), tissue(w, h, 0);
        for (std::size_t i = 0; i < w * h; ++i) {
            tissue[i] = coin(rng) < 40 ? 1 : 0;
            truth[i] = coin(rng) < 3 ? 1 : 0;
            pred[i] = coin(rng) < 3 ? 1 : 0;
        }
        const BlockGrid grid(w, h, 0.25, 1.0);
        ASSERT_EQ(grid.blocks_x(), 10u);
        const ConfusionCounts c = confusion(blockify(truth, grid, tissue), blockify(pred, grid, tissue));
        const oracle::Counts ref = oracle::block_recount(truth.data(), pred.data(), tissue.data(), w, h, block_px);
        ASSERT_EQ(c, (ConfusionCounts{ref.tn, ref.fn, ref.tp, ref.fp})) << trial;
    }
}

TEST(Blocks, BlocksWithoutTissueAreExcluded) {
    const BlockGrid grid(4, 2, 0.5, 1.0);
    Mask truth(4, 2, 1), tissue(4, 2, 0);
    tissue(3, 0) = 1;
    const BlockSet s = blockify(truth, grid, tissue);
    EXPECT_EQ(s.included_count(), 1u);
    EXPECT_EQ(code_of([] { BlockGrid(4, 4, 0.0, 1.0); }), ErrorCode::InvalidArgument);
}

TEST(PredictMap, InvalidPixelsAreNeverPredicted) {
    FeatureMatrix fm;
    fm.cols = 1;
    fm.channels = {4};
    for (double v : {0.1, 0.2}) fm.add_row({v}, 2);
    for (double v : {0.8, 0.9}) fm.add_row({v}, 3);
    const LdaModel m = train_lda(fm);
    DociMap map;
    map.channel_number = 4;
    map.values = RasterD(3, 1, 0.9);
    map.valid = Mask(3, 1, 1);
    map.valid[1] = 0;
    map.values[2] = 0.1;
    const PredictionMap p = predict_map(m, {map});
    EXPECT_EQ(p.cancer.data(), (std::vector<std::uint8_t>{1, 0, 0}));
    EXPECT_EQ(p.predicted.data(), (std::vector<std::uint8_t>{1, 0, 1}));
    map.channel_number = 5;
    EXPECT_EQ(code_of([&] { predict_map(m, {map}); }), ErrorCode::NotFound);
}

TEST(TrainingRois, InsideTheirClassAndColumnRange) {
    RasterU16 labels(40, 30, 2);
    for (std::size_t y = 5; y < 20; ++y)
        for (std::size_t x = 3; x < 35; ++x) labels(x, y) = 3;
    const auto rois = sample_training_rois(labels, {3, 2}, 6, 5, 11, 0, 20);
    ASSERT_EQ(rois.size(), 12u);
    for (const auto& r : rois) {
        EXPECT_LE(r.rect.x + r.rect.w, 20u);
        for (std::size_t y = r.rect.y; y < r.rect.y + r.rect.h; ++y)
            for (std::size_t x = r.rect.x; x < r.rect.x + r.rect.w; ++x) ASSERT_EQ(labels(x, y), r.label);
    }
    EXPECT_EQ(sample_training_rois(labels, {3, 2}, 6, 5, 11, 0, 20).front().rect.x, rois.front().rect.x);
    EXPECT_EQ(code_of([&] { sample_training_rois(labels, {7}, 1, 5, 1); }), ErrorCode::MissingClass);
}

TEST(Mode, Names) {
    EXPECT_EQ(parse_mode("held-out"), EvaluationMode::HeldOut);
    EXPECT_EQ(mode_name(EvaluationMode::Resubstitution), "resubstitution");
    EXPECT_EQ(code_of([] { parse_mode("loo"); }), ErrorCode::InvalidArgument);
}
