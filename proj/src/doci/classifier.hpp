#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "doci/pipeline.hpp"
#include "doci/raster.hpp"

namespace doci {

/// One row per sampled pixel, one column per selected channel.
struct FeatureMatrix {
    std::vector<int> channels;
    std::size_t cols = 0;
    std::vector<double> values;
    std::vector<int> labels;
    int positive_label = 3;

    std::size_t rows() const { return labels.size(); }
    const double* row(std::size_t i) const { return values.data() + i * cols; }
    bool is_positive(std::size_t i) const { return labels[i] == positive_label; }
    void add_row(const std::vector<double>& x, int label);
};

struct LdaOptions {
    /// Ridge added as lambda * trace(S) / d on the diagonal.
    double lambda = 1e-6;
    /// Use 1/2 priors instead of the empirical class frequencies.
    bool equal_priors = false;
};

struct LdaModel {
    std::vector<int> channels;
    std::vector<double> mean_positive;
    std::vector<double> mean_negative;
    /// Pooled within-class covariance before regularization, row-major d x d.
    std::vector<double> covariance;
    double prior_positive = 0.5;
    double prior_negative = 0.5;
    std::vector<double> weights;
    double bias = 0.0;
    double lambda = 0.0;

    double score(const double* x) const;
    /// Positive iff the score is strictly greater than zero.
    bool predict(const double* x) const { return score(x) > 0.0; }
};

LdaModel train_lda(const FeatureMatrix& features, const LdaOptions& options = {});

struct PredictionMap {
    Mask cancer;
    Mask predicted;
};

/// Maps are looked up by channel number; a pixel is predicted only when
/// every selected channel is valid there.
PredictionMap predict_map(const LdaModel& model, const std::vector<DociMap>& maps);

struct BlockGrid {
    double block_size_mm = 0.65;
    double pixel_pitch_mm = 0.0;
    std::size_t width = 0;
    std::size_t height = 0;

    BlockGrid() = default;
    BlockGrid(std::size_t width, std::size_t height, double pixel_pitch_mm, double block_size_mm = 0.65);
    std::size_t blocks_x() const;
    std::size_t blocks_y() const;
    std::size_t block_count() const { return blocks_x() * blocks_y(); }
    std::size_t block_of(std::size_t x, std::size_t y) const;
};

struct BlockSet {
    /// Blocks holding at least one tissue pixel.
    std::vector<std::uint8_t> included;
    /// OR of the positive plane over the tissue pixels of each block.
    std::vector<std::uint8_t> positive;

    std::size_t included_count() const;
};

BlockSet blockify(const Mask& positive, const BlockGrid& grid, const Mask& tissue);

struct ConfusionCounts {
    std::int64_t tn = 0;
    std::int64_t fn = 0;
    std::int64_t tp = 0;
    std::int64_t fp = 0;

    std::int64_t total() const { return tn + fn + tp + fp; }
    bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(const BlockSet& truth, const BlockSet& predicted);

struct MetricsRow {
    std::vector<int> channels;
    ConfusionCounts counts;
    /// Empty when the ratio is undefined.
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    std::optional<double> accuracy;
    std::string mode = "resubstitution";
};

MetricsRow metrics(const ConfusionCounts& counts, std::vector<int> channels = {});

/// Percentage with two decimals ("91.86"), or "NA" when undefined.
std::string format_percent(const std::optional<double>& fraction);

/// "[6 8 10]", "[8 9 10]"; a contiguous run of four or more prints as "[2 - 10]".
std::string format_channels(const std::vector<int>& channels);
std::vector<int> parse_channels(const std::string& text);

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

/// Axis-aligned training region with a class label.
struct LabeledRoi {
    PixelRect rect;
    int label = 0;
};

/// Draws `per_class` random size x size regions per class, each lying fully
/// inside that class and inside the column range [x_begin, x_end).
std::vector<LabeledRoi> sample_training_rois(const RasterU16& labels, const std::vector<int>& classes,
                                             std::size_t per_class, std::size_t size, std::uint64_t seed,
                                             std::size_t x_begin = 0, std::size_t x_end = SIZE_MAX);

FeatureMatrix build_features(const std::vector<DociMap>& maps, const std::vector<int>& channels,
                             const std::vector<LabeledRoi>& rois, int positive_label);

enum class EvaluationMode {
    /// Train and evaluate on the whole specimen.
    Resubstitution,
    /// Train on the left half, evaluate blocks of the right half only.
    HeldOut,
};

std::string mode_name(EvaluationMode mode);
EvaluationMode parse_mode(const std::string& name);

struct EvaluationSetup {
    std::vector<DociMap> maps;
    RasterU16 labels;
    Mask tissue;
    int positive_label = 3;
    double pixel_pitch_mm = 0.0;
    double block_size_mm = 0.65;
    /// Training regions; sampled automatically when empty.
    std::vector<LabeledRoi> rois;
    std::size_t rois_per_class = 6;
    std::size_t roi_size = 8;
    std::uint64_t seed = 7;
    EvaluationMode mode = EvaluationMode::Resubstitution;
    LdaOptions lda;

    /// Fills `rois` if empty and checks shapes.
    void prepare(const std::vector<int>& benign_classes);
};

struct Evaluation {
    MetricsRow row;
    LdaModel model;
    PredictionMap prediction;
    BlockSet truth;
    BlockSet predicted;
    BlockGrid grid;
};

Evaluation evaluate_channels(const EvaluationSetup& setup, const std::vector<int>& channels);

/// Every subset of each requested size, ranked by accuracy (descending),
/// ties by the channel lists in lexicographic order.
std::vector<MetricsRow> channel_sweep(const EvaluationSetup& setup, const std::vector<int>& sizes);

/// Number of k-subsets of n items.
std::size_t choose(std::size_t n, std::size_t k);
std::vector<std::vector<int>> combinations(const std::vector<int>& items, std::size_t k);

inline constexpr Rgb kOverlayFalseNegative{0, 0, 255};
inline constexpr Rgb kOverlayTruePositive{128, 0, 128};
inline constexpr Rgb kOverlayFalsePositive{255, 0, 0};
inline constexpr Rgb kOverlayBoundary{0, 255, 255};

/// Grayscale base; tissue pixels of FN blocks blue, FP red, TP purple, TN
/// left gray; the tissue boundary is traced in cyan.
RgbImage render_overlay(const Evaluation& eval, const Mask& tissue, const RasterD& base);

}  // namespace doci
