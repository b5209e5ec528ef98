#include "doci/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "doci/parallel.hpp"

namespace doci {

void FeatureMatrix::add_row(const std::vector<double>& x, int label) {
    require(x.size() == cols, "feature row has the wrong number of columns");
    values.insert(values.end(), x.begin(), x.end());
    labels.push_back(label);
}

double LdaModel::score(const double* x) const {
    double s = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * x[j];
    return s;
}

LdaModel train_lda(const FeatureMatrix& features, const LdaOptions& options) {
    require(std::isfinite(options.lambda) && options.lambda >= 0.0, "lambda must be nonnegative");
    const std::size_t d = features.cols;
    require(d >= 1, "feature matrix has no columns");
    require(features.values.size() == features.rows() * d, "feature matrix storage is inconsistent");
    require(features.channels.empty() || features.channels.size() == d, "channel list does not match columns");

    using Eigen::MatrixXd;
    using Eigen::VectorXd;
    VectorXd mu[2] = {VectorXd::Zero(static_cast<Eigen::Index>(d)), VectorXd::Zero(static_cast<Eigen::Index>(d))};
    std::size_t n[2] = {0, 0};
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const int c = features.is_positive(i) ? 1 : 0;
        for (std::size_t j = 0; j < d; ++j) {
            const double v = features.row(i)[j];
            require(std::isfinite(v), "feature values must be finite");
            mu[c](static_cast<Eigen::Index>(j)) += v;
        }
        ++n[c];
    }
    if (n[0] == 0 || n[1] == 0) fail(ErrorCode::MissingClass, "training data needs both cancer and benign rows");
    require(n[0] >= 2 && n[1] >= 2, "training needs at least two rows per class");
    mu[0] /= static_cast<double>(n[0]);
    mu[1] /= static_cast<double>(n[1]);

    MatrixXd scatter = MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const int c = features.is_positive(i) ? 1 : 0;
        VectorXd r = Eigen::Map<const VectorXd>(features.row(i), static_cast<Eigen::Index>(d)) - mu[c];
        scatter.noalias() += r * r.transpose();
    }
    MatrixXd sigma = scatter / static_cast<double>(n[0] + n[1] - 2);
    sigma = 0.5 * (sigma + sigma.transpose());

    LdaModel m;
    m.channels = features.channels;
    m.lambda = options.lambda;
    m.covariance.assign(sigma.data(), sigma.data() + d * d);
    m.mean_negative.assign(mu[0].data(), mu[0].data() + d);
    m.mean_positive.assign(mu[1].data(), mu[1].data() + d);
    if (options.equal_priors) {
        m.prior_positive = m.prior_negative = 0.5;
    } else {
        m.prior_positive = static_cast<double>(n[1]) / static_cast<double>(n[0] + n[1]);
        m.prior_negative = 1.0 - m.prior_positive;
    }

    const double trace = sigma.trace();
    const double ridge = trace > 0.0 ? options.lambda * trace / static_cast<double>(d) : options.lambda;
    MatrixXd reg = sigma + ridge * MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));

    Eigen::JacobiSVD<MatrixXd> svd(reg, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(sv.size() - 1) <= 1e-13 * sv(0)) {
        fail(ErrorCode::SingularCovariance, "pooled covariance is singular; increase lambda or drop collinear channels");
    }
    const VectorXd w = svd.solve(mu[1] - mu[0]);
    m.weights.assign(w.data(), w.data() + d);
    m.bias = -0.5 * w.dot(mu[1] + mu[0]) + std::log(m.prior_positive / m.prior_negative);
    return m;
}

namespace {

const DociMap& find_map(const std::vector<DociMap>& maps, int channel) {
    for (const auto& m : maps) {
        if (m.channel_number == channel) return m;
    }
    fail(ErrorCode::NotFound, "channel " + std::to_string(channel) + " is missing from the stack");
}

}  // namespace

PredictionMap predict_map(const LdaModel& model, const std::vector<DociMap>& maps) {
    require(!model.channels.empty() && model.channels.size() == model.weights.size(),
            "model channels do not match its weights");
    std::vector<const DociMap*> sel;
    for (int ch : model.channels) sel.push_back(&find_map(maps, ch));
    const std::size_t w = sel.front()->values.width();
    const std::size_t h = sel.front()->values.height();
    for (const DociMap* m : sel) {
        require_same_shape(m->values, sel.front()->values, "predict_map");
        require_same_shape(m->valid, m->values, "predict_map");
    }
    PredictionMap out{Mask(w, h, 0), Mask(w, h, 0)};
    std::vector<double> x(sel.size());
    for (std::size_t i = 0; i < w * h; ++i) {
        bool ok = true;
        for (std::size_t j = 0; j < sel.size(); ++j) {
            if (!sel[j]->valid[i]) {
                ok = false;
                break;
            }
            x[j] = sel[j]->values[i];
        }
        if (!ok) continue;
        out.predicted[i] = 1;
        out.cancer[i] = model.predict(x.data()) ? 1 : 0;
    }
    return out;
}

BlockGrid::BlockGrid(std::size_t w, std::size_t h, double pitch, double size)
    : block_size_mm(size), pixel_pitch_mm(pitch), width(w), height(h) {
    require(std::isfinite(size) && size > 0.0, "block size must be positive");
    require(std::isfinite(pitch) && pitch > 0.0, "pixel pitch must be positive");
}

std::size_t BlockGrid::blocks_x() const {
    return width == 0 ? 0 : block_of(width - 1, 0) + 1;
}

std::size_t BlockGrid::blocks_y() const {
    if (height == 0) return 0;
    return static_cast<std::size_t>(std::floor(static_cast<double>(height - 1) * pixel_pitch_mm / block_size_mm)) + 1;
}

std::size_t BlockGrid::block_of(std::size_t x, std::size_t y) const {
    const auto bx = static_cast<std::size_t>(std::floor(static_cast<double>(x) * pixel_pitch_mm / block_size_mm));
    const auto by = static_cast<std::size_t>(std::floor(static_cast<double>(y) * pixel_pitch_mm / block_size_mm));
    const std::size_t nx =
        static_cast<std::size_t>(std::floor(static_cast<double>(width - 1) * pixel_pitch_mm / block_size_mm)) + 1;
    return by * nx + bx;
}

std::size_t BlockSet::included_count() const {
    return static_cast<std::size_t>(std::count(included.begin(), included.end(), std::uint8_t{1}));
}

BlockSet blockify(const Mask& positive, const BlockGrid& grid, const Mask& tissue) {
    require_same_shape(positive, tissue, "blockify");
    require(positive.same_shape(grid.width, grid.height), "block grid does not cover the raster");
    BlockSet out;
    out.included.assign(grid.block_count(), 0);
    out.positive.assign(grid.block_count(), 0);
    for (std::size_t y = 0; y < grid.height; ++y) {
        for (std::size_t x = 0; x < grid.width; ++x) {
            if (!tissue(x, y)) continue;
            const std::size_t b = grid.block_of(x, y);
            out.included[b] = 1;
            if (positive(x, y)) out.positive[b] = 1;
        }
    }
    return out;
}

ConfusionCounts confusion(const BlockSet& truth, const BlockSet& predicted) {
    if (truth.included != predicted.included || truth.positive.size() != predicted.positive.size()) {
        fail(ErrorCode::ShapeMismatch, "truth and prediction cover different blocks");
    }
    ConfusionCounts c;
    for (std::size_t b = 0; b < truth.included.size(); ++b) {
        if (!truth.included[b]) continue;
        const bool t = truth.positive[b] != 0;
        const bool p = predicted.positive[b] != 0;
        if (t && p) ++c.tp;
        else if (t) ++c.fn;
        else if (p) ++c.fp;
        else ++c.tn;
    }
    return c;
}

MetricsRow metrics(const ConfusionCounts& counts, std::vector<int> channels) {
    require(counts.tn >= 0 && counts.fn >= 0 && counts.tp >= 0 && counts.fp >= 0, "confusion counts must be nonnegative");
    MetricsRow row;
    row.channels = std::move(channels);
    row.counts = counts;
    auto ratio = [](std::int64_t num, std::int64_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    row.sensitivity = ratio(counts.tp, counts.tp + counts.fn);
    row.specificity = ratio(counts.tn, counts.tn + counts.fp);
    row.accuracy = ratio(counts.tn + counts.tp, counts.total());
    return row;
}

std::string format_percent(const std::optional<double>& fraction) {
    if (!fraction) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * *fraction);
    return buf;
}

std::string format_channels(const std::vector<int>& channels) {
    bool run = channels.size() >= 4;
    for (std::size_t i = 1; run && i < channels.size(); ++i) run = channels[i] == channels[i - 1] + 1;
    if (run) return "[" + std::to_string(channels.front()) + " - " + std::to_string(channels.back()) + "]";
    std::string s = "[";
    for (std::size_t i = 0; i < channels.size(); ++i) {
        if (i) s += ' ';
        s += std::to_string(channels[i]);
    }
    return s + "]";
}

std::vector<int> parse_channels(const std::string& text) {
    std::string body = text;
    const auto first = body.find_first_not_of(" \t");
    const auto last = body.find_last_not_of(" \t");
    require(first != std::string::npos, "empty channel list");
    body = body.substr(first, last - first + 1);
    if (body.front() == '[') {
        require(body.back() == ']', "unterminated channel list: " + text);
        body = body.substr(1, body.size() - 2);
    }
    for (char& c : body) {
        if (c == ',') c = ' ';
    }
    std::vector<std::string> tokens;
    {
        std::istringstream in(body);
        for (std::string tok; in >> tok;) {
            // "2-10" without spaces
            const auto dash = tok.find('-', 1);
            if (tok != "-" && dash != std::string::npos) {
                tokens.push_back(tok.substr(0, dash));
                tokens.push_back("-");
                if (dash + 1 < tok.size()) tokens.push_back(tok.substr(dash + 1));
            } else {
                tokens.push_back(tok);
            }
        }
    }
    auto number = [&](const std::string& tok) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        require(used == tok.size() && used > 0, "bad channel token '" + tok + "' in " + text);
        if (!is_channel_number(v)) fail(ErrorCode::NotFound, "unknown filter channel " + tok);
        return v;
    };
    std::set<int> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        require(tokens[i] != "-", "dangling range in channel list: " + text);
        const int a = number(tokens[i]);
        if (i + 2 < tokens.size() && tokens[i + 1] == "-") {
            const int b = number(tokens[i + 2]);
            require(a <= b, "descending channel range in " + text);
            for (int c = a; c <= b; ++c) out.insert(c);
            i += 2;
        } else {
            require(i + 1 >= tokens.size() || tokens[i + 1] != "-", "dangling range in channel list: " + text);
            out.insert(a);
        }
    }
    require(!out.empty(), "empty channel list");
    return {out.begin(), out.end()};
}

std::string metrics_csv_header() {
    return "Channels,TN,FN,TP,FP,Sensitivity,Specificity,Accuracy,Mode";
}

std::string metrics_csv_row(const MetricsRow& row) {
    auto pct = [](const std::optional<double>& f) { return f ? format_percent(f) + "%" : std::string("NA"); };
    std::ostringstream s;
    s << format_channels(row.channels) << ',' << row.counts.tn << ',' << row.counts.fn << ',' << row.counts.tp << ','
      << row.counts.fp << ',' << pct(row.sensitivity) << ',' << pct(row.specificity) << ',' << pct(row.accuracy)
      << ',' << row.mode;
    return s.str();
}

std::vector<LabeledRoi> sample_training_rois(const RasterU16& labels, const std::vector<int>& classes,
                                             std::size_t per_class, std::size_t size, std::uint64_t seed,
                                             std::size_t x_begin, std::size_t x_end) {
    require(size >= 1 && per_class >= 1, "ROI size and count must be positive");
    const std::size_t w = labels.width();
    const std::size_t h = labels.height();
    x_end = std::min(x_end, w);
    require(x_begin < x_end, "empty column range for training regions");
    std::vector<LabeledRoi> out;
    std::vector<std::size_t> integral((w + 1) * (h + 1));
    for (int cls : classes) {
        std::fill(integral.begin(), integral.end(), 0);
        for (std::size_t y = 0; y < h; ++y) {
            std::size_t rowsum = 0;
            for (std::size_t x = 0; x < w; ++x) {
                rowsum += labels(x, y) == cls ? 1 : 0;
                integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + rowsum;
            }
        }
        std::vector<std::pair<std::size_t, std::size_t>> candidates;
        for (std::size_t y = 0; y + size <= h; ++y) {
            for (std::size_t x = x_begin; x + size <= x_end; ++x) {
                const std::size_t s = integral[(y + size) * (w + 1) + x + size] - integral[y * (w + 1) + x + size] -
                                      integral[(y + size) * (w + 1) + x] + integral[y * (w + 1) + x];
                if (s == size * size) candidates.emplace_back(x, y);
            }
        }
        if (candidates.empty()) {
            fail(ErrorCode::MissingClass, "class " + std::to_string(cls) + " has no room for a training region");
        }
        std::mt19937_64 rng(splitmix64(seed ^ (static_cast<std::uint64_t>(cls) << 32)));
        std::shuffle(candidates.begin(), candidates.end(), rng);
        for (std::size_t k = 0; k < std::min(per_class, candidates.size()); ++k) {
            out.push_back(LabeledRoi{PixelRect{candidates[k].first, candidates[k].second, size, size}, cls});
        }
    }
    return out;
}

FeatureMatrix build_features(const std::vector<DociMap>& maps, const std::vector<int>& channels,
                             const std::vector<LabeledRoi>& rois, int positive_label) {
    require(!channels.empty(), "no channels selected");
    FeatureMatrix fm;
    fm.channels = channels;
    fm.cols = channels.size();
    fm.positive_label = positive_label;
    std::vector<const DociMap*> sel;
    for (int ch : channels) sel.push_back(&find_map(maps, ch));
    std::vector<double> x(channels.size());
    for (const auto& roi : rois) {
        const std::size_t w = sel.front()->values.width();
        const std::size_t h = sel.front()->values.height();
        for (std::size_t y = roi.rect.y; y < std::min(h, roi.rect.y + roi.rect.h); ++y) {
            for (std::size_t xx = roi.rect.x; xx < std::min(w, roi.rect.x + roi.rect.w); ++xx) {
                bool ok = true;
                for (std::size_t j = 0; j < sel.size() && ok; ++j) {
                    ok = sel[j]->valid(xx, y) != 0;
                    x[j] = sel[j]->values(xx, y);
                }
                if (ok) fm.add_row(x, roi.label);
            }
        }
    }
    return fm;
}

std::string mode_name(EvaluationMode mode) {
    return mode == EvaluationMode::HeldOut ? "held-out" : "resubstitution";
}

EvaluationMode parse_mode(const std::string& name) {
    if (name == "resubstitution") return EvaluationMode::Resubstitution;
    if (name == "held-out" || name == "heldout" || name == "held_out") return EvaluationMode::HeldOut;
    fail(ErrorCode::InvalidArgument, "unknown evaluation mode '" + name + "'");
}

void EvaluationSetup::prepare(const std::vector<int>& benign_classes) {
    require(!maps.empty(), "no DOCI maps to evaluate");
    require(!labels.empty(), "classification needs a ground-truth label map");
    require(std::isfinite(pixel_pitch_mm) && pixel_pitch_mm > 0.0, "pixel pitch must be positive");
    for (const auto& m : maps) require_same_shape(m.values, labels, "label map vs DOCI map");
    require_same_shape(tissue, labels, "tissue mask vs label map");
    if (!rois.empty()) return;
    std::vector<int> classes{positive_label};
    classes.insert(classes.end(), benign_classes.begin(), benign_classes.end());
    const std::size_t x_end = mode == EvaluationMode::HeldOut ? labels.width() / 2 : labels.width();
    rois = sample_training_rois(labels, classes, rois_per_class, roi_size, seed, 0, x_end);
}

Evaluation evaluate_channels(const EvaluationSetup& setup, const std::vector<int>& channels) {
    require(!setup.rois.empty(), "no training regions; call prepare() first");
    Evaluation ev;
    const FeatureMatrix fm = build_features(setup.maps, channels, setup.rois, setup.positive_label);
    ev.model = train_lda(fm, setup.lda);
    ev.prediction = predict_map(ev.model, setup.maps);

    const std::size_t w = setup.labels.width();
    const std::size_t h = setup.labels.height();
    Mask eval_tissue = setup.tissue;
    if (setup.mode == EvaluationMode::HeldOut) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w / 2; ++x) eval_tissue(x, y) = 0;
        }
    }
    Mask truth(w, h, 0);
    for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = setup.labels[i] == setup.positive_label ? 1 : 0;
    ev.grid = BlockGrid(w, h, setup.pixel_pitch_mm, setup.block_size_mm);
    ev.truth = blockify(truth, ev.grid, eval_tissue);
    ev.predicted = blockify(ev.prediction.cancer, ev.grid, eval_tissue);
    ev.row = metrics(confusion(ev.truth, ev.predicted), channels);
    ev.row.mode = mode_name(setup.mode);
    return ev;
}

std::size_t choose(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

std::vector<std::vector<int>> combinations(const std::vector<int>& items, std::size_t k) {
    std::vector<std::vector<int>> out;
    if (k == 0 || k > items.size()) return out;
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        std::vector<int> combo;
        for (std::size_t i : idx) combo.push_back(items[i]);
        out.push_back(std::move(combo));
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == items.size() - k + i - 1) --i;
        if (i == 0) break;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
}

std::vector<MetricsRow> channel_sweep(const EvaluationSetup& setup, const std::vector<int>& sizes) {
    std::vector<int> available;
    for (const auto& m : setup.maps) available.push_back(m.channel_number);
    std::sort(available.begin(), available.end());
    require(std::adjacent_find(available.begin(), available.end()) == available.end(), "duplicate channel maps");
    require(available.size() == kChannelCount, "a channel sweep needs all nine channels");

    std::vector<std::vector<int>> subsets;
    for (int k : sizes) {
        require(k >= 1 && static_cast<std::size_t>(k) <= available.size(), "subset size out of range");
        auto c = combinations(available, static_cast<std::size_t>(k));
        subsets.insert(subsets.end(), c.begin(), c.end());
    }
    std::vector<MetricsRow> rows(subsets.size());
    parallel_for(subsets.size(), [&](std::size_t i) { rows[i] = evaluate_channels(setup, subsets[i]).row; });
    std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
        const double aa = a.accuracy.value_or(-1.0);
        const double ba = b.accuracy.value_or(-1.0);
        if (aa != ba) return aa > ba;
        return a.channels < b.channels;
    });
    return rows;
}

RgbImage render_overlay(const Evaluation& eval, const Mask& tissue, const RasterD& base) {
    require_same_shape(tissue, base, "render_overlay");
    const std::size_t w = base.width();
    const std::size_t h = base.height();
    require(eval.grid.width == w && eval.grid.height == h, "evaluation grid does not match the base image");
    RgbImage img = render_intensity(base);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            if (!tissue(x, y)) continue;
            const std::size_t b = eval.grid.block_of(x, y);
            if (!eval.truth.included[b]) continue;
            const bool t = eval.truth.positive[b] != 0;
            const bool p = eval.predicted.positive[b] != 0;
            if (t && p) img(x, y) = kOverlayTruePositive;
            else if (t) img(x, y) = kOverlayFalseNegative;
            else if (p) img(x, y) = kOverlayFalsePositive;
        }
    }
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            if (!tissue(x, y)) continue;
            const bool edge = x == 0 || y == 0 || x + 1 == w || y + 1 == h || !tissue(x - 1, y) || !tissue(x + 1, y) ||
                              !tissue(x, y - 1) || !tissue(x, y + 1);
            if (edge) img(x, y) = kOverlayBoundary;
        }
    }
    return img;
}

}  // namespace doci
