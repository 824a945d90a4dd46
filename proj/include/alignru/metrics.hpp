#ifndef ALIGNRU_METRICS_HPP
#define ALIGNRU_METRICS_HPP

#include "alignru/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace alignru {

// Micro-averaged 3-way classification. confusion[gold][predicted].
struct ClassificationResult {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    std::array<std::array<std::size_t, 3>, 3> confusion{};
    std::size_t n = 0;
};

struct BinaryResult {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double roc_auc = 0.0;
    double threshold = 0.5;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
    // Set when the metric's denominator was zero and the value was defined as 0.
    bool precision_undefined = false;
    bool recall_undefined = false;
};

struct RegressionResult {
    double mse = 0.0;
    double r2 = 0.0;
    std::size_t n = 0;
};

namespace detail {

inline void require_same_length(std::size_t a, std::size_t b) {
    if (a != b) {
        throw Error(ErrorCode::LengthMismatch, std::to_string(a) + " predictions vs " + std::to_string(b) + " gold labels");
    }
}

inline void require_binary_gold(std::span<const int> gold) {
    for (int g : gold) {
        if (g != 0 && g != 1) {
            throw Error(ErrorCode::InvalidArgument, "binary gold labels must be 0 or 1");
        }
    }
}

}  // namespace detail

inline ClassificationResult eval_3way(std::span<const std::size_t> predicted, std::span<const std::size_t> gold) {
    detail::require_same_length(predicted.size(), gold.size());
    if (gold.empty()) {
        throw Error(ErrorCode::EmptyInput, "no examples");
    }
    ClassificationResult r;
    r.n = gold.size();
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (predicted[i] > 2 || gold[i] > 2) {
            throw Error(ErrorCode::InvalidArgument, "class index outside {0, 1, 2}");
        }
        ++r.confusion[gold[i]][predicted[i]];
    }
    // Pooled over classes every false positive is some other class's false
    // negative, so TP + FP = TP + FN = n and all four metrics are correct / n.
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t p = 0; p < 3; ++p) {
            if (c == p) {
                tp += r.confusion[c][p];
            } else {
                fn += r.confusion[c][p];
                fp += r.confusion[c][p];
            }
        }
    }
    const auto d = [](std::size_t x) { return static_cast<double>(x); };
    r.precision = d(tp) / d(tp + fp);
    r.recall = d(tp) / d(tp + fn);
    r.f1 = d(2 * tp) / d(2 * tp + fp + fn);
    r.accuracy = d(tp) / d(r.n);
    return r;
}

// Probability that a random positive outranks a random negative, ties worth
// one half. Sorting and walking tie groups keeps it O(n log n).
inline double roc_auc(std::span<const double> scores, std::span<const int> gold) {
    detail::require_same_length(scores.size(), gold.size());
    if (gold.empty()) {
        throw Error(ErrorCode::EmptyInput, "no examples");
    }
    detail::require_binary_gold(gold);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (double s : scores) {
        if (std::isnan(s)) {
            throw Error(ErrorCode::InvalidArgument, "NaN score");
        }
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    const auto n_pos = static_cast<std::size_t>(std::count(gold.begin(), gold.end(), 1));
    const std::size_t n_neg = gold.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw Error(ErrorCode::SingleClassAUC, "ROC AUC needs both classes in the gold labels");
    }
    // Twice the concordant-pair count, so ties stay integral.
    std::size_t twice_concordant = 0;
    std::size_t negatives_below = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        std::size_t pos = 0;
        std::size_t neg = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (gold[order[j]] == 1 ? pos : neg) += 1;
            ++j;
        }
        twice_concordant += 2 * pos * negatives_below + pos * neg;
        negatives_below += neg;
        i = j;
    }
    return static_cast<double>(twice_concordant) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace detail {

inline void fill_prf(BinaryResult& r) {
    const auto d = [](std::size_t x) { return static_cast<double>(x); };
    r.precision_undefined = r.tp + r.fp == 0;
    r.recall_undefined = r.tp + r.fn == 0;
    r.precision = r.precision_undefined ? 0.0 : d(r.tp) / d(r.tp + r.fp);
    r.recall = r.recall_undefined ? 0.0 : d(r.tp) / d(r.tp + r.fn);
    r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
}

}  // namespace detail

// Thresholded P/R/F1 (score >= threshold is positive) plus threshold-free AUC.
inline BinaryResult eval_binary(std::span<const double> scores, std::span<const int> gold, double threshold = 0.5) {
    detail::require_same_length(scores.size(), gold.size());
    if (gold.empty()) {
        throw Error(ErrorCode::EmptyInput, "no examples");
    }
    detail::require_binary_gold(gold);
    for (double s : scores) {
        if (!(s >= 0.0 && s <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "binary scores must lie in [0, 1]");
        }
    }
    BinaryResult r;
    r.threshold = threshold;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        const bool actual = gold[i] == 1;
        if (predicted && actual) ++r.tp;
        else if (predicted) ++r.fp;
        else if (actual) ++r.fn;
        else ++r.tn;
    }
    detail::fill_prf(r);
    r.roc_auc = roc_auc(scores, gold);
    return r;
}

inline RegressionResult eval_regression(std::span<const double> predicted, std::span<const double> gold) {
    detail::require_same_length(predicted.size(), gold.size());
    if (gold.size() < 2) {
        throw Error(ErrorCode::EmptyInput, "regression evaluation needs at least 2 examples");
    }
    const double n = static_cast<double>(gold.size());
    const double mean = std::accumulate(gold.begin(), gold.end(), 0.0) / n;
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const double residual = gold[i] - predicted[i];
        const double deviation = gold[i] - mean;
        ss_res += residual * residual;
        ss_tot += deviation * deviation;
    }
    if (ss_tot == 0.0) {
        throw Error(ErrorCode::ZeroVariance, "gold labels have zero variance; R^2 undefined");
    }
    RegressionResult r;
    r.n = gold.size();
    r.mse = ss_res / n;
    r.r2 = 1.0 - ss_res / ss_tot;
    return r;
}

struct ThresholdPoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct Calibration {
    double best_threshold = 0.5;
    double best_f1 = 0.0;
    std::vector<ThresholdPoint> curve;  // ascending thresholds
};

// Sweeps candidate thresholds drawn from the observed scores (all distinct
// values, or evenly spaced order statistics of them when there are more than
// `max_candidates`) and returns the F1-maximizing one; ties go to the lower
// threshold.
inline Calibration calibrate_threshold(std::span<const double> scores, std::span<const int> gold,
                                       std::size_t max_candidates = 1000) {
    detail::require_same_length(scores.size(), gold.size());
    if (gold.empty()) {
        throw Error(ErrorCode::EmptyInput, "no examples");
    }
    detail::require_binary_gold(gold);
    const auto n_pos = static_cast<std::size_t>(std::count(gold.begin(), gold.end(), 1));
    if (n_pos == 0 || n_pos == gold.size()) {
        throw Error(ErrorCode::SingleClassAUC, "calibration needs both classes in the gold labels");
    }
    for (double s : scores) {
        if (std::isnan(s)) {
            throw Error(ErrorCode::InvalidArgument, "NaN score");
        }
    }

    std::vector<double> distinct(scores.begin(), scores.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> candidates;
    if (max_candidates == 0 || distinct.size() <= max_candidates) {
        candidates = distinct;
    } else {
        for (std::size_t q = 0; q < max_candidates; ++q) {
            candidates.push_back(distinct[q * (distinct.size() - 1) / (max_candidates - 1)]);
        }
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    }

    // Walk thresholds from high to low; examples with score >= t are positive.
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    Calibration result;
    result.curve.resize(candidates.size());
    std::size_t cursor = 0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t c = candidates.size(); c-- > 0;) {
        const double t = candidates[c];
        while (cursor < order.size() && scores[order[cursor]] >= t) {
            (gold[order[cursor]] == 1 ? tp : fp) += 1;
            ++cursor;
        }
        BinaryResult point;
        point.tp = tp;
        point.fp = fp;
        point.fn = n_pos - tp;
        detail::fill_prf(point);
        result.curve[c] = ThresholdPoint{t, point.precision, point.recall, point.f1};
    }
    result.best_threshold = result.curve.front().threshold;
    result.best_f1 = result.curve.front().f1;
    for (const auto& p : result.curve) {
        if (p.f1 > result.best_f1) {
            result.best_f1 = p.f1;
            result.best_threshold = p.threshold;
        }
    }
    return result;
}

}  // namespace alignru

#endif  // ALIGNRU_METRICS_HPP
