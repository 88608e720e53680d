#pragma once

// Evaluation measures for calibrated series: mean squared error, coverage
// probability (strict interior membership), and mean interval width, plus
// arithmetic aggregation across replicates. Burn-in trimming happens in the
// caller; these stay definition-pure.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace dyncal {

struct SeriesMetrics {
    double mse = 0.0;
    double cp = 0.0;
    double iw = 0.0;
    std::size_t t_used = 0;
};

struct AggregateMetrics {
    double av_mse = 0.0;
    double av_cp = 0.0;
    double av_iw = 0.0;
    std::size_t replicates = 0;
};

inline double mse(std::span<const double> estimates, std::span<const double> truth) {
    if (estimates.size() != truth.size() || estimates.empty())
        throw std::invalid_argument("mse: length mismatch or empty");
    double s = 0.0;
    for (std::size_t t = 0; t < truth.size(); ++t) {
        const double d = estimates[t] - truth[t];
        s += d * d;
    }
    return s / static_cast<double>(truth.size());
}

// Fraction of t with lower_t < truth_t < upper_t (strict: a value exactly on
// a bound does not count as covered).
inline double coverage(std::span<const double> lower, std::span<const double> upper,
                       std::span<const double> truth) {
    if (lower.size() != upper.size() || lower.size() != truth.size() || lower.empty())
        throw std::invalid_argument("coverage: length mismatch or empty");
    std::size_t hits = 0;
    for (std::size_t t = 0; t < truth.size(); ++t) {
        if (!(lower[t] <= upper[t]))
            throw std::invalid_argument("coverage: lower > upper");
        if (lower[t] < truth[t] && truth[t] < upper[t]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

inline double interval_width(std::span<const double> lower, std::span<const double> upper) {
    if (lower.size() != upper.size() || lower.empty())
        throw std::invalid_argument("interval_width: length mismatch or empty");
    double s = 0.0;
    for (std::size_t t = 0; t < lower.size(); ++t) s += upper[t] - lower[t];
    return s / static_cast<double>(lower.size());
}

inline SeriesMetrics evaluate_series(std::span<const double> estimates,
                                     std::span<const double> lower,
                                     std::span<const double> upper,
                                     std::span<const double> truth) {
    SeriesMetrics out;
    out.mse = mse(estimates, truth);
    out.cp = coverage(lower, upper, truth);
    out.iw = interval_width(lower, upper);
    out.t_used = truth.size();
    return out;
}

inline AggregateMetrics aggregate(std::span<const SeriesMetrics> per_replicate) {
    if (per_replicate.empty()) throw std::invalid_argument("aggregate: empty list");
    AggregateMetrics out;
    for (const auto& m : per_replicate) {
        out.av_mse += m.mse;
        out.av_cp += m.cp;
        out.av_iw += m.iw;
    }
    const double k = static_cast<double>(per_replicate.size());
    out.av_mse /= k;
    out.av_cp /= k;
    out.av_iw /= k;
    out.replicates = per_replicate.size();
    return out;
}

}  // namespace dyncal
