#pragma once

// Small statistical utilities shared across the library: substream RNG
// derivation, empirical quantiles, log-weight handling, and deterministic
// t / normal quantiles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace dyncal {

// SplitMix64 step; used to scramble (seed, stream) pairs so that substreams
// are decorrelated and independent of scheduling order.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic engine for stream `id` under `master`. Derivation depends
// only on the pair, never on call order.
inline std::mt19937_64 substream_engine(std::uint64_t master, std::uint64_t id) {
    std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (id + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

inline double mean_of(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("mean_of: empty input");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Sample variance with divisor n-1.
inline double variance_of(std::span<const double> v) {
    if (v.size() < 2) throw std::invalid_argument("variance_of: need n >= 2");
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

inline double sd_of(std::span<const double> v) { return std::sqrt(variance_of(v)); }

// Empirical quantile, type-7 convention (linear interpolation between order
// statistics): h = (n-1)p, q = x_(lo) + (h-lo) * (x_(lo+1) - x_(lo)).
// Sorts a copy; callers with presorted data use quantile_type7_sorted.
inline double quantile_type7_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile: empty input");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p outside [0,1]");
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = static_cast<double>(n - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile_type7(std::span<const double> v, double p) {
    std::vector<double> tmp(v.begin(), v.end());
    std::sort(tmp.begin(), tmp.end());
    return quantile_type7_sorted(tmp, p);
}

inline double median_of(std::span<const double> v) { return quantile_type7(v, 0.5); }

inline double log_sum_exp(std::span<const double> logs) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double w : logs) mx = std::max(mx, w);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double w : logs) s += std::exp(w - mx);
    return mx + std::log(s);
}

// Normalizes log weights to probabilities in place-safe fashion. Entries of
// -inf map to probability zero. Throws when no weight is finite.
inline std::vector<double> normalize_log_weights(std::span<const double> logs) {
    const double lse = log_sum_exp(logs);
    if (!std::isfinite(lse))
        throw std::runtime_error("normalize_log_weights: no finite weight");
    std::vector<double> p(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i) p[i] = std::exp(logs[i] - lse);
    return p;
}

// Effective sample size (sum w)^2 / sum w^2 of normalized weights.
inline double effective_sample_size(std::span<const double> probs) {
    double s2 = 0.0;
    for (double p : probs) s2 += p * p;
    if (s2 <= 0.0) return 0.0;
    return 1.0 / s2;
}

inline double normal_quantile(double p) {
    boost::math::normal_distribution<double> dist(0.0, 1.0);
    return boost::math::quantile(dist, p);
}

inline double student_t_quantile(double p, double df) {
    boost::math::students_t_distribution<double> dist(df);
    return boost::math::quantile(dist, p);
}

inline double normal_logpdf(double x, double mean, double var) {
    static constexpr double log2pi = 1.8378770664093454836;
    return -0.5 * (log2pi + std::log(var) + (x - mean) * (x - mean) / var);
}

}  // namespace dyncal
