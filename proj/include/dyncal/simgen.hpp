#pragma once

// Simulation-study data generator: fixed reference designs, time-varying
// regression coefficients, gain-fluctuation regimes, truth paths, and noisy
// response streams, reproducible from a single seed.
//
// Model per time step t = 1..T:
//   y_jt = beta0_t + (beta1_t + g_t) x_j + eps_jt,  eps ~ N(0, obs_var)
//   y0_t = beta0_t + (beta1_t + g_t [if y0_sees_gain]) x0_t + N(0, y0_noise_var)
//
// theta_t = (beta0_t, beta1_t) is drawn around a fixed mean with covariance
// sys_var * (X'X)^{-1}, either independently per t (default, the study's
// literal process) or as a random walk.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dyncal/csv.hpp"
#include "dyncal/dlm.hpp"
#include "dyncal/stats.hpp"

namespace dyncal {

enum class RefDesign { two, five };
enum class GainKind { constant_zero, stepped, sinusoidal };
enum class TruthCase { interpolation, extrapolation };
enum class ThetaMode { iid, random_walk };
enum class InterpTruthPolicy { constant_center, bounded_walk };

inline constexpr double kThetaMean0 = 12.7434;
inline constexpr double kThetaMean1 = 0.02655;

struct SimConfig {
    RefDesign refs = RefDesign::two;
    std::size_t T = 1000;
    double obs_var = 1e-4;
    double sys_var = 1e-5;
    GainKind gain = GainKind::constant_zero;
    TruthCase truth = TruthCase::interpolation;
    std::size_t replicates = 100;
    std::uint64_t seed = 0;

    ThetaMode theta_mode = ThetaMode::iid;
    InterpTruthPolicy interp_truth = InterpTruthPolicy::constant_center;
    double truth_walk_sd = 0.5;
    // The unknown-target stream is noiseless by default; set to obs_var to
    // give y0 the same noise law as the reference channel.
    double y0_noise_var = 0.0;
    bool y0_sees_gain = true;
    std::vector<double> stepped_levels = {0.05, -0.05, 0.05, -0.05};

    double snr() const { return obs_var / sys_var; }
};

struct SimDataset {
    std::vector<double> x_refs;              // r reference points
    std::vector<std::array<double, 2>> theta;  // (beta0_t, beta1_t)
    std::vector<double> gain;                // g_t
    std::vector<double> y_refs;              // T x r, row-major
    std::vector<double> x0_truth;
    std::vector<double> y0_obs;
    std::size_t n_refs = 0;

    double y_ref(std::size_t t, std::size_t j) const { return y_refs[t * n_refs + j]; }
};

inline std::vector<double> ref_points(RefDesign refs) {
    switch (refs) {
        case RefDesign::two: return {20.0, 100.0};
        case RefDesign::five: return {20.0, 40.0, 60.0, 80.0, 100.0};
    }
    throw std::invalid_argument("ref_points: unknown design");
}

// r x 2 design matrix [1, x_j].
inline Matrix make_design(RefDesign refs) {
    const auto xs = ref_points(refs);
    Matrix X(static_cast<Eigen::Index>(xs.size()), 2);
    for (std::size_t j = 0; j < xs.size(); ++j) {
        X(static_cast<Eigen::Index>(j), 0) = 1.0;
        X(static_cast<Eigen::Index>(j), 1) = xs[j];
    }
    return X;
}

// Gain fluctuation at (possibly fractional) time t. The stepped schedule
// splits 1..T into equal segments whose levels sum to zero.
inline double gain_value(GainKind kind, double t, std::size_t T,
                         const std::vector<double>& levels = {0.05, -0.05, 0.05, -0.05}) {
    switch (kind) {
        case GainKind::constant_zero: return 0.0;
        case GainKind::sinusoidal: return 0.1 * std::sin(0.025 * t);
        case GainKind::stepped: {
            if (levels.empty()) return 0.0;
            if (T == 0 || t < 1.0) return levels.front();
            const auto k = levels.size();
            auto seg = static_cast<std::size_t>((t - 1.0) * static_cast<double>(k) /
                                                static_cast<double>(T));
            if (seg >= k) seg = k - 1;
            return levels[seg];
        }
    }
    throw std::invalid_argument("gain_value: unknown kind");
}

inline std::vector<std::array<double, 2>> gen_theta_path(double sys_var, const Matrix& X,
                                                         std::size_t T,
                                                         std::mt19937_64& rng,
                                                         ThetaMode mode = ThetaMode::iid) {
    const Matrix xtx = X.transpose() * X;
    Eigen::LLT<Matrix> llt(xtx.inverse());
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("gen_theta_path: design is rank deficient");
    const Matrix L = std::sqrt(sys_var) * Matrix(llt.matrixL());

    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<std::array<double, 2>> path(T);
    double b0 = kThetaMean0, b1 = kThetaMean1;
    for (std::size_t t = 0; t < T; ++t) {
        const double z0 = z(rng), z1 = z(rng);
        const double d0 = L(0, 0) * z0;
        const double d1 = L(1, 0) * z0 + L(1, 1) * z1;
        if (mode == ThetaMode::iid) {
            path[t] = {kThetaMean0 + d0, kThetaMean1 + d1};
        } else {
            b0 += d0;
            b1 += d1;
            path[t] = {b0, b1};
        }
    }
    return path;
}

// Reflected Gaussian random walk confined to [lo, hi].
inline std::vector<double> reflected_walk(double start, double lo, double hi, double sd,
                                          std::size_t T, std::mt19937_64& rng) {
    if (!(lo < hi) || start < lo || start > hi)
        throw std::invalid_argument("reflected_walk: bad bounds");
    std::normal_distribution<double> step(0.0, 1.0);
    std::vector<double> path(T);
    double x = start;
    for (std::size_t t = 0; t < T; ++t) {
        x += sd * step(rng);
        while (x < lo || x > hi) {
            if (x > hi) x = 2.0 * hi - x;
            if (x < lo) x = 2.0 * lo - x;
        }
        path[t] = x;
    }
    return path;
}

inline std::vector<double> gen_x0_truth(const SimConfig& cfg, std::mt19937_64& rng) {
    if (cfg.truth == TruthCase::extrapolation)
        return reflected_walk(105.0, 100.0, 110.0, cfg.truth_walk_sd, cfg.T, rng);
    if (cfg.interp_truth == InterpTruthPolicy::bounded_walk)
        return reflected_walk(60.0, 20.0, 100.0, cfg.truth_walk_sd, cfg.T, rng);
    return std::vector<double>(cfg.T, 60.0);
}

// Assembles a full dataset. Draw order is fixed (theta, truth, reference
// noise t-major, y0 noise) so a seed pins every byte of the output.
inline SimDataset gen_dataset(const SimConfig& cfg) {
    if (cfg.T == 0) throw std::invalid_argument("gen_dataset: T >= 1");
    SimDataset ds;
    ds.x_refs = ref_points(cfg.refs);
    ds.n_refs = ds.x_refs.size();
    const Matrix X = make_design(cfg.refs);

    auto rng = substream_engine(cfg.seed, 0x5157u);
    ds.theta = gen_theta_path(cfg.sys_var, X, cfg.T, rng, cfg.theta_mode);
    ds.x0_truth = gen_x0_truth(cfg, rng);

    ds.gain.resize(cfg.T);
    for (std::size_t t = 0; t < cfg.T; ++t)
        ds.gain[t] =
            gain_value(cfg.gain, static_cast<double>(t + 1), cfg.T, cfg.stepped_levels);

    std::normal_distribution<double> z(0.0, 1.0);
    const double eps_sd = std::sqrt(cfg.obs_var);
    ds.y_refs.resize(cfg.T * ds.n_refs);
    for (std::size_t t = 0; t < cfg.T; ++t) {
        const auto [b0, b1] = ds.theta[t];
        const double slope = b1 + ds.gain[t];
        for (std::size_t j = 0; j < ds.n_refs; ++j)
            ds.y_refs[t * ds.n_refs + j] = b0 + slope * ds.x_refs[j] + eps_sd * z(rng);
    }

    const double y0_sd = std::sqrt(cfg.y0_noise_var);
    ds.y0_obs.resize(cfg.T);
    for (std::size_t t = 0; t < cfg.T; ++t) {
        const auto [b0, b1] = ds.theta[t];
        const double slope = b1 + (cfg.y0_sees_gain ? ds.gain[t] : 0.0);
        double y0 = b0 + slope * ds.x0_truth[t];
        if (y0_sd > 0.0) y0 += y0_sd * z(rng);
        ds.y0_obs[t] = y0;
    }
    return ds;
}

inline void write_dataset_csv(const SimDataset& ds, const std::string& path) {
    auto out = open_for_write(path);
    out << "#refs=";
    for (std::size_t j = 0; j < ds.n_refs; ++j)
        out << (j ? "," : "") << format_g17(ds.x_refs[j]);
    out << "\n";
    out << "t,x0_truth,y0_obs";
    for (std::size_t j = 1; j <= ds.n_refs; ++j) out << ",y_ref_" << j;
    out << ",beta0,beta1,gain\n";
    for (std::size_t t = 0; t < ds.y0_obs.size(); ++t) {
        out << (t + 1) << ',' << format_g17(ds.x0_truth[t]) << ','
            << format_g17(ds.y0_obs[t]);
        for (std::size_t j = 0; j < ds.n_refs; ++j)
            out << ',' << format_g17(ds.y_ref(t, j));
        out << ',' << format_g17(ds.theta[t][0]) << ',' << format_g17(ds.theta[t][1])
            << ',' << format_g17(ds.gain[t]) << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

inline SimDataset read_dataset_csv(const std::string& path) {
    auto in = open_for_read(path);
    SimDataset ds;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("#refs=", 0) == 0) {
                for (const auto& f : split_csv_line(line.substr(6)))
                    ds.x_refs.push_back(parse_double(f, lineno));
            }
            continue;
        }
        if (!header_seen) {
            const auto cols = split_csv_line(line);
            if (cols.size() < 7 || cols[0] != "t")
                throw ParseError("unexpected dataset header", lineno);
            ds.n_refs = cols.size() - 6;
            header_seen = true;
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != ds.n_refs + 6)
            throw ParseError("wrong field count", lineno);
        ds.x0_truth.push_back(parse_double(f[1], lineno));
        ds.y0_obs.push_back(parse_double(f[2], lineno));
        for (std::size_t j = 0; j < ds.n_refs; ++j)
            ds.y_refs.push_back(parse_double(f[3 + j], lineno));
        ds.theta.push_back({parse_double(f[3 + ds.n_refs], lineno),
                            parse_double(f[4 + ds.n_refs], lineno)});
        ds.gain.push_back(parse_double(f[5 + ds.n_refs], lineno));
    }
    if (!header_seen) throw ParseError("missing dataset header", lineno ? lineno : 1);
    if (ds.x_refs.size() != ds.n_refs)
        throw ParseError("#refs metadata does not match y_ref column count",
                         lineno ? lineno : 1);
    return ds;
}

}  // namespace dyncal
