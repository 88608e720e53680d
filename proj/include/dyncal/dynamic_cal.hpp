#pragma once

// Sequential calibration of an unknown input series from reference responses.
//
// Pipeline per proposal: draw a variance pair (observation, evolution), run
// the scalar slope filter on standardized reference responses, invert each
// one-step slope estimate into a candidate input value, and weight the
// proposal by its predictive log likelihood. Proposals are then resampled in
// proportion to their weights and the retained draws summarized per time
// point. Two inversion rules are provided:
//   ratio inversion     (md1): x = y0* / theta_hat
//   shrinkage inversion (md2): x ~ N(xi / (1 + v), 1 / (1 + v)), v = trace
//                              of the forecast covariance, xi = y0* / theta_hat

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dyncal/dlm.hpp"
#include "dyncal/parallel.hpp"
#include "dyncal/stats.hpp"

namespace dyncal {

enum class DynMethod { md1, md2 };

// How proposal variance pairs are drawn. `prior` uses the triangle prior
// itself as candidate; `log_uniform` spreads candidates evenly in log scale
// (far better tail coverage when the data want tiny variances) and corrects
// the weights by the prior-to-candidate density ratio.
enum class ProposalPolicy { prior, log_uniform };

// Ratio-inversion draw handling. `deterministic` emits x = y0*/theta_hat as
// is; `posterior_smear` keeps that value as the draw center and adds noise
// whose dispersion lives on the original x scale: a unit-prior component with
// precision (2 + v), where v is the post-update predictive trace of the
// reference block, plus the first-order variance of the center itself
// (x_sd^2 xi^2 C_t / theta_hat^2, zero at the design centre). The unit-prior
// component keeps interval width stable across reference-noise levels; the
// first-order component widens intervals exactly where the inversion is
// genuinely less certain (extrapolation).
enum class Md1Policy { deterministic, posterior_smear };

// Mapping shrinkage-inversion draws back to original units. `full` applies
// the affine rescale to the whole draw; `center_only` rescales the shrunken
// center while keeping the posterior draw noise in original units, which
// keeps interval width stable as the reference noise shrinks. Under
// `center_only` the noise dispersion also carries the center's first-order
// inversion variance and its shrinkage displacement, both zero at the design
// centre, so extrapolation intervals stay honest.
enum class Md2Rescale { full, center_only };

// Centering used when standardizing responses. `cumulative` centers time t
// by the mean of all reference responses up to t (averaging noise away as t
// grows); `per_time` centers by the time-t reference mean only, which tracks
// fast common-mode drift at the price of extra noise.
enum class YbarPolicy { cumulative, per_time };

struct VariancePair {
    double obs_var = 0.0;  // scaled observation variance, (0, 1)
    double sys_var = 0.0;  // slope evolution variance, (0, obs_var)

    bool valid() const {
        return obs_var > 0.0 && obs_var < 1.0 && sys_var > 0.0 &&
               sys_var < obs_var;
    }
};

struct DynCalOptions {
    DynMethod method = DynMethod::md2;
    std::size_t proposals = 5000;  // variance pairs tried
    std::size_t accepted = 1000;   // draws kept after resampling
    std::size_t burn_in = 0;       // leading points excluded from metrics
    double level = 0.95;           // central interval mass
    std::uint64_t seed = 0;

    double prior_mean = 1.0;       // slope prior mean (scaled)
    double prior_var = 100.0;      // slope prior variance (scaled)

    ProposalPolicy proposal_policy = ProposalPolicy::log_uniform;
    double proposal_obs_floor = 1e-8;    // lower edge of log-uniform obs_var
    double proposal_sys_ratio = 1e-9;    // sys_var floor as fraction of obs_var

    Md1Policy md1_policy = Md1Policy::posterior_smear;
    Md2Rescale md2_rescale = Md2Rescale::center_only;
    YbarPolicy ybar_policy = YbarPolicy::cumulative;

    double slope_guard = 0.02;        // |theta_hat| below this flags the step
    double flag_fraction_cutoff = 0.5;  // > this flagged => proposal discarded
    std::size_t threads = 0;          // 0 = automatic
};

// Reference design and responses mapped to the standardized scale used by
// the filter. Raw responses are recovered exactly as
//   y_raw(t, j) = y_star[t * r + j] + cum_means[t]
//   x_raw(j)    = x_mean + x_sd * x_scaled[j]
struct ScaledCalibration {
    std::vector<double> x_scaled;   // r values, sum 0, mean square 1
    double x_mean = 0.0;
    double x_sd = 0.0;
    std::vector<double> y_star;     // T x r, row-major, centered responses
    std::vector<double> y0_star;    // T centered unknown-channel responses
    std::vector<double> cum_means;  // per-time centering value ybar_t
    std::size_t n_refs = 0;
    std::size_t n_times = 0;
};

// One filtered proposal. x0_scaled holds the draw per time point on the
// standardized scale; center_scaled holds the pre-noise inversion center
// (needed by the center_only rescale policy).
struct ProposalRun {
    std::vector<double> x0_scaled;
    std::vector<double> center_scaled;
    // Per-time draw distribution in original x units: the assembled draw at
    // time t is distributed N(center_x[t], spread_x[t]^2) given this
    // proposal's variance pair (spread 0 for deterministic policies).
    std::vector<double> center_x;
    std::vector<double> spread_x;
    std::vector<std::uint8_t> flagged;
    std::size_t flag_count = 0;
    double log_weight = -std::numeric_limits<double>::infinity();
};

struct CalibrationDraws {
    std::vector<double> draws;  // accepted x accepted-draw matrix, N x T row-major
    std::size_t n_draws = 0;
    std::size_t n_times = 0;
    DynMethod method = DynMethod::md2;
    std::size_t burn_in = 0;

    double at(std::size_t i, std::size_t t) const {
        return draws[i * n_times + t];
    }
};

struct CalSummarySeries {
    std::vector<double> median;
    std::vector<double> lower;
    std::vector<double> upper;
    double level = 0.95;
};

struct DynDiagnostics {
    std::vector<double> acceptance_mass;  // normalized proposal weights
    double ess = 0.0;                     // effective sample size of the mass
    std::size_t total_flags = 0;          // flags summed over proposals, times
    std::vector<std::uint8_t> flagged_any;  // per t: flagged in any proposal
    std::size_t discarded_proposals = 0;  // weight forced to -inf by flags
};

struct DynamicResult {
    CalibrationDraws draws;
    CalSummarySeries summary;
    DynDiagnostics diagnostics;
};

// Draws `count` variance pairs from the triangle prior: obs_var uniform on
// (0, 1), sys_var uniform on (0, obs_var).
inline std::vector<VariancePair> sample_variance_priors(std::size_t count,
                                                        std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<VariancePair> out;
    out.reserve(count);
    while (out.size() < count) {
        VariancePair p;
        p.obs_var = unit(rng);
        p.sys_var = p.obs_var * unit(rng);
        if (p.valid()) out.push_back(p);
    }
    return out;
}

namespace detail {

// Candidate pair plus log(prior density / candidate density), the weight
// correction that keeps resampling targeted at the true posterior.
struct ProposalPair {
    VariancePair pair;
    double log_correction = 0.0;
};

inline ProposalPair sample_proposal_pair(const DynCalOptions& opts,
                                         std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ProposalPair out;
    if (opts.proposal_policy == ProposalPolicy::prior) {
        while (true) {
            out.pair.obs_var = unit(rng);
            out.pair.sys_var = out.pair.obs_var * unit(rng);
            if (out.pair.valid()) break;
        }
        out.log_correction = 0.0;
        return out;
    }

    const double floor_e = opts.proposal_obs_floor;
    const double ratio_w = opts.proposal_sys_ratio;
    if (!(floor_e > 0.0 && floor_e < 1.0))
        throw std::invalid_argument("proposal_obs_floor must lie in (0, 1)");
    if (!(ratio_w > 0.0 && ratio_w < 1.0))
        throw std::invalid_argument("proposal_sys_ratio must lie in (0, 1)");

    const double span_e = -std::log(floor_e);      // ln 1 - ln floor
    const double span_w = -std::log(ratio_w);
    while (true) {
        const double e = std::exp(std::log(floor_e) + span_e * unit(rng));
        const double w = e * std::exp(std::log(ratio_w) + span_w * unit(rng));
        out.pair.obs_var = e;
        out.pair.sys_var = w;
        if (out.pair.valid()) break;
    }
    // prior density: 1/e on the open triangle {0 < w < e < 1}.
    // candidate density: 1/(e * span_e) * 1/(w * span_w) on its box.
    const double log_prior = -std::log(out.pair.obs_var);
    const double log_candidate = -std::log(out.pair.obs_var) - std::log(span_e)
                                 - std::log(out.pair.sys_var) - std::log(span_w);
    out.log_correction = log_prior - log_candidate;
    return out;
}

}  // namespace detail

// Centers responses and maps the reference grid to zero mean and unit mean
// square. Throws when the grid is degenerate or sizes disagree.
inline ScaledCalibration standardize(const std::vector<double>& x_refs,
                                     const std::vector<double>& y_refs,
                                     const std::vector<double>& y0,
                                     YbarPolicy policy = YbarPolicy::cumulative) {
    const std::size_t r = x_refs.size();
    const std::size_t t_count = y0.size();
    if (r < 2) throw std::invalid_argument("standardize: need at least 2 references");
    if (t_count == 0) throw std::invalid_argument("standardize: empty series");
    if (y_refs.size() != r * t_count)
        throw std::invalid_argument("standardize: reference block size mismatch");

    ScaledCalibration out;
    out.n_refs = r;
    out.n_times = t_count;
    out.x_mean = mean_of(x_refs);
    double ss = 0.0;
    for (double x : x_refs) {
        const double d = x - out.x_mean;
        ss += d * d;
    }
    out.x_sd = std::sqrt(ss / static_cast<double>(r));
    if (!(out.x_sd > 0.0))
        throw std::domain_error("standardize: reference grid has zero spread");

    out.x_scaled.resize(r);
    for (std::size_t j = 0; j < r; ++j)
        out.x_scaled[j] = (x_refs[j] - out.x_mean) / out.x_sd;

    out.cum_means.resize(t_count);
    double running = 0.0;
    for (std::size_t t = 0; t < t_count; ++t) {
        double row = 0.0;
        for (std::size_t j = 0; j < r; ++j) row += y_refs[t * r + j];
        if (policy == YbarPolicy::cumulative) {
            running += row;
            out.cum_means[t] = running / static_cast<double>((t + 1) * r);
        } else {
            out.cum_means[t] = row / static_cast<double>(r);
        }
    }

    out.y_star.resize(r * t_count);
    out.y0_star.resize(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        for (std::size_t j = 0; j < r; ++j)
            out.y_star[t * r + j] = y_refs[t * r + j] - out.cum_means[t];
        out.y0_star[t] = y0[t] - out.cum_means[t];
    }
    return out;
}

// Maps one standardized value back to original units.
inline double rescale_value(double z, double x_mean, double x_sd) {
    return x_mean + x_sd * z;
}

// Ratio inversion of one standardized response through a slope estimate.
// Near-zero slopes cannot be inverted; callers flag those steps instead.
inline double md1_draw(double theta_hat, double y0_star, double slope_eps) {
    if (!(std::abs(theta_hat) > slope_eps))
        throw std::domain_error("md1_draw: slope estimate too close to zero");
    return y0_star / theta_hat;
}

// Shrinkage inversion: given xi = y0*/theta_hat and predictive variance v,
// draws from N(xi / (1 + v), 1 / (1 + v)).
inline double md2_draw(double xi, double sigma2_y, std::mt19937_64& rng) {
    if (!(sigma2_y >= 0.0))
        throw std::invalid_argument("md2_draw: negative predictive variance");
    std::normal_distribution<double> unit(0.0, 1.0);
    const double denom = 1.0 + sigma2_y;
    return xi / denom + std::sqrt(1.0 / denom) * unit(rng);
}

// Runs the slope filter for one variance pair and converts each step's slope
// estimate into a standardized input draw. The returned log weight is the
// predictive log likelihood of the reference block (before any candidate
// density correction). Steps whose slope magnitude falls below the guard are
// flagged and reuse the previous draw; a proposal with more than
// flag_fraction_cutoff of its steps flagged gets weight -infinity.
inline ProposalRun run_proposal(const VariancePair& pair,
                                const ScaledCalibration& scaled,
                                const DynCalOptions& opts,
                                std::mt19937_64& rng) {
    if (!pair.valid())
        throw std::invalid_argument("run_proposal: variance pair outside 0 < sys < obs < 1");
    const std::size_t t_count = scaled.n_times;

    const SlopeFilterOutput filt = filter_slope(
        scaled.x_scaled, scaled.y_star, t_count, pair.obs_var, pair.sys_var,
        opts.prior_mean, opts.prior_var);

    ProposalRun run;
    run.x0_scaled.resize(t_count);
    run.center_scaled.resize(t_count);
    run.center_x.resize(t_count);
    run.spread_x.resize(t_count);
    run.flagged.assign(t_count, 0);
    run.log_weight = filt.loglik;

    std::normal_distribution<double> unit(0.0, 1.0);
    double prev_center = 0.0;
    double prev_draw = 0.0;
    double prev_center_x = scaled.x_mean;
    double prev_spread_x = 0.0;
    for (std::size_t t = 0; t < t_count; ++t) {
        const double theta_hat = filt.mean[t];
        if (!(std::abs(theta_hat) > opts.slope_guard)) {
            run.flagged[t] = 1;
            ++run.flag_count;
            run.center_scaled[t] = prev_center;
            run.x0_scaled[t] = prev_draw;
            run.center_x[t] = prev_center_x;
            run.spread_x[t] = prev_spread_x;
            continue;
        }
        const double xi = scaled.y0_star[t] / theta_hat;
        // Post-update predictive trace of the standardized reference block
        // (the standardized design has sum of squares n_refs, so a repeat of
        // the block under the filtered slope has trace n (C_t + e)). The
        // pre-update trace would drag the diffuse prior into the first steps.
        const double n = static_cast<double>(scaled.n_refs);
        const double v = n * (filt.var[t] + pair.obs_var);
        // First-order variance of the inversion center in original x units;
        // vanishes at the design centre and grows with |xi|.
        const double inv_var = scaled.x_sd * scaled.x_sd * xi * xi * filt.var[t] /
                               (theta_hat * theta_hat);
        if (opts.method == DynMethod::md1) {
            run.center_scaled[t] = xi;
            run.center_x[t] = rescale_value(xi, scaled.x_mean, scaled.x_sd);
            if (opts.md1_policy == Md1Policy::deterministic) {
                run.x0_scaled[t] = xi;
                run.spread_x[t] = 0.0;
            } else {
                // The ratio draw keeps its center at the raw inversion and
                // spreads with precision (2 + v) on the unit prior scale --
                // one unit tighter than the shrinkage draw, which instead
                // pays for its prior with a displaced center -- plus the
                // center's own inversion variance. The dispersion is defined
                // in original x units; dividing by x_sd here makes the full
                // affine rescale in the assembly reproduce it exactly.
                const double sd_x = std::sqrt(1.0 / (2.0 + v) + inv_var);
                run.x0_scaled[t] = xi + (sd_x / scaled.x_sd) * unit(rng);
                run.spread_x[t] = sd_x;
            }
        } else if (opts.md2_rescale == Md2Rescale::full) {
            const double denom = 1.0 + v;
            const double center = xi / denom;
            run.center_scaled[t] = center;
            run.x0_scaled[t] = center + std::sqrt(1.0 / denom) * unit(rng);
            run.center_x[t] = rescale_value(center, scaled.x_mean, scaled.x_sd);
            run.spread_x[t] = scaled.x_sd * std::sqrt(1.0 / denom);
        } else {
            // Center-only rescaling keeps the draw noise in original units.
            // Its dispersion adds the inversion variance and the center's
            // shrinkage displacement so that coverage survives when the
            // center is pulled toward the design mean (extrapolation with
            // large predictive variance).
            const double denom = 1.0 + v;
            const double center = xi / denom;
            const double shift = scaled.x_sd * xi * v / denom;
            const double sd_x = std::sqrt(1.0 / denom + inv_var + shift * shift);
            run.center_scaled[t] = center;
            run.x0_scaled[t] = center + sd_x * unit(rng);
            run.center_x[t] = rescale_value(center, scaled.x_mean, scaled.x_sd);
            run.spread_x[t] = sd_x;
        }
        prev_center = run.center_scaled[t];
        prev_draw = run.x0_scaled[t];
        prev_center_x = run.center_x[t];
        prev_spread_x = run.spread_x[t];
    }

    const double flagged_fraction =
        static_cast<double>(run.flag_count) / static_cast<double>(t_count);
    if (flagged_fraction > opts.flag_fraction_cutoff)
        run.log_weight = -std::numeric_limits<double>::infinity();
    return run;
}

// Multinomial resampling by normalized weight. Throws when no weight is
// finite (no viable proposal survived).
inline std::vector<std::size_t> sir_resample(const std::vector<double>& log_weights,
                                             std::size_t count,
                                             std::mt19937_64& rng) {
    std::vector<double> prob;
    try {
        prob = normalize_log_weights(log_weights);
    } catch (const std::runtime_error&) {
        throw std::runtime_error("sir_resample: no viable proposal (all weights zero)");
    }
    std::vector<double> cdf(prob.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
        acc += prob[i];
        cdf[i] = acc;
    }
    cdf.back() = 1.0;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::size_t> picks(count);
    for (std::size_t n = 0; n < count; ++n) {
        const double u = unit(rng);
        picks[n] = static_cast<std::size_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    }
    return picks;
}

// Per-time median and central interval of the accepted draws.
inline CalSummarySeries summarize(const CalibrationDraws& draws, double level) {
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("summarize: level must lie in (0, 1)");
    if (draws.n_draws < 2)
        throw std::invalid_argument("summarize: need at least 2 draws");
    CalSummarySeries out;
    out.level = level;
    out.median.resize(draws.n_times);
    out.lower.resize(draws.n_times);
    out.upper.resize(draws.n_times);
    const double tail = (1.0 - level) / 2.0;
    std::vector<double> column(draws.n_draws);
    for (std::size_t t = 0; t < draws.n_times; ++t) {
        for (std::size_t i = 0; i < draws.n_draws; ++i)
            column[i] = draws.at(i, t);
        std::sort(column.begin(), column.end());
        out.lower[t] = quantile_type7_sorted(column, tail);
        out.median[t] = quantile_type7_sorted(column, 0.5);
        out.upper[t] = quantile_type7_sorted(column, 1.0 - tail);
    }
    return out;
}

// Posterior-predictive summary taken directly from the weighted proposal
// mixture sum_i w_i N(center_x_i(t), spread_x_i(t)^2). Quantiles come from
// bisection on the mixture CDF, so they stay smooth in the weights instead of
// degrading to the order statistics of a handful of resampled series when the
// weight mass concentrates. Proposals carrying a negligible share of the mass
// are dropped (and the rest renormalized) to bound the cost.
inline CalSummarySeries mixture_summary(const std::vector<ProposalRun>& runs,
                                        const std::vector<double>& weights,
                                        double level) {
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("mixture_summary: level must lie in (0, 1)");
    if (runs.empty() || runs.size() != weights.size())
        throw std::invalid_argument("mixture_summary: runs/weights mismatch");
    const std::size_t t_count = runs.front().center_x.size();

    // Keep the heaviest proposals covering all but 1e-6 of the mass, capped.
    std::vector<std::size_t> order(runs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (weights[a] != weights[b]) return weights[a] > weights[b];
        return a < b;
    });
    std::vector<std::size_t> kept;
    double kept_mass = 0.0;
    for (const std::size_t i : order) {
        if (!(weights[i] > 0.0)) break;
        kept.push_back(i);
        kept_mass += weights[i];
        if (kept_mass >= 1.0 - 1e-6 || kept.size() >= 512) break;
    }
    if (kept.empty() || !(kept_mass > 0.0))
        throw std::runtime_error("mixture_summary: no proposal carries weight");

    const auto mixture_cdf = [&](std::size_t t, double q) {
        double acc = 0.0;
        for (const std::size_t i : kept) {
            const double c = runs[i].center_x[t];
            const double s = runs[i].spread_x[t];
            if (s > 0.0)
                acc += weights[i] * 0.5 * std::erfc((c - q) / (s * std::sqrt(2.0)));
            else if (c <= q)
                acc += weights[i];
        }
        return acc / kept_mass;
    };

    const auto mixture_quantile = [&](std::size_t t, double p) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const std::size_t i : kept) {
            const double pad = std::max(8.0 * runs[i].spread_x[t], 1e-9);
            lo = std::min(lo, runs[i].center_x[t] - pad);
            hi = std::max(hi, runs[i].center_x[t] + pad);
        }
        for (int it = 0; it < 200 && hi - lo > 1e-10 * (1.0 + std::abs(lo)); ++it) {
            const double mid = 0.5 * (lo + hi);
            (mixture_cdf(t, mid) < p ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };

    CalSummarySeries out;
    out.level = level;
    out.median.resize(t_count);
    out.lower.resize(t_count);
    out.upper.resize(t_count);
    const double tail = (1.0 - level) / 2.0;
    for (std::size_t t = 0; t < t_count; ++t) {
        out.lower[t] = mixture_quantile(t, tail);
        out.median[t] = mixture_quantile(t, 0.5);
        out.upper[t] = mixture_quantile(t, 1.0 - tail);
    }
    return out;
}

// Full sequential calibration. Proposal filtering is deterministic per seed
// regardless of thread count: every proposal owns an RNG substream keyed by
// its index, and resampling uses a dedicated substream.
inline DynamicResult calibrate_dynamic(const std::vector<double>& x_refs,
                                       const std::vector<double>& y_refs,
                                       const std::vector<double>& y0,
                                       const DynCalOptions& opts) {
    if (opts.proposals == 0)
        throw std::invalid_argument("calibrate_dynamic: need at least one proposal");
    if (opts.accepted < 2)
        throw std::invalid_argument("calibrate_dynamic: need at least 2 accepted draws");
    if (y0.size() <= opts.burn_in)
        throw std::invalid_argument("calibrate_dynamic: burn_in must leave at least one point");

    const ScaledCalibration scaled =
        standardize(x_refs, y_refs, y0, opts.ybar_policy);
    const std::size_t t_count = scaled.n_times;
    const std::size_t m = opts.proposals;

    // Candidate variance pairs and their weight corrections, drawn up front
    // from one substream so the set never depends on scheduling.
    std::vector<detail::ProposalPair> pairs(m);
    {
        std::mt19937_64 pair_rng = substream_engine(opts.seed, 1);
        for (std::size_t i = 0; i < m; ++i)
            pairs[i] = detail::sample_proposal_pair(opts, pair_rng);
    }

    std::vector<ProposalRun> runs(m);
    std::vector<std::string> failures(m);
    parallel_for(
        m,
        [&](std::size_t i) {
            std::mt19937_64 rng = substream_engine(opts.seed, 1000 + i);
            try {
                runs[i] = run_proposal(pairs[i].pair, scaled, opts, rng);
                runs[i].log_weight += pairs[i].log_correction;
            } catch (const FilterSingular& err) {
                failures[i] = err.what();
            }
        },
        opts.threads);
    for (std::size_t i = 0; i < m; ++i) {
        if (!failures[i].empty())
            throw FilterSingular(failures[i] + " (proposal " + std::to_string(i) + ")",
                                 -1);
    }

    std::vector<double> log_weights(m);
    for (std::size_t i = 0; i < m; ++i) log_weights[i] = runs[i].log_weight;

    std::mt19937_64 pick_rng = substream_engine(opts.seed, 2);
    const std::vector<std::size_t> picks =
        sir_resample(log_weights, opts.accepted, pick_rng);

    DynamicResult result;
    result.draws.n_draws = opts.accepted;
    result.draws.n_times = t_count;
    result.draws.method = opts.method;
    result.draws.burn_in = opts.burn_in;
    result.draws.draws.resize(opts.accepted * t_count);
    for (std::size_t n = 0; n < opts.accepted; ++n) {
        const ProposalRun& run = runs[picks[n]];
        for (std::size_t t = 0; t < t_count; ++t) {
            double x;
            if (opts.method == DynMethod::md2 &&
                opts.md2_rescale == Md2Rescale::center_only) {
                const double noise = run.x0_scaled[t] - run.center_scaled[t];
                x = rescale_value(run.center_scaled[t], scaled.x_mean, scaled.x_sd)
                    + noise;
            } else {
                x = rescale_value(run.x0_scaled[t], scaled.x_mean, scaled.x_sd);
            }
            result.draws.draws[n * t_count + t] = x;
        }
    }

    result.diagnostics.acceptance_mass = normalize_log_weights(log_weights);
    result.diagnostics.ess =
        effective_sample_size(result.diagnostics.acceptance_mass);

    result.summary =
        mixture_summary(runs, result.diagnostics.acceptance_mass, opts.level);
    result.diagnostics.flagged_any.assign(t_count, 0);
    for (const ProposalRun& run : runs) {
        result.diagnostics.total_flags += run.flag_count;
        for (std::size_t t = 0; t < t_count; ++t)
            if (run.flagged[t]) result.diagnostics.flagged_any[t] = 1;
        if (std::isinf(run.log_weight) && run.flag_count > 0)
            ++result.diagnostics.discarded_proposals;
    }
    return result;
}

// Metrics view of a summary with the first `burn_in` points removed.
inline CalSummarySeries trim_summary(const CalSummarySeries& full,
                                     std::size_t burn_in) {
    if (burn_in >= full.median.size())
        throw std::invalid_argument("trim_summary: burn_in leaves no points");
    CalSummarySeries out;
    out.level = full.level;
    out.median.assign(full.median.begin() + static_cast<std::ptrdiff_t>(burn_in),
                      full.median.end());
    out.lower.assign(full.lower.begin() + static_cast<std::ptrdiff_t>(burn_in),
                     full.lower.end());
    out.upper.assign(full.upper.begin() + static_cast<std::ptrdiff_t>(burn_in),
                     full.upper.end());
    return out;
}

}  // namespace dyncal
