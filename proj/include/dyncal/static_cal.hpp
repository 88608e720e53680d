#pragma once

// Static (single-fit) calibration baselines. One pooled least-squares fit
// serves four interval constructions:
//
//   classical      x0 = (y0 - b0)/b1, Brown-style interval
//   inverse        x0 = phi + delta y0, prediction-style t interval
//   hoadley        t posterior centered at the inverse estimate
//   hunter_lamboy  normal posterior centered at the classical estimate
//
// The forward (y on x) and inverse (x on y) regressions are fit
// simultaneously from the same sufficient statistics.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include "dyncal/stats.hpp"

namespace dyncal {

struct RegressionFit {
    double b0 = 0.0;         // forward intercept
    double b1 = 0.0;         // forward slope
    double sigma_hat = 0.0;  // forward residual sd, n-2 df
    double sxx = 0.0;
    double syy = 0.0;
    double x_mean = 0.0;
    double y_mean = 0.0;
    std::size_t n = 0;
    double phi = 0.0;            // inverse intercept
    double delta = 0.0;          // inverse slope
    double sigma_hat_inv = 0.0;  // inverse-regression residual sd (x units), n-2 df

    // Scale-aware near-zero-slope guard.
    double slope_eps() const { return 1e-8 * std::sqrt(syy / sxx); }
};

struct CalEstimate {
    double point = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

inline RegressionFit ols_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("ols_fit: length mismatch");
    const std::size_t n = x.size();
    if (n < 3) throw std::invalid_argument("ols_fit: need n >= 3 for n-2 df");

    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xm += x[i];
        ym += y[i];
    }
    xm /= static_cast<double>(n);
    ym /= static_cast<double>(n);

    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - xm, dy = y[i] - ym;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("ols_fit: degenerate design (constant x)");

    RegressionFit fit;
    fit.n = n;
    fit.x_mean = xm;
    fit.y_mean = ym;
    fit.sxx = sxx;
    fit.syy = syy;
    fit.b1 = sxy / sxx;
    fit.b0 = ym - fit.b1 * xm;
    // Residual sums are accumulated directly; the moment identity
    // syy - sxy^2/sxx cancels catastrophically on near-exact data.
    double rss_fwd = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.b0 + fit.b1 * x[i]);
        rss_fwd += r * r;
    }
    fit.sigma_hat = std::sqrt(rss_fwd / static_cast<double>(n - 2));

    if (syy > 0.0) {
        fit.delta = sxy / syy;
        fit.phi = xm - fit.delta * ym;
        double rss_inv = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = x[i] - (fit.phi + fit.delta * y[i]);
            rss_inv += r * r;
        }
        fit.sigma_hat_inv = std::sqrt(rss_inv / static_cast<double>(n - 2));
    } else {
        fit.delta = 0.0;  // y carries no information; inverse line is flat at x_mean
        fit.phi = xm;
        fit.sigma_hat_inv = std::sqrt(sxx / static_cast<double>(n - 2));
    }
    return fit;
}

inline void require_usable_slope(const RegressionFit& fit, const char* who) {
    if (!(std::fabs(fit.b1) > fit.slope_eps()))
        throw std::domain_error(std::string(who) + ": slope below instability guard");
}

inline double classical_point(const RegressionFit& fit, double y0) {
    require_usable_slope(fit, "classical_point");
    return (y0 - fit.b0) / fit.b1;
}

inline double inverse_point(const RegressionFit& fit, double y0) {
    return fit.phi + fit.delta * y0;
}

// Brown's interval around the classical estimate:
//   center     (y0-b0)/b1 * (1 + s^2 t^2 / (b1^2 Sxx))
//   half-width |s t / b1| * (1 + 1/(2n) + ((y0-b0)^2 + s^2 t^2)/(2 b1^2 Sxx))
// The point estimate always lies inside (AM-GM on the half-width terms).
inline CalEstimate classical_interval(const RegressionFit& fit, double y0,
                                      double level = 0.95) {
    require_usable_slope(fit, "classical_interval");
    const double tq =
        student_t_quantile(0.5 + level / 2.0, static_cast<double>(fit.n - 2));
    const double s2t2 = fit.sigma_hat * fit.sigma_hat * tq * tq;
    const double b1sq_sxx = fit.b1 * fit.b1 * fit.sxx;
    const double point = (y0 - fit.b0) / fit.b1;
    const double center = point * (1.0 + s2t2 / b1sq_sxx);
    const double dev = y0 - fit.b0;
    const double half = std::fabs(fit.sigma_hat * tq / fit.b1) *
                        (1.0 + 1.0 / (2.0 * static_cast<double>(fit.n)) +
                         (dev * dev + s2t2) / (2.0 * b1sq_sxx));
    return {point, center - half, center + half};
}

// Prediction-style t interval around the inverse estimate, in x units:
//   half-width = t * sigma_inv * sqrt(1 + 1/n + (y0-ybar)^2/Syy).
inline CalEstimate inverse_interval(const RegressionFit& fit, double y0,
                                    double level = 0.95) {
    if (!(fit.syy > 0.0))
        throw std::domain_error("inverse_interval: degenerate response (Syy = 0)");
    const double tq =
        student_t_quantile(0.5 + level / 2.0, static_cast<double>(fit.n - 2));
    const double point = inverse_point(fit, y0);
    const double dev = y0 - fit.y_mean;
    const double half =
        tq * fit.sigma_hat_inv *
        std::sqrt(1.0 + 1.0 / static_cast<double>(fit.n) + dev * dev / fit.syy);
    return {point, point - half, point + half};
}

struct HoadleyPosterior {
    double location = 0.0;  // equals the inverse estimate
    double scale = 0.0;     // x units
    double df = 0.0;        // n - 2
};

// t posterior for the calibrated value. The scale expression lives on the
// standardized design scale u = (x - xbar)/s_x with s_x = sqrt(Sxx/n):
//   scale_u^2 = (n + 1 + u_hat^2 / R) / (F + n - 2),
//   F = b1^2 Sxx / s^2, R = F / (F + n - 2),
// then maps back through s_x. Defined for one second-stage observation only.
inline HoadleyPosterior hoadley_posterior(const RegressionFit& fit, double y0,
                                          std::size_t m = 1) {
    if (m != 1)
        throw std::invalid_argument("hoadley_posterior: defined for m = 1 only");
    if (fit.n < 4) throw std::invalid_argument("hoadley_posterior: need n >= 4");
    if (!(fit.sigma_hat > 0.0))
        throw std::domain_error("hoadley_posterior: degenerate posterior (sigma = 0)");

    const double nd = static_cast<double>(fit.n);
    const double F = fit.b1 * fit.b1 * fit.sxx / (fit.sigma_hat * fit.sigma_hat);
    const double R = F / (F + nd - 2.0);
    const double sx = std::sqrt(fit.sxx / nd);
    const double x0i = inverse_point(fit, y0);
    const double u = (x0i - fit.x_mean) / sx;
    const double scale_u_sq = (nd + 1.0 + u * u / R) / (F + nd - 2.0);

    HoadleyPosterior post;
    post.location = x0i;
    post.scale = sx * std::sqrt(scale_u_sq);
    post.df = nd - 2.0;
    return post;
}

inline CalEstimate hoadley_interval(const RegressionFit& fit, double y0,
                                    double level = 0.95, std::size_t m = 1) {
    const HoadleyPosterior post = hoadley_posterior(fit, y0, m);
    const double tq = student_t_quantile(0.5 + level / 2.0, post.df);
    return {post.location, post.location - tq * post.scale,
            post.location + tq * post.scale};
}

struct HunterLamboyPosterior {
    double mean = 0.0;  // equals the classical estimate
    double variance = 0.0;
};

// Normal approximation centered at the classical estimate with variance
//   ((s11 + s33) s22 - s12^2) / (s22 b1^2),
// where S = diag((X'X)^{-1} s^2, s^2/m) and y0 averages m replicates.
inline HunterLamboyPosterior hunter_lamboy_posterior(const RegressionFit& fit, double y0,
                                                     std::size_t m = 1) {
    if (m < 1) throw std::invalid_argument("hunter_lamboy_posterior: m >= 1");
    require_usable_slope(fit, "hunter_lamboy_posterior");

    const double nd = static_cast<double>(fit.n);
    const double s2 = fit.sigma_hat * fit.sigma_hat;
    // (X'X)^{-1} entries for the raw [1, x] design.
    const double sum_x_sq = fit.sxx + nd * fit.x_mean * fit.x_mean;
    const double s11 = s2 * sum_x_sq / (nd * fit.sxx);
    const double s12 = -s2 * fit.x_mean / fit.sxx;
    const double s22 = s2 / fit.sxx;
    const double s33 = s2 / static_cast<double>(m);

    HunterLamboyPosterior post;
    post.mean = classical_point(fit, y0);
    if (s22 > 0.0)
        post.variance = ((s11 + s33) * s22 - s12 * s12) / (s22 * fit.b1 * fit.b1);
    else
        post.variance = 0.0;
    return post;
}

inline CalEstimate hunter_lamboy_interval(const RegressionFit& fit, double y0,
                                          double level = 0.95, std::size_t m = 1) {
    const HunterLamboyPosterior post = hunter_lamboy_posterior(fit, y0, m);
    const double zq = normal_quantile(0.5 + level / 2.0);
    const double half = zq * std::sqrt(post.variance);
    return {post.mean, post.mean - half, post.mean + half};
}

}  // namespace dyncal
