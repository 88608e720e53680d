#pragma once

// Multivariate dynamic linear model forward filter.
//
//   state:       theta_t = G theta_{t-1} + w_t,   w_t ~ N(0, W)
//   observation: Y_t     = X theta_t + v_t,       v_t ~ N(0, E)
//
// with E = obs_var * I_r and W = sys_var * (X'X)^{-1}, G identity by default.
// The filter accumulates the one-step predictive log-likelihood
// sum_t log N(Y_t; f_t, Q_t), which downstream importance weighting consumes.
//
// Gain is the standard Kalman form A_t = R_t X' Q_t^{-1} with
// C_t = R_t - A_t Q_t A_t'. Covariances are symmetrized after each update.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dyncal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct DlmSpec {
    Matrix design;   // X, r x d
    Matrix system;   // G, d x d
    double obs_var = 0.0;
    double sys_var = 0.0;
    Matrix obs_cov;  // E, r x r
    Matrix sys_cov;  // W, d x d
};

// Condition threshold beyond which a forecast covariance counts as singular.
inline constexpr double kSingularCondition = 1e12;

struct FilterSingular : std::runtime_error {
    int t;
    explicit FilterSingular(int t_)
        : std::runtime_error("forecast covariance numerically singular at t=" +
                             std::to_string(t_)),
          t(t_) {}
    FilterSingular(const std::string& message, int t_)
        : std::runtime_error(message), t(t_) {}
};

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline DlmSpec make_dlm_spec(const Matrix& X, double obs_var, double sys_var) {
    if (X.rows() < 1 || X.cols() < 1)
        throw std::invalid_argument("make_dlm_spec: empty design");
    if (obs_var < 0.0 || sys_var < 0.0)
        throw std::invalid_argument("make_dlm_spec: negative variance");
    DlmSpec spec;
    spec.design = X;
    spec.system = Matrix::Identity(X.cols(), X.cols());
    spec.obs_var = obs_var;
    spec.sys_var = sys_var;
    spec.obs_cov = obs_var * Matrix::Identity(X.rows(), X.rows());
    const Matrix xtx = X.transpose() * X;
    Eigen::LDLT<Matrix> ldlt(xtx);
    // isPositive() accepts positive semidefinite matrices, so a collapsed
    // design must be caught through the pivot spread instead.
    const auto d = ldlt.vectorD();
    const double d_max = d.maxCoeff();
    const double d_min = d.minCoeff();
    if (ldlt.info() != Eigen::Success || !(d_min > 0.0) ||
        d_min * kSingularCondition < d_max)
        throw std::invalid_argument("make_dlm_spec: design is rank deficient");
    spec.sys_cov = symmetrized(sys_var *
                               ldlt.solve(Matrix::Identity(X.cols(), X.cols())));
    return spec;
}

struct DlmState {
    Vector mean;  // m_t
    Matrix cov;   // C_t
    int time = 0;
};

// Prior propagation: a = G m, R = G C G' + W.
inline std::pair<Vector, Matrix> predict_state(const DlmState& state, const DlmSpec& spec) {
    if (state.mean.size() != spec.system.cols())
        throw std::invalid_argument("predict_state: state/spec dimension mismatch");
    Vector a = spec.system * state.mean;
    Matrix R = symmetrized(spec.system * state.cov * spec.system.transpose() + spec.sys_cov);
    return {std::move(a), std::move(R)};
}

// Forecast moments: f = X a, Q = X R X' + E.
inline std::pair<Vector, Matrix> one_step_forecast(const Vector& a, const Matrix& R,
                                                   const DlmSpec& spec) {
    Vector f = spec.design * a;
    Matrix Q = symmetrized(spec.design * R * spec.design.transpose() + spec.obs_cov);
    return {std::move(f), std::move(Q)};
}

namespace detail {

// Cheap LDLT-based condition estimate; returns +inf for non-positive pivots.
inline double condition_estimate(const Eigen::LDLT<Matrix>& ldlt) {
    const auto d = ldlt.vectorD();
    double dmin = d.minCoeff(), dmax = d.maxCoeff();
    if (!(dmin > 0.0) || !std::isfinite(dmax))
        return std::numeric_limits<double>::infinity();
    return dmax / dmin;
}

}  // namespace detail

struct UpdateResult {
    DlmState state;
    Matrix gain;        // A_t
    Vector innovation;  // e_t = y - f
    double loglik = 0.0;
};

// Posterior update m = a + A e, C = R - A Q A' with A = R X' Q^{-1}.
// Also returns the predictive log density log N(y; f, Q).
inline UpdateResult update_posterior(const Vector& a, const Matrix& R, const Vector& f,
                                     const Matrix& Q, const Vector& y, const DlmSpec& spec,
                                     int t) {
    Eigen::LDLT<Matrix> ldlt(Q);
    if (ldlt.info() != Eigen::Success ||
        detail::condition_estimate(ldlt) > kSingularCondition)
        throw FilterSingular(t);

    static constexpr double log2pi = 1.8378770664093454836;
    UpdateResult out;
    out.innovation = y - f;
    const Matrix XR = spec.design * R;            // r x d
    out.gain = ldlt.solve(XR).transpose();        // d x r = R X' Q^{-1}
    out.state.mean = a + out.gain * out.innovation;
    out.state.cov = symmetrized(R - out.gain * Q * out.gain.transpose());
    out.state.time = t;
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < ldlt.vectorD().size(); ++i)
        logdet += std::log(ldlt.vectorD()(i));
    out.loglik = -0.5 * (static_cast<double>(y.size()) * log2pi + logdet +
                         out.innovation.dot(ldlt.solve(out.innovation)));
    return out;
}

struct FilterOutput {
    std::vector<Vector> mean;           // m_t
    std::vector<Matrix> cov;            // C_t
    std::vector<Vector> forecast;       // f_t
    std::vector<Matrix> forecast_cov;   // Q_t
    std::vector<Matrix> gain;           // A_t
    std::vector<Vector> innovation;     // e_t
    double loglik = 0.0;
};

// Sequential filter over a T x r observation sequence. Throws FilterSingular
// (carrying the 1-based failing index) when any Q_t is numerically singular.
inline FilterOutput filter_series(const DlmSpec& spec, const std::vector<Vector>& obs,
                                  DlmState init) {
    const auto d = spec.system.cols();
    if (init.mean.size() != d || init.cov.rows() != d || init.cov.cols() != d)
        throw std::invalid_argument("filter_series: init dimension mismatch");

    FilterOutput out;
    out.mean.reserve(obs.size());
    out.cov.reserve(obs.size());
    out.forecast.reserve(obs.size());
    out.forecast_cov.reserve(obs.size());
    out.gain.reserve(obs.size());
    out.innovation.reserve(obs.size());

    DlmState state = std::move(init);
    int t = 0;
    for (const Vector& y : obs) {
        ++t;
        if (y.size() != spec.design.rows())
            throw std::invalid_argument("filter_series: observation length mismatch");
        auto [a, R] = predict_state(state, spec);
        auto [f, Q] = one_step_forecast(a, R, spec);
        UpdateResult step = update_posterior(a, R, f, Q, y, spec, t);
        state = step.state;
        out.loglik += step.loglik;
        out.mean.push_back(state.mean);
        out.cov.push_back(state.cov);
        out.forecast.push_back(std::move(f));
        out.forecast_cov.push_back(std::move(Q));
        out.gain.push_back(std::move(step.gain));
        out.innovation.push_back(std::move(step.innovation));
    }
    return out;
}

// Specialized d=1 slope-only filter on a fixed scaled design u (length r),
// algebraically identical to filter_series with X = u but O(r) per step.
// sys variance enters as sys_var * (u'u)^{-1}, matching make_dlm_spec.
struct SlopeFilterOutput {
    std::vector<double> mean;     // m_t
    std::vector<double> var;     // C_t
    std::vector<double> q_trace;  // tr(Q_t) = s R_t + r e
    double loglik = 0.0;
};

inline SlopeFilterOutput filter_slope(const std::vector<double>& u,
                                      const std::vector<double>& ystar,  // T*r row-major
                                      std::size_t T, double obs_var, double sys_var,
                                      double m0, double c0) {
    const std::size_t r = u.size();
    if (r == 0 || ystar.size() != T * r)
        throw std::invalid_argument("filter_slope: shape mismatch");
    double s = 0.0;
    for (double uj : u) s += uj * uj;
    if (!(s > 0.0)) throw std::invalid_argument("filter_slope: degenerate design");
    const double e = obs_var;
    const double w = sys_var / s;
    static constexpr double log2pi = 1.8378770664093454836;

    SlopeFilterOutput out;
    out.mean.resize(T);
    out.var.resize(T);
    out.q_trace.resize(T);

    double m = m0, c = c0;
    const double rd = static_cast<double>(r);
    for (std::size_t t = 0; t < T; ++t) {
        const double R = c + w;
        const double denom = e + R * s;
        // Q eigenvalues are e (r-1 times) and e + R s; condition = denom / e.
        if (!(e > 0.0) || !(denom > 0.0) || denom > kSingularCondition * e ||
            !std::isfinite(denom))
            throw FilterSingular(static_cast<int>(t + 1));

        const double* row = ystar.data() + t * r;
        double sue = 0.0, see = 0.0;
        for (std::size_t j = 0; j < r; ++j) {
            const double ej = row[j] - u[j] * m;
            sue += u[j] * ej;
            see += ej * ej;
        }
        out.loglik += -0.5 * (rd * log2pi + (rd - 1.0) * std::log(e) + std::log(denom) +
                              (see - R * sue * sue / denom) / e);
        m += R * sue / denom;
        c = R * e / denom;
        out.mean[t] = m;
        out.var[t] = c;
        out.q_trace[t] = s * R + rd * e;
    }
    return out;
}

}  // namespace dyncal
