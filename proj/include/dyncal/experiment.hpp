#pragma once

// Simulation-study orchestration: the scenario grid (reference designs x
// gain regimes x noise ratios x truth cases), per-cell replicate fan-out,
// aggregate metric rows, and plot-ready CSV export. Seed derivation is
// per-cell and per-replicate, so adding or removing cells never changes
// another cell's numbers, and output rows are sorted before emission so
// thread scheduling never changes output bytes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "dyncal/csv.hpp"
#include "dyncal/dynamic_cal.hpp"
#include "dyncal/metrics.hpp"
#include "dyncal/parallel.hpp"
#include "dyncal/simgen.hpp"
#include "dyncal/static_cal.hpp"
#include "dyncal/stats.hpp"

namespace dyncal {

enum class CalMethod { md1, md2, mf1, mf2, mb1, mb2 };

inline const char* method_name(CalMethod m) {
    switch (m) {
        case CalMethod::md1: return "MD1";
        case CalMethod::md2: return "MD2";
        case CalMethod::mf1: return "MF1";
        case CalMethod::mf2: return "MF2";
        case CalMethod::mb1: return "MB1";
        case CalMethod::mb2: return "MB2";
    }
    throw std::invalid_argument("method_name: unknown method");
}

inline CalMethod parse_method(const std::string& name) {
    if (name == "MD1") return CalMethod::md1;
    if (name == "MD2") return CalMethod::md2;
    if (name == "MF1") return CalMethod::mf1;
    if (name == "MF2") return CalMethod::mf2;
    if (name == "MB1") return CalMethod::mb1;
    if (name == "MB2") return CalMethod::mb2;
    throw std::invalid_argument("unknown method '" + name +
                                "' (expected MD1, MD2, MF1, MF2, MB1 or MB2)");
}

inline const char* gain_name(GainKind g) {
    switch (g) {
        case GainKind::constant_zero: return "constant_zero";
        case GainKind::stepped: return "stepped";
        case GainKind::sinusoidal: return "sinusoidal";
    }
    throw std::invalid_argument("gain_name: unknown gain kind");
}

inline GainKind parse_gain(const std::string& name) {
    if (name == "constant_zero") return GainKind::constant_zero;
    if (name == "stepped") return GainKind::stepped;
    if (name == "sinusoidal") return GainKind::sinusoidal;
    throw std::invalid_argument("unknown gain '" + name +
                                "' (expected constant_zero, stepped or sinusoidal)");
}

inline const char* truth_name(TruthCase c) {
    switch (c) {
        case TruthCase::interpolation: return "interpolation";
        case TruthCase::extrapolation: return "extrapolation";
    }
    throw std::invalid_argument("truth_name: unknown truth case");
}

inline TruthCase parse_truth(const std::string& name) {
    if (name == "interpolation") return TruthCase::interpolation;
    if (name == "extrapolation") return TruthCase::extrapolation;
    throw std::invalid_argument("unknown case '" + name +
                                "' (expected interpolation or extrapolation)");
}

// The study's noise grid: observation variance x evolution variance pairs,
// identified by their ratio. Each admissible ratio maps to exactly one pair.
struct NoiseCell {
    double obs_var = 0.0;
    double sys_var = 0.0;
    double ratio() const { return obs_var / sys_var; }
};

inline std::vector<NoiseCell> standard_noise_grid() {
    std::vector<NoiseCell> grid;
    for (double e : {1e-4, 1e-3, 1e-2})
        for (double w : {1e-5, 5e-5}) grid.push_back({e, w});
    std::sort(grid.begin(), grid.end(),
              [](const NoiseCell& a, const NoiseCell& b) { return a.ratio() < b.ratio(); });
    return grid;
}

inline NoiseCell noise_cell_for_ratio(double ratio) {
    for (const NoiseCell& cell : standard_noise_grid())
        if (std::abs(cell.ratio() - ratio) < 1e-9 * ratio) return cell;
    throw std::invalid_argument(
        "ratio " + std::to_string(ratio) +
        " is not in the study grid {2, 10, 20, 100, 200, 1000}");
}

struct ExperimentGrid {
    std::vector<RefDesign> ref_designs = {RefDesign::two, RefDesign::five};
    std::vector<GainKind> gains = {GainKind::constant_zero, GainKind::stepped,
                                   GainKind::sinusoidal};
    std::vector<double> ratios = {2, 10, 20, 100, 200, 1000};
    std::vector<TruthCase> truth_cases = {TruthCase::interpolation,
                                          TruthCase::extrapolation};
    std::vector<CalMethod> methods = {CalMethod::md1, CalMethod::md2,
                                      CalMethod::mf1, CalMethod::mf2,
                                      CalMethod::mb1, CalMethod::mb2};
    std::size_t replicates = 100;
    std::size_t n_times = 1000;
    std::size_t proposals = 5000;
    std::size_t accepted = 1000;
    std::size_t burn_in = 0;
    double level = 0.95;
    std::uint64_t seed = 1;
    std::size_t threads = 0;

    // Dynamic-method policies (see dynamic_cal.hpp).
    ProposalPolicy proposal_policy = ProposalPolicy::log_uniform;
    Md1Policy md1_policy = Md1Policy::posterior_smear;
    Md2Rescale md2_rescale = Md2Rescale::center_only;
    YbarPolicy ybar_policy = YbarPolicy::cumulative;
    double slope_guard = 0.02;

    // Data-generation choices shared by every cell.
    ThetaMode theta_mode = ThetaMode::iid;
    InterpTruthPolicy interp_truth = InterpTruthPolicy::constant_center;
    double truth_walk_sd = 0.5;
    double y0_noise_var = 0.0;
    bool y0_sees_gain = true;
};

inline void apply_desk_scale(ExperimentGrid& grid) {
    grid.replicates = 20;
    grid.n_times = 500;
    grid.proposals = 2000;
    grid.accepted = 500;
}

inline void apply_paper_scale(ExperimentGrid& grid) {
    grid.replicates = 100;
    grid.n_times = 1000;
    grid.proposals = 5000;
    grid.accepted = 1000;
}

struct CellSpec {
    TruthCase truth = TruthCase::interpolation;
    GainKind gain = GainKind::constant_zero;
    NoiseCell noise;
    RefDesign refs = RefDesign::two;
};

struct ResultRow {
    std::string truth_case;
    std::string gain;
    double ratio = 0.0;
    int refs = 0;
    std::string method;
    double av_mse = std::numeric_limits<double>::quiet_NaN();
    double av_cp = std::numeric_limits<double>::quiet_NaN();
    double av_iw = std::numeric_limits<double>::quiet_NaN();
    double wall_ms = 0.0;
    std::string error;  // nonempty marks a failed cell/method (NaN metrics)

    bool failed() const { return !error.empty(); }
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t id) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ull * (id + 0x2545f4914f6cdd1dull));
    return splitmix64(s);
}

// Stable identity for each grid coordinate so seeds never depend on which
// subset of cells is selected.
inline std::uint64_t cell_tag(const CellSpec& cell) {
    const std::uint64_t case_id = cell.truth == TruthCase::interpolation ? 1 : 2;
    const std::uint64_t gain_id = cell.gain == GainKind::constant_zero  ? 1
                                  : cell.gain == GainKind::stepped      ? 2
                                                                        : 3;
    const std::uint64_t ratio_id = static_cast<std::uint64_t>(
        std::llround(cell.noise.ratio()));
    const std::uint64_t refs_id = cell.refs == RefDesign::two ? 2 : 5;
    return ((case_id * 67ull + gain_id) * 4099ull + ratio_id) * 11ull + refs_id;
}

inline std::uint64_t replicate_seed(const ExperimentGrid& grid, const CellSpec& cell,
                                    std::size_t replicate) {
    return mix_seed(mix_seed(grid.seed, cell_tag(cell)), replicate);
}

}  // namespace detail

inline SimConfig make_sim_config(const ExperimentGrid& grid, const CellSpec& cell,
                                 std::size_t replicate) {
    SimConfig cfg;
    cfg.refs = cell.refs;
    cfg.T = grid.n_times;
    cfg.obs_var = cell.noise.obs_var;
    cfg.sys_var = cell.noise.sys_var;
    cfg.gain = cell.gain;
    cfg.truth = cell.truth;
    cfg.replicates = 1;
    cfg.seed = detail::replicate_seed(grid, cell, replicate);
    cfg.theta_mode = grid.theta_mode;
    cfg.interp_truth = grid.interp_truth;
    cfg.truth_walk_sd = grid.truth_walk_sd;
    cfg.y0_noise_var = grid.y0_noise_var;
    cfg.y0_sees_gain = grid.y0_sees_gain;
    return cfg;
}

inline DynCalOptions make_dyn_options(const ExperimentGrid& grid, CalMethod method,
                                      std::uint64_t seed) {
    DynCalOptions opts;
    opts.method = method == CalMethod::md1 ? DynMethod::md1 : DynMethod::md2;
    opts.proposals = grid.proposals;
    opts.accepted = grid.accepted;
    opts.burn_in = grid.burn_in;
    opts.level = grid.level;
    opts.seed = seed;
    opts.proposal_policy = grid.proposal_policy;
    opts.md1_policy = grid.md1_policy;
    opts.md2_rescale = grid.md2_rescale;
    opts.ybar_policy = grid.ybar_policy;
    opts.slope_guard = grid.slope_guard;
    opts.threads = 1;  // outer loop owns the worker pool
    return opts;
}

// One replicate, one method: estimate series + interval for every retained t.
inline SeriesMetrics evaluate_method_on_dataset(const ExperimentGrid& grid,
                                                CalMethod method,
                                                const SimDataset& ds,
                                                std::uint64_t dataset_seed) {
    const std::size_t t_count = ds.x0_truth.size();
    if (grid.burn_in >= t_count)
        throw std::invalid_argument("burn_in leaves no evaluation points");
    const std::size_t kept = t_count - grid.burn_in;

    std::vector<double> est, lower, upper;
    est.reserve(kept);
    lower.reserve(kept);
    upper.reserve(kept);

    if (method == CalMethod::md1 || method == CalMethod::md2) {
        const std::uint64_t method_id = method == CalMethod::md1 ? 101 : 102;
        const DynCalOptions opts =
            make_dyn_options(grid, method, detail::mix_seed(dataset_seed, method_id));
        const DynamicResult res =
            calibrate_dynamic(ds.x_refs, ds.y_refs, ds.y0_obs, opts);
        const CalSummarySeries view = trim_summary(res.summary, grid.burn_in);
        est = view.median;
        lower = view.lower;
        upper = view.upper;
    } else {
        // Pooled first-stage fit over every reference pair in the run.
        std::vector<double> x_pool, y_pool;
        x_pool.reserve(t_count * ds.n_refs);
        y_pool.reserve(t_count * ds.n_refs);
        for (std::size_t t = 0; t < t_count; ++t)
            for (std::size_t j = 0; j < ds.n_refs; ++j) {
                x_pool.push_back(ds.x_refs[j]);
                y_pool.push_back(ds.y_ref(t, j));
            }
        const RegressionFit fit = ols_fit(x_pool, y_pool);
        for (std::size_t t = grid.burn_in; t < t_count; ++t) {
            const double y0 = ds.y0_obs[t];
            CalEstimate ce;
            switch (method) {
                case CalMethod::mf1: ce = classical_interval(fit, y0, grid.level); break;
                case CalMethod::mf2: ce = inverse_interval(fit, y0, grid.level); break;
                case CalMethod::mb1: ce = hoadley_interval(fit, y0, grid.level); break;
                case CalMethod::mb2:
                    ce = hunter_lamboy_interval(fit, y0, grid.level);
                    break;
                default:
                    throw std::logic_error("evaluate_method_on_dataset: bad method");
            }
            est.push_back(ce.point);
            lower.push_back(ce.lower);
            upper.push_back(ce.upper);
        }
    }

    const std::vector<double> truth(ds.x0_truth.begin() +
                                        static_cast<std::ptrdiff_t>(grid.burn_in),
                                    ds.x0_truth.end());
    return evaluate_series(est, lower, upper, truth);
}

// All methods on one cell. Replicate datasets are shared across methods so
// rows within a cell compare like for like.
inline std::vector<ResultRow> run_cell(const ExperimentGrid& grid, const CellSpec& cell) {
    std::vector<ResultRow> rows(grid.methods.size());
    std::vector<std::vector<SeriesMetrics>> per_method(grid.methods.size());
    std::vector<double> wall_ms(grid.methods.size(), 0.0);
    std::vector<std::string> errors(grid.methods.size());

    for (std::size_t i = 0; i < grid.methods.size(); ++i)
        per_method[i].reserve(grid.replicates);

    for (std::size_t rep = 0; rep < grid.replicates; ++rep) {
        const SimConfig cfg = make_sim_config(grid, cell, rep);
        const SimDataset ds = gen_dataset(cfg);
        for (std::size_t i = 0; i < grid.methods.size(); ++i) {
            if (!errors[i].empty()) continue;  // method already failed this cell
            const auto start = std::chrono::steady_clock::now();
            try {
                per_method[i].push_back(
                    evaluate_method_on_dataset(grid, grid.methods[i], ds, cfg.seed));
            } catch (const std::exception& err) {
                errors[i] = std::string(err.what()) + " (replicate " +
                            std::to_string(rep) + ")";
            }
            const auto stop = std::chrono::steady_clock::now();
            wall_ms[i] +=
                std::chrono::duration<double, std::milli>(stop - start).count();
        }
    }

    for (std::size_t i = 0; i < grid.methods.size(); ++i) {
        ResultRow& row = rows[i];
        row.truth_case = truth_name(cell.truth);
        row.gain = gain_name(cell.gain);
        row.ratio = cell.noise.ratio();
        row.refs = cell.refs == RefDesign::two ? 2 : 5;
        row.method = method_name(grid.methods[i]);
        row.wall_ms = wall_ms[i];
        if (!errors[i].empty()) {
            row.error = errors[i];
            continue;
        }
        const AggregateMetrics agg = aggregate(per_method[i]);
        row.av_mse = agg.av_mse;
        row.av_cp = agg.av_cp;
        row.av_iw = agg.av_iw;
    }
    return rows;
}

inline std::vector<CellSpec> expand_cells(const ExperimentGrid& grid) {
    std::vector<CellSpec> cells;
    for (TruthCase tc : grid.truth_cases)
        for (GainKind g : grid.gains)
            for (double ratio : grid.ratios)
                for (RefDesign rd : grid.ref_designs)
                    cells.push_back({tc, g, noise_cell_for_ratio(ratio), rd});
    return cells;
}

inline void sort_rows(std::vector<ResultRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.truth_case, a.gain, a.ratio, a.refs, a.method) <
               std::tie(b.truth_case, b.gain, b.ratio, b.refs, b.method);
    });
}

// Full study. Cells run in a work pool (capped by DYNCAL_THREADS and
// grid.threads); per-cell failures become error rows and the run continues.
inline std::vector<ResultRow> run_experiment(const ExperimentGrid& grid) {
    const std::vector<CellSpec> cells = expand_cells(grid);
    std::vector<std::vector<ResultRow>> cell_rows(cells.size());
    parallel_for(
        cells.size(),
        [&](std::size_t i) { cell_rows[i] = run_cell(grid, cells[i]); },
        grid.threads);

    std::vector<ResultRow> rows;
    rows.reserve(cells.size() * grid.methods.size());
    for (auto& chunk : cell_rows)
        for (auto& row : chunk) rows.push_back(std::move(row));
    sort_rows(rows);
    return rows;
}

// Result table emission. Timing is wall-clock and varies run to run; pass
// include_timing = false to zero that column when byte-stable output is
// required (all other columns are deterministic under a fixed seed).
inline void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out,
                              bool include_timing = true) {
    out << "case,gain,r,refs,method,av_mse,av_cp,av_iw,wall_ms\n";
    for (const ResultRow& row : rows) {
        out << row.truth_case << ',' << row.gain << ',' << format_g17(row.ratio)
            << ',' << row.refs << ',' << row.method << ',' << format_g17(row.av_mse)
            << ',' << format_g17(row.av_cp) << ',' << format_g17(row.av_iw) << ','
            << format_g17(include_timing ? row.wall_ms : 0.0) << '\n';
    }
}

// Plot-ready export of a calibration summary: one row per t, optional truth.
inline void emit_plot_data(const CalSummarySeries& summary,
                           const std::vector<double>* truth, std::ostream& out) {
    const bool with_truth = truth != nullptr;
    if (with_truth && truth->size() != summary.median.size())
        throw std::invalid_argument("emit_plot_data: truth length mismatch");
    out << (with_truth ? "t,median,lower,upper,truth" : "t,median,lower,upper")
        << '\n';
    for (std::size_t t = 0; t < summary.median.size(); ++t) {
        out << (t + 1) << ',' << format_g17(summary.median[t]) << ','
            << format_g17(summary.lower[t]) << ',' << format_g17(summary.upper[t]);
        if (with_truth) out << ',' << format_g17((*truth)[t]);
        out << '\n';
    }
}

struct PlotData {
    CalSummarySeries summary;
    std::vector<double> truth;  // empty when the column is absent
    bool has_truth = false;
};

inline PlotData read_plot_data(std::istream& in) {
    PlotData out;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("missing header", 1);
    ++line_no;
    if (line == "t,median,lower,upper,truth")
        out.has_truth = true;
    else if (line != "t,median,lower,upper")
        throw ParseError("unexpected header '" + line + "'", line_no);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> parts = split_csv_line(line);
        const std::size_t want = out.has_truth ? 5 : 4;
        if (parts.size() != want)
            throw ParseError("expected " + std::to_string(want) + " columns", line_no);
        parse_long(parts[0], line_no);  // t index, validated only
        out.summary.median.push_back(parse_double(parts[1], line_no));
        out.summary.lower.push_back(parse_double(parts[2], line_no));
        out.summary.upper.push_back(parse_double(parts[3], line_no));
        if (out.has_truth) out.truth.push_back(parse_double(parts[4], line_no));
    }
    return out;
}

}  // namespace dyncal
