// Command-line harness: simulation study runner, single-dataset calibration,
// radiometer stream pipeline, synthetic stream generator, and plot-data
// utilities. Exit codes: 0 success, 1 configuration error, 2 numerical
// failure in all cells, 3 I/O error.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dyncal/experiment.hpp"
#include "dyncal/radiometer.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitIo = 3;

template <typename T>
T lookup(const std::map<std::string, T>& table, const std::string& key,
         const char* what) {
    const auto it = table.find(key);
    if (it == table.end())
        throw std::invalid_argument(std::string("unknown ") + what + " '" + key + "'");
    return it->second;
}

const std::map<std::string, dyncal::YbarPolicy> kYbarNames = {
    {"cumulative", dyncal::YbarPolicy::cumulative},
    {"per_time", dyncal::YbarPolicy::per_time},
};
const std::map<std::string, dyncal::Md1Policy> kMd1Names = {
    {"deterministic", dyncal::Md1Policy::deterministic},
    {"posterior_smear", dyncal::Md1Policy::posterior_smear},
};
const std::map<std::string, dyncal::Md2Rescale> kMd2Names = {
    {"full", dyncal::Md2Rescale::full},
    {"center_only", dyncal::Md2Rescale::center_only},
};
const std::map<std::string, dyncal::ProposalPolicy> kProposalNames = {
    {"prior", dyncal::ProposalPolicy::prior},
    {"log_uniform", dyncal::ProposalPolicy::log_uniform},
};
const std::map<std::string, dyncal::ThetaMode> kThetaNames = {
    {"iid", dyncal::ThetaMode::iid},
    {"random_walk", dyncal::ThetaMode::random_walk},
};
const std::map<std::string, dyncal::InterpTruthPolicy> kInterpNames = {
    {"constant_center", dyncal::InterpTruthPolicy::constant_center},
    {"bounded_walk", dyncal::InterpTruthPolicy::bounded_walk},
};

dyncal::RefDesign refs_from_int(int r) {
    if (r == 2) return dyncal::RefDesign::two;
    if (r == 5) return dyncal::RefDesign::five;
    throw std::invalid_argument("reference design must be 2 or 5, got " +
                                std::to_string(r));
}

dyncal::ExperimentGrid grid_from_json(const json& j) {
    dyncal::ExperimentGrid g;
    if (!j.is_object()) throw std::invalid_argument("config root must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "refs") {
            g.ref_designs.clear();
            for (int v : value.get<std::vector<int>>())
                g.ref_designs.push_back(refs_from_int(v));
        } else if (key == "gains") {
            g.gains.clear();
            for (const auto& s : value.get<std::vector<std::string>>())
                g.gains.push_back(dyncal::parse_gain(s));
        } else if (key == "ratios") {
            g.ratios = value.get<std::vector<double>>();
        } else if (key == "cases") {
            g.truth_cases.clear();
            for (const auto& s : value.get<std::vector<std::string>>())
                g.truth_cases.push_back(dyncal::parse_truth(s));
        } else if (key == "methods") {
            g.methods.clear();
            for (const auto& s : value.get<std::vector<std::string>>())
                g.methods.push_back(dyncal::parse_method(s));
        } else if (key == "replicates") {
            g.replicates = value.get<std::size_t>();
        } else if (key == "T" || key == "times") {
            g.n_times = value.get<std::size_t>();
        } else if (key == "proposals") {
            g.proposals = value.get<std::size_t>();
        } else if (key == "accepted") {
            g.accepted = value.get<std::size_t>();
        } else if (key == "burn_in") {
            g.burn_in = value.get<std::size_t>();
        } else if (key == "level") {
            g.level = value.get<double>();
        } else if (key == "seed") {
            g.seed = value.get<std::uint64_t>();
        } else if (key == "threads") {
            g.threads = value.get<std::size_t>();
        } else if (key == "ybar_policy") {
            g.ybar_policy = lookup(kYbarNames, value.get<std::string>(), "ybar_policy");
        } else if (key == "md1_policy") {
            g.md1_policy = lookup(kMd1Names, value.get<std::string>(), "md1_policy");
        } else if (key == "md2_rescale") {
            g.md2_rescale = lookup(kMd2Names, value.get<std::string>(), "md2_rescale");
        } else if (key == "proposal_policy") {
            g.proposal_policy =
                lookup(kProposalNames, value.get<std::string>(), "proposal_policy");
        } else if (key == "slope_guard") {
            g.slope_guard = value.get<double>();
        } else if (key == "theta_mode") {
            g.theta_mode = lookup(kThetaNames, value.get<std::string>(), "theta_mode");
        } else if (key == "interp_truth") {
            g.interp_truth =
                lookup(kInterpNames, value.get<std::string>(), "interp_truth");
        } else if (key == "truth_walk_sd") {
            g.truth_walk_sd = value.get<double>();
        } else if (key == "y0_noise_var") {
            g.y0_noise_var = value.get<double>();
        } else if (key == "y0_sees_gain") {
            g.y0_sees_gain = value.get<bool>();
        } else {
            throw std::invalid_argument("unknown config key '" + key + "'");
        }
    }
    return g;
}

void validate_grid(const dyncal::ExperimentGrid& g) {
    if (g.replicates == 0) throw std::invalid_argument("replicates must be positive");
    if (g.n_times == 0) throw std::invalid_argument("T must be positive");
    if (g.proposals == 0) throw std::invalid_argument("proposals must be positive");
    if (g.accepted < 2) throw std::invalid_argument("accepted must be at least 2");
    if (!(g.level > 0.0 && g.level < 1.0))
        throw std::invalid_argument("level must lie in (0, 1)");
    if (g.burn_in >= g.n_times)
        throw std::invalid_argument("burn_in must leave at least one point");
    for (double r : g.ratios) dyncal::noise_cell_for_ratio(r);
}

// Raw CLI values shared by the subcommands that run calibrations.
struct DynFlags {
    std::size_t proposals = 0;
    std::size_t accepted = 0;
    std::size_t burn_in = 0;
    double level = 0.0;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    double slope_guard = 0.0;
    std::string ybar, md1_policy, md2_rescale, proposal_policy;

    CLI::Option* o_proposals = nullptr;
    CLI::Option* o_accepted = nullptr;
    CLI::Option* o_burn_in = nullptr;
    CLI::Option* o_level = nullptr;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_threads = nullptr;
    CLI::Option* o_slope_guard = nullptr;
    CLI::Option* o_ybar = nullptr;
    CLI::Option* o_md1 = nullptr;
    CLI::Option* o_md2 = nullptr;
    CLI::Option* o_proposal_policy = nullptr;

    void attach(CLI::App* sub) {
        o_proposals = sub->add_option("--proposals", proposals,
                                      "variance-pair proposals per calibration");
        o_accepted = sub->add_option("--accepted", accepted,
                                     "draws kept after resampling");
        o_burn_in = sub->add_option("--burn-in", burn_in,
                                    "leading points excluded from metrics");
        o_level = sub->add_option("--level", level, "central interval mass");
        o_seed = sub->add_option("--seed", seed, "master RNG seed");
        o_threads = sub->add_option("--threads", threads,
                                    "worker cap (0 = automatic)");
        o_slope_guard = sub->add_option("--slope-guard", slope_guard,
                                        "slope magnitude below which a step is flagged");
        o_ybar = sub->add_option("--ybar", ybar, "response centering policy")
                     ->check(CLI::IsMember({"cumulative", "per_time"}));
        o_md1 = sub->add_option("--md1-policy", md1_policy,
                                "ratio-inversion draw handling")
                    ->check(CLI::IsMember({"deterministic", "posterior_smear"}));
        o_md2 = sub->add_option("--md2-rescale", md2_rescale,
                                "shrinkage-inversion rescale policy")
                    ->check(CLI::IsMember({"full", "center_only"}));
        o_proposal_policy =
            sub->add_option("--proposal-policy", proposal_policy,
                            "variance-pair candidate distribution")
                ->check(CLI::IsMember({"prior", "log_uniform"}));
    }

    void apply(dyncal::ExperimentGrid& g) const {
        if (o_proposals->count()) g.proposals = proposals;
        if (o_accepted->count()) g.accepted = accepted;
        if (o_burn_in->count()) g.burn_in = burn_in;
        if (o_level->count()) g.level = level;
        if (o_seed->count()) g.seed = seed;
        if (o_threads->count()) g.threads = threads;
        if (o_slope_guard->count()) g.slope_guard = slope_guard;
        if (o_ybar->count()) g.ybar_policy = lookup(kYbarNames, ybar, "ybar");
        if (o_md1->count()) g.md1_policy = lookup(kMd1Names, md1_policy, "md1-policy");
        if (o_md2->count()) g.md2_rescale = lookup(kMd2Names, md2_rescale, "md2-rescale");
        if (o_proposal_policy->count())
            g.proposal_policy =
                lookup(kProposalNames, proposal_policy, "proposal-policy");
    }

    void apply(dyncal::DynCalOptions& opts) const {
        if (o_proposals->count()) opts.proposals = proposals;
        if (o_accepted->count()) opts.accepted = accepted;
        if (o_burn_in->count()) opts.burn_in = burn_in;
        if (o_level->count()) opts.level = level;
        if (o_seed->count()) opts.seed = seed;
        if (o_threads->count()) opts.threads = threads;
        if (o_slope_guard->count()) opts.slope_guard = slope_guard;
        if (o_ybar->count()) opts.ybar_policy = lookup(kYbarNames, ybar, "ybar");
        if (o_md1->count())
            opts.md1_policy = lookup(kMd1Names, md1_policy, "md1-policy");
        if (o_md2->count())
            opts.md2_rescale = lookup(kMd2Names, md2_rescale, "md2-rescale");
        if (o_proposal_policy->count())
            opts.proposal_policy =
                lookup(kProposalNames, proposal_policy, "proposal-policy");
    }
};

// Writes to `path`, or to stdout when path is empty.
void with_output(const std::string& path, const std::function<void(std::ostream&)>& fn) {
    if (path.empty()) {
        fn(std::cout);
        return;
    }
    std::ofstream out = dyncal::open_for_write(path);
    fn(out);
    if (!out) throw dyncal::IoError("write failed: " + path);
}

struct SimulateArgs {
    std::string config_path, out_path, emit_dataset_path;
    bool desk_scale = false, paper_scale = false, no_timing = false;
    std::size_t emit_replicate = 0;

    std::vector<int> refs;
    std::vector<std::string> gains, cases, methods;
    std::vector<double> ratios;
    std::size_t replicates = 0, n_times = 0;
    std::string theta_mode, interp_truth;
    double truth_walk_sd = 0.0, y0_noise_var = 0.0;
    bool y0_sees_gain = true;

    CLI::Option *o_refs = nullptr, *o_gains = nullptr, *o_cases = nullptr,
                *o_methods = nullptr, *o_ratios = nullptr, *o_replicates = nullptr,
                *o_times = nullptr, *o_theta = nullptr, *o_interp = nullptr,
                *o_walk_sd = nullptr, *o_y0_noise = nullptr, *o_y0_gain = nullptr;

    DynFlags dyn;
};

int run_simulate(const SimulateArgs& a) {
    dyncal::ExperimentGrid grid;
    if (!a.config_path.empty()) {
        std::ifstream in = dyncal::open_for_read(a.config_path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& err) {
            throw std::invalid_argument(std::string("config parse error: ") +
                                        err.what());
        }
        try {
            grid = grid_from_json(j);
        } catch (const json::exception& err) {
            throw std::invalid_argument(std::string("config value error: ") +
                                        err.what());
        }
    }
    if (a.desk_scale) dyncal::apply_desk_scale(grid);
    if (a.paper_scale) {
        dyncal::apply_paper_scale(grid);
        std::fprintf(stderr,
                     "note: full-scale study (100 replicates, T=1000, full grid) "
                     "can run for hours; consider --desk-scale for a check.\n");
    }

    if (a.o_refs->count()) {
        grid.ref_designs.clear();
        for (int v : a.refs) grid.ref_designs.push_back(refs_from_int(v));
    }
    if (a.o_gains->count()) {
        grid.gains.clear();
        for (const auto& s : a.gains) grid.gains.push_back(dyncal::parse_gain(s));
    }
    if (a.o_cases->count()) {
        grid.truth_cases.clear();
        for (const auto& s : a.cases) grid.truth_cases.push_back(dyncal::parse_truth(s));
    }
    if (a.o_methods->count()) {
        grid.methods.clear();
        for (const auto& s : a.methods) grid.methods.push_back(dyncal::parse_method(s));
    }
    if (a.o_ratios->count()) grid.ratios = a.ratios;
    if (a.o_replicates->count()) grid.replicates = a.replicates;
    if (a.o_times->count()) grid.n_times = a.n_times;
    if (a.o_theta->count())
        grid.theta_mode = lookup(kThetaNames, a.theta_mode, "theta-mode");
    if (a.o_interp->count())
        grid.interp_truth = lookup(kInterpNames, a.interp_truth, "interp-truth");
    if (a.o_walk_sd->count()) grid.truth_walk_sd = a.truth_walk_sd;
    if (a.o_y0_noise->count()) grid.y0_noise_var = a.y0_noise_var;
    if (a.o_y0_gain->count()) grid.y0_sees_gain = a.y0_sees_gain;
    a.dyn.apply(grid);
    validate_grid(grid);

    if (!a.emit_dataset_path.empty()) {
        const std::vector<dyncal::CellSpec> cells = dyncal::expand_cells(grid);
        if (cells.size() != 1)
            throw std::invalid_argument(
                "--emit-dataset needs exactly one grid cell (got " +
                std::to_string(cells.size()) + "); narrow refs/gains/ratios/cases");
        const dyncal::SimConfig cfg =
            dyncal::make_sim_config(grid, cells.front(), a.emit_replicate);
        const dyncal::SimDataset ds = dyncal::gen_dataset(cfg);
        dyncal::write_dataset_csv(ds, a.emit_dataset_path);
        return kExitOk;
    }

    const std::vector<dyncal::ResultRow> rows = dyncal::run_experiment(grid);
    std::size_t failed = 0;
    for (const auto& row : rows) {
        if (row.failed()) {
            ++failed;
            std::fprintf(stderr, "cell failed: %s/%s r=%g refs=%d %s: %s\n",
                         row.truth_case.c_str(), row.gain.c_str(), row.ratio,
                         row.refs, row.method.c_str(), row.error.c_str());
        }
    }
    with_output(a.out_path, [&](std::ostream& out) {
        dyncal::write_results_csv(rows, out, !a.no_timing);
    });
    if (!rows.empty() && failed == rows.size()) return kExitNumeric;
    return kExitOk;
}

struct CalibrateArgs {
    std::string in_path, out_path, method;
    DynFlags dyn;
};

int run_calibrate(const CalibrateArgs& a) {
    const dyncal::SimDataset ds = dyncal::read_dataset_csv(a.in_path);
    const dyncal::CalMethod method = dyncal::parse_method(a.method);
    const std::size_t t_count = ds.y0_obs.size();

    dyncal::DynCalOptions opts;
    a.dyn.apply(opts);
    if (opts.burn_in >= t_count)
        throw std::invalid_argument("burn_in must leave at least one point");

    dyncal::CalSummarySeries summary;
    summary.level = opts.level;
    if (method == dyncal::CalMethod::md1 || method == dyncal::CalMethod::md2) {
        opts.method = method == dyncal::CalMethod::md1 ? dyncal::DynMethod::md1
                                                       : dyncal::DynMethod::md2;
        const dyncal::DynamicResult res =
            dyncal::calibrate_dynamic(ds.x_refs, ds.y_refs, ds.y0_obs, opts);
        summary = res.summary;
        std::fprintf(stderr, "ess=%.1f flags=%zu discarded=%zu\n",
                     res.diagnostics.ess, res.diagnostics.total_flags,
                     res.diagnostics.discarded_proposals);
    } else {
        std::vector<double> x_pool, y_pool;
        x_pool.reserve(t_count * ds.n_refs);
        y_pool.reserve(t_count * ds.n_refs);
        for (std::size_t t = 0; t < t_count; ++t)
            for (std::size_t j = 0; j < ds.n_refs; ++j) {
                x_pool.push_back(ds.x_refs[j]);
                y_pool.push_back(ds.y_ref(t, j));
            }
        const dyncal::RegressionFit fit = dyncal::ols_fit(x_pool, y_pool);
        summary.median.resize(t_count);
        summary.lower.resize(t_count);
        summary.upper.resize(t_count);
        for (std::size_t t = 0; t < t_count; ++t) {
            dyncal::CalEstimate ce;
            switch (method) {
                case dyncal::CalMethod::mf1:
                    ce = dyncal::classical_interval(fit, ds.y0_obs[t], opts.level);
                    break;
                case dyncal::CalMethod::mf2:
                    ce = dyncal::inverse_interval(fit, ds.y0_obs[t], opts.level);
                    break;
                case dyncal::CalMethod::mb1:
                    ce = dyncal::hoadley_interval(fit, ds.y0_obs[t], opts.level);
                    break;
                default:
                    ce = dyncal::hunter_lamboy_interval(fit, ds.y0_obs[t], opts.level);
                    break;
            }
            summary.median[t] = ce.point;
            summary.lower[t] = ce.lower;
            summary.upper[t] = ce.upper;
        }
    }

    if (!ds.x0_truth.empty()) {
        const dyncal::CalSummarySeries view =
            dyncal::trim_summary(summary, opts.burn_in);
        const std::vector<double> truth(
            ds.x0_truth.begin() + static_cast<std::ptrdiff_t>(opts.burn_in),
            ds.x0_truth.end());
        const dyncal::SeriesMetrics m =
            dyncal::evaluate_series(view.median, view.lower, view.upper, truth);
        std::fprintf(stderr, "method=%s mse=%.6g cp=%.4f iw=%.6g\n",
                     dyncal::method_name(method), m.mse, m.cp, m.iw);
    }

    with_output(a.out_path, [&](std::ostream& out) {
        dyncal::emit_plot_data(summary, ds.x0_truth.empty() ? nullptr : &ds.x0_truth,
                               out);
    });
    return kExitOk;
}

struct RadiometerArgs {
    std::string in_path, out_path, method = "MD2";
    DynFlags dyn;
};

int run_radiometer(const RadiometerArgs& a) {
    std::ifstream in = dyncal::open_for_read(a.in_path);
    const dyncal::RadiometerStream stream = dyncal::read_radiometer_csv(in);
    const dyncal::RadiometerMethod method = dyncal::parse_radiometer_method(a.method);

    dyncal::DynCalOptions opts = dyncal::radiometer_default_options(method);
    a.dyn.apply(opts);
    const dyncal::RadiometerResult res =
        dyncal::calibrate_radiometer(stream, method, opts);

    if (!a.out_path.empty()) {
        with_output(a.out_path, [&](std::ostream& out) {
            const bool with_bounds = !res.lower.empty();
            out << (with_bounds ? "t,temperature,lower,upper" : "t,temperature")
                << '\n';
            for (std::size_t t = 0; t < res.temperature.size(); ++t) {
                out << (t + 1) << ',' << dyncal::format_g17(res.temperature[t]);
                if (with_bounds)
                    out << ',' << dyncal::format_g17(res.lower[t]) << ','
                        << dyncal::format_g17(res.upper[t]);
                out << '\n';
            }
        });
    }
    std::printf("method=%s n=%zu sigma_hat=%.6g\n",
                dyncal::radiometer_method_name(method), res.temperature.size(),
                res.sigma_hat);
    return kExitOk;
}

struct SynthArgs {
    std::string out_path;
    dyncal::SynthRadiometerConfig cfg;
};

int run_synth(const SynthArgs& a) {
    const dyncal::SynthRadiometer synth = dyncal::synth_radiometer(a.cfg);
    with_output(a.out_path, [&](std::ostream& out) {
        dyncal::write_radiometer_csv(synth.stream, out);
    });
    std::fprintf(stderr, "t_sky=%.6g gain_base=%.6g drift=%.3g\n", synth.t_sky,
                 a.cfg.gain_base, a.cfg.drift_fraction);
    return kExitOk;
}

struct PlotArgs {
    std::string in_path, out_path;
    bool strip_truth = false;
    std::size_t from = 1, to = 0;  // 1-based inclusive; to = 0 means end
};

int run_plot_data(const PlotArgs& a) {
    std::ifstream in = dyncal::open_for_read(a.in_path);
    const dyncal::PlotData data = dyncal::read_plot_data(in);
    const std::size_t n = data.summary.median.size();
    if (a.from < 1 || (a.to != 0 && a.to < a.from))
        throw std::invalid_argument("invalid --from/--to range");
    const std::size_t lo = std::min(a.from - 1, n);
    const std::size_t hi = a.to == 0 ? n : std::min(a.to, n);

    dyncal::CalSummarySeries cut;
    cut.level = data.summary.level;
    std::vector<double> truth_cut;
    for (std::size_t t = lo; t < hi; ++t) {
        cut.median.push_back(data.summary.median[t]);
        cut.lower.push_back(data.summary.lower[t]);
        cut.upper.push_back(data.summary.upper[t]);
        if (data.has_truth && !a.strip_truth) truth_cut.push_back(data.truth[t]);
    }
    with_output(a.out_path, [&](std::ostream& out) {
        dyncal::emit_plot_data(
            cut, (data.has_truth && !a.strip_truth) ? &truth_cut : nullptr, out);
    });
    return kExitOk;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const dyncal::IoError& err) {
        std::fprintf(stderr, "I/O error: %s\n", err.what());
        return kExitIo;
    } catch (const dyncal::ParseError& err) {
        std::fprintf(stderr, "parse error: %s\n", err.what());
        return kExitIo;
    } catch (const dyncal::FilterSingular& err) {
        std::fprintf(stderr, "numerical failure: %s\n", err.what());
        return kExitNumeric;
    } catch (const std::invalid_argument& err) {
        std::fprintf(stderr, "configuration error: %s\n", err.what());
        return kExitConfig;
    } catch (const std::domain_error& err) {
        std::fprintf(stderr, "numerical failure: %s\n", err.what());
        return kExitNumeric;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "numerical failure: %s\n", err.what());
        return kExitNumeric;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamic calibration harness"};
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "run the scenario grid study");
    simulate->add_option("--config", sim.config_path, "JSON config file");
    simulate->add_option("--out", sim.out_path, "result CSV path (default stdout)");
    CLI::Option* desk = simulate->add_flag("--desk-scale", sim.desk_scale,
                                           "preset: replicates=20 T=500 proposals=2000 accepted=500");
    CLI::Option* paper = simulate->add_flag("--paper-scale", sim.paper_scale,
                                            "preset: replicates=100 T=1000 (slow)");
    desk->excludes(paper);
    paper->excludes(desk);
    simulate->add_flag("--no-timing", sim.no_timing,
                       "zero the wall_ms column for byte-stable output");
    sim.o_refs = simulate->add_option("--refs", sim.refs, "reference designs (2,5)")
                     ->delimiter(',');
    sim.o_gains = simulate->add_option("--gains", sim.gains, "gain regimes")
                      ->delimiter(',');
    sim.o_cases = simulate->add_option("--cases", sim.cases, "truth cases")
                      ->delimiter(',');
    sim.o_methods = simulate->add_option("--methods", sim.methods, "methods to run")
                        ->delimiter(',');
    sim.o_ratios = simulate->add_option("--ratios", sim.ratios, "noise ratios")
                       ->delimiter(',');
    sim.o_replicates = simulate->add_option("--replicates", sim.replicates,
                                            "replicates per cell");
    sim.o_times = simulate->add_option("--T,--times", sim.n_times, "series length");
    sim.o_theta = simulate->add_option("--theta-mode", sim.theta_mode,
                                       "line-parameter evolution")
                      ->check(CLI::IsMember({"iid", "random_walk"}));
    sim.o_interp = simulate->add_option("--interp-truth", sim.interp_truth,
                                        "interpolation truth path policy")
                       ->check(CLI::IsMember({"constant_center", "bounded_walk"}));
    sim.o_walk_sd = simulate->add_option("--truth-walk-sd", sim.truth_walk_sd,
                                         "random-walk truth step sd");
    sim.o_y0_noise = simulate->add_option("--y0-noise-var", sim.y0_noise_var,
                                          "unknown-channel observation noise variance");
    sim.o_y0_gain = simulate->add_option("--y0-sees-gain", sim.y0_sees_gain,
                                         "whether the unknown channel sees the gain");
    simulate->add_option("--emit-dataset", sim.emit_dataset_path,
                         "write one cell's replicate dataset CSV and exit");
    simulate->add_option("--replicate", sim.emit_replicate,
                         "replicate index for --emit-dataset");
    sim.dyn.attach(simulate);

    CalibrateArgs cal;
    CLI::App* calibrate =
        app.add_subcommand("calibrate", "calibrate one dataset with one method");
    calibrate->add_option("--in", cal.in_path, "dataset CSV")->required();
    calibrate->add_option("--method", cal.method, "MD1, MD2, MF1, MF2, MB1 or MB2")
        ->required();
    calibrate->add_option("--out", cal.out_path, "plot CSV path (default stdout)");
    cal.dyn.attach(calibrate);

    RadiometerArgs rad;
    CLI::App* radiometer =
        app.add_subcommand("radiometer", "calibrate a two-reference voltage stream");
    radiometer->add_option("--in", rad.in_path, "stream CSV")->required();
    radiometer->add_option("--method", rad.method, "MD1, MD2 or M1U");
    radiometer->add_option("--out", rad.out_path, "calibrated series CSV");
    rad.dyn.attach(radiometer);

    SynthArgs synth;
    CLI::App* synth_cmd = app.add_subcommand(
        "synth-radiometer", "generate a synthetic stream with planted gain drift");
    synth_cmd->add_option("--out", synth.out_path, "stream CSV path (default stdout)");
    synth_cmd->add_option("--T,--times", synth.cfg.n_times, "samples");
    synth_cmd->add_option("--t-sky", synth.cfg.t_sky, "true unknown temperature");
    synth_cmd->add_option("--t-cold", synth.cfg.t_cold, "cold load kelvin");
    synth_cmd->add_option("--t-hot", synth.cfg.t_hot, "hot load kelvin");
    synth_cmd->add_option("--gain-base", synth.cfg.gain_base, "volts per kelvin");
    synth_cmd->add_option("--offset-base", synth.cfg.offset_base, "offset volts");
    synth_cmd->add_option("--drift", synth.cfg.drift_fraction,
                          "peak relative gain excursion");
    synth_cmd->add_option("--cycles", synth.cfg.drift_cycles, "sine cycles per run");
    synth_cmd->add_option("--noise-sd", synth.cfg.noise_sd, "voltage noise sd");
    synth_cmd->add_option("--seed", synth.cfg.seed, "RNG seed");

    PlotArgs plot;
    CLI::App* plot_cmd =
        app.add_subcommand("plot-data", "validate, slice or strip a plot CSV");
    plot_cmd->add_option("--in", plot.in_path, "plot CSV")->required();
    plot_cmd->add_option("--out", plot.out_path, "output path (default stdout)");
    plot_cmd->add_flag("--strip-truth", plot.strip_truth, "drop the truth column");
    plot_cmd->add_option("--from", plot.from, "first t kept (1-based)");
    plot_cmd->add_option("--to", plot.to, "last t kept (0 = end)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& err) {
        return app.exit(err);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return kExitConfig;
    }

    if (simulate->parsed()) return guarded([&] { return run_simulate(sim); });
    if (calibrate->parsed()) return guarded([&] { return run_calibrate(cal); });
    if (radiometer->parsed()) return guarded([&] { return run_radiometer(rad); });
    if (synth_cmd->parsed()) return guarded([&] { return run_synth(synth); });
    if (plot_cmd->parsed()) return guarded([&] { return run_plot_data(plot); });
    return kExitConfig;
}
