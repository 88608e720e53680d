// Voltage-stream calibration: stream validation, CSV round trips, synthetic
// stream generation, and the three calibration pipelines (static pooled
// inverse plus the two dynamic methods). Noiseless streams pin down each
// method's Monte Carlo noise floor; a drifting stream checks that dynamic
// tracking beats the pooled static fit on stability.

#include "catch2/catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "dyncal/radiometer.hpp"
#include "dyncal/stats.hpp"

namespace {

// Exact static line: v = offset + gain * temperature on every channel.
dyncal::RadiometerStream exact_stream(std::size_t n, double t_sky,
                                      double gain = 0.05, double offset = 1.0) {
    dyncal::RadiometerStream s;
    s.v_cold.assign(n, offset + gain * dyncal::kDefaultColdKelvin);
    s.v_hot.assign(n, offset + gain * dyncal::kDefaultHotKelvin);
    s.v_unknown.assign(n, offset + gain * t_sky);
    return s;
}

double mean_abs_error_after(const std::vector<double>& series, double truth,
                            std::size_t from) {
    double acc = 0.0;
    for (std::size_t t = from; t < series.size(); ++t)
        acc += std::abs(series[t] - truth);
    return acc / static_cast<double>(series.size() - from);
}

}  // namespace

TEST_CASE("stream validation rejects malformed inputs", "[radiometer]") {
    dyncal::RadiometerStream empty;
    REQUIRE_THROWS_AS(dyncal::validate_stream(empty), std::invalid_argument);

    dyncal::RadiometerStream mismatched = exact_stream(3, 300.0);
    mismatched.v_cold.pop_back();
    REQUIRE_THROWS_AS(dyncal::validate_stream(mismatched), std::invalid_argument);

    dyncal::RadiometerStream bad_temp = exact_stream(3, 300.0);
    bad_temp.t_cold = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(dyncal::validate_stream(bad_temp), std::invalid_argument);

    dyncal::RadiometerStream inverted = exact_stream(3, 300.0);
    inverted.t_cold = 400.0;  // above t_hot
    REQUIRE_THROWS_AS(dyncal::validate_stream(inverted), std::invalid_argument);

    dyncal::RadiometerStream equal = exact_stream(3, 300.0);
    equal.t_cold = equal.t_hot;
    REQUIRE_THROWS_AS(dyncal::validate_stream(equal), std::invalid_argument);

    REQUIRE_NOTHROW(dyncal::validate_stream(exact_stream(1, 310.0)));
}

TEST_CASE("method names round trip", "[radiometer]") {
    using dyncal::RadiometerMethod;
    const RadiometerMethod all[] = {RadiometerMethod::md1, RadiometerMethod::md2,
                                    RadiometerMethod::static_inverse};
    for (RadiometerMethod m : all)
        REQUIRE(dyncal::parse_radiometer_method(dyncal::radiometer_method_name(m)) == m);
    REQUIRE(std::string(dyncal::radiometer_method_name(RadiometerMethod::static_inverse)) ==
            "M1U");
    REQUIRE_THROWS_AS(dyncal::parse_radiometer_method("MU1"), std::invalid_argument);
    REQUIRE_THROWS_AS(dyncal::parse_radiometer_method(""), std::invalid_argument);
}

TEST_CASE("stream CSV parsing", "[radiometer]") {
    SECTION("load temperatures default when no metadata is given") {
        std::istringstream in(
            "t,v_cold,v_hot,v_unknown\n"
            "1,1.0,2.0,1.5\n"
            "2,1.1,2.1,1.6\n");
        const dyncal::RadiometerStream s = dyncal::read_radiometer_csv(in);
        REQUIRE(s.size() == 2);
        REQUIRE(s.t_cold == 293.69);
        REQUIRE(s.t_hot == 325.59);
        REQUIRE(s.v_cold[1] == 1.1);
        REQUIRE(s.v_unknown[0] == 1.5);
    }

    SECTION("metadata lines override the load temperatures") {
        std::istringstream in(
            "#t_cold=10.5\n"
            "#t_hot=20.25\n"
            "t,v_cold,v_hot,v_unknown\n"
            "1,0.5,1.0,0.75\n");
        const dyncal::RadiometerStream s = dyncal::read_radiometer_csv(in);
        REQUIRE(s.t_cold == 10.5);
        REQUIRE(s.t_hot == 20.25);
    }

    SECTION("unknown metadata key is rejected with its line number") {
        std::istringstream in("#t_mid=5\nt,v_cold,v_hot,v_unknown\n1,1,2,1.5\n");
        try {
            dyncal::read_radiometer_csv(in);
            FAIL("expected ParseError");
        } catch (const dyncal::ParseError& err) {
            REQUIRE(err.line == 1);
            REQUIRE_THAT(err.what(),
                         Catch::Matchers::ContainsSubstring("t_mid"));
        }
    }

    SECTION("metadata line without '=' is rejected") {
        std::istringstream in("#t_cold 10\nt,v_cold,v_hot,v_unknown\n1,1,2,1.5\n");
        REQUIRE_THROWS_AS(dyncal::read_radiometer_csv(in), dyncal::ParseError);
    }

    SECTION("wrong header is rejected") {
        std::istringstream in("time,c,h,u\n1,1,2,1.5\n");
        REQUIRE_THROWS_AS(dyncal::read_radiometer_csv(in), dyncal::ParseError);
    }

    SECTION("rows must have exactly four columns") {
        std::istringstream in("t,v_cold,v_hot,v_unknown\n1,1.0,2.0\n");
        try {
            dyncal::read_radiometer_csv(in);
            FAIL("expected ParseError");
        } catch (const dyncal::ParseError& err) {
            REQUIRE(err.line == 2);
        }
    }

    SECTION("malformed numbers are rejected") {
        std::istringstream bad_value("t,v_cold,v_hot,v_unknown\n1,abc,2.0,1.5\n");
        REQUIRE_THROWS_AS(dyncal::read_radiometer_csv(bad_value), dyncal::ParseError);
        std::istringstream bad_index("t,v_cold,v_hot,v_unknown\nx,1.0,2.0,1.5\n");
        REQUIRE_THROWS_AS(dyncal::read_radiometer_csv(bad_index), dyncal::ParseError);
    }

    SECTION("header with no rows fails stream validation") {
        std::istringstream in("t,v_cold,v_hot,v_unknown\n");
        REQUIRE_THROWS_AS(dyncal::read_radiometer_csv(in), std::invalid_argument);
    }

    SECTION("empty input is missing the header") {
        std::istringstream in("");
        REQUIRE_THROWS_AS(dyncal::read_radiometer_csv(in), dyncal::ParseError);
    }
}

TEST_CASE("stream CSV write/read round trip is exact", "[radiometer]") {
    dyncal::RadiometerStream s;
    s.t_cold = 100.25;
    s.t_hot = 310.0 + 1.0 / 3.0;
    s.v_cold = {0.1, 0.2 + 1e-13, -3.75};
    s.v_hot = {1.0 / 7.0, 2.5, 19.0};
    s.v_unknown = {0.0, -0.0625, 1e-17};

    std::ostringstream out;
    dyncal::write_radiometer_csv(s, out);
    std::istringstream in(out.str());
    const dyncal::RadiometerStream back = dyncal::read_radiometer_csv(in);

    REQUIRE(back.t_cold == s.t_cold);
    REQUIRE(back.t_hot == s.t_hot);
    REQUIRE(back.v_cold == s.v_cold);
    REQUIRE(back.v_hot == s.v_hot);
    REQUIRE(back.v_unknown == s.v_unknown);
}

TEST_CASE("synthetic stream generation", "[radiometer]") {
    SECTION("configuration errors") {
        dyncal::SynthRadiometerConfig cfg;
        cfg.n_times = 0;
        REQUIRE_THROWS_AS(dyncal::synth_radiometer(cfg), std::invalid_argument);

        cfg = dyncal::SynthRadiometerConfig{};
        cfg.t_cold = cfg.t_hot;
        REQUIRE_THROWS_AS(dyncal::synth_radiometer(cfg), std::invalid_argument);

        cfg = dyncal::SynthRadiometerConfig{};
        cfg.noise_sd = -0.1;
        REQUIRE_THROWS_AS(dyncal::synth_radiometer(cfg), std::invalid_argument);

        cfg = dyncal::SynthRadiometerConfig{};
        cfg.drift_fraction = -0.01;
        REQUIRE_THROWS_AS(dyncal::synth_radiometer(cfg), std::invalid_argument);
    }

    SECTION("noiseless driftless stream sits exactly on the static line") {
        dyncal::SynthRadiometerConfig cfg;
        cfg.n_times = 25;
        cfg.noise_sd = 0.0;
        cfg.drift_fraction = 0.0;
        const dyncal::SynthRadiometer synth = dyncal::synth_radiometer(cfg);
        REQUIRE(synth.t_sky == cfg.t_sky);
        REQUIRE(synth.stream.size() == 25);
        REQUIRE(synth.gain.size() == 25);
        for (std::size_t t = 0; t < 25; ++t) {
            REQUIRE(synth.gain[t] == cfg.gain_base);
            REQUIRE(synth.stream.v_cold[t] ==
                    Catch::Approx(cfg.offset_base + cfg.gain_base * cfg.t_cold)
                        .margin(1e-12));
            REQUIRE(synth.stream.v_hot[t] ==
                    Catch::Approx(cfg.offset_base + cfg.gain_base * cfg.t_hot)
                        .margin(1e-12));
            REQUIRE(synth.stream.v_unknown[t] ==
                    Catch::Approx(cfg.offset_base + cfg.gain_base * cfg.t_sky)
                        .margin(1e-12));
        }
    }

    SECTION("gain path stays inside the drift envelope and starts at base") {
        dyncal::SynthRadiometerConfig cfg;
        cfg.n_times = 400;
        cfg.drift_fraction = 0.03;
        const dyncal::SynthRadiometer synth = dyncal::synth_radiometer(cfg);
        REQUIRE(synth.gain[0] == cfg.gain_base);  // sin(0) = 0
        double lo = synth.gain[0], hi = synth.gain[0];
        for (double g : synth.gain) {
            lo = std::min(lo, g);
            hi = std::max(hi, g);
        }
        REQUIRE(lo >= cfg.gain_base * (1.0 - cfg.drift_fraction) - 1e-15);
        REQUIRE(hi <= cfg.gain_base * (1.0 + cfg.drift_fraction) + 1e-15);
        // Three full cycles actually explore the envelope.
        REQUIRE(hi - lo > cfg.gain_base * cfg.drift_fraction);
    }

    SECTION("seed determinism") {
        dyncal::SynthRadiometerConfig cfg;
        cfg.n_times = 60;
        cfg.seed = 9;
        const dyncal::SynthRadiometer a = dyncal::synth_radiometer(cfg);
        const dyncal::SynthRadiometer b = dyncal::synth_radiometer(cfg);
        REQUIRE(a.stream.v_cold == b.stream.v_cold);
        REQUIRE(a.stream.v_hot == b.stream.v_hot);
        REQUIRE(a.stream.v_unknown == b.stream.v_unknown);
        cfg.seed = 10;
        const dyncal::SynthRadiometer c = dyncal::synth_radiometer(cfg);
        REQUIRE(a.stream.v_unknown != c.stream.v_unknown);
    }
}

TEST_CASE("default calibration options", "[radiometer]") {
    const dyncal::DynCalOptions o1 =
        dyncal::radiometer_default_options(dyncal::RadiometerMethod::md1);
    REQUIRE(o1.method == dyncal::DynMethod::md1);
    const dyncal::DynCalOptions o2 =
        dyncal::radiometer_default_options(dyncal::RadiometerMethod::md2);
    REQUIRE(o2.method == dyncal::DynMethod::md2);
    REQUIRE(o2.proposals == 2000);
    REQUIRE(o2.accepted == 500);
    REQUIRE(o2.burn_in == 10);
    REQUIRE(o2.ybar_policy == dyncal::YbarPolicy::per_time);
}

TEST_CASE("static inverse calibration reads a constant sky exactly", "[radiometer]") {
    const dyncal::RadiometerStream s = exact_stream(40, 310.0);
    const dyncal::RadiometerResult res =
        dyncal::calibrate_radiometer(s, dyncal::RadiometerMethod::static_inverse);
    REQUIRE(res.method == dyncal::RadiometerMethod::static_inverse);
    REQUIRE(res.temperature.size() == 40);
    REQUIRE(res.lower.empty());
    REQUIRE(res.upper.empty());
    for (double temp : res.temperature)
        REQUIRE(temp == Catch::Approx(310.0).margin(1e-9));
    REQUIRE(res.sigma_hat < 1e-9);
}

TEST_CASE("noiseless stream stability floors by method", "[radiometer][slow]") {
    // A perfectly stable stream isolates each method's own output noise: the
    // pooled inverse fit is deterministic, the ratio method only carries the
    // tiny filter predictive smear, and the shrinkage method adds a
    // unit-scale draw whose per-time median still fluctuates by about
    // 1.25/sqrt(accepted) kelvin.
    dyncal::SynthRadiometerConfig cfg;
    cfg.n_times = 200;
    cfg.t_sky = 300.0;
    cfg.noise_sd = 0.0;
    cfg.drift_fraction = 0.0;
    const dyncal::SynthRadiometer synth = dyncal::synth_radiometer(cfg);

    const dyncal::RadiometerResult stat = dyncal::calibrate_radiometer(
        synth.stream, dyncal::RadiometerMethod::static_inverse);
    REQUIRE(stat.sigma_hat < 1e-9);
    REQUIRE(stat.temperature[50] == Catch::Approx(300.0).margin(1e-6));

    // The ratio method's smear is also unit-scale (about 1/sqrt(2) kelvin),
    // so its median series carries the same order of Monte Carlo wobble.
    const dyncal::RadiometerResult r1 =
        dyncal::calibrate_radiometer(synth.stream, dyncal::RadiometerMethod::md1);
    REQUIRE(r1.sigma_hat < 0.1);
    REQUIRE(r1.temperature.size() == 200);
    REQUIRE(r1.lower.size() == 200);
    REQUIRE(mean_abs_error_after(r1.temperature, 300.0, 10) < 0.2);

    const dyncal::RadiometerResult r2 =
        dyncal::calibrate_radiometer(synth.stream, dyncal::RadiometerMethod::md2);
    REQUIRE(r2.sigma_hat < 0.1);
    REQUIRE(mean_abs_error_after(r2.temperature, 300.0, 10) < 0.3);
    // Interval bounds bracket the medians.
    for (std::size_t t = 10; t < 200; ++t) {
        REQUIRE(r2.lower[t] <= r2.temperature[t]);
        REQUIRE(r2.temperature[t] <= r2.upper[t]);
    }
}

TEST_CASE("gain drift: dynamic tracking beats the pooled static fit",
          "[radiometer][slow]") {
    dyncal::SynthRadiometerConfig cfg;
    cfg.n_times = 600;
    cfg.seed = 5;
    const dyncal::SynthRadiometer synth = dyncal::synth_radiometer(cfg);

    const dyncal::RadiometerResult stat = dyncal::calibrate_radiometer(
        synth.stream, dyncal::RadiometerMethod::static_inverse);
    // The 2% gain wobble smears a pooled read of a 150 K sky by order
    // 150 * 0.02 / sqrt(2) kelvin.
    REQUIRE(stat.sigma_hat > 1.0);

    for (dyncal::RadiometerMethod m :
         {dyncal::RadiometerMethod::md1, dyncal::RadiometerMethod::md2}) {
        dyncal::DynCalOptions opts = dyncal::radiometer_default_options(m);
        opts.proposals = 600;
        opts.accepted = 200;
        const dyncal::RadiometerResult dyn =
            dyncal::calibrate_radiometer(synth.stream, m, opts);
        INFO("method " << dyncal::radiometer_method_name(m)
                       << " sigma " << dyn.sigma_hat << " static "
                       << stat.sigma_hat);
        REQUIRE(dyn.sigma_hat < 0.9 * stat.sigma_hat);
        REQUIRE(mean_abs_error_after(dyn.temperature, synth.t_sky, 10) < 2.0);
    }
}

TEST_CASE("sigma_hat honors the burn-in trim", "[radiometer]") {
    dyncal::RadiometerStream s = exact_stream(30, 310.0);
    s.v_unknown[0] = 1.0 + 0.05 * 400.0;  // one wild early sample

    dyncal::DynCalOptions opts;
    opts.burn_in = 0;
    const dyncal::RadiometerResult full = dyncal::calibrate_radiometer(
        s, dyncal::RadiometerMethod::static_inverse, opts);
    REQUIRE(full.sigma_hat > 1.0);

    opts.burn_in = 1;
    const dyncal::RadiometerResult trimmed = dyncal::calibrate_radiometer(
        s, dyncal::RadiometerMethod::static_inverse, opts);
    REQUIRE(trimmed.sigma_hat < 1e-9);
    REQUIRE(trimmed.temperature.size() == 30);  // series itself is untrimmed

    // Burn-in is capped at length - 1; a single kept point reports zero.
    opts.burn_in = 1000;
    const dyncal::RadiometerResult capped = dyncal::calibrate_radiometer(
        s, dyncal::RadiometerMethod::static_inverse, opts);
    REQUIRE(capped.sigma_hat == 0.0);
}

TEST_CASE("two-argument overload uses the tuned defaults", "[radiometer][slow]") {
    dyncal::SynthRadiometerConfig cfg;
    cfg.n_times = 80;
    cfg.noise_sd = 0.0;
    cfg.drift_fraction = 0.0;
    const dyncal::SynthRadiometer synth = dyncal::synth_radiometer(cfg);

    const dyncal::RadiometerResult a =
        dyncal::calibrate_radiometer(synth.stream, dyncal::RadiometerMethod::md2);
    const dyncal::RadiometerResult b = dyncal::calibrate_radiometer(
        synth.stream, dyncal::RadiometerMethod::md2,
        dyncal::radiometer_default_options(dyncal::RadiometerMethod::md2));
    REQUIRE(a.temperature == b.temperature);
    REQUIRE(a.lower == b.lower);
    REQUIRE(a.upper == b.upper);
    REQUIRE(a.sigma_hat == b.sigma_hat);
}
