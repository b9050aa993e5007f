#pragma once

// Command-line front end: scenario resolution, analysis subcommands, CSV
// output plumbing, and the exit-code contract (0 ok, 2 configuration or
// usage error, 3 mathematically invalid request / numeric failure).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "../../vendor/CLI11.hpp"
#include "core.hpp"
#include "csvio.hpp"
#include "equilibrium.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "linear.hpp"
#include "lyapunov.hpp"
#include "scenario.hpp"
#include "simulate.hpp"
#include "stability.hpp"
#include "version.hpp"

namespace agestruct {
namespace cli {

struct CommonOptions {
    std::string config;
    std::string out;
    double da = 0.0;              // 0 = use the scenario's value
    double t_end = 0.0;           // 0 = use the scenario's value
    double snapshot_every = -1.0; // <0 = use the scenario's value
    std::string format = "csv";
};

inline std::vector<std::string> scenario_dirs() {
    std::vector<std::string> dirs;
    if (const char* env = std::getenv("AGESTRUCT_SCENARIO_PATH")) dirs.push_back(env);
#ifdef AGESTRUCT_SCENARIO_DIR
    dirs.push_back(AGESTRUCT_SCENARIO_DIR);
#endif
    dirs.push_back("scenarios");
    dirs.push_back(".");
    return dirs;
}

inline Scenario load(const CommonOptions& opt) {
    if (opt.config.empty()) throw config_error("--config is required");
    if (opt.format != "csv") throw config_error("--format: only 'csv' is supported");
    Scenario sc = resolve_scenario(opt.config, scenario_dirs());
    if (opt.da > 0.0) sc.horizon.da = opt.da;
    if (opt.t_end > 0.0) sc.horizon.t_end = opt.t_end;
    if (opt.snapshot_every >= 0.0) sc.horizon.snapshot_every = opt.snapshot_every;
    return sc;
}

inline void add_common(CLI::App* cmd, CommonOptions& opt, bool with_run_controls = true) {
    cmd->add_option("--config", opt.config, "scenario file path or preset name")->required();
    cmd->add_option("--out", opt.out, "output directory (created if missing)");
    cmd->add_option("--da", opt.da, "grid spacing override, years");
    cmd->add_option("--format", opt.format, "output format (csv)");
    if (with_run_controls) {
        cmd->add_option("--t-end", opt.t_end, "run length override, years");
        cmd->add_option("--snapshot-every", opt.snapshot_every,
                        "density snapshot interval, years (0 disables)");
    }
}

inline int cmd_validate(const CommonOptions& opt) {
    Scenario sc = load(opt);
    AgeGrid g = sc.grid();
    const double bracket = std::max(1.0, 2.0 * std::max(sc.ceilings.q0, 1.0));
    HypothesisReport rep = validate_hypotheses(sc.rates, g, bracket);
    std::cout << "scenario " << sc.name << " ok (hash " << scenario_hash(sc) << ")\n";
    std::cout << "grid a1=" << g.a1 << " da=" << g.da << " window=[" << g.a_min << "," << g.a_max
              << "] cells=" << g.n << "\n";
    auto flag = [](bool b) { return b ? "pass" : "fail"; };
    std::cout << "H.1 rate-structure: " << flag(rep.h1) << "\n"
              << "H.2 subcritical-tail: " << flag(rep.h2) << "\n"
              << "H.6 bounded-fertility: " << flag(rep.h6) << "\n"
              << "H.7 monotone-feedback: " << flag(rep.h7) << "\n"
              << "growth-constant " << csv_num(rep.omega_bound) << " per-year\n";
    for (const auto& w : rep.witnesses)
        std::cout << "  witness " << w.condition << " at age " << csv_num(w.age) << " size "
                  << csv_num(w.size) << " value " << csv_num(w.value) << "\n";
    if (!opt.out.empty()) {
        std::string dir = ensure_out_dir(opt.out);
        write_report_csv(dir, "validate.csv",
                         {"h1", "h2", "h6", "h7", "omega_bound"},
                         {flag(rep.h1), flag(rep.h2), flag(rep.h6), flag(rep.h7),
                          csv_num(rep.omega_bound)});
        write_metadata(dir, sc, g, "validate");
    }
    return 0;
}

inline int cmd_simulate(const CommonOptions& opt) {
    Scenario sc = load(opt);
    AgeGrid g = sc.grid();
    std::vector<double> p0 = sc.initial.build(g);
    TrajectoryRecord rec = simulate(sc.rates, g, p0, sc.horizon.t_end,
                                    sc.horizon.snapshot_every, sc.ceilings.q0, sc.ceilings.q1);
    const TrajectoryRow& last = rec.rows.back();
    std::cout << "t_end " << csv_num(last.t) << "  T " << csv_num(last.T) << "  B "
              << csv_num(last.B) << "  Q0 " << csv_num(last.Q0) << "  Q1 " << csv_num(last.Q1)
              << "\n";
    std::cout << "positivity " << (rec.positive ? "ok" : "violated") << "  growth-bound "
              << (rec.growth_bound_ok ? "ok" : "violated") << "\n";
    std::string dir = ensure_out_dir(opt.out);
    write_trajectory_csv(dir, rec);
    write_snapshot_csvs(dir, rec);
    write_metadata(dir, sc, g, "simulate");
    return 0;
}

inline int cmd_equilibrium(const CommonOptions& opt) {
    Scenario sc = load(opt);
    AgeGrid g = sc.grid();
    EquilibriumSolution sol = solve_equilibrium(sc.rates, g);
    const char* kind = sol.kind == EquilibriumKind::positive ? "positive" : "trivial";
    std::cout << "igc " << csv_num(sol.igc) << "\n"
              << "kind " << kind << "\n"
              << "Q0_hat " << csv_num(sol.q0_hat) << "\n"
              << "Q1_hat " << csv_num(sol.q1_hat) << "\n"
              << "residual_R " << csv_num(sol.residual_R) << "\n"
              << "residual_theta " << csv_num(sol.residual_fixed_point) << "\n"
              << "mean_age " << csv_num(sol.stats.mean_age) << "\n"
              << "avg_lifespan " << csv_num(sol.stats.avg_lifespan) << "\n";
    if (!opt.out.empty()) {
        std::string dir = ensure_out_dir(opt.out);
        write_report_csv(dir, "equilibrium.csv",
                         {"igc", "kind", "Q0_hat", "Q1_hat", "residual_R", "residual_theta",
                          "mean_age", "avg_lifespan"},
                         {csv_num(sol.igc), kind, csv_num(sol.q0_hat), csv_num(sol.q1_hat),
                          csv_num(sol.residual_R), csv_num(sol.residual_fixed_point),
                          csv_num(sol.stats.mean_age), csv_num(sol.stats.avg_lifespan)});
        if (sol.kind == EquilibriumKind::positive) {
            std::vector<double> ages(g.n);
            for (std::size_t j = 0; j < g.n; ++j) ages[j] = g.center(j);
            write_series_csv(dir, "phi_hat.csv", {"age", "density"}, {ages, sol.phi_hat});
        }
        write_metadata(dir, sc, g, "equilibrium");
    }
    return 0;
}

inline int cmd_stability(const CommonOptions& opt) {
    Scenario sc = load(opt);
    AgeGrid g = sc.grid();
    EquilibriumSolution sol = solve_equilibrium(sc.rates, g);
    LinearizedOperator op = linearize_at(sc.rates, g, sol);
    StabilityVerdict v = classify_equilibrium(op, sol);
    const char* kind = sol.kind == EquilibriumKind::positive ? "positive" : "trivial";
    auto h_state = [](bool checked, bool pass) {
        return !checked ? "skipped" : (pass ? "pass" : "fail");
    };
    std::cout << "kind " << kind << "\n"
              << "igc " << csv_num(sol.igc) << "\n"
              << "DR " << csv_num(v.dr) << "\n"
              << "DR_sign " << (v.dr > 0 ? "+1" : (v.dr < 0 ? "-1" : "0")) << "\n"
              << "H4 " << h_state(v.h4_checked, v.h4_pass) << "\n"
              << "H5 " << h_state(v.h5_checked, v.h5_pass) << "\n"
              << "classification " << to_string(v.classification) << "\n";
    std::cout << "real_roots";
    for (double r : v.real_roots) std::cout << " " << csv_num(r);
    std::cout << "\n";
    if (!opt.out.empty()) {
        std::string dir = ensure_out_dir(opt.out);
        write_report_csv(dir, "stability.csv",
                         {"kind", "igc", "DR", "H4", "H5", "classification"},
                         {kind, csv_num(sol.igc), csv_num(v.dr), h_state(v.h4_checked, v.h4_pass),
                          h_state(v.h5_checked, v.h5_pass), to_string(v.classification)});
        write_metadata(dir, sc, g, "stability");
    }
    return 0;
}

inline int cmd_linear(const CommonOptions& opt) {
    Scenario sc = load(opt);
    AgeGrid g = sc.grid();
    LinearModel m = frozen_model(sc.rates, g, 0.0, 0.0);
    std::vector<double> p0 = sc.initial.build(g);
    const double r0 = r0_linear(m);
    AsymptoticProfile prof = asymptotic_profile(m, p0);
    PersistenceReport pers = persistence_check(m, p0, sc.horizon.t_end);
    std::cout << "R0 " << csv_num(r0) << "\n"
              << "lambda0 " << csv_num(prof.lambda0) << "\n"
              << "coefficient " << csv_num(prof.coefficient) << "\n"
              << "boundary_class " << (prof.boundary_class ? "yes" : "no") << "\n"
              << "persistent " << (pers.persistent ? "yes" : "no") << "\n";
    if (!opt.out.empty()) {
        std::string dir = ensure_out_dir(opt.out);
        write_report_csv(dir, "linear.csv",
                         {"R0", "lambda0", "coefficient", "boundary_class", "persistent"},
                         {csv_num(r0), csv_num(prof.lambda0), csv_num(prof.coefficient),
                          prof.boundary_class ? "yes" : "no", pers.persistent ? "yes" : "no"});
        std::vector<double> ages(g.n);
        for (std::size_t j = 0; j < g.n; ++j) ages[j] = g.center(j);
        write_series_csv(dir, "asymptotic.csv", {"age", "density"}, {ages, prof.profile});
        write_metadata(dir, sc, g, "linear");
    }
    return 0;
}

inline int cmd_lyapunov(const CommonOptions& opt) {
    Scenario sc = load(opt);
    AgeGrid g = sc.grid();
    if (sc.horizon.snapshot_every <= 0.0)
        sc.horizon.snapshot_every = std::max(g.da, sc.horizon.t_end / 100.0);
    std::vector<double> p0 = sc.initial.build(g);
    TrajectoryRecord rec = simulate(sc.rates, g, p0, sc.horizon.t_end,
                                    sc.horizon.snapshot_every, sc.ceilings.q0, sc.ceilings.q1);
    const double growth = igc(sc.rates, g);
    const LyapunovKind kind = growth > 1.0 ? LyapunovKind::positive : LyapunovKind::trivial;
    LyapunovTrace tr = lyapunov_trace(sc.rates, g, rec, kind);
    std::cout << "functional " << (kind == LyapunovKind::positive ? "positive" : "trivial")
              << "\n"
              << "snapshots " << tr.values.size() << "\n"
              << "V_first " << csv_num(tr.values.front()) << "\n"
              << "V_last " << csv_num(tr.values.back()) << "\n"
              << "max_upward_jump " << csv_num(tr.max_upward_jump) << "\n"
              << "tolerance " << csv_num(tr.tolerance) << "\n"
              << "monotone " << (tr.monotone ? "yes" : "no") << "\n";
    if (!opt.out.empty()) {
        std::string dir = ensure_out_dir(opt.out);
        if (kind == LyapunovKind::positive)
            write_series_csv(dir, "lyapunov.csv", {"t", "value", "value_paper"},
                             {tr.times, tr.values, tr.values_paper});
        else
            write_series_csv(dir, "lyapunov.csv", {"t", "value"}, {tr.times, tr.values});
        write_metadata(dir, sc, g, "lyapunov");
    }
    return 0;
}

struct SweepOptions {
    std::string param;
    double lo = 0.0, hi = 0.0;
    std::size_t points = 0;
};

inline int cmd_sweep(const CommonOptions& opt, const SweepOptions& sw) {
    Scenario sc = load(opt);
    if (sw.param != "a_min" && sw.param != "a_max")
        throw config_error("sweep --param: supported parameters are 'a_min' and 'a_max'");
    if (!(sw.points >= 2)) throw config_error("sweep --points: need at least 2");
    if (!(sw.lo < sw.hi)) throw config_error("sweep: need --lo < --hi");
    const double da = sc.horizon.da;
    std::vector<double> values(sw.points), igcs(sw.points);
    for (std::size_t i = 0; i < sw.points; ++i) {
        double x = sw.lo + (sw.hi - sw.lo) * static_cast<double>(i) /
                             static_cast<double>(sw.points - 1);
        values[i] = std::round(x / da) * da;  // window edges sit on cell boundaries
    }
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mu;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= sw.points || failed.load()) break;
            try {
                const Scenario swept =
                    with_window(sc, sw.param == "a_min" ? values[i] : sc.a_min,
                                sw.param == "a_max" ? values[i] : sc.a_max);
                AgeGrid g(swept.a1, da, swept.a_min, swept.a_max);
                igcs[i] = igc(swept.rates, g);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!failed.exchange(true)) first_error = e.what();
            }
        }
    };
    const std::size_t nthreads =
        std::min<std::size_t>(sw.points, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failed.load()) throw domain_error("sweep: " + first_error);

    double crossing = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 1; i < sw.points; ++i) {
        if ((igcs[i - 1] > 1.0) != (igcs[i] > 1.0)) {
            const double f = (1.0 - igcs[i - 1]) / (igcs[i] - igcs[i - 1]);
            crossing = values[i - 1] + f * (values[i] - values[i - 1]);
            break;
        }
    }
    std::cout << "param " << sw.param << "\n"
              << "points " << sw.points << "\n";
    if (std::isfinite(crossing)) std::cout << "igc_crosses_1_at " << csv_num(crossing) << "\n";
    std::string dir = ensure_out_dir(opt.out);
    write_series_csv(dir, "sweep.csv", {sw.param, "igc"}, {values, igcs});
    write_metadata(dir, sc, sc.grid(), "sweep");
    return 0;
}

// Parses argv (without the program name) and runs one subcommand.
inline int run_command(std::vector<std::string> args) {
    CLI::App app{std::string(kToolName) + " " + kToolVersion +
                 " - age-structured population model toolkit"};
    app.require_subcommand(1);

    CommonOptions opt;
    SweepOptions sw;

    CLI::App* validate = app.add_subcommand("validate", "check a scenario and its hypotheses");
    add_common(validate, opt, false);
    CLI::App* simulate = app.add_subcommand("simulate", "run the nonlinear model");
    add_common(simulate, opt);
    CLI::App* equilibrium = app.add_subcommand("equilibrium", "construct and report equilibria");
    add_common(equilibrium, opt, false);
    CLI::App* stability = app.add_subcommand("stability", "linearized stability verdict");
    add_common(stability, opt, false);
    CLI::App* linear = app.add_subcommand("linear", "frozen-rate linear theory report");
    add_common(linear, opt);
    CLI::App* lyapunov = app.add_subcommand("lyapunov", "evaluate the energy functional on a run");
    add_common(lyapunov, opt);
    CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep of the growth constant");
    add_common(sweep, opt, false);
    sweep->add_option("--param", sw.param, "parameter to sweep (a_min | a_max)")->required();
    sweep->add_option("--lo", sw.lo, "lower end of the sweep")->required();
    sweep->add_option("--hi", sw.hi, "upper end of the sweep")->required();
    sweep->add_option("--points", sw.points, "number of sweep points")->required();

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (validate->parsed()) return cmd_validate(opt);
        if (simulate->parsed()) return cmd_simulate(opt);
        if (equilibrium->parsed()) return cmd_equilibrium(opt);
        if (stability->parsed()) return cmd_stability(opt);
        if (linear->parsed()) return cmd_linear(opt);
        if (lyapunov->parsed()) return cmd_lyapunov(opt);
        if (sweep->parsed()) return cmd_sweep(opt, sw);
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;  // unreachable with require_subcommand(1)
}

}  // namespace cli
}  // namespace agestruct
