#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sica/analysis.hpp"
#include "sica/config.hpp"
#include "sica/integrator.hpp"
#include "sica/model.hpp"
#include "sica/output.hpp"
#include "sica/svg.hpp"
#include "sica/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

struct Options {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::uint32_t> paths;
    std::optional<double> dt;
    std::optional<double> t_end;
    bool svg = false;
    std::string format = "csv";
};

void add_common_options(CLI::App* cmd, Options& opt, bool needs_config) {
    auto* cfg = cmd->add_option("--config", opt.config_path, "run configuration (JSON)");
    if (needs_config) cfg->required();
    cmd->add_option("--out", opt.out_dir, "output directory (created if missing)");
    cmd->add_option("--seed", opt.seed, "override the config seed");
    cmd->add_option("--paths", opt.paths, "override the config path count");
    cmd->add_option("--dt", opt.dt, "override the config step size");
    cmd->add_option("--t-end", opt.t_end, "override the config horizon");
    cmd->add_flag("--svg", opt.svg, "also emit an SVG plot");
    cmd->add_option("--format", opt.format, "trajectory output format")
        ->check(CLI::IsMember({"csv", "json"}));
}

sica::RunConfig load_with_overrides(const Options& opt) {
    sica::RunConfig cfg = sica::load_config(opt.config_path);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.paths) cfg.path_count = *opt.paths;
    if (opt.dt) cfg.grid.dt = *opt.dt;
    if (opt.t_end) cfg.grid.t_end = *opt.t_end;
    try {
        cfg.validate();
    } catch (const std::domain_error& e) {
        throw sica::config_error("", e.what());
    }
    return cfg;
}

fs::path prepare_out_dir(const Options& opt) {
    fs::path dir(opt.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw sica::io_error("cannot create output directory " + dir.string());
    return dir;
}

void print_simulation_warnings(const sica::Trajectory& traj, const sica::SicaParams& p,
                               const sica::LevyMeasure& levy, const sica::GridSpec& grid) {
    if (!traj.diagnostics.initial_in_omega)
        std::fprintf(stderr, "warning: initial state lies outside the feasible region\n");
    if (traj.diagnostics.dt_exceeds_safe)
        std::fprintf(stderr, "warning: dt=%g exceeds the stability heuristic dt_safe=%g\n",
                     grid.dt, sica::dt_safe(p, levy));
}

nlohmann::ordered_json trajectory_json(const sica::Trajectory& traj) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["kind"] = "trajectory";
    j["generator"] = sica::RngStream::describe();
    j["t"] = traj.times;
    auto col = [&](auto proj) {
        std::vector<double> v;
        v.reserve(traj.states.size());
        for (const auto& x : traj.states) v.push_back(proj(x));
        return v;
    };
    j["S"] = col([](const sica::SicaState& x) { return x.s; });
    j["I"] = col([](const sica::SicaState& x) { return x.i; });
    j["C"] = col([](const sica::SicaState& x) { return x.c; });
    j["A"] = col([](const sica::SicaState& x) { return x.a; });
    j["N"] = col([](const sica::SicaState& x) { return x.total(); });
    return j;
}

void write_trajectory(const sica::Trajectory& traj, const Options& opt, const fs::path& dir,
                      const std::string& stem) {
    if (opt.format == "json") {
        const auto path = dir / (stem + ".json");
        sica::write_json(trajectory_json(traj), path.string());
        std::printf("wrote %s\n", path.string().c_str());
    } else {
        const auto path = dir / (stem + ".csv");
        sica::write_trajectory_csv(traj, path.string());
        std::printf("wrote %s\n", path.string().c_str());
    }
    if (opt.svg) {
        std::vector<double> s, i;
        for (const auto& x : traj.states) {
            s.push_back(x.s);
            i.push_back(x.i);
        }
        const auto path = dir / (stem + ".svg");
        sica::emit_svg_plot(traj.times,
                            {{"S", s, "#1f77b4"}, {"I", i, "#d62728"}}, {},
                            "susceptible and infected populations", "population",
                            path.string());
        std::printf("wrote %s\n", path.string().c_str());
    }
}

int cmd_thresholds(const Options& opt) {
    const auto cfg = load_with_overrides(opt);
    const auto dir = prepare_out_dir(opt);
    const auto report = sica::compute_thresholds(cfg.params, cfg.levy);
    const auto j = sica::threshold_report_json(report, cfg.params);
    const auto path = dir / "thresholds.json";
    sica::write_json(j, path.string());
    std::printf("%s\n", j.dump(2).c_str());
    std::printf("wrote %s\n", path.string().c_str());
    return kExitOk;
}

int cmd_simulate(const Options& opt) {
    const auto cfg = load_with_overrides(opt);
    const auto dir = prepare_out_dir(opt);
    sica::RngStream rng(cfg.seed, 0);
    const auto traj = sica::simulate(cfg.initial, cfg.params, cfg.levy, cfg.grid, rng);
    print_simulation_warnings(traj, cfg.params, cfg.levy, cfg.grid);
    write_trajectory(traj, opt, dir, "trajectory");

    const auto& d = traj.diagnostics;
    const auto mart = sica::martingale_diagnostic(traj, cfg.params);
    const auto& xf = traj.final_state();
    std::printf("final state: S=%.6g I=%.6g C=%.6g A=%.6g N=%.6g at t=%.6g\n", xf.s, xf.i, xf.c,
                xf.a, xf.total(), traj.t_end());
    std::printf("diagnostics: clamps=%llu jumps=%llu jump_overflows=%llu "
                "max_cancel_residual_rel=%.3g\n",
                static_cast<unsigned long long>(d.clamp_count),
                static_cast<unsigned long long>(d.jump_count),
                static_cast<unsigned long long>(d.jump_overflow_count),
                d.max_cancel_residual_rel);
    std::printf("martingale: M_T/T=%.6g qv/T=%.6g bound=%.6g\n", mart.m_over_t_final,
                mart.qv_over_t_final, mart.qv_bound);
    std::printf("generator: %s\n", sica::RngStream::describe().c_str());
    return kExitOk;
}

int cmd_ensemble(const Options& opt) {
    const auto cfg = load_with_overrides(opt);
    const auto dir = prepare_out_dir(opt);
    const auto res = sica::ensemble_run(cfg);

    const auto stats_path = dir / "ensemble_stats.csv";
    sica::write_stats_csv(res.stats, stats_path.string());
    std::printf("wrote %s\n", stats_path.string().c_str());

    const auto verdict_path = dir / "ensemble_verdicts.json";
    sica::write_json(sica::ensemble_verdicts_json(res, cfg.seed), verdict_path.string());
    std::printf("wrote %s\n", verdict_path.string().c_str());

    if (opt.svg) {
        const auto& s = res.stats.comps[0];
        const auto& i = res.stats.comps[1];
        const auto path = dir / "ensemble.svg";
        sica::emit_svg_plot(res.stats.times,
                            {{"mean S", s.mean, "#1f77b4"}, {"mean I", i.mean, "#d62728"}},
                            {{"S 95% band", s.q025, s.q975, "#1f77b4"},
                             {"I 95% band", i.q025, i.q975, "#d62728"}},
                            "ensemble mean and 95% band", "population", path.string());
        std::printf("wrote %s\n", path.string().c_str());
    }

    std::printf("paths: %zu\n", res.stats.path_count);
    std::printf("rates: extinct=%.3f persistence_i=%.3f persistence_s=%.3f%s\n",
                res.extinct_rate, res.i_satisfied_rate, res.s_satisfied_rate,
                res.thresholds.persistence_holds ? "" : " (persistence criterion not met; "
                                                        "persistence rates are informational)");
    std::printf("diagnostics: clamps=%llu jumps=%llu jump_overflows=%llu "
                "max_cancel_residual_rel=%.3g\n",
                static_cast<unsigned long long>(res.total_clamp_count),
                static_cast<unsigned long long>(res.total_jump_count),
                static_cast<unsigned long long>(res.total_jump_overflow_count),
                res.max_cancel_residual_rel);
    std::printf("generator: %s\n", sica::RngStream::describe().c_str());
    return kExitOk;
}

int cmd_ode(const Options& opt) {
    const auto cfg = load_with_overrides(opt);
    const auto dir = prepare_out_dir(opt);
    const auto traj = sica::simulate_ode(cfg.initial, cfg.params, cfg.grid);
    write_trajectory(traj, opt, dir, "ode");
    const auto& xf = traj.final_state();
    std::printf("final state: S=%.6g I=%.6g C=%.6g A=%.6g N=%.6g at t=%.6g\n", xf.s, xf.i, xf.c,
                xf.a, xf.total(), traj.t_end());
    return kExitOk;
}

int cmd_verify() {
    const auto results = sica::run_verification_suite();
    bool all_ok = true;
    for (const auto& r : results) {
        std::printf("[%s] %s — %s\n", r.pass ? "ok" : "FAIL", r.name.c_str(), r.detail.c_str());
        all_ok = all_ok && r.pass;
    }
    std::printf("%zu checks, %s\n", results.size(), all_ok ? "all passed" : "FAILURES present");
    return all_ok ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic SICA epidemic simulator with Brownian and jump noise"};
    app.require_subcommand(1);

    Options opt;
    auto* thresholds = app.add_subcommand(
        "thresholds", "evaluate the extinction/persistence criteria and bounds");
    add_common_options(thresholds, opt, true);
    auto* simulate = app.add_subcommand("simulate", "integrate one path and write it out");
    add_common_options(simulate, opt, true);
    auto* ensemble =
        app.add_subcommand("ensemble", "run many paths; write stats and verdict rates");
    add_common_options(ensemble, opt, true);
    auto* ode = app.add_subcommand("ode", "deterministic RK4 baseline");
    add_common_options(ode, opt, true);
    auto* verify = app.add_subcommand("verify", "run the built-in invariant checks");
    add_common_options(verify, opt, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (thresholds->parsed()) return cmd_thresholds(opt);
        if (simulate->parsed()) return cmd_simulate(opt);
        if (ensemble->parsed()) return cmd_ensemble(opt);
        if (ode->parsed()) return cmd_ode(opt);
        if (verify->parsed()) return cmd_verify();
    } catch (const sica::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntimeError;
    }
    return kExitOk;
}
