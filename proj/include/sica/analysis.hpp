#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sica/integrator.hpp"
#include "sica/model.hpp"
#include "sica/run_config.hpp"

namespace sica {

class insufficient_data_error : public std::runtime_error {
public:
    explicit insufficient_data_error(const std::string& what) : std::runtime_error(what) {}
};

enum class Compartment { S, I, C, A };

inline double component(const SicaState& x, Compartment c) {
    switch (c) {
        case Compartment::S: return x.s;
        case Compartment::I: return x.i;
        case Compartment::C: return x.c;
        case Compartment::A: return x.a;
    }
    return 0;
}

inline const char* compartment_name(Compartment c) {
    switch (c) {
        case Compartment::S: return "S";
        case Compartment::I: return "I";
        case Compartment::C: return "C";
        case Compartment::A: return "A";
    }
    return "?";
}

/**
 * Running time average <x(t)> = (1/t) * integral of x over [0, t] by the
 * trapezoid rule on the recorded grid. The first entry is x(t0) by
 * convention. Exact for constant and linear paths.
 */
inline std::vector<double> time_average(const Trajectory& traj, Compartment comp) {
    if (traj.times.size() < 2)
        throw std::domain_error("time_average: trajectory must have at least 2 points");
    std::vector<double> avg(traj.times.size());
    avg[0] = component(traj.states[0], comp);
    // incremental form of the trapezoid average: the update vanishes when
    // the cell midpoint equals the running mean, so constants are exact
    for (std::size_t j = 1; j < traj.times.size(); ++j) {
        const double w = traj.times[j] - traj.times[j - 1];
        const double mid =
            0.5 * (component(traj.states[j], comp) + component(traj.states[j - 1], comp));
        avg[j] = avg[j - 1] + w * (mid - avg[j - 1]) / traj.times[j];
    }
    return avg;
}

/// Empirical extinction classification: least-squares decay rate of log I
/// over the tail window plus the final infected level.
struct ExtinctionVerdict {
    double lyapunov_slope = 0;
    double final_i = 0;
    bool classified_extinct = false;
    std::size_t usable_points = 0;
};

/**
 * Fit log I(t) against t by least squares over the last tail_fraction of
 * the trajectory. Points are consumed in time order and the fit stops at
 * the first I below 1e-300 (log underflow floor); later points are dropped.
 * Throws insufficient_data_error with fewer than 10 usable points.
 * classified_extinct requires both a negative slope and final I below
 * eps_extinct.
 */
inline ExtinctionVerdict lyapunov_estimate(const Trajectory& traj, double tail_fraction,
                                           double eps_extinct = 1e-3) {
    if (!(tail_fraction > 0) || !(tail_fraction < 1))
        throw std::domain_error("lyapunov_estimate: tail_fraction must lie in (0, 1)");
    if (traj.times.size() < 2)
        throw std::domain_error("lyapunov_estimate: trajectory must have at least 2 points");

    const double t_end = traj.times.back();
    const double t_from = (1.0 - tail_fraction) * t_end;
    constexpr double floor_i = 1e-300;

    std::vector<double> ts, ys;
    for (std::size_t j = 0; j < traj.times.size(); ++j) {
        if (traj.times[j] < t_from) continue;
        const double i_val = traj.states[j].i;
        if (i_val < floor_i) break;  // underflow floor: drop the remainder
        ts.push_back(traj.times[j]);
        ys.push_back(std::log(i_val));
    }

    ExtinctionVerdict v;
    v.final_i = traj.states.back().i;
    v.usable_points = ts.size();
    if (ts.size() < 10)
        throw insufficient_data_error("lyapunov_estimate: only " + std::to_string(ts.size()) +
                                      " usable points in the tail window (need 10)");

    double t_mean = 0, y_mean = 0;
    for (std::size_t j = 0; j < ts.size(); ++j) {
        t_mean += ts[j];
        y_mean += ys[j];
    }
    t_mean /= static_cast<double>(ts.size());
    y_mean /= static_cast<double>(ts.size());
    double sxy = 0, sxx = 0;
    for (std::size_t j = 0; j < ts.size(); ++j) {
        sxy += (ts[j] - t_mean) * (ys[j] - y_mean);
        sxx += (ts[j] - t_mean) * (ts[j] - t_mean);
    }
    v.lyapunov_slope = sxx > 0 ? sxy / sxx : 0.0;
    v.classified_extinct = v.lyapunov_slope < 0 && v.final_i < eps_extinct;
    return v;
}

/// Tail time-averages of I and S against their persistence lower bounds.
struct PersistenceVerdict {
    double i_time_avg_tail = 0;
    double s_time_avg_tail = 0;
    double i_bound = 0;
    double s_bound = 0;
    bool i_satisfied = false;
    bool s_satisfied = false;
    bool informational = false;  ///< true when the persistence criterion itself fails
};

/**
 * Compare the tail of the running averages <I(t)>, <S(t)> against the
 * theoretical lower bounds scaled by `margin`. The tail value is the mean of
 * the running average over recorded times in the last tail_fraction of the
 * horizon. When the report says persistence does not hold, the verdict is
 * still computed but flagged informational.
 */
inline PersistenceVerdict verify_persistence(const Trajectory& traj, const ThresholdReport& report,
                                             double tail_fraction = 0.5, double margin = 0.9) {
    if (!(tail_fraction > 0) || !(tail_fraction < 1))
        throw std::domain_error("verify_persistence: tail_fraction must lie in (0, 1)");
    const auto avg_i = time_average(traj, Compartment::I);
    const auto avg_s = time_average(traj, Compartment::S);
    const double t_from = (1.0 - tail_fraction) * traj.times.back();

    double sum_i = 0, sum_s = 0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < traj.times.size(); ++j) {
        if (traj.times[j] < t_from) continue;
        sum_i += avg_i[j];
        sum_s += avg_s[j];
        ++n;
    }
    PersistenceVerdict v;
    v.i_bound = report.i_mean_lower_bound;
    v.s_bound = report.s_mean_lower_bound;
    v.i_time_avg_tail = n ? sum_i / static_cast<double>(n) : 0.0;
    v.s_time_avg_tail = n ? sum_s / static_cast<double>(n) : 0.0;
    v.i_satisfied = v.i_time_avg_tail >= margin * v.i_bound;
    v.s_satisfied = v.s_time_avg_tail >= margin * v.s_bound;
    v.informational = !report.persistence_holds;
    return v;
}

/// Strong-law diagnostic for the Brownian martingale M_t = integral of
/// sigma*S dW: its time-averaged value and quadratic variation against the
/// bound sigma^2 (lambda/mu)^2.
struct MartingaleDiagnostic {
    double m_over_t_final = 0;
    double qv_over_t_final = 0;
    double qv_bound = 0;
    bool bound_applicable = false;  ///< pathwise S stayed within lambda/mu
    bool bound_satisfied = false;   ///< qv/T <= bound * (1 + 1e-6)
};

inline MartingaleDiagnostic martingale_diagnostic(const Trajectory& traj, const SicaParams& p) {
    if (traj.diagnostics.martingale_path.empty() || traj.times.size() < 2)
        throw std::domain_error("martingale_diagnostic: trajectory lacks a martingale path");
    const double t_end = traj.times.back();
    MartingaleDiagnostic d;
    d.m_over_t_final = traj.diagnostics.martingale_path.back() / t_end;
    d.qv_over_t_final = traj.diagnostics.qv_sum / t_end;
    const double cap = p.sigma * p.n_upper();
    d.qv_bound = cap * cap;
    d.bound_applicable = traj.diagnostics.max_s <= p.n_upper();
    d.bound_satisfied = d.qv_over_t_final <= d.qv_bound * (1.0 + 1e-6);
    return d;
}

/// Linear interpolation of order statistics on sorted data (the standard
/// "type 7" sample quantile).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::domain_error("quantile: empty sample");
    if (sorted.size() == 1) return sorted[0];
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// Per-time mean, sample variance and central quantiles of one compartment
/// across the ensemble.
struct SeriesStats {
    std::vector<double> mean, variance, q025, q50, q975;
};

struct EnsembleStats {
    std::vector<double> times;
    std::array<SeriesStats, 4> comps;  ///< indexed by Compartment order S, I, C, A
    std::size_t path_count = 0;
};

/// Ensemble outcome: shared-grid statistics, per-path verdicts and
/// diagnostics, and the threshold report the verdicts were judged against.
struct EnsembleResult {
    EnsembleStats stats;
    ThresholdReport thresholds;
    std::vector<ExtinctionVerdict> extinction;
    std::vector<PersistenceVerdict> persistence;
    std::vector<MartingaleDiagnostic> martingale;
    std::vector<TrajectoryDiagnostics> path_diagnostics;  ///< martingale_path omitted

    double extinct_rate = 0;
    double i_satisfied_rate = 0;
    double s_satisfied_rate = 0;
    std::uint64_t total_clamp_count = 0;
    std::uint64_t total_jump_count = 0;
    std::uint64_t total_jump_overflow_count = 0;
    double max_cancel_residual_rel = 0;
};

namespace detail {

struct PathOutcome {
    std::vector<double> times;
    std::vector<SicaState> states;
    ExtinctionVerdict ext;
    PersistenceVerdict pers;
    MartingaleDiagnostic mart;
    TrajectoryDiagnostics diag;
    bool ext_valid = false;
};

inline PathOutcome run_one_path(const RunConfig& cfg, const ThresholdReport& thresholds,
                                std::uint64_t path_index) {
    RngStream rng(cfg.seed, path_index);
    Trajectory traj = simulate(cfg.initial, cfg.params, cfg.levy, cfg.grid, rng);
    PathOutcome out;
    try {
        out.ext = lyapunov_estimate(traj, cfg.analysis.tail_fraction, cfg.analysis.eps_extinct);
        out.ext_valid = true;
    } catch (const insufficient_data_error&) {
        out.ext.lyapunov_slope = std::numeric_limits<double>::quiet_NaN();
        out.ext.final_i = traj.states.back().i;
        out.ext.classified_extinct = false;
    }
    out.pers = verify_persistence(traj, thresholds, cfg.analysis.tail_fraction, cfg.analysis.margin);
    out.mart = martingale_diagnostic(traj, cfg.params);
    out.times = std::move(traj.times);
    out.states = std::move(traj.states);
    out.diag = std::move(traj.diagnostics);
    out.diag.martingale_path.clear();
    out.diag.martingale_path.shrink_to_fit();
    return out;
}

}  // namespace detail

/**
 * Run path_count independent paths (path k on stream (seed, k)), reduce to
 * per-time ensemble statistics and per-path verdicts. Workers fill
 * preallocated slots and the reduction walks paths in index order, so the
 * result is bit-identical no matter how many threads run. A hard error on
 * any path aborts the ensemble, reporting the lowest failing path index.
 */
inline EnsembleResult ensemble_run(const RunConfig& cfg, unsigned threads = 0) {
    cfg.validate();
    const std::size_t n_paths = cfg.path_count;
    const ThresholdReport thresholds = compute_thresholds(cfg.params, cfg.levy);

    std::vector<detail::PathOutcome> outcomes(n_paths);
    std::vector<std::string> errors(n_paths);

    unsigned n_workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    n_workers = static_cast<unsigned>(std::min<std::size_t>(n_workers, n_paths));

    auto work = [&](std::size_t k) {
        try {
            outcomes[k] = detail::run_one_path(cfg, thresholds, k);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    };

    if (n_workers <= 1) {
        for (std::size_t k = 0; k < n_paths; ++k) work(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t k = next.fetch_add(1); k < n_paths; k = next.fetch_add(1)) work(k);
            });
        for (auto& th : pool) th.join();
    }

    for (std::size_t k = 0; k < n_paths; ++k)
        if (!errors[k].empty())
            throw std::runtime_error("ensemble path " + std::to_string(k) + ": " + errors[k]);

    EnsembleResult res;
    res.thresholds = thresholds;
    res.stats.path_count = n_paths;
    res.stats.times = outcomes[0].times;
    const std::size_t n_times = res.stats.times.size();

    for (auto& s : res.stats.comps) {
        s.mean.resize(n_times);
        s.variance.resize(n_times);
        s.q025.resize(n_times);
        s.q50.resize(n_times);
        s.q975.resize(n_times);
    }

    std::vector<double> column(n_paths);
    for (std::size_t ci = 0; ci < 4; ++ci) {
        const auto comp = static_cast<Compartment>(ci);
        auto& s = res.stats.comps[ci];
        for (std::size_t j = 0; j < n_times; ++j) {
            double sum = 0;
            for (std::size_t k = 0; k < n_paths; ++k) {
                column[k] = component(outcomes[k].states[j], comp);
                sum += column[k];
            }
            const double mean = sum / static_cast<double>(n_paths);
            double ss = 0;
            for (std::size_t k = 0; k < n_paths; ++k) {
                const double dx = column[k] - mean;
                ss += dx * dx;
            }
            s.mean[j] = mean;
            s.variance[j] = n_paths > 1 ? ss / static_cast<double>(n_paths - 1) : 0.0;
            std::sort(column.begin(), column.end());
            s.q025[j] = quantile_sorted(column, 0.025);
            s.q50[j] = quantile_sorted(column, 0.5);
            s.q975[j] = quantile_sorted(column, 0.975);
        }
    }

    res.extinction.reserve(n_paths);
    res.persistence.reserve(n_paths);
    res.martingale.reserve(n_paths);
    res.path_diagnostics.reserve(n_paths);
    std::size_t n_extinct = 0, n_i_ok = 0, n_s_ok = 0;
    for (auto& out : outcomes) {
        n_extinct += out.ext.classified_extinct ? 1 : 0;
        n_i_ok += out.pers.i_satisfied ? 1 : 0;
        n_s_ok += out.pers.s_satisfied ? 1 : 0;
        res.total_clamp_count += out.diag.clamp_count;
        res.total_jump_count += out.diag.jump_count;
        res.total_jump_overflow_count += out.diag.jump_overflow_count;
        res.max_cancel_residual_rel =
            std::max(res.max_cancel_residual_rel, out.diag.max_cancel_residual_rel);
        res.extinction.push_back(out.ext);
        res.persistence.push_back(out.pers);
        res.martingale.push_back(out.mart);
        res.path_diagnostics.push_back(std::move(out.diag));
    }
    res.extinct_rate = static_cast<double>(n_extinct) / static_cast<double>(n_paths);
    res.i_satisfied_rate = static_cast<double>(n_i_ok) / static_cast<double>(n_paths);
    res.s_satisfied_rate = static_cast<double>(n_s_ok) / static_cast<double>(n_paths);
    return res;
}

}  // namespace sica
