#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sica/model.hpp"
#include "sica/rng.hpp"

namespace sica {

/// Hard failure during time stepping (non-finite state); carries the time
/// at which integration broke down.
class simulation_error : public std::runtime_error {
public:
    simulation_error(const std::string& what, double t)
        : std::runtime_error(what + " at t=" + std::to_string(t)), time(t) {}
    double time;
};

/// Fixed-step time grid; the stored trajectory keeps every record_every-th
/// step plus the initial and final points.
struct GridSpec {
    double t_end = 0;
    double dt = 1e-3;
    std::uint32_t record_every = 100;

    void validate() const {
        if (!(t_end > 0) || !std::isfinite(t_end))
            throw std::domain_error("grid: t_end must be finite and > 0");
        if (!(dt > 0) || !std::isfinite(dt))
            throw std::domain_error("grid: dt must be finite and > 0");
        if (dt > t_end) throw std::domain_error("grid: dt must be <= t_end");
        if (record_every == 0) throw std::domain_error("grid: record_every must be >= 1");
        if (!(t_end / dt < 9e15)) throw std::domain_error("grid: too many steps");
    }

    std::size_t step_count() const {
        auto n = static_cast<std::size_t>(std::ceil(t_end / dt));
        // guard against a zero-length trailing step from ceil() float fuzz
        if (n > 1 && t_end - static_cast<double>(n - 1) * dt <= 0.0) --n;
        return n;
    }
};

/// Per-step event and invariant counters accumulated over a whole run.
/// jump_count counts applied jumps; events skipped by the overflow guard
/// land in jump_overflow_count instead.
/// martingale_path is the running sum of sigma*S*dW on the recorded grid;
/// qv_sum accumulates sigma^2*S^2*dt over every step (full resolution).
/// max_cancel_residual_rel is the largest per-step violation of
/// N' - N - dt*(lambda - mu*N - d*A), relative to max(1, N), measured before
/// the positivity clamp.
struct TrajectoryDiagnostics {
    std::uint64_t clamp_count = 0;
    std::uint64_t jump_count = 0;
    std::uint64_t jump_overflow_count = 0;
    std::vector<double> martingale_path;
    double max_cancel_residual_rel = 0;
    double qv_sum = 0;
    double max_s = 0;
    double min_n = 0;
    double max_n = 0;
    bool initial_in_omega = true;
    bool dt_exceeds_safe = false;
};

/// Time grid, state sequence and diagnostics of one simulated path.
struct Trajectory {
    std::vector<double> times;
    std::vector<SicaState> states;
    TrajectoryDiagnostics diagnostics;

    double t_end() const { return times.empty() ? 0.0 : times.back(); }
    const SicaState& final_state() const { return states.back(); }
};

namespace detail {

struct StepStats {
    std::uint32_t jumps_applied = 0;
    std::uint32_t jump_overflows = 0;
    std::uint32_t clamped = 0;
    double cancel_residual = 0;  // absolute, pre-clamp
};

// One Euler-Maruyama step with explicit noise inputs. The diffusion
// contribution is the single product g*dw added to I and subtracted from S,
// and each jump moves q = J*I*S between the same two rows, so the row sum
// keeps the deterministic budget N' = N + dt*(lambda - mu*N - d*A) to
// rounding. Jumps that would annihilate S (1 - J*I <= 0) are skipped and
// counted. Negative components are clamped to zero last, after the residual
// is measured.
inline SicaState em_step_core(const SicaState& x, const SicaParams& p, const LevyMeasure& levy,
                              double dt, double dw, std::span<const std::uint32_t> mark_indices,
                              StepStats& stats) {
    const Vec4 f = drift(x, p, levy);
    const double gdw = p.sigma * x.i * x.s * dw;
    SicaState y{x.s + f[0] * dt - gdw, x.i + f[1] * dt + gdw, x.c + f[2] * dt,
                x.a + f[3] * dt};

    for (std::uint32_t idx : mark_indices) {
        const double j = levy.marks[idx].jump_size;
        if (1.0 - j * y.i <= 0.0) {
            ++stats.jump_overflows;
            continue;
        }
        const double q = j * y.i * y.s;
        y.s -= q;
        y.i += q;
        ++stats.jumps_applied;
    }

    const double n0 = x.total();
    const double budget = dt * (p.lambda - p.mu * n0 - p.d * x.a);
    stats.cancel_residual = y.total() - n0 - budget;

    if (y.s < 0) { y.s = 0; ++stats.clamped; }
    if (y.i < 0) { y.i = 0; ++stats.clamped; }
    if (y.c < 0) { y.c = 0; ++stats.clamped; }
    if (y.a < 0) { y.a = 0; ++stats.clamped; }
    return y;
}

}  // namespace detail

/// Euler-Maruyama step with caller-supplied Brownian increment and jump
/// marks; deterministic companion of em_step for testing and replay.
inline SicaState em_step_with(const SicaState& x, const SicaParams& p, const LevyMeasure& levy,
                              double dt, double dw, const JumpBatch& jumps) {
    if (!(dt > 0) || !std::isfinite(dt))
        throw std::domain_error("em_step: dt must be finite and > 0");
    detail::StepStats stats;
    return detail::em_step_core(x, p, levy, dt, dw, jumps.mark_indices, stats);
}

/**
 * One Euler-Maruyama step with compensated Poisson jumps. Draw order per
 * step is fixed: the Brownian increment first, then the Poisson event count
 * for rate total_rate()*dt, then one categorical mark per event; jumps apply
 * sequentially in sampled order, each from the state left by the previous
 * one. The positivity guard runs last.
 */
inline SicaState em_step(const SicaState& x, const SicaParams& p, const LevyMeasure& levy,
                         double dt, RngStream& rng) {
    if (!(dt > 0) || !std::isfinite(dt))
        throw std::domain_error("em_step: dt must be finite and > 0");
    const double dw = rng.gaussian(dt);
    const auto count = rng.poisson(levy.total_rate() * dt);
    JumpBatch jumps = sample_marks(rng, levy, static_cast<std::size_t>(count));
    detail::StepStats stats;
    return detail::em_step_core(x, p, levy, dt, dw, jumps.mark_indices, stats);
}

/**
 * Stability heuristic for the step size: resolves the fastest linear rate
 * of the system and keeps the one-step Gaussian factor sigma*S*sqrt(dt)
 * small enough (<= ~1/6 at S = n_upper) that a six-sigma draw cannot drive
 * I negative inside the population bound.
 */
inline double dt_safe(const SicaParams& p, const LevyMeasure& levy) {
    const double n_up = p.n_upper();
    double r_max = std::max({p.rho + p.phi + p.mu, p.omega + p.mu, p.alpha + p.mu + p.d,
                             p.beta * n_up, levy.compensator_kappa() * n_up});
    double bound = 0.1 / r_max;
    if (p.sigma > 0) {
        const double s = p.sigma * n_up;
        bound = std::min(bound, 1.0 / (40.0 * s * s));
    }
    return bound;
}

/**
 * Integrate the jump-diffusion system over [0, t_end] from `initial`,
 * recording every record_every-th step plus the final point. The stream is
 * consumed in the fixed per-step order documented at em_step, so identical
 * (seed, stream) replays the identical trajectory bit for bit.
 *
 * An initial state outside the feasible region is flagged in diagnostics,
 * not rejected. A non-finite state aborts with simulation_error.
 */
inline Trajectory simulate(const SicaState& initial, const SicaParams& p, const LevyMeasure& levy,
                           const GridSpec& grid, RngStream& rng) {
    p.validate();
    levy.validate();
    grid.validate();
    detail::require_finite_state(initial, "simulate");

    const std::size_t n_steps = grid.step_count();
    Trajectory traj;
    const std::size_t reserve = n_steps / grid.record_every + 2;
    traj.times.reserve(reserve);
    traj.states.reserve(reserve);
    traj.diagnostics.martingale_path.reserve(reserve);

    auto& diag = traj.diagnostics;
    diag.initial_in_omega = in_feasible_region(initial, p, 1e-9 * std::max(1.0, initial.total()));
    diag.dt_exceeds_safe = grid.dt > dt_safe(p, levy);
    diag.max_s = initial.s;
    diag.min_n = diag.max_n = initial.total();

    SicaState x = initial;
    double martingale = 0;
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    diag.martingale_path.push_back(0.0);

    const double jump_rate = levy.total_rate();
    std::vector<std::uint32_t> marks_scratch;

    for (std::size_t k = 0; k < n_steps; ++k) {
        const bool last = (k + 1 == n_steps);
        const double t0 = static_cast<double>(k) * grid.dt;
        const double t1 = last ? grid.t_end : t0 + grid.dt;
        const double dt = last ? grid.t_end - t0 : grid.dt;

        const double dw = rng.gaussian(dt);
        const auto count = rng.poisson(jump_rate * dt);
        marks_scratch.clear();
        for (std::uint64_t e = 0; e < count; ++e)
            marks_scratch.push_back(rng.sample_mark_index(levy));

        detail::StepStats stats;
        const double s_left = x.s;
        const double n_left = x.total();
        x = detail::em_step_core(x, p, levy, dt, dw, marks_scratch, stats);

        diag.jump_count += stats.jumps_applied;
        diag.jump_overflow_count += stats.jump_overflows;
        diag.clamp_count += stats.clamped;
        diag.max_cancel_residual_rel =
            std::max(diag.max_cancel_residual_rel,
                     std::fabs(stats.cancel_residual) / std::max(1.0, n_left));

        martingale += p.sigma * s_left * dw;
        diag.qv_sum += p.sigma * p.sigma * s_left * s_left * dt;

        if (!x.finite()) throw simulation_error("simulate: non-finite state", t1);
        const double n_now = x.total();
        diag.max_s = std::max(diag.max_s, x.s);
        diag.min_n = std::min(diag.min_n, n_now);
        diag.max_n = std::max(diag.max_n, n_now);

        if (last || (k + 1) % grid.record_every == 0) {
            traj.times.push_back(t1);
            traj.states.push_back(x);
            diag.martingale_path.push_back(martingale);
        }
    }
    return traj;
}

/**
 * Classical fixed-step RK4 solution of the deterministic system (sigma = 0,
 * no jumps); the drift keeps no compensator because the measure is ignored.
 * Same grid and recording conventions as simulate; diagnostics stay zero.
 */
inline Trajectory simulate_ode(const SicaState& initial, const SicaParams& p,
                               const GridSpec& grid) {
    p.validate();
    grid.validate();
    detail::require_finite_state(initial, "simulate_ode");

    const LevyMeasure no_jumps{};
    const std::size_t n_steps = grid.step_count();
    Trajectory traj;
    traj.diagnostics.initial_in_omega =
        in_feasible_region(initial, p, 1e-9 * std::max(1.0, initial.total()));
    traj.diagnostics.max_s = initial.s;
    traj.diagnostics.min_n = traj.diagnostics.max_n = initial.total();

    SicaState x = initial;
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    traj.diagnostics.martingale_path.push_back(0.0);

    auto axpy = [](const SicaState& s, const Vec4& v, double h) {
        return SicaState{s.s + h * v[0], s.i + h * v[1], s.c + h * v[2], s.a + h * v[3]};
    };

    for (std::size_t k = 0; k < n_steps; ++k) {
        const bool last = (k + 1 == n_steps);
        const double t0 = static_cast<double>(k) * grid.dt;
        const double t1 = last ? grid.t_end : t0 + grid.dt;
        const double h = last ? grid.t_end - t0 : grid.dt;

        const Vec4 k1 = drift(x, p, no_jumps);
        const Vec4 k2 = drift(axpy(x, k1, h / 2), p, no_jumps);
        const Vec4 k3 = drift(axpy(x, k2, h / 2), p, no_jumps);
        const Vec4 k4 = drift(axpy(x, k3, h), p, no_jumps);
        x = SicaState{
            x.s + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            x.i + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
            x.c + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
            x.a + h / 6 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]),
        };

        if (!x.finite()) throw simulation_error("simulate_ode: non-finite state", t1);
        const double n_now = x.total();
        traj.diagnostics.max_s = std::max(traj.diagnostics.max_s, x.s);
        traj.diagnostics.min_n = std::min(traj.diagnostics.min_n, n_now);
        traj.diagnostics.max_n = std::max(traj.diagnostics.max_n, n_now);

        if (last || (k + 1) % grid.record_every == 0) {
            traj.times.push_back(t1);
            traj.states.push_back(x);
            traj.diagnostics.martingale_path.push_back(0.0);
        }
    }
    return traj;
}

/// Closed-form C and A at time t when I is frozen at i_const: each row is a
/// scalar linear ODE relaxing to its equilibrium at rate (omega+mu) resp.
/// (alpha+mu+d).
struct LinearCA {
    double c = 0;
    double a = 0;
};

inline LinearCA exact_linear_ca(double i_const, double c0, double a0, const SicaParams& p,
                                double t) {
    if (!(t >= 0) || !std::isfinite(t))
        throw std::domain_error("exact_linear_ca: t must be finite and >= 0");
    if (!(i_const >= 0) || !std::isfinite(i_const))
        throw std::domain_error("exact_linear_ca: i_const must be finite and >= 0");
    const double rc = p.omega + p.mu;
    const double ra = p.alpha + p.mu + p.d;
    const double c_inf = p.phi * i_const / rc;
    const double a_inf = p.rho * i_const / ra;
    return {c_inf + (c0 - c_inf) * std::exp(-rc * t), a_inf + (a0 - a_inf) * std::exp(-ra * t)};
}

/// Default initial condition (0.9, 0.1, 0, 0) * n_lower, placed inside the
/// feasible region.
inline SicaState default_initial(const SicaParams& p) {
    const double n0 = p.n_lower();
    return {0.9 * n0, 0.1 * n0, 0.0, 0.0};
}

}  // namespace sica
