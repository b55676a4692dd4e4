#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "sica/analysis.hpp"
#include "sica/integrator.hpp"
#include "sica/model.hpp"
#include "sica/rng.hpp"

namespace sica {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace detail

/**
 * Built-in invariant suite behind the `verify` subcommand: per-step noise
 * cancellation, population bounds after burn-in, agreement of the noise-free
 * stepper with RK4, the frozen-I closed-form oracle, and the sampler moment
 * checks. Every check is self-contained and deterministic.
 */
inline std::vector<CheckResult> run_verification_suite() {
    std::vector<CheckResult> results;
    auto add = [&](const std::string& name, bool pass, const std::string& detail) {
        results.push_back({name, pass, detail});
    };

    SicaParams p1;  // extinction-regime rates (configs/fig1.json)
    p1.lambda = 10; p1.mu = 0.0125; p1.beta = 0.0001; p1.phi = 1; p1.rho = 0.1;
    p1.alpha = 0.33; p1.omega = 0.09; p1.d = 1; p1.sigma = 0.01;
    LevyMeasure levy1;
    levy1.marks.push_back({0.001, 1.0});

    {  // per-step cancellation of the transmission noise in the row sum
        RngStream rng(1001, 0);
        const auto traj = simulate(default_initial(p1), p1, levy1, GridSpec{20.0, 1e-3, 100}, rng);
        const double r = traj.diagnostics.max_cancel_residual_rel;
        add("noise-cancellation residual <= 1e-12", r <= 1e-12,
            "max relative residual " + detail::num(r));
    }

    {  // population bounds after burn-in t >= 10/mu (fast-mixing rates)
        SicaParams pf;
        pf.lambda = 10; pf.mu = 0.2; pf.beta = 0.001; pf.phi = 1; pf.rho = 0.1;
        pf.alpha = 0.33; pf.omega = 0.09; pf.d = 1; pf.sigma = 0.002;
        LevyMeasure lf;
        lf.marks.push_back({0.01, 0.5});
        const double burn_in = 10.0 / pf.mu;
        RngStream rng(1002, 0);
        const auto traj =
            simulate(default_initial(pf), pf, lf, GridSpec{1.6 * burn_in, 1e-3, 50}, rng);
        double lo = 1e300, hi = -1e300;
        for (std::size_t j = 0; j < traj.times.size(); ++j) {
            if (traj.times[j] < burn_in) continue;
            lo = std::min(lo, traj.states[j].total());
            hi = std::max(hi, traj.states[j].total());
        }
        const bool ok = lo >= pf.n_lower() * 0.999 && hi <= pf.n_upper() * 1.001 &&
                        traj.diagnostics.clamp_count == 0;
        add("population bounds after burn-in", ok,
            "N in [" + detail::num(lo) + ", " + detail::num(hi) + "], bounds [" +
                detail::num(pf.n_lower()) + ", " + detail::num(pf.n_upper()) + "]");
    }

    {  // noise-free degeneration against RK4
        auto p0 = p1;
        p0.sigma = 0;
        const GridSpec grid{50.0, 1e-3, 100};
        const SicaState x0{400, 10, 5, 5};
        RngStream rng(1003, 0);
        const auto em = simulate(x0, p0, {}, grid, rng);
        const auto rk = simulate_ode(x0, p0, grid);
        double worst = 0;
        for (std::size_t j = 0; j < em.times.size(); ++j)
            for (auto c : {Compartment::S, Compartment::I, Compartment::C, Compartment::A}) {
                const double denom = std::max(1e-12, std::fabs(component(rk.states[j], c)));
                worst = std::max(worst, std::fabs(component(em.states[j], c) -
                                                  component(rk.states[j], c)) / denom);
            }
        add("noise-free stepper matches RK4 within 0.5%", worst <= 0.005,
            "max relative gap " + detail::num(worst));
    }

    {  // frozen-I closed form against an independent RK4 route
        const double i_const = 1.0, c0 = 0.0, a0 = 0.0, t_end = 10.0;
        double c = c0, a = a0;
        const double h = 1e-3;
        const auto n = static_cast<std::size_t>(t_end / h);
        auto fc = [&](double cc) { return p1.phi * i_const - (p1.omega + p1.mu) * cc; };
        auto fa = [&](double aa) { return p1.rho * i_const - (p1.alpha + p1.mu + p1.d) * aa; };
        for (std::size_t k = 0; k < n; ++k) {
            const double k1c = fc(c), k1a = fa(a);
            const double k2c = fc(c + h / 2 * k1c), k2a = fa(a + h / 2 * k1a);
            const double k3c = fc(c + h / 2 * k2c), k3a = fa(a + h / 2 * k2a);
            const double k4c = fc(c + h * k3c), k4a = fa(a + h * k3a);
            c += h / 6 * (k1c + 2 * k2c + 2 * k3c + k4c);
            a += h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a);
        }
        const auto closed = exact_linear_ca(i_const, c0, a0, p1, t_end);
        const double gap = std::max(std::fabs(c - closed.c) / std::max(1.0, std::fabs(closed.c)),
                                    std::fabs(a - closed.a) / std::max(1.0, std::fabs(closed.a)));
        add("frozen-I closed form matches RK4 to 1e-12", gap <= 1e-12,
            "relative gap " + detail::num(gap));
    }

    {  // gaussian increment moments
        RngStream rng(1004, 0);
        const std::size_t n = 1'000'000;
        const double dt = 0.01;
        double sum = 0, sum_sq = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const double x = gaussian_increment(rng, dt);
            sum += x;
            sum_sq += x * x;
        }
        const double mean = sum / n;
        const double var = sum_sq / n - mean * mean;
        const bool ok = std::fabs(mean) <= 4e-4 && std::fabs(var / dt - 1.0) <= 0.01;
        add("gaussian moments (1e6 draws, dt=0.01)", ok,
            "mean " + detail::num(mean) + ", var " + detail::num(var));
    }

    {  // poisson moments
        RngStream rng(1005, 0);
        const std::size_t n = 1'000'000;
        const double rate = 0.5;
        double sum = 0, sum_sq = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const auto x = static_cast<double>(poisson_count(rng, rate));
            sum += x;
            sum_sq += x * x;
        }
        const double mean = sum / n;
        const double var = sum_sq / n - mean * mean;
        const bool ok = std::fabs(mean / rate - 1.0) <= 0.01 && std::fabs(var / rate - 1.0) <= 0.02;
        add("poisson moments (1e6 draws, rate=0.5)", ok,
            "mean " + detail::num(mean) + ", var " + detail::num(var));
    }

    {  // categorical mark frequencies
        LevyMeasure levy;
        levy.marks.push_back({0.001, 1.0});
        levy.marks.push_back({0.0005, 3.0});
        RngStream rng(1006, 0);
        const std::size_t n = 1'000'000;
        std::size_t ones = 0;
        for (std::size_t k = 0; k < n; ++k)
            ones += rng.sample_mark_index(levy) == 1 ? 1 : 0;
        const double freq = static_cast<double>(ones) / n;
        add("categorical mark frequencies within 1%", std::fabs(freq - 0.75) <= 0.0075,
            "frequency of mark 1: " + detail::num(freq) + " (expected 0.75)");
    }

    return results;
}

}  // namespace sica
