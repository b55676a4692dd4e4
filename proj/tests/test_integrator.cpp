#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sica/analysis.hpp"
#include "sica/integrator.hpp"
#include "support.hpp"

using Catch::Approx;
using namespace sica;
using testsupport::extinction_regime_params;
using testsupport::persistence_regime_params;
using testsupport::single_mark;
using testsupport::StateGen;

TEST_CASE("grid validation") {
    REQUIRE_THROWS_AS((GridSpec{0.0, 1e-3, 1}.validate()), std::domain_error);
    REQUIRE_THROWS_AS((GridSpec{1.0, 0.0, 1}.validate()), std::domain_error);
    REQUIRE_THROWS_AS((GridSpec{1.0, 2.0, 1}.validate()), std::domain_error);
    REQUIRE_THROWS_AS((GridSpec{1.0, 1e-3, 0}.validate()), std::domain_error);
    REQUIRE_NOTHROW((GridSpec{1.0, 1e-3, 100}.validate()));
    CHECK(GridSpec{1.0, 0.1, 1}.step_count() == 10);
    CHECK(GridSpec{1.05, 0.1, 1}.step_count() == 11);
}

TEST_CASE("one Euler-Maruyama step with a forced Brownian increment") {
    const auto p = extinction_regime_params();
    const SicaState x{800, 1, 0, 0};
    const auto y = em_step_with(x, p, {}, 0.01, 0.1, {});
    CHECK(y.s == Approx(799.1992).epsilon(1e-12));
    CHECK(y.i == Approx(1.789675).epsilon(1e-12));
    CHECK(y.c == Approx(0.01).epsilon(1e-12));
    CHECK(y.a == Approx(0.001).epsilon(1e-12));
}

TEST_CASE("with zero noise a step is forward Euler") {
    auto p = extinction_regime_params(0.0);
    const SicaState x{400, 10, 5, 5};
    RngStream rng(1, 0);
    const auto y = em_step(x, p, {}, 0.01, rng);
    const auto f = drift(x, p, {});
    CHECK(y.s == Approx(x.s + 0.01 * f[0]).epsilon(1e-14));
    CHECK(y.i == Approx(x.i + 0.01 * f[1]).epsilon(1e-14));
    CHECK(y.c == Approx(x.c + 0.01 * f[2]).epsilon(1e-14));
    CHECK(y.a == Approx(x.a + 0.01 * f[3]).epsilon(1e-14));
}

TEST_CASE("per-step population budget holds for any Brownian draw") {
    // the +-sigma*I*S*dW and jump transfers cancel in the row sum, so
    // N' - N must equal dt*(lambda - mu*N - d*A) to rounding. Draws are kept
    // in the clamp-free regime: a clamp removes mass by design and is
    // accounted separately.
    const auto p = extinction_regime_params();
    const auto levy = single_mark(0.001, 1.0);
    StateGen gen(314);
    JumpBatch one_jump;
    one_jump.mark_indices = {0};
    for (int rep = 0; rep < 300; ++rep) {
        const auto x = gen.in_box(0.0, 50.0);
        const double dw = gen.uniform(-0.05, 0.05);
        const double dt = 1e-3;
        const auto y = em_step_with(x, p, levy, dt, dw, one_jump);
        REQUIRE(y.nonnegative());  // no clamp fired on this draw
        const double budget = dt * (p.lambda - p.mu * x.total() - p.d * x.a);
        CHECK(std::fabs(y.total() - x.total() - budget) <= 1e-12 * std::max(1.0, x.total()));
    }
}

TEST_CASE("jumps inside a step apply sequentially from left limits") {
    auto p = extinction_regime_params(0.0);
    const auto levy = single_mark(0.001, 1.0);
    JumpBatch two;
    two.mark_indices = {0, 0};
    // vanishing dt isolates the jump cascade from the drift
    const auto y = em_step_with({100, 10, 0, 0}, p, levy, 1e-300, 0.0, two);
    CHECK(y.s == Approx(97.911).margin(1e-9));
    CHECK(y.i == Approx(12.089).margin(1e-9));
}

TEST_CASE("em_step consumes the stream in its documented order") {
    const auto p = extinction_regime_params();
    const auto levy = single_mark(0.001, 50.0);  // enough rate for some events
    const SicaState x{300, 5, 2, 1};
    for (std::uint64_t stream = 0; stream < 20; ++stream) {
        RngStream a(123, stream), b(123, stream);
        const auto stepped = em_step(x, p, levy, 0.05, a);
        const double dw = gaussian_increment(b, 0.05);
        const auto count = poisson_count(b, levy.total_rate() * 0.05);
        const auto batch = sample_marks(b, levy, count);
        const auto manual = em_step_with(x, p, levy, 0.05, dw, batch);
        REQUIRE(stepped.s == manual.s);
        REQUIRE(stepped.i == manual.i);
        REQUIRE(stepped.c == manual.c);
        REQUIRE(stepped.a == manual.a);
    }
}

TEST_CASE("simulate equals the manual sampling loop, draw for draw") {
    const auto p = extinction_regime_params();
    const auto levy = single_mark(0.001, 2.0);
    const GridSpec grid{0.05, 1e-3, 1};
    const SicaState x0 = default_initial(p);

    RngStream rng(77, 3);
    const auto traj = simulate(x0, p, levy, grid, rng);

    RngStream twin(77, 3);
    SicaState x = x0;
    double martingale = 0;
    REQUIRE(traj.times.size() == grid.step_count() + 1);
    for (std::size_t k = 0; k < grid.step_count(); ++k) {
        const double dw = gaussian_increment(twin, grid.dt);
        const auto count = poisson_count(twin, levy.total_rate() * grid.dt);
        const auto batch = sample_marks(twin, levy, count);
        const double s_left = x.s;
        x = em_step_with(x, p, levy, grid.dt, dw, batch);
        martingale += p.sigma * s_left * dw;
        REQUIRE(traj.states[k + 1].s == x.s);
        REQUIRE(traj.states[k + 1].i == x.i);
        REQUIRE(traj.states[k + 1].c == x.c);
        REQUIRE(traj.states[k + 1].a == x.a);
        REQUIRE(traj.diagnostics.martingale_path[k + 1] == martingale);
    }
}

TEST_CASE("replaying the same stream reproduces the trajectory bit for bit") {
    const auto p = persistence_regime_params();
    const auto levy = single_mark(5e-6, 1.0);
    const GridSpec grid{2.0, 1e-3, 100};
    const auto x0 = default_initial(p);

    RngStream a(42, 0), b(42, 0);
    const auto t1 = simulate(x0, p, levy, grid, a);
    const auto t2 = simulate(x0, p, levy, grid, b);
    REQUIRE(t1.times == t2.times);
    REQUIRE(t1.states.size() == t2.states.size());
    for (std::size_t j = 0; j < t1.states.size(); ++j) {
        REQUIRE(t1.states[j].s == t2.states[j].s);
        REQUIRE(t1.states[j].i == t2.states[j].i);
        REQUIRE(t1.states[j].c == t2.states[j].c);
        REQUIRE(t1.states[j].a == t2.states[j].a);
    }
    REQUIRE(t1.diagnostics.martingale_path == t2.diagnostics.martingale_path);
    REQUIRE(t1.diagnostics.jump_count == t2.diagnostics.jump_count);
}

TEST_CASE("recording keeps every record_every-th step plus endpoints") {
    auto p = extinction_regime_params(0.0);
    const GridSpec grid{1.0, 0.1, 3};
    RngStream rng(5, 0);
    const auto traj = simulate(default_initial(p), p, {}, grid, rng);
    const std::vector<double> expect{0.0, 0.3, 0.6, 0.9, 1.0};
    REQUIRE(traj.times.size() == expect.size());
    for (std::size_t j = 0; j < expect.size(); ++j)
        CHECK(traj.times[j] == Approx(expect[j]).margin(1e-12));
    for (std::size_t j = 1; j < traj.times.size(); ++j)
        CHECK(traj.times[j] > traj.times[j - 1]);
}

TEST_CASE("noise-free simulation tracks the RK4 baseline") {
    auto p = extinction_regime_params(0.0);
    const GridSpec grid{20.0, 1e-3, 100};
    const SicaState x0{400, 10, 5, 5};
    RngStream rng(1, 0);
    const auto em = simulate(x0, p, {}, grid, rng);
    const auto rk = simulate_ode(x0, p, grid);
    REQUIRE(em.times.size() == rk.times.size());
    double worst = 0;
    for (std::size_t j = 0; j < em.times.size(); ++j) {
        const auto& a = em.states[j];
        const auto& b = rk.states[j];
        for (auto comp : {Compartment::S, Compartment::I, Compartment::C, Compartment::A}) {
            const double denom = std::max(1e-12, std::fabs(component(b, comp)));
            worst = std::max(worst, std::fabs(component(a, comp) - component(b, comp)) / denom);
        }
    }
    CHECK(worst <= 0.005);
}

TEST_CASE("deterministic solver hits the closed-form susceptible curve") {
    // with I = C = A = 0 the S row is linear: S(t) = (lambda/mu)(1 - e^{-mu t})
    auto p = extinction_regime_params(0.0);
    const GridSpec grid{80.0, 1e-3, 1000};
    const auto traj = simulate_ode({0, 0, 0, 0}, p, grid);
    CHECK(traj.states.back().s == Approx(505.69644706284614).epsilon(1e-10));
    CHECK(traj.states.back().i == 0.0);
}

TEST_CASE("deterministic solver holds an equilibrium fixed") {
    auto p = extinction_regime_params(0.0);
    const GridSpec grid{10.0, 1e-3, 10000};
    const auto traj = simulate_ode({800, 0, 0, 0}, p, grid);
    CHECK(std::fabs(traj.states.back().s - 800.0) <= 1e-10);
}

TEST_CASE("RK4 error falls 16x when the step halves") {
    auto p = extinction_regime_params(0.0);
    const double exact = 505.69644706284614;
    auto err_at = [&](double dt) {
        const auto traj = simulate_ode({0, 0, 0, 0}, p, GridSpec{80.0, dt, 1000000});
        return std::fabs(traj.states.back().s - exact);
    };
    const double e1 = err_at(1.0);
    const double e2 = err_at(0.5);
    REQUIRE(e2 > 0);
    CHECK(e1 / e2 == Approx(16.0).margin(6.0));
}

TEST_CASE("frozen-I chronic and AIDS rows match their closed forms") {
    const auto p = extinction_regime_params();
    const auto at0 = exact_linear_ca(1.0, 3.0, 2.0, p, 0.0);
    CHECK(at0.c == 3.0);
    CHECK(at0.a == 2.0);

    const auto at10 = exact_linear_ca(1.0, 0.0, 0.0, p, 10.0);
    CHECK(at10.c == Approx(6.2556442399419357).epsilon(1e-12));
    CHECK(at10.a == Approx(0.074487785643570151).epsilon(1e-12));

    // asymptotic approach to the equilibrium phi*i/(omega+mu)
    const double c_inf = p.phi / (p.omega + p.mu);
    const auto late = exact_linear_ca(1.0, 9.0, 0.0, p, 60.0);
    CHECK(std::fabs(late.c - c_inf) <= std::exp(-(p.omega + p.mu) * 60.0) * std::fabs(9.0 - c_inf) +
                                           1e-12);
    REQUIRE_THROWS_AS(exact_linear_ca(1.0, 0.0, 0.0, p, -1.0), std::domain_error);
}

TEST_CASE("one step of the C and A rows tracks the closed form to O(dt^2)") {
    // the C and A updates depend only on (I, C, A), so a single step against
    // the frozen-I closed form isolates the local truncation error
    auto p = extinction_regime_params(0.0);
    const SicaState x{400, 2, 9, 1};
    auto local_err = [&](double dt) {
        const auto y = em_step_with(x, p, {}, dt, 0.0, {});
        const auto exact = exact_linear_ca(x.i, x.c, x.a, p, dt);
        return std::max(std::fabs(y.c - exact.c), std::fabs(y.a - exact.a));
    };
    const double e1 = local_err(0.02);
    const double e2 = local_err(0.01);
    const double e4 = local_err(0.005);
    // halving dt quarters the one-step gap
    CHECK(e1 / e2 == Approx(4.0).margin(0.4));
    CHECK(e2 / e4 == Approx(4.0).margin(0.4));
    // explicit bound: |err| <= dt^2/2 * max curvature of the relaxing rows
    const double curv_c = std::pow(p.omega + p.mu, 2) *
                          std::fabs(x.c - p.phi * x.i / (p.omega + p.mu));
    const double curv_a = std::pow(p.alpha + p.mu + p.d, 2) *
                          std::fabs(x.a - p.rho * x.i / (p.alpha + p.mu + p.d));
    CHECK(e1 <= 0.5 * 0.02 * 0.02 * std::max(curv_c, curv_a) * 1.1);
}

TEST_CASE("cancellation residual stays at rounding level on stochastic runs") {
    const auto p = extinction_regime_params();
    const auto levy = single_mark(0.001, 1.0);
    RngStream rng(11, 0);
    const auto traj = simulate(default_initial(p), p, levy, GridSpec{5.0, 1e-3, 100}, rng);
    CHECK(traj.diagnostics.max_cancel_residual_rel <= 1e-12);
    CHECK(traj.diagnostics.initial_in_omega);
}

TEST_CASE("population stays between its bounds from an in-region start") {
    const auto p = extinction_regime_params();
    RngStream rng(21, 0);
    const auto traj = simulate(default_initial(p), p, single_mark(0.001, 1.0),
                               GridSpec{50.0, 1e-3, 100}, rng);
    CHECK(traj.diagnostics.min_n >= p.n_lower() * 0.999);
    CHECK(traj.diagnostics.max_n <= p.n_upper() * 1.001);
}

TEST_CASE("annihilating jumps are skipped and counted, not applied") {
    const auto p = extinction_regime_params();
    auto levy = single_mark(0.001, 3000.0);  // so overflow events arrive fast
    const SicaState x0{100, 10000, 0, 0};    // outside the region: 1 - J*I < 0
    // one step only: with the jumps skipped the unbalanced compensator drains
    // I below 1/J within a few steps and jumps would become applicable
    RngStream rng(8, 0);
    const auto traj = simulate(x0, p, levy, GridSpec{1e-3, 1e-3, 1}, rng);
    CHECK_FALSE(traj.diagnostics.initial_in_omega);
    CHECK(traj.diagnostics.jump_overflow_count > 0);
    CHECK(traj.diagnostics.jump_count == 0);
    for (const auto& st : traj.states) REQUIRE(st.finite());
}

TEST_CASE("step-size heuristic reflects the stiffest rate and the noise cap") {
    const auto p1 = extinction_regime_params(0.01);
    const double cap = 0.01 * p1.n_upper();
    CHECK(dt_safe(p1, {}) == Approx(1.0 / (40.0 * cap * cap)).epsilon(1e-12));
    const auto p0 = extinction_regime_params(0.0);
    CHECK(dt_safe(p0, {}) == Approx(0.1 / 1.3425).epsilon(1e-12));
}

TEST_CASE("simulate rejects non-finite input and reports blow-up time") {
    const auto p = extinction_regime_params();
    RngStream rng(1, 0);
    REQUIRE_THROWS_AS(
        simulate({std::nan(""), 0, 0, 0}, p, {}, GridSpec{1.0, 0.1, 1}, rng),
        std::domain_error);

    // components finite but astronomically large: the first step overflows
    RngStream rng2(1, 0);
    try {
        simulate({1e308, 1e308, 0, 0}, p, {}, GridSpec{1.0, 0.1, 1}, rng2);
        FAIL("expected simulation_error");
    } catch (const simulation_error& e) {
        CHECK(e.time > 0);
    }
}

TEST_CASE("ensemble mean of a short noisy run agrees with RK4 weakly") {
    // jumps off: E[I(1)] should match the deterministic I(1) within 3 MC
    // standard errors at 10^4 paths
    const auto p = extinction_regime_params(0.01);
    const GridSpec grid{1.0, 1e-3, 1000};
    const auto x0 = default_initial(p);
    const std::size_t n_paths = 10000;
    double sum_i = 0, sum_sq = 0;
    for (std::size_t k = 0; k < n_paths; ++k) {
        RngStream rng(20240601, k);
        const auto traj = simulate(x0, p, {}, grid, rng);
        const double v = traj.states.back().i;
        sum_i += v;
        sum_sq += v * v;
    }
    const double mean = sum_i / static_cast<double>(n_paths);
    const double var = sum_sq / static_cast<double>(n_paths) - mean * mean;
    const double se = std::sqrt(var / static_cast<double>(n_paths));
    const auto rk = simulate_ode(x0, p, grid);
    CHECK(std::fabs(mean - rk.states.back().i) <= 3.0 * se);
}
