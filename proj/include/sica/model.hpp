#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sica {

using Vec4 = std::array<double, 4>;

/// Thrown when a multiplicative jump would annihilate the susceptible
/// compartment (1 - J*I <= 0), i.e. the jump-size bound is violated at
/// runtime.
class jump_overflow_error : public std::runtime_error {
public:
    explicit jump_overflow_error(const std::string& what) : std::runtime_error(what) {}
};

/**
 * @brief Epidemiological rates of the SICA model plus the diffusion
 *        intensity of the transmission noise.
 *
 * Rates are per unit time; beta is per (individual * time). lambda and mu
 * must be strictly positive, everything else nonnegative.
 */
struct SicaParams {
    double lambda = 0;  ///< recruitment rate
    double mu = 0;      ///< natural death rate
    double beta = 0;    ///< transmission rate
    double phi = 0;     ///< HIV treatment rate for I
    double rho = 0;     ///< default treatment rate for I
    double alpha = 0;   ///< AIDS treatment rate
    double omega = 0;   ///< default treatment rate for C
    double d = 0;       ///< AIDS-induced death rate
    double sigma = 0;   ///< diffusion intensity of the I*S transmission noise

    void validate() const {
        auto check_finite = [](double v, const char* name) {
            if (!std::isfinite(v))
                throw std::domain_error(std::string(name) + " must be finite");
        };
        check_finite(lambda, "lambda");
        check_finite(mu, "mu");
        check_finite(beta, "beta");
        check_finite(phi, "phi");
        check_finite(rho, "rho");
        check_finite(alpha, "alpha");
        check_finite(omega, "omega");
        check_finite(d, "d");
        check_finite(sigma, "sigma");
        if (lambda <= 0) throw std::domain_error("lambda must be > 0");
        if (mu <= 0) throw std::domain_error("mu must be > 0");
        if (beta < 0) throw std::domain_error("beta must be >= 0");
        if (phi < 0) throw std::domain_error("phi must be >= 0");
        if (rho < 0) throw std::domain_error("rho must be >= 0");
        if (alpha < 0) throw std::domain_error("alpha must be >= 0");
        if (omega < 0) throw std::domain_error("omega must be >= 0");
        if (d < 0) throw std::domain_error("d must be >= 0");
        if (sigma < 0) throw std::domain_error("sigma must be >= 0");
    }

    /// Upper population bound lambda/mu.
    double n_upper() const { return lambda / mu; }
    /// Lower population bound lambda/(mu+d).
    double n_lower() const { return lambda / (mu + d); }
    /// Jump-size admissibility cap mu/lambda.
    double jump_size_cap() const { return mu / lambda; }
};

/// Compartment values (S, I, C, A) at one time point.
struct SicaState {
    double s = 0;  ///< susceptible
    double i = 0;  ///< HIV-infected, pre-AIDS
    double c = 0;  ///< chronic under ART
    double a = 0;  ///< AIDS stage

    double total() const { return s + i + c + a; }

    bool finite() const {
        return std::isfinite(s) && std::isfinite(i) && std::isfinite(c) && std::isfinite(a);
    }

    bool nonnegative(double tol = 0.0) const {
        return s >= -tol && i >= -tol && c >= -tol && a >= -tol;
    }
};

/// One atom of the finite-activity jump measure: a relative jump size and
/// the Poisson rate at which it fires.
struct LevyMark {
    double jump_size = 0;  ///< J, dimensionless, > 0
    double rate = 0;       ///< events per unit time, > 0
};

/**
 * @brief Finite-activity jump measure: a finite list of (size, rate) marks.
 *
 * total_rate() is the aggregate event intensity; compensator_kappa() is the
 * drift correction sum(J_k * rate_k) that appears when the compensated jump
 * integral is rewritten against the plain Poisson measure.
 */
struct LevyMeasure {
    std::vector<LevyMark> marks;

    bool empty() const { return marks.empty(); }

    double total_rate() const {
        double r = 0;
        for (const auto& m : marks) r += m.rate;
        return r;
    }

    double compensator_kappa() const {
        double k = 0;
        for (const auto& m : marks) k += m.jump_size * m.rate;
        return k;
    }

    void validate() const {
        for (std::size_t k = 0; k < marks.size(); ++k) {
            const auto& m = marks[k];
            if (!std::isfinite(m.jump_size) || m.jump_size <= 0)
                throw std::domain_error("levy mark " + std::to_string(k) +
                                        ": jump_size must be finite and > 0");
            if (!std::isfinite(m.rate) || m.rate <= 0)
                throw std::domain_error("levy mark " + std::to_string(k) +
                                        ": rate must be finite and > 0");
        }
        if (!std::isfinite(total_rate()))
            throw std::domain_error("levy measure: total rate must be finite");
    }
};

/// Result of checking the jump-size bound 0 < J <= h_cap * mu/lambda.
struct JumpSizeCheck {
    bool ok = true;
    double cap = 0;  ///< effective bound h_cap * mu/lambda
    std::vector<std::size_t> offending;  ///< indices of marks that violate the bound

    std::string message() const {
        if (ok) return "all jump sizes within (0, " + std::to_string(cap) + "]";
        std::string msg = "jump sizes exceed cap " + std::to_string(cap) + " at marks:";
        for (auto k : offending) msg += " " + std::to_string(k);
        return msg;
    }
};

/**
 * Check every jump size against the admissibility bound
 * J in (0, h_cap * mu/lambda]. h_cap in (0,1] is a strictness margin that
 * keeps 1 - J*I bounded away from 0 inside the feasible region. An empty
 * measure is valid (pure diffusion model).
 */
inline JumpSizeCheck validate_jump_sizes(const LevyMeasure& levy, const SicaParams& p,
                                             double h_cap = 0.99) {
    if (!(h_cap > 0) || h_cap > 1)
        throw std::domain_error("h_cap must lie in (0, 1]");
    JumpSizeCheck res;
    res.cap = h_cap * p.jump_size_cap();
    for (std::size_t k = 0; k < levy.marks.size(); ++k) {
        const double j = levy.marks[k].jump_size;
        if (!(j > 0) || j > res.cap) {
            res.ok = false;
            res.offending.push_back(k);
        }
    }
    return res;
}

/// Left/right sides of the extinction and persistence criteria plus the
/// population and mean bounds they imply.
struct ThresholdReport {
    double ext_lhs = 0;   ///< beta^2 / (2 sigma^2); +inf when sigma == 0
    double ext_rhs = 0;   ///< (rho+phi+mu) + (alpha+omega) lambda/mu
    bool extinction_holds = false;
    double pers_lhs = 0;  ///< beta lambda / (mu+d)
    double pers_rhs = 0;  ///< (rho+phi+mu) + sigma^2 lambda^2 / (2 mu^2)
    bool persistence_holds = false;
    double i_mean_lower_bound = 0;  ///< (pers_lhs - pers_rhs) / (rho+phi+mu)
    double s_mean_lower_bound = 0;  ///< lambda mu / (lambda beta + mu^2)
    double n_upper = 0;             ///< lambda / mu
    double n_lower = 0;             ///< lambda / (mu+d)
};

/**
 * Evaluate the extinction and persistence criteria for the given rates.
 *
 * With sigma == 0 the extinction side beta^2/(2 sigma^2) degenerates; it is
 * reported as +infinity with extinction_holds = false (the volatility
 * mechanism cannot trigger), rather than raising an error.
 */
inline ThresholdReport compute_thresholds(const SicaParams& p, const LevyMeasure& levy) {
    p.validate();
    levy.validate();
    ThresholdReport r;
    const double exit_i = p.rho + p.phi + p.mu;
    r.ext_rhs = exit_i + (p.alpha + p.omega) * p.lambda / p.mu;
    if (p.sigma > 0) {
        r.ext_lhs = p.beta * p.beta / (2.0 * p.sigma * p.sigma);
        r.extinction_holds = r.ext_lhs < r.ext_rhs;
    } else {
        r.ext_lhs = std::numeric_limits<double>::infinity();
        r.extinction_holds = false;
    }
    r.pers_lhs = p.beta * p.lambda / (p.mu + p.d);
    r.pers_rhs = exit_i + p.sigma * p.sigma * p.lambda * p.lambda / (2.0 * p.mu * p.mu);
    r.persistence_holds = r.pers_lhs > r.pers_rhs;
    r.i_mean_lower_bound = (r.pers_lhs - r.pers_rhs) / exit_i;
    r.s_mean_lower_bound = p.lambda * p.mu / (p.lambda * p.beta + p.mu * p.mu);
    r.n_upper = p.n_upper();
    r.n_lower = p.n_lower();
    return r;
}

namespace detail {
inline void require_finite_state(const SicaState& x, const char* where) {
    if (!x.finite())
        throw std::domain_error(std::string(where) + ": non-finite state component");
}
}  // namespace detail

/**
 * Deterministic rates (dS, dI, dC, dA)/dt of the jump-diffusion system,
 * including the jump compensator: rewriting the compensated jump integral
 * against the plain Poisson measure moves +kappa*I*S into the S row and
 * -kappa*I*S into the I row, kappa = sum(J_k * rate_k).
 */
inline Vec4 drift(const SicaState& x, const SicaParams& p, const LevyMeasure& levy) {
    detail::require_finite_state(x, "drift");
    const double infection = p.beta * x.i * x.s;
    const double compensator = levy.compensator_kappa() * x.i * x.s;
    return {
        p.lambda - infection - p.mu * x.s + compensator,
        infection - (p.rho + p.phi + p.mu) * x.i + p.alpha * x.a + p.omega * x.c - compensator,
        p.phi * x.i - (p.omega + p.mu) * x.c,
        p.rho * x.i - (p.alpha + p.mu + p.d) * x.a,
    };
}

/// Diffusion coefficients (-sigma*I*S, +sigma*I*S, 0, 0). The S and I
/// entries are the same product negated, so their sum is exactly zero.
inline Vec4 diffusion(const SicaState& x, const SicaParams& p) {
    detail::require_finite_state(x, "diffusion");
    const double g = p.sigma * x.i * x.s;
    return {-g, g, 0.0, 0.0};
}

/**
 * Apply one multiplicative jump with mark size J: the amount J*I*S moves
 * from S to I; C and A are untouched. Uses the incoming state as the left
 * limit. Throws jump_overflow_error when 1 - J*I <= 0, which cannot happen
 * while the jump-size bound holds and the state stays within its bound.
 */
inline SicaState apply_jump(const SicaState& x, double jump_size) {
    detail::require_finite_state(x, "apply_jump");
    if (!std::isfinite(jump_size) || jump_size <= 0)
        throw std::domain_error("apply_jump: jump_size must be finite and > 0");
    if (1.0 - jump_size * x.i <= 0.0)
        throw jump_overflow_error("apply_jump: 1 - J*I <= 0 (jump-size bound violated at I=" +
                                  std::to_string(x.i) + ", J=" + std::to_string(jump_size) + ")");
    const double q = jump_size * x.i * x.s;
    return {x.s - q, x.i + q, x.c, x.a};
}

/// True iff all components are >= -tol and the total population lies in
/// [lambda/(mu+d) - tol, lambda/mu + tol].
inline bool in_feasible_region(const SicaState& x, const SicaParams& p, double tol = 0.0) {
    if (!x.nonnegative(tol)) return false;
    const double n = x.total();
    return n >= p.n_lower() - tol && n <= p.n_upper() + tol;
}

}  // namespace sica
