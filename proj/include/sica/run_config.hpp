#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "sica/integrator.hpp"
#include "sica/model.hpp"

namespace sica {

/// Post-processing knobs: finite-horizon surrogates for the asymptotic
/// statements (tail window, satisfaction margin, extinction floor) plus the
/// jump-size strictness margin.
struct AnalysisKnobs {
    double tail_fraction = 0.5;  ///< fraction of the horizon used as tail window
    double margin = 0.9;         ///< persistence bounds are checked against margin*bound
    double eps_extinct = 1e-3;   ///< I(T) below this counts toward extinction
    double h_cap = 0.99;         ///< jump sizes must stay within h_cap * mu/lambda

    void validate() const {
        if (!(tail_fraction > 0) || !(tail_fraction < 1))
            throw std::domain_error("tail_fraction must lie in (0, 1)");
        if (!(margin > 0) || !std::isfinite(margin))
            throw std::domain_error("margin must be finite and > 0");
        if (!(eps_extinct > 0) || !std::isfinite(eps_extinct))
            throw std::domain_error("eps_extinct must be finite and > 0");
        if (!(h_cap > 0) || h_cap > 1)
            throw std::domain_error("h_cap must lie in (0, 1]");
    }
};

/// Everything one experiment needs: model, noise, initial data, grid, seed,
/// ensemble size and analysis knobs.
struct RunConfig {
    SicaParams params;
    LevyMeasure levy;
    SicaState initial;
    GridSpec grid;
    std::uint64_t seed = 0;
    std::uint32_t path_count = 1;
    AnalysisKnobs analysis;

    void validate() const {
        auto scoped = [](const char* prefix, auto&& fn) {
            try {
                fn();
            } catch (const std::domain_error& e) {
                throw std::domain_error(std::string(prefix) + ": " + e.what());
            }
        };
        scoped("params", [&] { params.validate(); });
        scoped("levy", [&] { levy.validate(); });
        scoped("grid", [&] { grid.validate(); });
        scoped("analysis", [&] { analysis.validate(); });
        const auto h = validate_jump_sizes(levy, params, analysis.h_cap);
        if (!h.ok) throw std::domain_error("levy: " + h.message());
        if (!initial.finite())
            throw std::domain_error("initial: non-finite component");
        if (!initial.nonnegative())
            throw std::domain_error("initial: negative component");
        if (path_count < 1) throw std::domain_error("path_count must be >= 1");
    }
};

}  // namespace sica
