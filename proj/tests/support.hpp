#pragma once

#include <random>

#include "sica/model.hpp"

namespace testsupport {

// Rates of the shipped extinction-regime example (configs/fig1.json).
inline sica::SicaParams extinction_regime_params(double sigma = 0.01) {
    sica::SicaParams p;
    p.lambda = 10;
    p.mu = 0.0125;
    p.beta = 0.0001;
    p.phi = 1;
    p.rho = 0.1;
    p.alpha = 0.33;
    p.omega = 0.09;
    p.d = 1;
    p.sigma = sigma;
    return p;
}

// Rates of the shipped persistence-regime example (configs/fig2.json).
inline sica::SicaParams persistence_regime_params(double sigma = 1e-5) {
    sica::SicaParams p;
    p.lambda = 100;
    p.mu = 0.0013;
    p.beta = 0.1;
    p.phi = 1;
    p.rho = 0.1;
    p.alpha = 0.33;
    p.omega = 0.09;
    p.d = 1;
    p.sigma = sigma;
    return p;
}

inline sica::LevyMeasure single_mark(double jump_size, double rate) {
    sica::LevyMeasure levy;
    levy.marks.push_back({jump_size, rate});
    return levy;
}

// Deterministic state generator for hand-rolled property checks.
class StateGen {
public:
    explicit StateGen(unsigned seed) : eng_(seed) {}

    sica::SicaState in_box(double lo, double hi) {
        std::uniform_real_distribution<double> u(lo, hi);
        return {u(eng_), u(eng_), u(eng_), u(eng_)};
    }

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> u(lo, hi);
        return u(eng_);
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace testsupport
