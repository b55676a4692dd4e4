#pragma once

#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "sica/analysis.hpp"
#include "sica/integrator.hpp"
#include "sica/model.hpp"
#include "sica/rng.hpp"

namespace sica {

class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

/// Round-trippable decimal rendering (17 significant digits).
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// +-infinity is not representable as a JSON number; encode as a string.
inline nlohmann::ordered_json json_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

/**
 * Write one trajectory as CSV with header t,S,I,C,A,N, one row per recorded
 * point, newline-terminated rows, 17-significant-digit floats. The N column
 * is s+i+c+a evaluated left to right. Refuses an empty trajectory before
 * touching the filesystem.
 */
inline void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    if (traj.times.empty())
        throw std::domain_error("write_trajectory_csv: empty trajectory");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << "t,S,I,C,A,N\n";
    for (std::size_t j = 0; j < traj.times.size(); ++j) {
        const auto& x = traj.states[j];
        out << fmt_g17(traj.times[j]) << ',' << fmt_g17(x.s) << ',' << fmt_g17(x.i) << ','
            << fmt_g17(x.c) << ',' << fmt_g17(x.a) << ',' << fmt_g17(x.total()) << '\n';
    }
    if (!out) throw io_error("write failed: " + path);
}

/// Per-time ensemble statistics CSV: t, then mean/var/q025/q50/q975 for each
/// of S, I, C, A.
inline void write_stats_csv(const EnsembleStats& stats, const std::string& path) {
    if (stats.times.empty()) throw std::domain_error("write_stats_csv: empty stats");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << 't';
    for (const char* name : {"S", "I", "C", "A"})
        out << ",mean_" << name << ",var_" << name << ",q025_" << name << ",q50_" << name
            << ",q975_" << name;
    out << '\n';
    for (std::size_t j = 0; j < stats.times.size(); ++j) {
        out << fmt_g17(stats.times[j]);
        for (const auto& s : stats.comps)
            out << ',' << fmt_g17(s.mean[j]) << ',' << fmt_g17(s.variance[j]) << ','
                << fmt_g17(s.q025[j]) << ',' << fmt_g17(s.q50[j]) << ',' << fmt_g17(s.q975[j]);
        out << '\n';
    }
    if (!out) throw io_error("write failed: " + path);
}

/// Threshold report as JSON, echoing the rates it was computed from. A
/// sigma of zero is flagged in "notes" and ext_lhs rendered as "inf".
inline nlohmann::ordered_json threshold_report_json(const ThresholdReport& r,
                                                    const SicaParams& p) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["kind"] = "threshold_report";
    j["params"] = {{"lambda", p.lambda}, {"mu", p.mu},       {"beta", p.beta},
                   {"phi", p.phi},       {"rho", p.rho},     {"alpha", p.alpha},
                   {"omega", p.omega},   {"d", p.d},         {"sigma", p.sigma}};
    j["report"] = {{"ext_lhs", json_number(r.ext_lhs)},
                   {"ext_rhs", json_number(r.ext_rhs)},
                   {"extinction_holds", r.extinction_holds},
                   {"pers_lhs", json_number(r.pers_lhs)},
                   {"pers_rhs", json_number(r.pers_rhs)},
                   {"persistence_holds", r.persistence_holds},
                   {"i_mean_lower_bound", json_number(r.i_mean_lower_bound)},
                   {"s_mean_lower_bound", json_number(r.s_mean_lower_bound)},
                   {"n_upper", json_number(r.n_upper)},
                   {"n_lower", json_number(r.n_lower)}};
    auto notes = nlohmann::ordered_json::array();
    if (p.sigma == 0)
        notes.push_back("sigma = 0: the volatility extinction mechanism is inactive; "
                        "ext_lhs is reported as inf and extinction_holds as false");
    j["notes"] = notes;
    return j;
}

/// Ensemble verdicts and diagnostics as JSON, including the generator
/// identification needed to reproduce the run.
inline nlohmann::ordered_json ensemble_verdicts_json(const EnsembleResult& res,
                                                     std::uint64_t seed) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["kind"] = "ensemble_verdicts";
    j["seed"] = seed;
    j["path_count"] = res.stats.path_count;
    j["generator"] = RngStream::describe();
    const auto& r = res.thresholds;
    j["thresholds"] = {{"ext_lhs", json_number(r.ext_lhs)},
                       {"ext_rhs", json_number(r.ext_rhs)},
                       {"extinction_holds", r.extinction_holds},
                       {"pers_lhs", json_number(r.pers_lhs)},
                       {"pers_rhs", json_number(r.pers_rhs)},
                       {"persistence_holds", r.persistence_holds},
                       {"i_mean_lower_bound", json_number(r.i_mean_lower_bound)},
                       {"s_mean_lower_bound", json_number(r.s_mean_lower_bound)},
                       {"n_upper", json_number(r.n_upper)},
                       {"n_lower", json_number(r.n_lower)}};
    j["rates"] = {{"extinct", res.extinct_rate},
                  {"persistence_i", res.i_satisfied_rate},
                  {"persistence_s", res.s_satisfied_rate}};
    j["persistence_informational"] = !r.persistence_holds;
    j["diagnostics"] = {{"total_clamp_count", res.total_clamp_count},
                        {"total_jump_count", res.total_jump_count},
                        {"total_jump_overflow_count", res.total_jump_overflow_count},
                        {"max_cancel_residual_rel", json_number(res.max_cancel_residual_rel)}};
    auto per_path = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < res.extinction.size(); ++k) {
        const auto& e = res.extinction[k];
        const auto& pv = res.persistence[k];
        const auto& m = res.martingale[k];
        const auto& d = res.path_diagnostics[k];
        nlohmann::ordered_json pj;
        pj["path"] = k;
        pj["lyapunov_slope"] =
            std::isnan(e.lyapunov_slope) ? nlohmann::ordered_json() : json_number(e.lyapunov_slope);
        pj["final_i"] = json_number(e.final_i);
        pj["classified_extinct"] = e.classified_extinct;
        pj["i_time_avg_tail"] = json_number(pv.i_time_avg_tail);
        pj["s_time_avg_tail"] = json_number(pv.s_time_avg_tail);
        pj["i_satisfied"] = pv.i_satisfied;
        pj["s_satisfied"] = pv.s_satisfied;
        pj["m_over_t"] = json_number(m.m_over_t_final);
        pj["qv_over_t"] = json_number(m.qv_over_t_final);
        pj["qv_bound"] = json_number(m.qv_bound);
        pj["clamp_count"] = d.clamp_count;
        pj["jump_count"] = d.jump_count;
        pj["jump_overflow_count"] = d.jump_overflow_count;
        pj["max_s"] = json_number(d.max_s);
        pj["min_n"] = json_number(d.min_n);
        pj["max_n"] = json_number(d.max_n);
        per_path.push_back(std::move(pj));
    }
    j["per_path"] = std::move(per_path);
    return j;
}

inline void write_json(const nlohmann::ordered_json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw io_error("write failed: " + path);
}

}  // namespace sica
