#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "sica/run_config.hpp"

namespace sica {

/// Invalid or unreadable configuration; `field()` names the offending key
/// path when one is known.
class config_error : public std::runtime_error {
public:
    config_error(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what),
          field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

namespace detail {

using nlohmann::json;

inline const json& require_key(const json& obj, const std::string& path, const char* key) {
    if (!obj.is_object()) throw config_error(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw config_error(path + "." + key, "missing required key");
    return *it;
}

inline double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw config_error(path, "expected a number");
    return v.get<double>();
}

inline double number_at(const json& obj, const std::string& path, const char* key) {
    return as_number(require_key(obj, path, key), path + "." + key);
}

inline double number_or(const json& obj, const std::string& path, const char* key, double dflt) {
    if (!obj.is_object() || !obj.contains(key)) return dflt;
    return as_number(obj.at(key), path + "." + key);
}

inline std::uint64_t uint_at(const json& obj, const std::string& path, const char* key,
                             std::uint64_t dflt) {
    if (!obj.is_object() || !obj.contains(key)) return dflt;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned())
        throw config_error(path + "." + key, "expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

// Reject unknown keys so typos surface as errors; keys starting with '_'
// are free-form annotations and pass through.
inline void check_keys(const json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) return;
    for (const auto& [key, value] : obj.items()) {
        if (!key.empty() && key[0] == '_') continue;
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) { ok = true; break; }
        if (!ok) throw config_error(path + "." + key, "unknown key");
    }
}

}  // namespace detail

/// Parse a RunConfig from its JSON form (schema 1). Keys mirror the struct
/// fields; "initial" and "analysis" are optional and fall back to the
/// default initial condition and default knobs. Keys beginning with '_' are
/// ignored annotations.
inline RunConfig config_from_json(const nlohmann::json& j) {
    using detail::check_keys;
    using detail::number_at;
    using detail::number_or;
    using detail::require_key;
    using detail::uint_at;

    check_keys(j, "config",
               {"schema", "params", "levy", "initial", "grid", "seed", "path_count", "analysis"});
    const auto& schema = require_key(j, "config", "schema");
    if (!schema.is_number_integer() || schema.get<int>() != 1)
        throw config_error("config.schema", "unsupported schema (expected 1)");

    RunConfig cfg;

    const auto& jp = require_key(j, "config", "params");
    check_keys(jp, "params",
               {"lambda", "mu", "beta", "phi", "rho", "alpha", "omega", "d", "sigma"});
    cfg.params.lambda = number_at(jp, "params", "lambda");
    cfg.params.mu = number_at(jp, "params", "mu");
    cfg.params.beta = number_at(jp, "params", "beta");
    cfg.params.phi = number_at(jp, "params", "phi");
    cfg.params.rho = number_at(jp, "params", "rho");
    cfg.params.alpha = number_at(jp, "params", "alpha");
    cfg.params.omega = number_at(jp, "params", "omega");
    cfg.params.d = number_at(jp, "params", "d");
    cfg.params.sigma = number_at(jp, "params", "sigma");

    const auto& jl = require_key(j, "config", "levy");
    check_keys(jl, "levy", {"marks"});
    const auto& jm = detail::require_key(jl, "levy", "marks");
    if (!jm.is_array()) throw config_error("levy.marks", "expected an array");
    for (std::size_t k = 0; k < jm.size(); ++k) {
        const std::string path = "levy.marks[" + std::to_string(k) + "]";
        check_keys(jm[k], path, {"jump_size", "rate"});
        LevyMark mark;
        mark.jump_size = number_at(jm[k], path, "jump_size");
        mark.rate = number_at(jm[k], path, "rate");
        cfg.levy.marks.push_back(mark);
    }

    const auto& jg = require_key(j, "config", "grid");
    check_keys(jg, "grid", {"t_end", "dt", "record_every"});
    cfg.grid.t_end = number_at(jg, "grid", "t_end");
    cfg.grid.dt = number_or(jg, "grid", "dt", 1e-3);
    cfg.grid.record_every = static_cast<std::uint32_t>(uint_at(jg, "grid", "record_every", 100));

    if (j.contains("initial")) {
        const auto& ji = j.at("initial");
        check_keys(ji, "initial", {"s", "i", "c", "a"});
        cfg.initial.s = number_at(ji, "initial", "s");
        cfg.initial.i = number_at(ji, "initial", "i");
        cfg.initial.c = number_at(ji, "initial", "c");
        cfg.initial.a = number_at(ji, "initial", "a");
    } else {
        cfg.initial = default_initial(cfg.params);
    }

    cfg.seed = uint_at(j, "config", "seed", 0);
    cfg.path_count = static_cast<std::uint32_t>(uint_at(j, "config", "path_count", 1));

    if (j.contains("analysis")) {
        const auto& ja = j.at("analysis");
        check_keys(ja, "analysis", {"tail_fraction", "margin", "eps_extinct", "h_cap"});
        cfg.analysis.tail_fraction = number_or(ja, "analysis", "tail_fraction", 0.5);
        cfg.analysis.margin = number_or(ja, "analysis", "margin", 0.9);
        cfg.analysis.eps_extinct = number_or(ja, "analysis", "eps_extinct", 1e-3);
        cfg.analysis.h_cap = number_or(ja, "analysis", "h_cap", 0.99);
    }

    try {
        cfg.validate();
    } catch (const std::domain_error& e) {
        throw config_error("", e.what());
    }
    return cfg;
}

/// Canonical JSON form of a RunConfig; config_from_json of the result
/// reproduces the struct field for field.
inline nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["params"] = {{"lambda", cfg.params.lambda}, {"mu", cfg.params.mu},
                   {"beta", cfg.params.beta},     {"phi", cfg.params.phi},
                   {"rho", cfg.params.rho},       {"alpha", cfg.params.alpha},
                   {"omega", cfg.params.omega},   {"d", cfg.params.d},
                   {"sigma", cfg.params.sigma}};
    auto marks = nlohmann::ordered_json::array();
    for (const auto& m : cfg.levy.marks)
        marks.push_back({{"jump_size", m.jump_size}, {"rate", m.rate}});
    j["levy"] = {{"marks", marks}};
    j["initial"] = {{"s", cfg.initial.s}, {"i", cfg.initial.i}, {"c", cfg.initial.c},
                    {"a", cfg.initial.a}};
    j["grid"] = {{"t_end", cfg.grid.t_end},
                 {"dt", cfg.grid.dt},
                 {"record_every", cfg.grid.record_every}};
    j["seed"] = cfg.seed;
    j["path_count"] = cfg.path_count;
    j["analysis"] = {{"tail_fraction", cfg.analysis.tail_fraction},
                     {"margin", cfg.analysis.margin},
                     {"eps_extinct", cfg.analysis.eps_extinct},
                     {"h_cap", cfg.analysis.h_cap}};
    return j;
}

/// Load and validate a config file. Throws config_error on unreadable,
/// unparsable or invalid input.
inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("", "cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("", "config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

}  // namespace sica
