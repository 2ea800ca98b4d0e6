#ifndef PRICESIG_CONFIG_HPP
#define PRICESIG_CONFIG_HPP

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "equilibrium.hpp"

namespace pricesig {

// Anything wrong with the run configuration itself: unreadable file, unknown
// or missing fields, values of the wrong shape.  Mapped to exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProfileSpec {
    enum class Kind { guessed, pooling, explicit_prices };
    Kind kind = Kind::guessed;
    double price = 0.0;             // pooling
    double good_price = 0.0;        // explicit
    double bad_price = 0.0;         // explicit
    double belief_threshold = -1.0; // explicit, optional; < 0 means "use good_price"
};

struct SweepSpec {
    std::string parameter;  // mu0 | c_learn | m | k
    std::vector<double> values;
};

struct RunConfig {
    std::string command;  // solve | verify | sweep | variant
    MarketParams market;
    ProfileSpec profile;
    SweepSpec sweep;
    std::string variant;
    std::string output_dir = "out";
    int workers = 0;  // 0 = not set
};

namespace detail {

inline void require_keys(const nlohmann::json& obj, const char* where,
                         const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown field '" + it.key() + "' in " + where);
}

inline const nlohmann::json& need(const nlohmann::json& obj, const char* where, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw ConfigError(std::string("missing field '") + key + "' in " + where);
    return *it;
}

inline double need_number(const nlohmann::json& obj, const char* where, const char* key) {
    const nlohmann::json& v = need(obj, where, key);
    if (!v.is_number())
        throw ConfigError(std::string("field '") + key + "' in " + where + " must be a number");
    return v.get<double>();
}

inline int need_integer(const nlohmann::json& obj, const char* where, const char* key) {
    const nlohmann::json& v = need(obj, where, key);
    if (!v.is_number_integer())
        throw ConfigError(std::string("field '") + key + "' in " + where + " must be an integer");
    return v.get<int>();
}

inline std::string need_string(const nlohmann::json& obj, const char* where, const char* key) {
    const nlohmann::json& v = need(obj, where, key);
    if (!v.is_string())
        throw ConfigError(std::string("field '") + key + "' in " + where + " must be a string");
    return v.get<std::string>();
}

inline Valuation parse_valuation(const nlohmann::json& j) {
    std::string kind = need_string(j, "market.valuation", "kind");
    try {
        if (kind == "uniform") {
            require_keys(j, "market.valuation", {"kind", "v_max"});
            return Valuation::uniform(need_number(j, "market.valuation", "v_max"));
        }
        if (kind == "scaled-beta") {
            require_keys(j, "market.valuation", {"kind", "v_max", "alpha", "beta"});
            return Valuation::scaled_beta(need_number(j, "market.valuation", "v_max"),
                                          need_number(j, "market.valuation", "alpha"),
                                          need_number(j, "market.valuation", "beta"));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("market.valuation: ") + e.what());
    }
    throw ConfigError("market.valuation.kind must be 'uniform' or 'scaled-beta'");
}

inline Quality parse_quality(const nlohmann::json& j) {
    require_keys(j, "market.quality", {"kind", "intercept", "slope"});
    if (need_string(j, "market.quality", "kind") != "affine")
        throw ConfigError("market.quality.kind must be 'affine'");
    try {
        return Quality(need_number(j, "market.quality", "intercept"),
                       need_number(j, "market.quality", "slope"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("market.quality: ") + e.what());
    }
}

inline MarketParams parse_market(const nlohmann::json& j) {
    require_keys(j, "market", {"mu0", "unit", "k", "n", "learn_cost", "valuation", "quality"});
    MarketParams p;
    p.mu0 = need_number(j, "market", "mu0");
    p.unit = need_number(j, "market", "unit");
    p.k = need_integer(j, "market", "k");
    p.n = need_integer(j, "market", "n");
    p.learn_cost = need_number(j, "market", "learn_cost");
    p.valuation = parse_valuation(need(j, "market", "valuation"));
    p.quality = parse_quality(need(j, "market", "quality"));
    try {
        p.require_well_formed();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("market: ") + e.what());
    }
    return p;
}

inline ProfileSpec parse_profile(const nlohmann::json& j) {
    ProfileSpec s;
    std::string kind = need_string(j, "profile", "kind");
    if (kind == "guessed") {
        require_keys(j, "profile", {"kind"});
        s.kind = ProfileSpec::Kind::guessed;
    } else if (kind == "pooling") {
        require_keys(j, "profile", {"kind", "price"});
        s.kind = ProfileSpec::Kind::pooling;
        s.price = need_number(j, "profile", "price");
    } else if (kind == "explicit") {
        require_keys(j, "profile", {"kind", "good_price", "bad_price", "belief_threshold"});
        s.kind = ProfileSpec::Kind::explicit_prices;
        s.good_price = need_number(j, "profile", "good_price");
        s.bad_price = need_number(j, "profile", "bad_price");
        s.belief_threshold =
            j.contains("belief_threshold") ? need_number(j, "profile", "belief_threshold") : -1.0;
    } else {
        throw ConfigError("profile.kind must be 'guessed', 'pooling', or 'explicit'");
    }
    return s;
}

inline SweepSpec parse_sweep(const nlohmann::json& j) {
    require_keys(j, "sweep", {"parameter", "values"});
    SweepSpec s;
    s.parameter = need_string(j, "sweep", "parameter");
    static const std::set<std::string> known{"mu0", "c_learn", "m", "k"};
    if (!known.count(s.parameter))
        throw ConfigError("sweep.parameter must be one of mu0, c_learn, m, k");
    const nlohmann::json& vals = need(j, "sweep", "values");
    if (!vals.is_array() || vals.empty())
        throw ConfigError("sweep.values must be a non-empty array of numbers");
    for (const auto& v : vals) {
        if (!v.is_number()) throw ConfigError("sweep.values must be a non-empty array of numbers");
        s.values.push_back(v.get<double>());
    }
    if (s.parameter == "k")
        for (double v : s.values)
            if (v != std::floor(v)) throw ConfigError("sweep.values for k must be integers");
    return s;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    detail::require_keys(j, "config", {"command", "market", "profile", "sweep", "variant",
                                       "output_dir", "workers", "tolerances"});
    RunConfig cfg;
    cfg.command = detail::need_string(j, "config", "command");
    static const std::set<std::string> commands{"solve", "verify", "sweep", "variant"};
    if (!commands.count(cfg.command))
        throw ConfigError("command must be one of solve, verify, sweep, variant");

    cfg.market = detail::parse_market(detail::need(j, "config", "market"));

    if (j.contains("tolerances")) {
        const nlohmann::json& t = j["tolerances"];
        detail::require_keys(t, "tolerances", {"cmp", "root", "integral"});
        if (t.contains("cmp")) cfg.market.tol.cmp = detail::need_number(t, "tolerances", "cmp");
        if (t.contains("root")) cfg.market.tol.root = detail::need_number(t, "tolerances", "root");
        if (t.contains("integral"))
            cfg.market.tol.integral = detail::need_number(t, "tolerances", "integral");
    }

    if (cfg.command == "verify") {
        cfg.profile = detail::parse_profile(detail::need(j, "config", "profile"));
    } else if (j.contains("profile")) {
        throw ConfigError("profile is only accepted with the verify command");
    }
    if (cfg.command == "sweep") {
        cfg.sweep = detail::parse_sweep(detail::need(j, "config", "sweep"));
    } else if (j.contains("sweep")) {
        throw ConfigError("sweep is only accepted with the sweep command");
    }
    if (cfg.command == "variant") {
        const nlohmann::json& v = detail::need(j, "config", "variant");
        detail::require_keys(v, "variant", {"name"});
        cfg.variant = detail::need_string(v, "variant", "name");
        static const std::set<std::string> names{"observable", "diamond-good", "diamond-bad",
                                                 "low-monopoly"};
        if (!names.count(cfg.variant))
            throw ConfigError(
                "variant.name must be one of observable, diamond-good, diamond-bad, low-monopoly");
    } else if (j.contains("variant")) {
        throw ConfigError("variant is only accepted with the variant command");
    }

    if (j.contains("output_dir")) cfg.output_dir = detail::need_string(j, "config", "output_dir");
    if (j.contains("workers")) {
        cfg.workers = detail::need_integer(j, "config", "workers");
        if (cfg.workers < 1) throw ConfigError("workers must be a positive integer");
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

// Grid index for a configured price; rejects prices that do not sit on the
// grid instead of silently rounding them.
inline int grid_index_of(const MarketParams& p, double price, const char* what) {
    double scaled = price / p.unit;
    long idx = std::lround(scaled);
    if (std::abs(scaled - static_cast<double>(idx)) > 1e-6)
        throw ConfigError(std::string(what) + " does not sit on the price grid");
    if (idx < 0 || idx > p.n)
        throw ConfigError(std::string(what) + " is outside the price grid");
    return static_cast<int>(idx);
}

// Candidate profile named by a ProfileSpec, with the solver's adversarial
// convention (belief 0) at every off-path price.
inline Profile make_profile(const MarketParams& p, const ProfileSpec& s) {
    if (s.kind == ProfileSpec::Kind::guessed) return guessed_equilibrium(p);
    if (s.kind == ProfileSpec::Kind::pooling) {
        int i = grid_index_of(p, s.price, "profile.price");
        FirmStrategy f = FirmStrategy::pure(i, i);
        return Profile{f, beliefs_from_strategy(p, f, 0.0)};
    }
    int ig = grid_index_of(p, s.good_price, "profile.good_price");
    int ib = grid_index_of(p, s.bad_price, "profile.bad_price");
    FirmStrategy f = FirmStrategy::pure(ig, ib);
    if (ig == ib) return Profile{f, beliefs_from_strategy(p, f, 0.0)};
    int threshold = s.belief_threshold < 0.0
                        ? ig
                        : grid_index_of(p, s.belief_threshold, "profile.belief_threshold");
    if (threshold < ig || threshold >= ib)
        throw ConfigError("profile.belief_threshold must separate good_price from bad_price");
    BeliefSystem b;
    b.at.assign(static_cast<std::size_t>(p.n) + 1, 0.0);
    for (int i = 0; i <= threshold; ++i) b.at[static_cast<std::size_t>(i)] = 1.0;
    return Profile{f, b};
}

// Canonical echo of every result-affecting setting; object keys are stored
// sorted, so the dump (and therefore the hash) is byte-stable.
inline nlohmann::json canonical_config(const RunConfig& cfg) {
    nlohmann::json m;
    m["mu0"] = cfg.market.mu0;
    m["unit"] = cfg.market.unit;
    m["k"] = cfg.market.k;
    m["n"] = cfg.market.n;
    m["learn_cost"] = cfg.market.learn_cost;
    nlohmann::json val;
    if (cfg.market.valuation.kind() == Valuation::Kind::uniform) {
        val["kind"] = "uniform";
        val["v_max"] = cfg.market.valuation.v_max();
    } else {
        val["kind"] = "scaled-beta";
        val["v_max"] = cfg.market.valuation.v_max();
        val["alpha"] = cfg.market.valuation.alpha();
        val["beta"] = cfg.market.valuation.beta();
    }
    m["valuation"] = val;
    m["quality"] = {{"kind", "affine"},
                    {"intercept", cfg.market.quality.intercept()},
                    {"slope", cfg.market.quality.slope()}};

    nlohmann::json j;
    j["command"] = cfg.command;
    j["market"] = m;
    j["tolerances"] = {{"cmp", cfg.market.tol.cmp},
                       {"root", cfg.market.tol.root},
                       {"integral", cfg.market.tol.integral}};
    if (cfg.command == "verify") {
        nlohmann::json pr;
        if (cfg.profile.kind == ProfileSpec::Kind::guessed) {
            pr["kind"] = "guessed";
        } else if (cfg.profile.kind == ProfileSpec::Kind::pooling) {
            pr["kind"] = "pooling";
            pr["price"] = cfg.profile.price;
        } else {
            pr["kind"] = "explicit";
            pr["good_price"] = cfg.profile.good_price;
            pr["bad_price"] = cfg.profile.bad_price;
            pr["belief_threshold"] = cfg.profile.belief_threshold;
        }
        j["profile"] = pr;
    }
    if (cfg.command == "sweep")
        j["sweep"] = {{"parameter", cfg.sweep.parameter}, {"values", cfg.sweep.values}};
    if (cfg.command == "variant") j["variant"] = {{"name", cfg.variant}};
    return j;
}

inline std::string config_hash(const RunConfig& cfg) {
    return hex64(fnv1a64(canonical_config(cfg).dump()));
}

}  // namespace pricesig

#endif
