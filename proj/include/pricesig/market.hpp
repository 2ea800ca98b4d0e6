#ifndef PRICESIG_MARKET_HPP
#define PRICESIG_MARKET_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "distribution.hpp"
#include "numeric.hpp"
#include "quality.hpp"

namespace pricesig {

// All exogenous primitives of the market.  Prices live on the exact grid
// {0, unit, 2*unit, ..., n*unit}; the bad type's cost is k*unit and the good
// type's cost is normalized to zero.
struct MarketParams {
    double mu0 = 0.5;        // prior probability of the good type
    double unit = 0.01;      // minimal monetary unit m
    int k = 20;              // bad cost = k * unit
    int n = 320;             // top grid price = n * unit
    double learn_cost = 0.05;
    Valuation valuation = Valuation::uniform(1.0);
    Quality quality = Quality(0.2, 3.0);
    Tolerances tol{};

    double bad_cost() const { return k * unit; }
    double bad_cost_plus() const { return (k + 1) * unit; }
    double price(int i) const { return i * unit; }
    int grid_count() const { return n + 1; }
    double top_price() const { return n * unit; }
    double v_max() const { return valuation.v_max(); }

    double cost_of(bool good) const { return good ? 0.0 : bad_cost(); }

    // Expected value of trade for a consumer holding belief mu.
    double expected_quality(double v, double mu) const {
        return mu * quality.h(v) + (1.0 - mu) * v;
    }

    void require_well_formed() const {
        require_finite(mu0, "mu0");
        require_positive(unit, "unit");
        if (k <= 0) throw std::invalid_argument("k must be a positive integer");
        if (n <= 0) throw std::invalid_argument("n must be a positive integer");
        if (k > n) throw std::invalid_argument("k must not exceed n");
        require_positive(learn_cost, "learn_cost");
    }
};

inline double gain_from_trade(const MarketParams& p, double v, double belief, double price) {
    return p.expected_quality(v, belief) - price;
}

// Unique valuation whose belief-mu0 expected quality equals x, i.e. the
// solution of mu0*h(v) + (1-mu0)*v = x.  The map is affine and strictly
// increasing, so the root is closed-form; the bisection bound in `tol.root`
// is met exactly.
inline double v_of_x(const MarketParams& p, double x) {
    double lo = p.mu0 * p.quality.h(0.0);
    double hi = p.mu0 * p.quality.h(p.v_max()) + (1.0 - p.mu0) * p.v_max();
    double slack = 1e-9 * std::max(1.0, std::abs(hi));
    if (x < lo - slack || x > hi + slack) throw DomainError("v_of_x: x outside the belief-mu0 value range");
    double slope = p.mu0 * p.quality.slope() + (1.0 - p.mu0);
    double v = (x - p.mu0 * p.quality.intercept()) / slope;
    return std::clamp(v, 0.0, p.v_max());
}

// Full-information profit of a seller at price x facing only consumers who
// would buy under the given belief: (x - cost) * (1 - F(v*)),
// v* solving belief*h(v*) + (1-belief)*v* = x (clamped to [0, v_max]).
inline double monopoly_profit(const MarketParams& p, double belief, double cost, double x) {
    double slope = belief * p.quality.slope() + (1.0 - belief);
    double v = (x - belief * p.quality.intercept()) / slope;
    v = std::clamp(v, 0.0, p.v_max());
    return (x - cost) * (1.0 - p.valuation.cdf(v));
}

// Grid price maximizing the full-information profit; ties break low.
inline double monopoly_price(const MarketParams& p, double belief, double cost) {
    if (belief < 0.0 || belief > 1.0) throw DomainError("monopoly_price: belief outside [0,1]");
    int best = 0;
    double best_profit = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= p.n; ++i) {
        double profit = monopoly_profit(p, belief, cost, p.price(i));
        if (profit > best_profit + p.tol.cmp) {
            best = i;
            best_profit = profit;
        }
    }
    return p.price(best);
}

namespace detail {

// Objective of the unit-size bound: x * (demand-at-belief-1 / demand-at-prior - 1).
// Prices whose prior-belief demand underflows to zero cannot bind the minimum
// (the ratio blows up there), so they score +infinity instead of aborting.
inline double m_star_objective(const MarketParams& p, double x) {
    double slope = p.mu0 * p.quality.slope() + (1.0 - p.mu0);
    double v_prior = std::clamp((x - p.mu0 * p.quality.intercept()) / slope, 0.0, p.v_max());
    double denom = 1.0 - p.valuation.cdf(v_prior);
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    double numer = 1.0 - p.valuation.cdf(p.quality.h_inv_clamped(x, p.v_max()));
    return x * (numer / denom - 1.0);
}

}  // namespace detail

// Minimum of the demand-ratio expression over [c_B, x_top]; dense grid plus
// local zoom refinement, documented accuracy <= 1e-6 relative.
inline double m_star(const MarketParams& p, int grid = 100000) {
    double lo = p.bad_cost();
    double hi = p.mu0 * p.quality.h(p.v_max()) + (1.0 - p.mu0) * p.v_max() - p.unit;
    if (hi <= lo) throw DomainError("m_star: empty search range");
    auto g = [&](double x) { return detail::m_star_objective(p, x); };
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid; ++i) {
        double x = lo + (hi - lo) * static_cast<double>(i) / grid;
        double val = g(x);
        if (val < best_val) {
            best_val = val;
            best = i;
        }
    }
    if (!std::isfinite(best_val))
        throw DomainError("m_star: prior demand vanished across the whole search range");
    double a = lo + (hi - lo) * static_cast<double>(std::max(0, best - 1)) / grid;
    double b = lo + (hi - lo) * static_cast<double>(std::min(grid, best + 1)) / grid;
    for (int round = 0; round < 3; ++round) {
        int zoom = 1000;
        int zbest = 0;
        double zval = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= zoom; ++i) {
            double x = a + (b - a) * static_cast<double>(i) / zoom;
            double val = g(x);
            if (val < zval) {
                zval = val;
                zbest = i;
            }
        }
        double na = a + (b - a) * static_cast<double>(std::max(0, zbest - 1)) / zoom;
        double nb = a + (b - a) * static_cast<double>(std::min(zoom, zbest + 1)) / zoom;
        a = na;
        b = nb;
        best_val = std::min(best_val, zval);
    }
    return best_val;
}

struct ValidationCheck {
    std::string name;
    double lhs = 0.0;  // value that must satisfy the relation against rhs
    double rhs = 0.0;
    bool pass = false;
    std::string note;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    double m_star_value = 0.0;
    double monopoly_price_good = 0.0;  // P_G^m

    bool all_pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.pass; });
    }

    bool pass_except(const std::set<std::string>& waived) const {
        for (const auto& c : checks)
            if (!c.pass && !waived.count(c.name)) return false;
        return true;
    }

    const ValidationCheck* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }

    std::string first_failure() const {
        for (const auto& c : checks)
            if (!c.pass) return c.name;
        return "";
    }
};

// One entry per model assumption; every failure is reported, not just the
// first.  Derived constants (m*, P_G^m) are computed along the way.
inline ValidationReport validate(const MarketParams& p) {
    p.require_well_formed();
    ValidationReport rep;
    auto add = [&](std::string name, double lhs, double rhs, bool pass, std::string note) {
        rep.checks.push_back({std::move(name), lhs, rhs, pass, std::move(note)});
    };

    add("mu0_in_unit_interval", p.mu0, 1.0, p.mu0 > 0.0 && p.mu0 < 1.0, "0 < mu0 < 1");
    add("bad_cost_positive", p.bad_cost(), 0.0, p.bad_cost() > 0.0, "c_B = k*m > 0");
    add("v_max_above_bad_cost", p.v_max(), p.bad_cost(), p.v_max() > p.bad_cost(), "v_max > c_B");
    add("bad_cost_covers_quality_floor", p.bad_cost(), p.quality.h(0.0) - p.unit,
        p.bad_cost() >= p.quality.h(0.0) - p.unit, "c_B >= h(0) - m");
    add("grid_covers_quality_range", p.top_price(), p.quality.h(p.v_max()),
        p.top_price() >= p.quality.h(p.v_max()) - 1e-12, "n*m >= h(v_max)");

    double learn_bound = p.mu0 * (p.quality.h(p.bad_cost_plus()) - p.bad_cost());
    add("learn_cost_bound", p.learn_cost, learn_bound, p.learn_cost <= learn_bound,
        "c_learn <= mu0*(h(c_B+) - c_B)");

    double unit_bound = std::min({p.learn_cost, p.mu0 * p.bad_cost() / (1.0 - p.mu0), p.v_max() - p.bad_cost()});
    add("unit_small", p.unit, unit_bound, p.unit < unit_bound,
        "m < min{c_learn, mu0*c_B/(1-mu0), v_max - c_B}");

    // Full-information monopoly profit strictly increasing on [0, c_B + m]:
    // checked on a dense grid of that interval.
    bool increasing = true;
    {
        int steps = 2000;
        double top = p.bad_cost_plus();
        double prev = monopoly_profit(p, 1.0, 0.0, 0.0);
        for (int i = 1; i <= steps; ++i) {
            double x = top * static_cast<double>(i) / steps;
            double cur = monopoly_profit(p, 1.0, 0.0, x);
            if (cur <= prev) {
                increasing = false;
                break;
            }
            prev = cur;
        }
    }
    add("monopoly_profit_increasing", increasing ? 1.0 : 0.0, 1.0, increasing,
        "P*(1 - F(h^-1(P))) strictly increasing on [0, c_B+m]");

    bool quality_ok = p.quality.dominates_identity_on_grid(p.v_max());
    add("quality_dominates_identity", quality_ok ? 1.0 : 0.0, 1.0, quality_ok,
        "h(v) >= v with slope above 1 on a validation grid");

    double ms = 0.0;
    bool ms_ok = false;
    std::string ms_note = "m < m*";
    try {
        ms = m_star(p);
        ms_ok = p.unit < ms;
    } catch (const DomainError& e) {
        ms_note = std::string("m* not computable: ") + e.what();
    }
    add("unit_below_m_star", p.unit, ms, ms_ok, ms_note);

    rep.m_star_value = ms;
    rep.monopoly_price_good = monopoly_price(p, 1.0, 0.0);
    return rep;
}

}  // namespace pricesig

#endif
