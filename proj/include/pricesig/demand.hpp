#ifndef PRICESIG_DEMAND_HPP
#define PRICESIG_DEMAND_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "consumer.hpp"
#include "market.hpp"
#include "numeric.hpp"
#include "strategy.hpp"

namespace pricesig {

// Demand at one firm, split by where the buyers came from.  All masses are
// absolute (the whole population has mass 1, each firm is assigned half):
//   own_buyers + learners_out + own_leavers = 1/2     (own side accounted)
//   total = own_buyers + switchers_in                 (who actually buys here)
struct DemandReport {
    double total = 0.0;
    double own_buyers = 0.0;
    double switchers_in = 0.0;
    double learners_out = 0.0;
    double own_leavers = 0.0;
    std::vector<std::pair<double, const char*>> cutoffs;
    bool quadrature_fallback = false;
};

// Everything the integration kernel needs; wrappers below fill it from firm
// strategies.  `anticipated_self` is what the other firm's consumers believe
// this firm plays when they decide whether to learn (they cannot see a
// deviation before paying the learning cost).
struct DemandInputs {
    double own_price = 0.0;
    double own_belief = 0.0;
    std::vector<OfferAtom> opponent;
    std::vector<OfferAtom> anticipated_self;
    bool force_quadrature = false;
};

namespace detail {

// Affine valuation curve w(v) = icept + slope * v.
struct Lin {
    double slope = 0.0;
    double icept = 0.0;
    double at(double v) const { return icept + slope * v; }
};

inline Lin offer_curve(const MarketParams& p, double price, double belief) {
    return Lin{belief * (p.quality.slope() - 1.0) + 1.0,
               belief * p.quality.intercept() - price};
}

inline void add_crossing(std::vector<double>& out, const Lin& a, const Lin& b, double v_max) {
    double ds = a.slope - b.slope;
    if (ds == 0.0) return;
    double v = (b.icept - a.icept) / ds;
    if (v > 0.0 && v < v_max && std::isfinite(v)) out.push_back(v);
}

// Accumulates one side's classification over intervals of constant decision.
struct SideTotals {
    double buy = 0.0;    // buys the firm under study
    double out = 0.0;    // learned and bought the other firm
    double leave = 0.0;  // bought nothing
};

}  // namespace detail

// Exact integration of the population assigned to the firm under study when
// it offers (own_price, own_belief) and the other firm's offers are the
// `opponent` atoms.  Returns fractions of that half-population (in [0,1]).
inline detail::SideTotals integrate_assigned_side(const MarketParams& p, double own_price,
                                                  double own_belief,
                                                  const std::vector<OfferAtom>& opponent,
                                                  std::vector<std::pair<double, const char*>>* cutoffs,
                                                  const char* tag) {
    using detail::Lin;
    double vbar = p.v_max();
    Lin own = detail::offer_curve(p, own_price, own_belief);
    std::vector<Lin> curves{Lin{0.0, 0.0}, own};
    for (const OfferAtom& a : opponent) curves.push_back(detail::offer_curve(p, a.price, a.belief));

    std::vector<double> pts{0.0, vbar};
    for (std::size_t i = 0; i < curves.size(); ++i)
        for (std::size_t j = i + 1; j < curves.size(); ++j)
            detail::add_crossing(pts, curves[i], curves[j], vbar);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (cutoffs)
        for (std::size_t i = 1; i + 1 < pts.size(); ++i) cutoffs->push_back({pts[i], tag});

    // Between consecutive curve crossings every max-selection inside the
    // learning value is fixed, so the learn value and its gap to the own
    // offer are affine there; endpoint interpolation yields exact roots.
    std::vector<double> refined = pts;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double x1 = pts[i], x2 = pts[i + 1];
        double w1 = gain_from_trade(p, x1, own_belief, own_price);
        double w2 = gain_from_trade(p, x2, own_belief, own_price);
        double l1 = learn_value(p, x1, w1, opponent);
        double l2 = learn_value(p, x2, w2, opponent);
        auto add_root = [&](double f1, double f2, const char* label) {
            if ((f1 < 0.0 && f2 > 0.0) || (f1 > 0.0 && f2 < 0.0)) {
                double r = x1 + (x2 - x1) * (-f1) / (f2 - f1);
                if (r > x1 && r < x2) {
                    refined.push_back(r);
                    if (cutoffs) cutoffs->push_back({r, label});
                }
            }
        };
        add_root(l1, l2, "learn-boundary");
        add_root(w1 - l1, w2 - l2, "buy-learn-boundary");
    }
    std::sort(refined.begin(), refined.end());
    refined.erase(std::unique(refined.begin(), refined.end()), refined.end());

    detail::SideTotals t;
    for (std::size_t i = 0; i + 1 < refined.size(); ++i) {
        double lo = refined[i], hi = refined[i + 1];
        double mass = p.valuation.cdf(hi) - p.valuation.cdf(lo);
        if (mass <= 0.0) continue;
        double mid = 0.5 * (lo + hi);
        StageOneDecision d1 = stage1(p, mid, own_price, own_belief, opponent);
        if (d1 == StageOneDecision::Buy) {
            t.buy += mass;
        } else if (d1 == StageOneDecision::Leave) {
            t.leave += mass;
        } else {
            for (const OfferAtom& a : opponent) {
                StageTwoDecision d2 = stage2(p, mid, own_price, own_belief, a.price, a.belief);
                if (d2 == StageTwoDecision::BuyAssigned)
                    t.buy += mass * a.prob;
                else if (d2 == StageTwoDecision::BuyOther)
                    t.out += mass * a.prob;
                else
                    t.leave += mass * a.prob;
            }
        }
    }
    return t;
}

// Same classification on a dense midpoint grid; the fallback when the exact
// path reports structure it cannot handle, and the cross-check oracle.
inline detail::SideTotals integrate_assigned_side_quadrature(const MarketParams& p, double own_price,
                                                             double own_belief,
                                                             const std::vector<OfferAtom>& opponent,
                                                             int points) {
    detail::SideTotals t;
    double vbar = p.v_max();
    double prev_cdf = 0.0;
    for (int i = 0; i < points; ++i) {
        double hi_edge = vbar * static_cast<double>(i + 1) / points;
        double next_cdf = (i + 1 == points) ? 1.0 : p.valuation.cdf(hi_edge);
        double mass = next_cdf - prev_cdf;
        prev_cdf = next_cdf;
        if (mass <= 0.0) continue;
        double mid = vbar * (static_cast<double>(i) + 0.5) / points;
        StageOneDecision d1 = stage1(p, mid, own_price, own_belief, opponent);
        if (d1 == StageOneDecision::Buy) {
            t.buy += mass;
        } else if (d1 == StageOneDecision::Leave) {
            t.leave += mass;
        } else {
            for (const OfferAtom& a : opponent) {
                StageTwoDecision d2 = stage2(p, mid, own_price, own_belief, a.price, a.belief);
                if (d2 == StageTwoDecision::BuyAssigned)
                    t.buy += mass * a.prob;
                else if (d2 == StageTwoDecision::BuyOther)
                    t.out += mass * a.prob;
                else
                    t.leave += mass * a.prob;
            }
        }
    }
    return t;
}

// Switchers toward the firm under study: consumers assigned to the other
// firm at realized offer r learn against `anticipated_self` and then compare
// their offer with the actual (possibly deviant) one.
inline double integrate_switchers_in(const MarketParams& p, const DemandInputs& in,
                                     const OfferAtom& r,
                                     std::vector<std::pair<double, const char*>>* cutoffs) {
    using detail::Lin;
    double vbar = p.v_max();
    Lin theirs = detail::offer_curve(p, r.price, r.belief);
    Lin actual = detail::offer_curve(p, in.own_price, in.own_belief);
    std::vector<Lin> curves{Lin{0.0, 0.0}, theirs, actual};
    for (const OfferAtom& t : in.anticipated_self) curves.push_back(detail::offer_curve(p, t.price, t.belief));

    std::vector<double> pts{0.0, vbar};
    for (std::size_t i = 0; i < curves.size(); ++i)
        for (std::size_t j = i + 1; j < curves.size(); ++j)
            detail::add_crossing(pts, curves[i], curves[j], vbar);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    std::vector<double> refined = pts;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double x1 = pts[i], x2 = pts[i + 1];
        double w1 = gain_from_trade(p, x1, r.belief, r.price);
        double w2 = gain_from_trade(p, x2, r.belief, r.price);
        double l1 = learn_value(p, x1, w1, in.anticipated_self);
        double l2 = learn_value(p, x2, w2, in.anticipated_self);
        auto add_root = [&](double f1, double f2, const char* label) {
            if ((f1 < 0.0 && f2 > 0.0) || (f1 > 0.0 && f2 < 0.0)) {
                double root = x1 + (x2 - x1) * (-f1) / (f2 - f1);
                if (root > x1 && root < x2) {
                    refined.push_back(root);
                    if (cutoffs) cutoffs->push_back({root, label});
                }
            }
        };
        add_root(l1, l2, "opp-learn-boundary");
        add_root(w1 - l1, w2 - l2, "opp-buy-learn-boundary");
    }
    std::sort(refined.begin(), refined.end());
    refined.erase(std::unique(refined.begin(), refined.end()), refined.end());

    double frac = 0.0;
    for (std::size_t i = 0; i + 1 < refined.size(); ++i) {
        double lo = refined[i], hi = refined[i + 1];
        double mass = p.valuation.cdf(hi) - p.valuation.cdf(lo);
        if (mass <= 0.0) continue;
        double mid = 0.5 * (lo + hi);
        if (stage1(p, mid, r.price, r.belief, in.anticipated_self) != StageOneDecision::Learn) continue;
        if (stage2(p, mid, r.price, r.belief, in.own_price, in.own_belief) == StageTwoDecision::BuyOther)
            frac += mass;
    }
    return frac;
}

inline double integrate_switchers_in_quadrature(const MarketParams& p, const DemandInputs& in,
                                                const OfferAtom& r, int points) {
    double frac = 0.0;
    double vbar = p.v_max();
    double prev_cdf = 0.0;
    for (int i = 0; i < points; ++i) {
        double hi_edge = vbar * static_cast<double>(i + 1) / points;
        double next_cdf = (i + 1 == points) ? 1.0 : p.valuation.cdf(hi_edge);
        double mass = next_cdf - prev_cdf;
        prev_cdf = next_cdf;
        if (mass <= 0.0) continue;
        double mid = vbar * (static_cast<double>(i) + 0.5) / points;
        if (stage1(p, mid, r.price, r.belief, in.anticipated_self) != StageOneDecision::Learn) continue;
        if (stage2(p, mid, r.price, r.belief, in.own_price, in.own_belief) == StageTwoDecision::BuyOther)
            frac += mass;
    }
    return frac;
}

inline DemandReport compute_demand_quadrature(const MarketParams& p, const DemandInputs& in,
                                              int points = 200000) {
    DemandReport rep;
    rep.quadrature_fallback = true;
    detail::SideTotals own =
        integrate_assigned_side_quadrature(p, in.own_price, in.own_belief, in.opponent, points);
    rep.own_buyers = 0.5 * own.buy;
    rep.learners_out = 0.5 * own.out;
    rep.own_leavers = 0.5 * own.leave;
    for (const OfferAtom& r : in.opponent)
        rep.switchers_in += 0.5 * r.prob * integrate_switchers_in_quadrature(p, in, r, points);
    rep.total = rep.own_buyers + rep.switchers_in;
    return rep;
}

// Primary entry point: exact threshold integration with automatic fallback
// to quadrature when the breakpoint structure degenerates.
inline DemandReport compute_demand(const MarketParams& p, const DemandInputs& in) {
    if (in.force_quadrature) return compute_demand_quadrature(p, in);
    DemandReport rep;
    bool healthy = std::isfinite(in.own_price) && std::isfinite(in.own_belief);
    if (healthy && in.opponent.size() + in.anticipated_self.size() <= 64) {
        detail::SideTotals own = integrate_assigned_side(p, in.own_price, in.own_belief,
                                                         in.opponent, &rep.cutoffs, "own-crossing");
        rep.own_buyers = 0.5 * own.buy;
        rep.learners_out = 0.5 * own.out;
        rep.own_leavers = 0.5 * own.leave;
        for (const OfferAtom& r : in.opponent)
            rep.switchers_in += 0.5 * r.prob * integrate_switchers_in(p, in, r, &rep.cutoffs);
        rep.total = rep.own_buyers + rep.switchers_in;
        std::sort(rep.cutoffs.begin(), rep.cutoffs.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        return rep;
    }
    return compute_demand_quadrature(p, in);
}

// Demand at an on-path grid price of the symmetric profile.
inline DemandReport demand(const MarketParams& p, int price_index, const FirmStrategy& s,
                           const BeliefSystem& beliefs) {
    DemandInputs in;
    in.own_price = p.price(price_index);
    in.own_belief = beliefs(price_index);
    in.opponent = offer_atoms(p, s, beliefs);
    in.anticipated_self = in.opponent;
    return compute_demand(p, in);
}

// Demand at a unilateral deviation to (price, belief_at_price): the other
// firm's consumers still learn against the equilibrium anticipation.
inline DemandReport deviation_demand(const MarketParams& p, int price_index, double belief_at_price,
                                     const FirmStrategy& s, const BeliefSystem& beliefs,
                                     bool force_quadrature = false) {
    DemandInputs in;
    in.own_price = p.price(price_index);
    in.own_belief = belief_at_price;
    in.opponent = offer_atoms(p, s, beliefs);
    in.anticipated_self = in.opponent;
    in.force_quadrature = force_quadrature;
    return compute_demand(p, in);
}

struct ProfitQuote {
    double price = 0.0;
    double demand = 0.0;
    double margin = 0.0;
    double profit = 0.0;
};

inline ProfitQuote profit(const MarketParams& p, bool good_type, int price_index, double demand_mass) {
    ProfitQuote q;
    q.price = p.price(price_index);
    q.demand = demand_mass;
    q.margin = q.price - (good_type ? 0.0 : p.bad_cost());
    q.profit = q.margin * q.demand;
    return q;
}

// Closed-form profit of the good type at low prices, used as an oracle
// against the integrated demand: half the population buys outright above the
// quality cutoff, and the other firm's learners (fraction 1 - F(v01) of the
// bad-type side) all switch over.
inline double good_type_low_price_profit(const MarketParams& p, int price_index, double v01) {
    if (price_index > p.k) throw DomainError("good_type_low_price_profit: price above the bad cost");
    double price = p.price(price_index);
    double direct = 1.0 - p.valuation.cdf(p.quality.h_inv_clamped(price, p.v_max()));
    double switchers = (1.0 - p.mu0) * (1.0 - p.valuation.cdf(v01));
    return 0.5 * price * (direct + switchers);
}

}  // namespace pricesig

#endif
