#ifndef PRICESIG_CONSUMER_HPP
#define PRICESIG_CONSUMER_HPP

#include <algorithm>
#include <vector>

#include "market.hpp"
#include "numeric.hpp"
#include "strategy.hpp"

namespace pricesig {

enum class StageOneDecision { Buy, Learn, Leave };
enum class StageTwoDecision { BuyAssigned, BuyOther, Leave };

inline const char* to_string(StageOneDecision d) {
    switch (d) {
        case StageOneDecision::Buy: return "buy";
        case StageOneDecision::Learn: return "learn";
        default: return "leave";
    }
}

inline const char* to_string(StageTwoDecision d) {
    switch (d) {
        case StageTwoDecision::BuyAssigned: return "buy-assigned";
        case StageTwoDecision::BuyOther: return "buy-other";
        default: return "leave";
    }
}

// Expected continuation value of paying the learning cost: after seeing the
// other price the consumer takes the best of leaving, the first offer, and
// the revealed one.
inline double learn_value(const MarketParams& p, double v, double w_own,
                          const std::vector<OfferAtom>& opponent) {
    double sum = 0.0;
    for (const OfferAtom& a : opponent) {
        double w_other = gain_from_trade(p, v, a.belief, a.price);
        sum += a.prob * std::max({0.0, w_own, w_other});
    }
    return sum - p.learn_cost;
}

inline double learn_value(const MarketParams& p, double v, double w_own, const FirmStrategy& opp,
                          const BeliefSystem& beliefs) {
    return learn_value(p, v, w_own, offer_atoms(p, opp, beliefs));
}

// First-stage rule: learning wins weak ties against buying; buying requires
// strictly positive surplus over both leaving and learning.  The three cases
// partition every input.
inline StageOneDecision stage1(const MarketParams& p, double v, double own_price,
                               double own_belief, const std::vector<OfferAtom>& opponent) {
    double w = gain_from_trade(p, v, own_belief, own_price);
    double value_of_learning = learn_value(p, v, w, opponent);
    if (w <= value_of_learning && value_of_learning >= 0.0) return StageOneDecision::Learn;
    if (w > std::max(0.0, value_of_learning)) return StageOneDecision::Buy;
    return StageOneDecision::Leave;
}

inline StageOneDecision stage1(const MarketParams& p, double v, double own_price, double own_belief,
                               const FirmStrategy& opp, const BeliefSystem& beliefs) {
    return stage1(p, v, own_price, own_belief, offer_atoms(p, opp, beliefs));
}

// Second-stage rule after learning: ties go to the assigned firm; switching
// needs a strict improvement and nonnegative surplus.
inline StageTwoDecision stage2(const MarketParams& p, double v, double assigned_price,
                               double assigned_belief, double other_price, double other_belief) {
    double w_a = gain_from_trade(p, v, assigned_belief, assigned_price);
    double w_o = gain_from_trade(p, v, other_belief, other_price);
    if (w_a >= std::max(0.0, w_o)) return StageTwoDecision::BuyAssigned;
    if (w_o >= 0.0 && w_o > w_a) return StageTwoDecision::BuyOther;
    return StageTwoDecision::Leave;
}

// Lowest valuation at which the stage-1 decision switches from Leave to
// Learn.  Returns v_max when nobody learns; demands pure threshold structure
// (Leave below, Learn above) and flags anything else as structural.
inline double learning_cutoff(const MarketParams& p, double own_price, double own_belief,
                              const std::vector<OfferAtom>& opponent) {
    const int scan = 4096;
    double vbar = p.v_max();
    std::vector<StageOneDecision> decisions(scan + 1);
    bool saw_learn = false;
    for (int i = 0; i <= scan; ++i) {
        double v = vbar * static_cast<double>(i) / scan;
        decisions[static_cast<std::size_t>(i)] = stage1(p, v, own_price, own_belief, opponent);
        saw_learn = saw_learn || decisions[static_cast<std::size_t>(i)] == StageOneDecision::Learn;
    }
    if (!saw_learn) return vbar;
    int first_learn = 0;
    while (decisions[static_cast<std::size_t>(first_learn)] != StageOneDecision::Learn) {
        if (decisions[static_cast<std::size_t>(first_learn)] == StageOneDecision::Buy)
            throw StructuralError("buying below the learning region breaks threshold structure");
        ++first_learn;
    }
    for (int i = first_learn; i <= scan; ++i)
        if (decisions[static_cast<std::size_t>(i)] != StageOneDecision::Learn)
            throw StructuralError("learning region is not an upper interval in v");
    if (first_learn == 0) return 0.0;
    double lo = vbar * static_cast<double>(first_learn - 1) / scan;
    double hi = vbar * static_cast<double>(first_learn) / scan;
    while (hi - lo > p.tol.root) {
        double mid = 0.5 * (lo + hi);
        if (stage1(p, mid, own_price, own_belief, opponent) == StageOneDecision::Learn)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

inline double learning_cutoff(const MarketParams& p, double own_price, double own_belief,
                              const FirmStrategy& opp, const BeliefSystem& beliefs) {
    return learning_cutoff(p, own_price, own_belief, offer_atoms(p, opp, beliefs));
}

}  // namespace pricesig

#endif
