#ifndef PRICESIG_STRATEGY_HPP
#define PRICESIG_STRATEGY_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "market.hpp"
#include "numeric.hpp"

namespace pricesig {

// Distribution over grid price indices; atoms stored sorted by index with
// strictly positive weight.
struct PriceDistribution {
    std::vector<std::pair<int, double>> atoms;  // (grid index, probability)

    static PriceDistribution pure(int index) { return PriceDistribution{{{index, 1.0}}}; }

    bool is_pure() const { return atoms.size() == 1; }

    int pure_index() const {
        if (!is_pure()) throw StructuralError("pure_index called on a mixed distribution");
        return atoms.front().first;
    }

    double prob_at(int index) const {
        for (const auto& [i, q] : atoms)
            if (i == index) return q;
        return 0.0;
    }

    void require_valid(int n, double tol) const {
        if (atoms.empty()) throw StructuralError("price distribution has empty support");
        double sum = 0.0;
        int prev = -1;
        for (const auto& [i, q] : atoms) {
            if (i < 0 || i > n) throw StructuralError("price distribution atom off the grid");
            if (i <= prev) throw StructuralError("price distribution atoms not sorted/unique");
            if (!(q > 0.0) || !std::isfinite(q)) throw StructuralError("price distribution atom weight not positive");
            prev = i;
            sum += q;
        }
        if (std::abs(sum - 1.0) > tol) throw StructuralError("price distribution does not sum to one");
    }
};

// Type-contingent pricing rule of one firm.  Both firms play the same rule in
// the symmetric profiles this solver searches.
struct FirmStrategy {
    PriceDistribution good;  // played when the type is G
    PriceDistribution bad;   // played when the type is B

    static FirmStrategy pure(int good_index, int bad_index) {
        return FirmStrategy{PriceDistribution::pure(good_index), PriceDistribution::pure(bad_index)};
    }

    void require_valid(const MarketParams& p) const {
        good.require_valid(p.n, p.tol.cmp);
        bad.require_valid(p.n, p.tol.cmp);
    }
};

// Bayes posterior that the firm is good after seeing a price in the
// strategy's support; empty when the price has zero probability under both
// types (off path).
inline std::optional<double> posterior(double mu0, const FirmStrategy& s, int index) {
    double pg = s.good.prob_at(index);
    double pb = s.bad.prob_at(index);
    double denom = mu0 * pg + (1.0 - mu0) * pb;
    if (denom <= 0.0) return std::nullopt;
    return mu0 * pg / denom;
}

// Belief in the good type at every grid price, explicit everywhere.
struct BeliefSystem {
    std::vector<double> at;         // size n+1
    bool fallback_used = false;     // off-path beliefs not pinned to a single value

    double operator()(int index) const { return at[static_cast<std::size_t>(index)]; }
};

// On-path beliefs from Bayes rule; every off-path price gets the supplied
// belief (the solver's default 0 is the most pessimistic, hence the hardest
// test a candidate can face when beliefs act monotonically).
inline BeliefSystem beliefs_from_strategy(const MarketParams& p, const FirmStrategy& s,
                                          double off_path_belief = 0.0) {
    BeliefSystem b;
    b.at.resize(static_cast<std::size_t>(p.n) + 1, off_path_belief);
    for (int i = 0; i <= p.n; ++i) {
        if (auto mu = posterior(p.mu0, s, i)) b.at[static_cast<std::size_t>(i)] = *mu;
    }
    return b;
}

// One price a consumer might find at the other firm: its probability and the
// belief the consumer would hold there.
struct OfferAtom {
    double price = 0.0;
    double prob = 0.0;
    double belief = 0.0;
};

// Unobservable-types view: atoms merged per price, belief from the stored
// BeliefSystem (Bayes on path by construction).
inline std::vector<OfferAtom> offer_atoms(const MarketParams& p, const FirmStrategy& s,
                                          const BeliefSystem& beliefs) {
    std::vector<OfferAtom> out;
    std::vector<std::pair<int, double>> merged;
    for (const auto& [i, q] : s.good.atoms) merged.emplace_back(i, p.mu0 * q);
    for (const auto& [i, q] : s.bad.atoms) merged.emplace_back(i, (1.0 - p.mu0) * q);
    std::sort(merged.begin(), merged.end());
    for (std::size_t j = 0; j < merged.size();) {
        int idx = merged[j].first;
        double w = 0.0;
        while (j < merged.size() && merged[j].first == idx) w += merged[j++].second;
        out.push_back({p.price(idx), w, beliefs(idx)});
    }
    return out;
}

// Observable-types view: each type's price arrives with the type revealed, so
// the same price can appear twice with beliefs 1 and 0; atoms are not merged.
inline std::vector<OfferAtom> observable_offer_atoms(const MarketParams& p, const FirmStrategy& s) {
    std::vector<OfferAtom> out;
    for (const auto& [i, q] : s.good.atoms) out.push_back({p.price(i), p.mu0 * q, 1.0});
    for (const auto& [i, q] : s.bad.atoms) out.push_back({p.price(i), (1.0 - p.mu0) * q, 0.0});
    return out;
}

// Single-type view (one quality known to everyone): belief is constant.
inline std::vector<OfferAtom> single_type_offer_atoms(const MarketParams& p,
                                                      const PriceDistribution& d, double belief) {
    std::vector<OfferAtom> out;
    for (const auto& [i, q] : d.atoms) out.push_back({p.price(i), q, belief});
    return out;
}

}  // namespace pricesig

#endif
