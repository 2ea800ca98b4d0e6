#ifndef PRICESIG_EQUILIBRIUM_HPP
#define PRICESIG_EQUILIBRIUM_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <thread>
#include <utility>
#include <vector>

#include "consumer.hpp"
#include "demand.hpp"
#include "market.hpp"
#include "numeric.hpp"
#include "strategy.hpp"

namespace pricesig {

struct Profile {
    FirmStrategy strategy;
    BeliefSystem beliefs;

    void require_valid(const MarketParams& p) const {
        strategy.require_valid(p);
        if (beliefs.at.size() != static_cast<std::size_t>(p.n) + 1)
            throw StructuralError("belief system does not cover the price grid");
        for (int i = 0; i <= p.n; ++i) {
            auto mu = posterior(p.mu0, strategy, i);
            if (mu && std::abs(*mu - beliefs(i)) > p.tol.cmp)
                throw StructuralError("stored on-path belief contradicts Bayes rule");
        }
    }
};

// The low-price signalling profile: good type at the bad cost, bad type one
// unit above, full credibility at and below the bad cost.
inline Profile guessed_equilibrium(const MarketParams& p) {
    Profile prof;
    prof.strategy = FirmStrategy::pure(p.k, p.k + 1);
    prof.beliefs.at.assign(static_cast<std::size_t>(p.n) + 1, 0.0);
    for (int i = 0; i <= p.k; ++i) prof.beliefs.at[static_cast<std::size_t>(i)] = 1.0;
    return prof;
}

struct EquilibriumCertificate {
    FirmStrategy strategy;
    BeliefSystem beliefs;
    int price_good = -1;       // headline support index per type
    int price_bad = -1;
    double pi_good = 0.0;      // equilibrium profit (minimum over support)
    double pi_bad = 0.0;
    double demand_good = 0.0;  // demand at the headline prices
    double demand_bad = 0.0;
    double gap_good = 0.0;     // best deviation payoff minus equilibrium profit
    double gap_bad = 0.0;
    bool pbe_pass = false;
    int pbe_witness = -1;      // deviation index proving the violation
    bool pbe_witness_is_good = false;
    bool behavior_consistent = true;
    bool ic_applied = false;
    bool ic_pass = true;
    int ic_witness = -1;
    double ic_gain = 0.0;
    bool belief_fallback = false;
};

struct VerifyOptions {
    bool spot_checks = true;
    int spot_samples = 1000;
    bool belief_fallback = false;  // score off-path deviations at the better of beliefs {0,1}
};

namespace detail {

inline std::vector<int> on_path_indices(const FirmStrategy& s) {
    std::vector<int> idx;
    for (const auto& [i, q] : s.good.atoms) idx.push_back(i);
    for (const auto& [i, q] : s.bad.atoms) idx.push_back(i);
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

inline bool is_on_path(const std::vector<int>& sorted, int j) {
    return std::binary_search(sorted.begin(), sorted.end(), j);
}

// Deviation payoff of one type at grid index j given stored beliefs; in
// fallback mode the off-path belief is not trusted to be worst-case, so the
// candidate is granted the more favorable of the two extremes.
inline double deviation_payoff(const MarketParams& p, bool good_type, int j,
                               const std::vector<OfferAtom>& opponent, double belief_at_j,
                               bool off_path, bool fallback) {
    double margin = p.price(j) - (good_type ? 0.0 : p.bad_cost());
    DemandInputs in;
    in.own_price = p.price(j);
    in.opponent = opponent;
    in.anticipated_self = opponent;
    if (off_path && fallback) {
        in.own_belief = 0.0;
        double at0 = margin * compute_demand(p, in).total;
        in.own_belief = 1.0;
        double at1 = margin * compute_demand(p, in).total;
        return std::min(at0, at1);
    }
    in.own_belief = belief_at_j;
    return margin * compute_demand(p, in).total;
}

// Spot re-check of the consumer rules that generate all demand masses: draws
// (v, price) pairs and confirms the returned branch satisfies its defining
// inequality.  A failure would mean the integration layer and the decision
// layer disagree about the model.
inline bool spot_check_behavior(const MarketParams& p, const Profile& prof, int samples) {
    std::mt19937_64 rng(987654321u);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<int> uprice(0, p.n);
    auto atoms = offer_atoms(p, prof.strategy, prof.beliefs);
    for (int t = 0; t < samples; ++t) {
        double v = u01(rng) * p.v_max();
        int i = uprice(rng);
        double price = p.price(i);
        double belief = prof.beliefs(i);
        double w = gain_from_trade(p, v, belief, price);
        double L = learn_value(p, v, w, atoms);
        StageOneDecision d1 = stage1(p, v, price, belief, atoms);
        switch (d1) {
            case StageOneDecision::Learn:
                if (!(w <= L && L >= 0.0)) return false;
                break;
            case StageOneDecision::Buy:
                if (!(w > std::max(0.0, L))) return false;
                break;
            case StageOneDecision::Leave:
                if (w > std::max(0.0, L) || (w <= L && L >= 0.0)) return false;
                break;
        }
        const OfferAtom& a = atoms[static_cast<std::size_t>(t) % atoms.size()];
        double wo = gain_from_trade(p, v, a.belief, a.price);
        StageTwoDecision d2 = stage2(p, v, price, belief, a.price, a.belief);
        switch (d2) {
            case StageTwoDecision::BuyAssigned:
                if (!(w >= std::max(0.0, wo))) return false;
                break;
            case StageTwoDecision::BuyOther:
                if (!(wo >= 0.0 && wo > w)) return false;
                break;
            case StageTwoDecision::Leave:
                if (w >= std::max(0.0, wo) || wo >= 0.0) return false;
                break;
        }
    }
    return true;
}

}  // namespace detail

// Full Definition-1 audit of a profile: profits on every support point,
// exhaustive deviation scan per type at stored beliefs, spot checks of the
// generated consumer behavior, and Bayes consistency (checked by
// require_valid).  Gaps <= tol_cmp certify the profile.
inline EquilibriumCertificate verify_pbe(const MarketParams& p, const Profile& prof,
                                         const VerifyOptions& opt = {}) {
    prof.require_valid(p);
    EquilibriumCertificate cert;
    cert.strategy = prof.strategy;
    cert.beliefs = prof.beliefs;
    cert.belief_fallback = opt.belief_fallback;

    auto atoms = offer_atoms(p, prof.strategy, prof.beliefs);
    auto on_path = detail::on_path_indices(prof.strategy);

    bool ok = true;
    for (int good = 1; good >= 0; --good) {
        bool good_type = good == 1;
        const PriceDistribution& own = good_type ? prof.strategy.good : prof.strategy.bad;
        // every support point must earn the same payoff; the headline profit
        // is the minimum so a dispersed support can only hurt the candidate
        double pi = std::numeric_limits<double>::infinity();
        double pi_top = -std::numeric_limits<double>::infinity();
        int pi_index = -1, pi_top_index = -1;
        double pi_demand = 0.0;
        for (const auto& [i, q] : own.atoms) {
            DemandInputs in{p.price(i), prof.beliefs(i), atoms, atoms, false};
            double d = compute_demand(p, in).total;
            double value = (p.price(i) - (good_type ? 0.0 : p.bad_cost())) * d;
            if (value < pi) {
                pi = value;
                pi_index = i;
                pi_demand = d;
            }
            if (value > pi_top) {
                pi_top = value;
                pi_top_index = i;
            }
        }
        // gap: best payoff among prices outside the type's own support, net
        // of the equilibrium profit (negative gap = strict slack)
        double best = -std::numeric_limits<double>::infinity();
        int best_index = -1;
        for (int j = 0; j <= p.n; ++j) {
            if (own.prob_at(j) > 0.0) continue;
            bool off = !detail::is_on_path(on_path, j);
            double alt = detail::deviation_payoff(p, good_type, j, atoms, prof.beliefs(j), off,
                                                  opt.belief_fallback);
            if (alt > best) {
                best = alt;
                best_index = j;
            }
        }
        double gap = best - pi;
        if (good_type) {
            cert.price_good = pi_index;
            cert.pi_good = pi;
            cert.demand_good = pi_demand;
            cert.gap_good = gap;
        } else {
            cert.price_bad = pi_index;
            cert.pi_bad = pi;
            cert.demand_bad = pi_demand;
            cert.gap_bad = gap;
        }
        if (pi_top - pi > p.tol.cmp && ok) {
            ok = false;
            cert.pbe_witness = pi_top_index;
            cert.pbe_witness_is_good = good_type;
        }
        if (gap > p.tol.cmp && ok) {
            ok = false;
            cert.pbe_witness = best_index;
            cert.pbe_witness_is_good = good_type;
        }
    }

    if (opt.spot_checks)
        cert.behavior_consistent = detail::spot_check_behavior(p, prof, opt.spot_samples);
    cert.pbe_pass = ok && cert.behavior_consistent;
    return cert;
}

struct BestResponse {
    std::vector<int> argmax;
    double value = 0.0;
};

// Exhaustive scan of all grid prices for one type against a fixed opponent;
// the belief at each own price is read from the supplied belief system.
inline BestResponse best_response(const MarketParams& p, bool good_type,
                                  const FirmStrategy& opponent, const BeliefSystem& beliefs) {
    auto atoms = offer_atoms(p, opponent, beliefs);
    BestResponse br;
    br.value = -std::numeric_limits<double>::infinity();
    std::vector<double> payoff(static_cast<std::size_t>(p.n) + 1);
    for (int j = 0; j <= p.n; ++j) {
        DemandInputs in{p.price(j), beliefs(j), atoms, atoms, false};
        double value = (p.price(j) - (good_type ? 0.0 : p.bad_cost())) * compute_demand(p, in).total;
        payoff[static_cast<std::size_t>(j)] = value;
        br.value = std::max(br.value, value);
    }
    for (int j = 0; j <= p.n; ++j)
        if (payoff[static_cast<std::size_t>(j)] >= br.value - p.tol.cmp) br.argmax.push_back(j);
    return br;
}

// Cho-Kreps refinement on an already-certified profile.  A type is
// equilibrium-dominated at an off-path price when even full credibility
// cannot recover its equilibrium profit; if exactly one type is dominated,
// the surviving type is awarded the matching extreme belief and must not
// strictly gain.
inline EquilibriumCertificate intuitive_criterion(const MarketParams& p,
                                                  EquilibriumCertificate cert) {
    if (!cert.pbe_pass) throw StructuralError("intuitive criterion requires a certified profile");
    cert.ic_applied = true;
    cert.ic_pass = true;
    cert.ic_witness = -1;
    cert.ic_gain = 0.0;

    auto atoms = offer_atoms(p, cert.strategy, cert.beliefs);
    auto on_path = detail::on_path_indices(cert.strategy);
    for (int j = 0; j <= p.n; ++j) {
        if (detail::is_on_path(on_path, j)) continue;
        DemandInputs in{p.price(j), 1.0, atoms, atoms, false};
        double d1 = compute_demand(p, in).total;
        double price = p.price(j);
        bool dom_bad = (price - p.bad_cost()) * d1 < cert.pi_bad - p.tol.cmp;
        bool dom_good = price * d1 < cert.pi_good - p.tol.cmp;
        if (price <= p.bad_cost() && cert.pi_bad > p.tol.cmp && !dom_bad)
            throw StructuralError("price at or below the bad cost failed to dominate the bad type");
        if (dom_bad && !dom_good) {
            double gain = price * d1 - cert.pi_good;
            if (gain > p.tol.cmp && gain > cert.ic_gain + p.tol.cmp) {
                cert.ic_pass = false;
                cert.ic_witness = j;
                cert.ic_gain = gain;
            }
        } else if (dom_good && !dom_bad) {
            DemandInputs in0{p.price(j), 0.0, atoms, atoms, false};
            double gain = (price - p.bad_cost()) * compute_demand(p, in0).total - cert.pi_bad;
            if (gain > p.tol.cmp && gain > cert.ic_gain + p.tol.cmp) {
                cert.ic_pass = false;
                cert.ic_witness = j;
                cert.ic_gain = gain;
            }
        }
    }
    return cert;
}

struct SearchOptions {
    int workers = 1;
    bool force_belief_fallback = false;
};

struct SearchResult {
    std::vector<EquilibriumCertificate> certificates;  // all PBE, with IC verdicts
    long n_candidates = 0;
    int n_pbe = 0;
    int n_ic = 0;
    bool belief_fallback = false;
};

namespace detail {

// Upper bounds on deviation payoffs: any buyer at price P values some offer
// at least P, so demand never exceeds 1 - F(h^-1(P)).
struct ScanPlan {
    std::vector<double> bound_good, bound_bad;
    std::vector<int> order_good, order_bad;
    int probe_good = -1, probe_bad = -1;  // single-firm optimal prices, tried early
};

inline int nearest_grid_index(const MarketParams& p, double price) {
    int j = static_cast<int>(std::lround(price / p.unit));
    return std::clamp(j, 0, p.n);
}

inline ScanPlan make_scan_plan(const MarketParams& p) {
    ScanPlan plan;
    plan.probe_good = nearest_grid_index(p, monopoly_price(p, 1.0, 0.0));
    plan.probe_bad = nearest_grid_index(p, monopoly_price(p, 0.0, p.bad_cost()));
    int count = p.n + 1;
    plan.bound_good.resize(count);
    plan.bound_bad.resize(count);
    for (int j = 0; j < count; ++j) {
        double reach = 1.0 - p.valuation.cdf(p.quality.h_inv_clamped(p.price(j), p.v_max()));
        plan.bound_good[static_cast<std::size_t>(j)] = p.price(j) * reach;
        plan.bound_bad[static_cast<std::size_t>(j)] = (p.price(j) - p.bad_cost()) * reach;
    }
    auto order_by = [&](const std::vector<double>& bound) {
        std::vector<int> order(count);
        for (int j = 0; j < count; ++j) order[static_cast<std::size_t>(j)] = j;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return bound[static_cast<std::size_t>(a)] > bound[static_cast<std::size_t>(b)];
        });
        return order;
    };
    plan.order_good = order_by(plan.bound_good);
    plan.order_bad = order_by(plan.bound_bad);
    return plan;
}

// Cheap PBE screen for a pure symmetric candidate: reject on the first
// profitable deviation.  Soundness does not depend on scan order; order only
// buys speed (undercuts and mimicry first, then bound-descending with an
// early break once no remaining bound clears the candidate profit).
inline bool fail_fast_pbe(const MarketParams& p, const ScanPlan& plan, int ig, int ib,
                          bool fallback) {
    bool pooled = ig == ib;
    std::vector<OfferAtom> atoms;
    if (pooled)
        atoms = {{p.price(ig), 1.0, p.mu0}};
    else
        atoms = {{p.price(ig), p.mu0, 1.0}, {p.price(ib), 1.0 - p.mu0, 0.0}};
    auto belief_at = [&](int j) {
        if (pooled) return j == ig ? p.mu0 : 0.0;
        if (j == ig) return 1.0;
        return 0.0;  // covers j == ib (bad on path) and everything off path
    };
    auto payoff = [&](bool good_type, int j) {
        double margin = p.price(j) - (good_type ? 0.0 : p.bad_cost());
        bool off = j != ig && j != ib;
        DemandInputs in{p.price(j), belief_at(j), atoms, atoms, false};
        if (off && fallback) {
            double at0 = margin * compute_demand(p, in).total;
            in.own_belief = 1.0;
            return std::min(at0, margin * compute_demand(p, in).total);
        }
        return margin * compute_demand(p, in).total;
    };

    double pi_good = payoff(true, ig);
    double pi_bad = payoff(false, ib);
    // the top grid price has zero demand, so a deviation worth exactly zero
    // always exists; negative-profit candidates can never be equilibria
    if (pi_bad < -p.tol.cmp || pi_good < -p.tol.cmp) return false;

    auto scan = [&](bool good_type, double pi, const std::vector<double>& bound,
                    const std::vector<int>& order, std::array<int, 3> first) {
        for (std::size_t t = 0; t < first.size(); ++t) {
            int j = first[t];
            bool seen = false;
            for (std::size_t s = 0; s < t; ++s) seen = seen || first[s] == j;
            if (j < 0 || seen) continue;
            if (payoff(good_type, j) > pi + p.tol.cmp) return false;
        }
        for (int j : order) {
            if (bound[static_cast<std::size_t>(j)] <= pi + p.tol.cmp) break;
            if (j == first[0] || j == first[1] || j == first[2]) continue;
            if (payoff(good_type, j) > pi + p.tol.cmp) return false;
        }
        return true;
    };

    if (!scan(false, pi_bad, plan.bound_bad, plan.order_bad,
              {ib > 0 ? ib - 1 : -1, pooled ? -1 : ig, plan.probe_bad}))
        return false;
    if (!scan(true, pi_good, plan.bound_good, plan.order_good,
              {ig > 0 ? ig - 1 : -1, plan.probe_good, -1}))
        return false;
    return true;
}

// The adversarial-belief screening relies on deviation demand rising with
// belief; probed here at a few profiles and prices before every search.
inline bool belief_monotonicity_holds(const MarketParams& p) {
    std::vector<Profile> probes;
    probes.push_back(guessed_equilibrium(p));
    Profile pool;
    pool.strategy = FirmStrategy::pure(p.k + 1, p.k + 1);
    pool.beliefs = beliefs_from_strategy(p, pool.strategy);
    probes.push_back(pool);
    int tests[] = {p.k / 2, p.k, p.k + 1, std::min(2 * p.k, p.n), p.n / 2};
    for (const Profile& prof : probes) {
        auto atoms = offer_atoms(p, prof.strategy, prof.beliefs);
        for (int j : tests) {
            double prev = -1.0;
            for (double mu : {0.0, 0.25, 0.5, 0.75, 1.0}) {
                DemandInputs in{p.price(j), mu, atoms, atoms, false};
                double d = compute_demand(p, in).total;
                if (d < prev - p.tol.cmp) return false;
                prev = d;
            }
        }
    }
    return true;
}

}  // namespace detail

// Enumerates every symmetric pure candidate (P_G <= P_B), screens each with
// the fail-fast scan under adversarial off-path beliefs, re-verifies the
// survivors exhaustively, and marks each with the refinement verdict.
// Certificates come back sorted by (P_G, P_B) regardless of worker count.
inline SearchResult find_equilibria(const MarketParams& p, const SearchOptions& opt = {}) {
    SearchResult result;
    detail::ScanPlan plan = detail::make_scan_plan(p);
    result.belief_fallback = opt.force_belief_fallback || !detail::belief_monotonicity_holds(p);

    std::vector<std::pair<int, int>> candidates;
    candidates.reserve(static_cast<std::size_t>(p.n + 1) * static_cast<std::size_t>(p.n + 2) / 2);
    for (int ig = 0; ig <= p.n; ++ig)
        for (int ib = ig; ib <= p.n; ++ib) candidates.emplace_back(ig, ib);
    result.n_candidates = static_cast<long>(candidates.size());

    std::vector<std::optional<EquilibriumCertificate>> slots(candidates.size());
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> aborted{false};
    std::exception_ptr error;
    std::mutex error_guard;
    auto work = [&]() {
        try {
            for (;;) {
                std::size_t id = cursor.fetch_add(1);
                if (id >= candidates.size() || aborted.load()) return;
                auto [ig, ib] = candidates[id];
                if (!detail::fail_fast_pbe(p, plan, ig, ib, result.belief_fallback)) continue;
                Profile prof;
                prof.strategy = FirmStrategy::pure(ig, ib);
                prof.beliefs = beliefs_from_strategy(p, prof.strategy, 0.0);
                VerifyOptions vo;
                vo.belief_fallback = result.belief_fallback;
                EquilibriumCertificate cert = verify_pbe(p, prof, vo);
                if (!cert.pbe_pass) continue;
                slots[id] = intuitive_criterion(p, cert);
            }
        } catch (...) {
            std::scoped_lock lock(error_guard);
            if (!error) error = std::current_exception();
            aborted.store(true);
        }
    };
    int workers = std::max(1, opt.workers);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    for (auto& slot : slots) {
        if (!slot) continue;
        result.n_pbe += 1;
        if (slot->ic_pass) result.n_ic += 1;
        result.certificates.push_back(std::move(*slot));
    }
    return result;
}

// Ordering facts of the one-sided deviation structure around the guessed
// profile: the good type never gains below its own price, the bad type's
// unique best response is one unit above the bad cost, and everything above
// that is strictly worse for the good type.
struct OrderingChecks {
    bool good_floor = true;    // no grid price below c_B beats c_B for G
    bool bad_unique = true;    // BR(B) == {c_B + m}
    bool good_ceiling = true;  // every price >= c_B + m strictly worse for G
};

inline OrderingChecks ordering_checks(const MarketParams& p) {
    OrderingChecks out;
    Profile prof = guessed_equilibrium(p);
    auto atoms = offer_atoms(p, prof.strategy, prof.beliefs);
    DemandInputs own{p.price(p.k), prof.beliefs(p.k), atoms, atoms, false};
    double pi_good = p.price(p.k) * compute_demand(p, own).total;
    for (int j = 0; j <= p.n; ++j) {
        if (j == p.k) continue;
        DemandInputs in{p.price(j), prof.beliefs(j), atoms, atoms, false};
        double alt = p.price(j) * compute_demand(p, in).total;
        if (j < p.k && alt > pi_good + p.tol.cmp) out.good_floor = false;
        if (j > p.k && alt >= pi_good - p.tol.cmp) out.good_ceiling = false;
    }
    BestResponse br = best_response(p, false, prof.strategy, prof.beliefs);
    out.bad_unique = br.argmax.size() == 1 && br.argmax.front() == p.k + 1;
    return out;
}

// Structural facts every accepted equilibrium should exhibit: demand
// ordering across types, strictly positive profits, a price served by the
// bad type alone at or above c_B + m, and no good-type price below c_B.
struct LemmaChecks {
    bool demand_ordering = false;
    bool profits_positive = false;
    bool bad_exclusive_price = false;
    bool good_floor = false;
};

inline LemmaChecks lemma_checks(const MarketParams& p, const EquilibriumCertificate& cert) {
    LemmaChecks out;
    out.demand_ordering = cert.demand_good >= cert.demand_bad - p.tol.cmp;
    out.profits_positive = cert.pi_good > p.tol.cmp && cert.pi_bad > p.tol.cmp;
    out.bad_exclusive_price = false;
    for (const auto& [i, q] : cert.strategy.bad.atoms) {
        if (cert.strategy.good.prob_at(i) > 0.0) continue;
        if (i >= p.k + 1 && cert.demand_bad > p.tol.cmp) out.bad_exclusive_price = true;
    }
    out.good_floor = true;
    for (const auto& [i, q] : cert.strategy.good.atoms)
        if (i < p.k) out.good_floor = false;
    return out;
}

}  // namespace pricesig

#endif
