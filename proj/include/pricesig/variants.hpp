#ifndef PRICESIG_VARIANTS_HPP
#define PRICESIG_VARIANTS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "equilibrium.hpp"

namespace pricesig {

// ---------------------------------------------------------------------------
// Observable types: consumers see each firm's type directly, so every offer
// (and every deviation) carries the indicator belief of its true type.  The
// candidate space is the full price square; the refinement has no bite and is
// never applied.
// ---------------------------------------------------------------------------

struct ObservableCertificate {
    int price_good = -1, price_bad = -1;
    double pi_good = 0.0, pi_bad = 0.0;
    double demand_good = 0.0, demand_bad = 0.0;
    double gap_good = 0.0, gap_bad = 0.0;
};

struct ObservableResult {
    std::vector<ObservableCertificate> certificates;
    long n_candidates = 0;
    int n_pbe = 0;
};

// Price floor for a visible good type: it never sells below the smaller of
// its single-firm optimum and the quality value at the bad entry price, less
// one grid unit.
inline double observable_good_floor(const MarketParams& p) {
    return std::min(monopoly_price(p, 1.0, 0.0), p.quality.h(p.bad_cost_plus()) - p.unit);
}

namespace detail {

inline std::optional<ObservableCertificate> observable_evaluate(const MarketParams& p,
                                                                const ScanPlan& plan, int ig,
                                                                int ib, bool exhaustive_gaps) {
    std::vector<OfferAtom> atoms{{p.price(ig), p.mu0, 1.0}, {p.price(ib), 1.0 - p.mu0, 0.0}};
    auto payoff = [&](bool good_type, int j) {
        double margin = p.price(j) - (good_type ? 0.0 : p.bad_cost());
        DemandInputs in{p.price(j), good_type ? 1.0 : 0.0, atoms, atoms, false};
        return margin * compute_demand(p, in).total;
    };

    ObservableCertificate cert;
    cert.price_good = ig;
    cert.price_bad = ib;
    {
        DemandInputs in{p.price(ig), 1.0, atoms, atoms, false};
        cert.demand_good = compute_demand(p, in).total;
        cert.pi_good = p.price(ig) * cert.demand_good;
    }
    {
        DemandInputs in{p.price(ib), 0.0, atoms, atoms, false};
        cert.demand_bad = compute_demand(p, in).total;
        cert.pi_bad = (p.price(ib) - p.bad_cost()) * cert.demand_bad;
    }
    if (cert.pi_bad < -p.tol.cmp || cert.pi_good < -p.tol.cmp) return std::nullopt;

    auto scan = [&](bool good_type, int own, double pi, const std::vector<double>& bound,
                    const std::vector<int>& order, int probe) {
        int undercut = own > 0 ? own - 1 : -1;
        if (undercut >= 0 && payoff(good_type, undercut) > pi + p.tol.cmp) return false;
        if (probe >= 0 && probe != undercut && payoff(good_type, probe) > pi + p.tol.cmp)
            return false;
        for (int j : order) {
            if (bound[static_cast<std::size_t>(j)] <= pi + p.tol.cmp) break;
            if (j == own || j == undercut || j == probe) continue;
            if (payoff(good_type, j) > pi + p.tol.cmp) return false;
        }
        return true;
    };
    if (!scan(false, ib, cert.pi_bad, plan.bound_bad, plan.order_bad, plan.probe_bad))
        return std::nullopt;
    if (!scan(true, ig, cert.pi_good, plan.bound_good, plan.order_good, plan.probe_good))
        return std::nullopt;

    if (exhaustive_gaps) {
        for (int good = 0; good < 2; ++good) {
            bool good_type = good == 1;
            int own = good_type ? ig : ib;
            double pi = good_type ? cert.pi_good : cert.pi_bad;
            double best = -std::numeric_limits<double>::infinity();
            for (int j = 0; j <= p.n; ++j) {
                if (j == own) continue;
                best = std::max(best, payoff(good_type, j));
            }
            (good_type ? cert.gap_good : cert.gap_bad) = best - pi;
        }
    }
    return cert;
}

}  // namespace detail

inline ObservableResult observable_equilibria(const MarketParams& p,
                                              const SearchOptions& opt = {}) {
    ObservableResult result;
    detail::ScanPlan plan = detail::make_scan_plan(p);
    long side = static_cast<long>(p.n) + 1;
    result.n_candidates = side * side;

    std::vector<std::optional<ObservableCertificate>> slots(
        static_cast<std::size_t>(result.n_candidates));
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> aborted{false};
    std::exception_ptr error;
    std::mutex error_guard;
    auto work = [&]() {
        try {
            for (;;) {
                std::size_t id = cursor.fetch_add(1);
                if (id >= slots.size() || aborted.load()) return;
                int ig = static_cast<int>(id / static_cast<std::size_t>(side));
                int ib = static_cast<int>(id % static_cast<std::size_t>(side));
                slots[id] = detail::observable_evaluate(p, plan, ig, ib, true);
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

    for (auto& slot : slots)
        if (slot) {
            result.n_pbe += 1;
            result.certificates.push_back(*slot);
        }
    return result;
}

// ---------------------------------------------------------------------------
// Single-type baseline: every firm shares one commonly known type, so search
// is the only friction.  Candidates are single prices; the survivor should be
// the single-firm optimum for that type.
// ---------------------------------------------------------------------------

struct DiamondCertificate {
    int price_index = -1;
    double profit_value = 0.0;
    double demand_value = 0.0;
    double gap = 0.0;
};

struct DiamondResult {
    std::vector<DiamondCertificate> certificates;
    long n_candidates = 0;
    int n_pbe = 0;
};

inline DiamondResult diamond_baseline(const MarketParams& p, bool good_type,
                                      const SearchOptions& opt = {}) {
    (void)opt;  // the one-dimensional scan is cheap enough single-threaded
    DiamondResult result;
    result.n_candidates = static_cast<long>(p.n) + 1;
    double belief = good_type ? 1.0 : 0.0;
    double cost = p.cost_of(good_type);
    detail::ScanPlan plan = detail::make_scan_plan(p);
    const std::vector<double>& bound = good_type ? plan.bound_good : plan.bound_bad;
    const std::vector<int>& order = good_type ? plan.order_good : plan.order_bad;
    int probe = good_type ? plan.probe_good : plan.probe_bad;

    for (int i = 0; i <= p.n; ++i) {
        std::vector<OfferAtom> atoms{{p.price(i), 1.0, belief}};
        auto payoff = [&](int j) {
            DemandInputs in{p.price(j), belief, atoms, atoms, false};
            return (p.price(j) - cost) * compute_demand(p, in).total;
        };
        DiamondCertificate cert;
        cert.price_index = i;
        {
            DemandInputs in{p.price(i), belief, atoms, atoms, false};
            cert.demand_value = compute_demand(p, in).total;
            cert.profit_value = (p.price(i) - cost) * cert.demand_value;
        }
        if (cert.profit_value < -p.tol.cmp) continue;

        bool pass = true;
        int up = i < p.n ? i + 1 : -1;  // a one-unit raise is the classic killer
        if (up >= 0 && payoff(up) > cert.profit_value + p.tol.cmp) pass = false;
        if (pass && probe >= 0 && probe != up && probe != i &&
            payoff(probe) > cert.profit_value + p.tol.cmp)
            pass = false;
        if (pass)
            for (int j : order) {
                if (bound[static_cast<std::size_t>(j)] <= cert.profit_value + p.tol.cmp) break;
                if (j == i || j == up || j == probe) continue;
                if (payoff(j) > cert.profit_value + p.tol.cmp) {
                    pass = false;
                    break;
                }
            }
        if (!pass) continue;

        double best = -std::numeric_limits<double>::infinity();
        for (int j = 0; j <= p.n; ++j) {
            if (j == i) continue;
            best = std::max(best, payoff(j));
        }
        cert.gap = best - cert.profit_value;
        result.n_pbe += 1;
        result.certificates.push_back(cert);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Low-monopoly variant: same signalling search, intended for markets where
// the single-firm profit of the good type peaks at or below the bad cost
// (the monotonicity validation check is demoted to a warning by callers).
// ---------------------------------------------------------------------------

inline SearchResult low_monopoly_variant(const MarketParams& p, const SearchOptions& opt = {}) {
    return find_equilibria(p, opt);
}

// Predicted good-type price: its single-firm optimum, capped at the bad cost.
inline int low_monopoly_good_price(const MarketParams& p) {
    return std::min(detail::nearest_grid_index(p, monopoly_price(p, 1.0, 0.0)), p.k);
}

inline int low_monopoly_bad_price(const MarketParams& p) { return p.k + 1; }

}  // namespace pricesig

#endif
