#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <optional>

#include "pricesig/equilibrium.hpp"
#include "support/random_params.hpp"

using namespace pricesig;
using Catch::Approx;

namespace {

MarketParams base_config() {
    MarketParams p;
    p.mu0 = 0.5;
    p.unit = 0.01;
    p.k = 20;
    p.n = 320;
    p.learn_cost = 0.05;
    p.valuation = Valuation::uniform(1.0);
    p.quality = Quality(0.2, 3.0);
    return p;
}

MarketParams fast_config() {
    MarketParams p;
    p.mu0 = 0.5;
    p.unit = 0.01;
    p.k = 20;
    p.n = 215;
    p.learn_cost = 0.06;
    p.valuation = Valuation::uniform(1.0);
    p.quality = Quality(0.15, 2.0);
    return p;
}

const SearchResult& base_search() {
    static const SearchResult r = find_equilibria(base_config());
    return r;
}

std::optional<EquilibriumCertificate> find_candidate(const SearchResult& r, int ig, int ib) {
    for (const auto& c : r.certificates)
        if (c.strategy.good.pure_index() == ig && c.strategy.bad.pure_index() == ib) return c;
    return std::nullopt;
}

}  // namespace

TEST_CASE("guessed profile has the documented shape") {
    MarketParams p = base_config();
    Profile g = guessed_equilibrium(p);
    REQUIRE(g.strategy.good.pure_index() == 20);
    REQUIRE(g.strategy.bad.pure_index() == 21);
    for (int i = 0; i <= p.n; ++i) REQUIRE(g.beliefs(i) == (i <= 20 ? 1.0 : 0.0));
    REQUIRE_NOTHROW(g.require_valid(p));
}

TEST_CASE("profiles with inconsistent stored beliefs are rejected") {
    MarketParams p = base_config();
    Profile g = guessed_equilibrium(p);
    g.beliefs.at[20] = 0.7;  // on-path price of the good type must carry belief 1
    REQUIRE_THROWS_AS(g.require_valid(p), StructuralError);
    REQUIRE_THROWS_AS(verify_pbe(p, g), StructuralError);

    Profile short_beliefs = guessed_equilibrium(p);
    short_beliefs.beliefs.at.pop_back();
    REQUIRE_THROWS_AS(short_beliefs.require_valid(p), StructuralError);
}

TEST_CASE("guessed profile is certified with strict slack") {
    MarketParams p = base_config();
    EquilibriumCertificate cert = verify_pbe(p, guessed_equilibrium(p));
    REQUIRE(cert.pbe_pass);
    REQUIRE(cert.behavior_consistent);
    REQUIRE(cert.pbe_witness == -1);
    REQUIRE_FALSE(cert.ic_applied);
    REQUIRE(cert.price_good == 20);
    REQUIRE(cert.price_bad == 21);
    REQUIRE(cert.pi_good == Approx(89.0 / 600.0).margin(1e-9));
    REQUIRE(cert.pi_bad == Approx(0.001975).margin(1e-9));
    REQUIRE(cert.demand_good == Approx(89.0 / 120.0).margin(1e-9));
    REQUIRE(cert.demand_bad == Approx(0.1975).margin(1e-9));
    // best alternative for the good type is one unit below its price, at full
    // credibility, and still loses money relative to the equilibrium
    REQUIRE(cert.gap_good == Approx(-0.0074166667).margin(1e-9));
    // best alternative for the bad type earns exactly zero
    REQUIRE(cert.gap_bad == Approx(-0.001975).margin(1e-9));
}

TEST_CASE("best responses around the guessed profile are unique") {
    MarketParams p = base_config();
    Profile g = guessed_equilibrium(p);

    BestResponse bad = best_response(p, false, g.strategy, g.beliefs);
    REQUIRE(bad.argmax.size() == 1);
    REQUIRE(bad.argmax.front() == 21);
    REQUIRE(bad.value == Approx(0.001975).margin(1e-9));

    BestResponse good = best_response(p, true, g.strategy, g.beliefs);
    REQUIRE(good.argmax.size() == 1);
    REQUIRE(good.argmax.front() == 20);
    REQUIRE(good.value == Approx(89.0 / 600.0).margin(1e-9));
}

TEST_CASE("best responses collapse to single-firm pricing against a dead rival") {
    MarketParams p = base_config();
    Profile dead;
    dead.strategy = FirmStrategy::pure(p.n, p.n);  // rival priced above any valuation
    dead.beliefs.at.assign(static_cast<std::size_t>(p.n) + 1, 1.0);

    BestResponse good = best_response(p, true, dead.strategy, dead.beliefs);
    REQUIRE(good.argmax.size() == 1);
    REQUIRE(good.argmax.front() == 160);
    REQUIRE(good.value == Approx(0.4266666667).margin(1e-9));

    BestResponse bad = best_response(p, false, dead.strategy, dead.beliefs);
    REQUIRE(bad.argmax.size() == 1);
    REQUIRE(bad.argmax.front() == 170);
    REQUIRE(bad.value == Approx(0.375).margin(1e-9));
}

TEST_CASE("overpriced bad type is caught undercutting its own price") {
    MarketParams p = base_config();
    Profile prof;
    prof.strategy = FirmStrategy::pure(20, 30);
    prof.beliefs.at.assign(static_cast<std::size_t>(p.n) + 1, 0.0);
    for (int i = 0; i <= 20; ++i) prof.beliefs.at[static_cast<std::size_t>(i)] = 1.0;

    EquilibriumCertificate cert = verify_pbe(p, prof);
    REQUIRE_FALSE(cert.pbe_pass);
    REQUIRE(cert.pbe_witness == 29);
    REQUIRE_FALSE(cert.pbe_witness_is_good);
    REQUIRE(cert.pi_bad == Approx(0.0175).margin(1e-9));
    REQUIRE(cert.gap_bad == Approx(0.014450).margin(1e-9));
    REQUIRE(cert.gap_good < 0.0);

    // witness soundness: replaying the flagged deviation beats the profile
    double margin = p.price(cert.pbe_witness) - p.bad_cost();
    DemandReport dev =
        deviation_demand(p, cert.pbe_witness, prof.beliefs(cert.pbe_witness), prof.strategy,
                         prof.beliefs);
    REQUIRE(margin * dev.total > cert.pi_bad + p.tol.cmp);

    REQUIRE_THROWS_AS(intuitive_criterion(p, cert), StructuralError);
}

TEST_CASE("pooling one unit above cost is a PBE but fails the refinement") {
    MarketParams p = base_config();
    Profile pool;
    pool.strategy = FirmStrategy::pure(21, 21);
    pool.beliefs = beliefs_from_strategy(p, pool.strategy);
    REQUIRE(pool.beliefs(21) == Approx(0.5).margin(1e-15));

    EquilibriumCertificate cert = verify_pbe(p, pool);
    REQUIRE(cert.pbe_pass);
    REQUIRE(cert.pi_good == Approx(0.099225).margin(1e-9));
    REQUIRE(cert.pi_bad == Approx(0.004725).margin(1e-9));
    REQUIRE(cert.demand_good == Approx(0.4725).margin(1e-9));

    cert = intuitive_criterion(p, cert);
    REQUIRE(cert.ic_applied);
    REQUIRE_FALSE(cert.ic_pass);
    // only the good type can afford one unit below the pool; at full
    // credibility it gains 0.1 - 0.099225 there
    REQUIRE(cert.ic_witness == 20);
    REQUIRE(cert.ic_gain == Approx(0.000775).margin(1e-9));
}

TEST_CASE("grid search finds the signalling equilibrium and its corner twins") {
    MarketParams p = base_config();
    const SearchResult& r = base_search();

    REQUIRE(r.n_candidates == 51681);
    REQUIRE(r.n_pbe == 182);
    REQUIRE(r.n_ic == 3);
    REQUIRE_FALSE(r.belief_fallback);
    REQUIRE(r.certificates.size() == 182);

    REQUIRE(std::is_sorted(r.certificates.begin(), r.certificates.end(),
                           [](const EquilibriumCertificate& a, const EquilibriumCertificate& b) {
                               int ag = a.strategy.good.pure_index();
                               int bg = b.strategy.good.pure_index();
                               if (ag != bg) return ag < bg;
                               return a.strategy.bad.pure_index() < b.strategy.bad.pure_index();
                           }));

    std::vector<std::pair<int, int>> survivors;
    for (const auto& c : r.certificates) {
        REQUIRE(c.pbe_pass);
        REQUIRE(c.ic_applied);
        if (c.ic_pass)
            survivors.emplace_back(c.strategy.good.pure_index(), c.strategy.bad.pure_index());
    }
    REQUIRE(survivors ==
            std::vector<std::pair<int, int>>{{19, 20}, {20, 20}, {20, 21}});

    SECTION("the signalling equilibrium matches its hand-derived certificate") {
        auto c = find_candidate(r, 20, 21);
        REQUIRE(c);
        REQUIRE(c->ic_pass);
        REQUIRE(c->pi_good == Approx(89.0 / 600.0).margin(1e-9));
        REQUIRE(c->pi_bad == Approx(0.001975).margin(1e-9));
        REQUIRE(c->demand_good == Approx(89.0 / 120.0).margin(1e-9));
        REQUIRE(c->demand_bad == Approx(0.1975).margin(1e-9));
        LemmaChecks lem = lemma_checks(p, *c);
        REQUIRE(lem.demand_ordering);
        REQUIRE(lem.profits_positive);
        REQUIRE(lem.bad_exclusive_price);
        REQUIRE(lem.good_floor);
    }

    SECTION("the corner twins carry zero bad-type profit and fail the lemma facts") {
        auto corner = find_candidate(r, 19, 20);
        REQUIRE(corner);
        REQUIRE(corner->ic_pass);
        REQUIRE(corner->pi_bad == 0.0);
        REQUIRE(corner->demand_bad == Approx(0.2).margin(1e-9));
        LemmaChecks lem = lemma_checks(p, *corner);
        REQUIRE(lem.demand_ordering);
        REQUIRE_FALSE(lem.profits_positive);
        REQUIRE_FALSE(lem.bad_exclusive_price);
        REQUIRE_FALSE(lem.good_floor);

        auto knife = find_candidate(r, 20, 20);
        REQUIRE(knife);
        REQUIRE(knife->ic_pass);
        REQUIRE(knife->pi_bad == 0.0);
        REQUIRE(knife->pi_good == Approx(0.095).margin(1e-9));
        REQUIRE(knife->demand_good == Approx(0.475).margin(1e-9));
        LemmaChecks lem2 = lemma_checks(p, *knife);
        REQUIRE_FALSE(lem2.profits_positive);
        REQUIRE(lem2.good_floor);
    }

    SECTION("the documented pooling equilibrium appears with its witness") {
        auto pool = find_candidate(r, 21, 21);
        REQUIRE(pool);
        REQUIRE_FALSE(pool->ic_pass);
        REQUIRE(pool->ic_witness == 20);
        REQUIRE(pool->ic_gain == Approx(0.000775).margin(1e-9));
    }

    SECTION("the PBE family boundaries sit where the capture analysis puts them") {
        REQUIRE(find_candidate(r, 11, 20));
        REQUIRE_FALSE(find_candidate(r, 10, 20));
        REQUIRE(find_candidate(r, 11, 21));
        REQUIRE_FALSE(find_candidate(r, 10, 21));
        REQUIRE(find_candidate(r, 182, 182));
        REQUIRE_FALSE(find_candidate(r, 183, 183));
        REQUIRE_FALSE(find_candidate(r, 20, 22));
        REQUIRE_FALSE(find_candidate(r, 21, 22));
    }
}

TEST_CASE("search results are identical for any worker count") {
    const SearchResult& one = base_search();
    SearchOptions opt;
    opt.workers = 4;
    SearchResult four = find_equilibria(base_config(), opt);

    REQUIRE(four.n_candidates == one.n_candidates);
    REQUIRE(four.n_pbe == one.n_pbe);
    REQUIRE(four.n_ic == one.n_ic);
    REQUIRE(four.certificates.size() == one.certificates.size());
    for (std::size_t i = 0; i < one.certificates.size(); ++i) {
        const auto& a = one.certificates[i];
        const auto& b = four.certificates[i];
        REQUIRE(a.strategy.good.pure_index() == b.strategy.good.pure_index());
        REQUIRE(a.strategy.bad.pure_index() == b.strategy.bad.pure_index());
        REQUIRE(a.pi_good == b.pi_good);
        REQUIRE(a.pi_bad == b.pi_bad);
        REQUIRE(a.gap_good == b.gap_good);
        REQUIRE(a.gap_bad == b.gap_bad);
        REQUIRE(a.demand_good == b.demand_good);
        REQUIRE(a.demand_bad == b.demand_bad);
        REQUIRE(a.ic_pass == b.ic_pass);
        REQUIRE(a.ic_witness == b.ic_witness);
        REQUIRE(a.ic_gain == b.ic_gain);
    }
}

TEST_CASE("forced belief fallback reproduces the fast-config verdicts") {
    MarketParams p = fast_config();
    SearchResult plain = find_equilibria(p);
    REQUIRE(plain.n_candidates == 23436);
    REQUIRE(plain.n_pbe == 128);
    REQUIRE(plain.n_ic == 2);
    REQUIRE_FALSE(plain.belief_fallback);

    SearchOptions opt;
    opt.force_belief_fallback = true;
    SearchResult forced = find_equilibria(p, opt);
    REQUIRE(forced.belief_fallback);
    REQUIRE(forced.n_pbe == 128);
    REQUIRE(forced.n_ic == 2);

    auto prices = [](const SearchResult& r) {
        std::vector<std::pair<int, int>> out;
        for (const auto& c : r.certificates)
            if (c.ic_pass)
                out.emplace_back(c.strategy.good.pure_index(), c.strategy.bad.pure_index());
        return out;
    };
    std::vector<std::pair<int, int>> expected{{19, 20}, {20, 21}};
    REQUIRE(prices(plain) == expected);
    REQUIRE(prices(forced) == expected);

    auto guess = find_candidate(plain, 20, 21);
    REQUIRE(guess);
    REQUIRE(guess->pi_good == Approx(0.14325).margin(1e-9));
    REQUIRE(guess->demand_good == Approx(0.71625).margin(1e-9));
    REQUIRE(guess->pi_bad == Approx(0.001975).margin(1e-9));

    // the pool at the bad cost is killed here, unlike the base config
    auto pool = find_candidate(plain, 20, 20);
    REQUIRE(pool);
    REQUIRE_FALSE(pool->ic_pass);
    REQUIRE(pool->ic_witness == 19);
    REQUIRE(pool->ic_gain == Approx(0.0014333333).margin(1e-9));
}

TEST_CASE("one-sided ordering holds around the guessed profile") {
    OrderingChecks oc = ordering_checks(base_config());
    REQUIRE(oc.good_floor);
    REQUIRE(oc.bad_unique);
    REQUIRE(oc.good_ceiling);
}

TEST_CASE("guessed profile certifies across sampled parameter sets") {
    testing::ParamSampler sampler(424242u);
    for (int s = 0; s < 3; ++s) {
        MarketParams p = sampler.next();
        EquilibriumCertificate cert = verify_pbe(p, guessed_equilibrium(p));
        INFO("sampled set " << s);
        REQUIRE(cert.pbe_pass);
        REQUIRE(cert.gap_good < 0.0);
        REQUIRE(cert.gap_bad < 0.0);
        OrderingChecks oc = ordering_checks(p);
        REQUIRE(oc.good_floor);
        REQUIRE(oc.bad_unique);
        REQUIRE(oc.good_ceiling);
    }
}
