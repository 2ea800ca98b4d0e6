#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include <pricesig/market.hpp>

#include "support/random_params.hpp"

using namespace pricesig;

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

// Independent of the engine: raw formula on a 1e6-point grid, no refinement.
double m_star_brute(const MarketParams& p) {
    double lo = p.bad_cost();
    double hi = p.mu0 * p.quality.h(p.v_max()) + (1.0 - p.mu0) * p.v_max() - p.unit;
    double slope = p.mu0 * p.quality.slope() + (1.0 - p.mu0);
    double best = std::numeric_limits<double>::infinity();
    const int grid = 1000000;
    for (int i = 0; i <= grid; ++i) {
        double x = lo + (hi - lo) * static_cast<double>(i) / grid;
        double v_prior = std::clamp((x - p.mu0 * p.quality.intercept()) / slope, 0.0, p.v_max());
        double numer = 1.0 - p.valuation.cdf(p.quality.h_inv_clamped(x, p.v_max()));
        double denom = 1.0 - p.valuation.cdf(v_prior);
        best = std::min(best, x * (numer / denom - 1.0));
    }
    return best;
}

}  // namespace

TEST_CASE("base config passes every validation check") {
    MarketParams p = base_config();
    ValidationReport rep = validate(p);
    CAPTURE(rep.first_failure());
    REQUIRE(rep.all_pass());

    const char* expected_names[] = {
        "mu0_in_unit_interval",     "bad_cost_positive",
        "v_max_above_bad_cost",     "bad_cost_covers_quality_floor",
        "grid_covers_quality_range", "learn_cost_bound",
        "unit_small",               "monopoly_profit_increasing",
        "quality_dominates_identity", "unit_below_m_star",
    };
    REQUIRE(rep.checks.size() == 10);
    for (std::size_t i = 0; i < rep.checks.size(); ++i) CHECK(rep.checks[i].name == expected_names[i]);

    CHECK(rep.m_star_value == Catch::Approx(0.2 / 19.0).epsilon(1e-9));
    CHECK(rep.monopoly_price_good == Catch::Approx(1.6).margin(1e-9));
}

TEST_CASE("validate is idempotent") {
    MarketParams p = base_config();
    ValidationReport a = validate(p);
    ValidationReport b = validate(p);
    REQUIRE(a.checks.size() == b.checks.size());
    for (std::size_t i = 0; i < a.checks.size(); ++i) {
        CHECK(a.checks[i].name == b.checks[i].name);
        CHECK(a.checks[i].pass == b.checks[i].pass);
        CHECK(a.checks[i].lhs == b.checks[i].lhs);
        CHECK(a.checks[i].rhs == b.checks[i].rhs);
    }
    CHECK(a.m_star_value == b.m_star_value);
    CHECK(a.monopoly_price_good == b.monopoly_price_good);
}

TEST_CASE("doubling the unit breaks only the m < m* bound") {
    MarketParams p = base_config();
    p.unit = 0.02;
    p.k = 10;   // same bad cost 0.2
    p.n = 160;  // same top price 3.2
    ValidationReport rep = validate(p);
    REQUIRE_FALSE(rep.all_pass());
    CHECK(rep.first_failure() == "unit_below_m_star");
    const ValidationCheck* c = rep.find("unit_below_m_star");
    REQUIRE(c != nullptr);
    CHECK_FALSE(c->pass);
    CHECK(c->rhs == Catch::Approx(0.2 / 19.0).epsilon(1e-9));
    // every other check still passes
    for (const auto& chk : rep.checks)
        if (chk.name != "unit_below_m_star") CHECK(chk.pass);
}

TEST_CASE("oversized learning cost fails its bound") {
    MarketParams p = base_config();
    p.learn_cost = 0.4;
    ValidationReport rep = validate(p);
    const ValidationCheck* c = rep.find("learn_cost_bound");
    REQUIRE(c != nullptr);
    CHECK_FALSE(c->pass);
    CHECK(c->rhs == Catch::Approx(0.315).margin(1e-12));
    CHECK_FALSE(rep.all_pass());
}

TEST_CASE("syntactically broken fields are rejected by name") {
    MarketParams p = base_config();
    p.unit = -0.01;
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
    CHECK_THROWS_WITH(validate(p), Catch::Matchers::ContainsSubstring("unit"));

    MarketParams q = base_config();
    q.k = 400;  // exceeds n
    CHECK_THROWS_AS(validate(q), std::invalid_argument);

    MarketParams r = base_config();
    r.mu0 = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH(validate(r), Catch::Matchers::ContainsSubstring("mu0"));
}

TEST_CASE("v_of_x matches hand-solved points") {
    MarketParams p = base_config();
    CHECK(v_of_x(p, 0.2) == Catch::Approx(0.05).margin(1e-12));
    CHECK(v_of_x(p, 0.1) == Catch::Approx(0.0).margin(1e-12));   // lower endpoint mu0*h(0)
    CHECK(v_of_x(p, 2.1) == Catch::Approx(1.0).margin(1e-12));   // upper endpoint
    CHECK_THROWS_AS(v_of_x(p, 0.05), DomainError);
    CHECK_THROWS_AS(v_of_x(p, 2.2), DomainError);
}

TEST_CASE("v_of_x is monotone and inverts the prior-belief value map") {
    MarketParams p = base_config();
    double prev = -1.0;
    for (int i = 0; i <= 50; ++i) {
        double x = 0.1 + (2.1 - 0.1) * static_cast<double>(i) / 50;
        double v = v_of_x(p, x);
        double recon = p.mu0 * p.quality.h(v) + (1.0 - p.mu0) * v;
        CHECK(std::abs(recon - x) <= p.tol.root);
        if (i > 0) CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("m_star matches closed-form boundary values") {
    MarketParams p = base_config();
    CHECK(m_star(p) == Catch::Approx(0.2 / 19.0).epsilon(1e-6));

    MarketParams q = base_config();
    q.quality = Quality(0.05, 1.5);
    q.k = 5;    // bad cost 0.05
    q.n = 155;  // covers h(1) = 1.55
    CHECK(m_star(q) == Catch::Approx(0.001 / 0.98).epsilon(1e-6));
}

TEST_CASE("m_star agrees with a brute-force oracle on random valid sets") {
    testing::ParamSampler sampler(20260815u);
    for (int i = 0; i < 20; ++i) {
        MarketParams p = sampler.next();
        CAPTURE(i, p.mu0, p.unit, p.k, p.n, p.learn_cost, p.valuation.describe(),
                p.quality.intercept(), p.quality.slope());
        double engine = m_star(p);
        double oracle = m_star_brute(p);
        CHECK(engine > 0.0);
        CHECK(std::abs(engine - oracle) <= 1e-5 * std::max(std::abs(oracle), 1e-12));
    }
}

TEST_CASE("monopoly prices for the base config") {
    MarketParams p = base_config();
    CHECK(monopoly_price(p, 1.0, 0.0) == Catch::Approx(1.6).margin(1e-9));
    CHECK(monopoly_price(p, 0.0, p.bad_cost()) == Catch::Approx(0.6).margin(1e-9));
    CHECK(monopoly_price(p, 1.0, p.bad_cost()) == Catch::Approx(1.7).margin(1e-9));
    CHECK_THROWS_AS(monopoly_price(p, 1.5, 0.0), DomainError);
}

TEST_CASE("monopoly price ties break toward the lower price") {
    MarketParams p = base_config();
    // With cost = one unit and uniform valuations, (P - 0.01)(1 - P) is
    // symmetric around 0.505, so 0.50 and 0.51 tie; the lower must win.
    CHECK(monopoly_price(p, 0.0, 0.01) == Catch::Approx(0.50).margin(1e-9));
}

TEST_CASE("good-type monopoly price clears the bad cost when profit is increasing there") {
    MarketParams p = base_config();
    ValidationReport rep = validate(p);
    REQUIRE(rep.find("monopoly_profit_increasing")->pass);
    CHECK(monopoly_price(p, 1.0, 0.0) >= p.bad_cost_plus() - 1e-12);

    testing::ParamSampler sampler(777u);
    for (int i = 0; i < 5; ++i) {
        MarketParams q = sampler.next();
        ValidationReport r = validate(q);
        if (r.find("monopoly_profit_increasing")->pass)
            CHECK(monopoly_price(q, 1.0, 0.0) >= q.bad_cost_plus() - 1e-12);
    }
}
