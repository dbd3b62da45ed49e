#include <doctest.h>

#include <cmath>
#include <vector>

#include "kelly/distribution.hpp"
#include "kelly/errors.hpp"
#include "kelly/oracle.hpp"
#include "support/fixtures.hpp"
#include "support/market_gen.hpp"

using namespace kelly;
using namespace kelly::testing;

TEST_CASE("event payout law reads off wagers and merges equal values") {
    Event e = make_event("E", {0.6, 0.4}, {0.5, 0.55});
    PayoutDistribution d = event_payout_distribution(e, std::vector<double>{0.4, 0.0});
    CHECK(d.values == std::vector<double>{0.0, 0.4});
    CHECK(d.probs == std::vector<double>{0.4, 0.6});

    PayoutDistribution degenerate = event_payout_distribution(e, std::vector<double>{0.0, 0.0});
    CHECK(degenerate.values == std::vector<double>{0.0});
    CHECK(degenerate.probs == std::vector<double>{1.0});

    Event three = make_event("E", {0.5, 0.3, 0.2}, {0.4, 0.4, 0.4});
    PayoutDistribution merged =
        event_payout_distribution(three, std::vector<double>{0.2, 0.2, 0.0});
    CHECK(merged.values == std::vector<double>{0.0, 0.2});
    CHECK(merged.probs == std::vector<double>{0.2, 0.8});
}

TEST_CASE("convolution identity, exact merge and atom budget") {
    PayoutDistribution unit{{0.0}, {1.0}};
    PayoutDistribution d{{0.0, 0.4}, {0.4, 0.6}};
    PayoutDistribution same = convolve(unit, d);
    CHECK(same.values == d.values);
    CHECK(same.probs == d.probs);

    PayoutDistribution sq = convolve(d, d);
    CHECK(sq.values == std::vector<double>{0.0, 0.4, 0.8});
    REQUIRE(sq.probs.size() == 3);
    CHECK(sq.probs[0] == doctest::Approx(0.16).epsilon(1e-15));
    CHECK(sq.probs[1] == doctest::Approx(0.48).epsilon(1e-15));
    CHECK(sq.probs[2] == doctest::Approx(0.36).epsilon(1e-15));

    CHECK_THROWS_AS(convolve(d, d, 3), Error);
}

TEST_CASE("three-event convolution matches direct product-state enumeration") {
    Rng rng(kMarketGenSeed + 21);
    Market market = make_market({random_event(rng, "a"), random_event(rng, "b"),
                                 random_event(rng, "c")});
    Portfolio pf = random_feasible_portfolio(market, rng);

    PayoutDistribution total{{0.0}, {1.0}};
    for (std::size_t l = 0; l < market.events.size(); ++l) {
        total = convolve(total, event_payout_distribution(market.events[l], pf.wagers[l]));
    }
    double prob_sum = 0.0;
    for (double p : total.probs) {
        prob_sum += p;
    }
    CHECK(prob_sum == doctest::Approx(1.0).epsilon(1e-13));
    for (std::size_t i = 1; i < total.values.size(); ++i) {
        CHECK(total.values[i] > total.values[i - 1]);
    }

    for (const auto& u : {UtilitySpec::log(), UtilitySpec::crra(3.0), UtilitySpec::neg_exp(1.0)}) {
        double conv = expected_marginal(total, pf.cash, u);
        double enumd = enumerate_expected_marginal(market, pf, u);
        CHECK(std::abs(conv - enumd) <= 1e-13 * std::abs(enumd));
        double conv_obj = expected_utility(total, pf.cash, u);
        double enum_obj = enumerate_objective(market, pf, u);
        CHECK(std::abs(conv_obj - enum_obj) <= 1e-13 * std::max(1.0, std::abs(enum_obj)));
    }
}

TEST_CASE("expected marginal on small fixtures") {
    PayoutDistribution point{{0.0}, {1.0}};
    CHECK(expected_marginal(point, 0.8, UtilitySpec::log()) ==
          doctest::Approx(1.25).epsilon(1e-15));

    PayoutDistribution two{{0.0, 1.0}, {0.5, 0.5}};
    CHECK(expected_marginal(two, 1.0, UtilitySpec::log()) ==
          doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("expected values reject non-positive wealth") {
    PayoutDistribution d{{0.0, 1.0}, {0.5, 0.5}};
    CHECK_THROWS_AS(expected_marginal(d, 0.0, UtilitySpec::log()), Error);
    CHECK_THROWS_AS(expected_utility(d, -0.5, UtilitySpec::log()), Error);
    CHECK(expected_utility_or_neg_inf(d, 0.0, UtilitySpec::log()) ==
          -std::numeric_limits<double>::infinity());
}

TEST_CASE("ordered compensated expectation agrees with a naive sum") {
    Rng rng(kMarketGenSeed + 34);
    std::vector<std::pair<double, double>> atoms;
    double norm = 0.0;
    for (int i = 0; i < 1000; ++i) {
        atoms.emplace_back(rng.uniform(0.0, 5.0), rng.uniform(1e-4, 1.0));
        norm += atoms.back().second;
    }
    for (auto& [v, p] : atoms) {
        p /= norm;
    }
    PayoutDistribution d = make_distribution(atoms);
    double fast = expected_marginal(d, 0.5, UtilitySpec::crra(2.0));

    long double naive = 0.0L;
    for (const auto& [v, p] : atoms) {
        naive += static_cast<long double>(p) * std::pow(0.5 + v, -2.0);
    }
    CHECK(std::abs(fast - static_cast<double>(naive)) <= 1e-14 * fast);
}

TEST_CASE("shifting preserves probabilities and order") {
    PayoutDistribution d{{0.0, 0.25, 1.0}, {0.2, 0.3, 0.5}};
    PayoutDistribution s = shift_distribution(d, 0.5);
    CHECK(s.values == std::vector<double>{0.5, 0.75, 1.5});
    CHECK(s.probs == d.probs);
}
