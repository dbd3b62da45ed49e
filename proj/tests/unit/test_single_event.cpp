#include <doctest.h>

#include <cmath>

#include "kelly/errors.hpp"
#include "kelly/single_event.hpp"
#include "support/fixtures.hpp"
#include "support/market_gen.hpp"

using namespace kelly;
using namespace kelly::testing;

TEST_CASE("log budget residual collapses to 1/lambda - 1") {
    Rng rng(kMarketGenSeed + 41);
    for (int i = 0; i < 20; ++i) {
        Event event = random_event(rng, "e" + std::to_string(i));
        EventSupport support = single_event_support(event);
        CHECK(std::abs(budget_residual_single(1.0, event, support, UtilitySpec::log())) <= 1e-13);
        double lam = rng.uniform(0.25, 4.0);
        double expected = 1.0 / lam - 1.0;
        CHECK(budget_residual_single(lam, event, support, UtilitySpec::log()) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("log multiplier is exactly one") {
    Event event = event_a();
    EventSupport support = single_event_support(event);
    CHECK(solve_lambda_single(event, support, UtilitySpec::log()) == 1.0);
}

TEST_CASE("crra(2) residual brackets a root on [0.5, 2]") {
    Event event = event_a();
    EventSupport support = single_event_support(event);
    UtilitySpec u = UtilitySpec::crra(2.0);
    CHECK(budget_residual_single(0.5, event, support, u) > 0.0);
    CHECK(budget_residual_single(2.0, event, support, u) < 0.0);

    double lambda = solve_lambda_single(event, support, u);
    CHECK(lambda > 0.5);
    CHECK(lambda < 2.0);
    CHECK(std::abs(budget_residual_single(lambda, event, support, u)) <= 1e-13);
}

TEST_CASE("neg_exp(1) interior multiplier solves the budget equation") {
    Event event = event_b();
    EventSupport support = single_event_support(event);
    UtilitySpec u = UtilitySpec::neg_exp(1.0);
    double lambda = solve_lambda_single(event, support, u);
    CHECK(std::abs(budget_residual_single(lambda, event, support, u)) <= 1e-13);
}

TEST_CASE("boundary-regime instances have no interior root") {
    // neg_exp with a small coefficient wants every unit of cash deployed;
    // the scalar equation then has no root and bracketing must say so.
    Event event = event_b();
    EventSupport support = single_event_support(event);
    CHECK_THROWS_AS(solve_lambda_single(event, support, UtilitySpec::neg_exp(0.3)), Error);
    try {
        solve_lambda_single(event, support, UtilitySpec::neg_exp(0.3));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::bracket_failure);
    }
}

TEST_CASE("assembled log solutions match the closed form") {
    {
        Event event = event_a();
        SingleEventSolution sol = solve_single_event(event, UtilitySpec::log());
        CHECK(std::abs(sol.cash - 0.8) <= 1e-12);
        CHECK(std::abs(sol.wagers[0] - 0.4) <= 1e-12);
        CHECK(sol.wagers[1] == 0.0);
        CHECK(std::abs(0.8 + 0.5 * sol.wagers[0] - 1.0) <= 1e-12);
        CHECK(!sol.boundary_cash);
    }
    {
        Event event = event_b();
        SingleEventSolution sol = solve_single_event(event, UtilitySpec::log());
        CHECK(std::abs(sol.cash - 0.5) <= 1e-12);
        CHECK(std::abs(sol.wagers[0] - 0.625) <= 1e-12);
    }
}

TEST_CASE("empty support is all cash") {
    Event event = event_cash();
    SingleEventSolution sol = solve_single_event(event, UtilitySpec::crra(2.0));
    CHECK(sol.cash == doctest::Approx(1.0).epsilon(1e-12));
    for (double g : sol.wagers) {
        CHECK(g == 0.0);
    }
    CHECK(sol.lambda == doctest::Approx(UtilitySpec::crra(2.0).marginal(1.0)).epsilon(1e-10));
}

TEST_CASE("back-substitution and the threshold identity hold at the solution") {
    for (const auto& u : {UtilitySpec::log(), UtilitySpec::crra(0.5), UtilitySpec::crra(3.0),
                          UtilitySpec::neg_exp(1.0)}) {
        for (const Event& event : {event_a(), event_b(), event_three()}) {
            EventSupport support = single_event_support(event);
            double lambda = solve_lambda_single(event, support, u);
            SingleEventSolution sol = assemble_single(event, support, u, lambda);

            for (std::size_t j = 0; j < support.prefix.k; ++j) {
                double r = edge_ratio(event.outcomes[support.order[j]]);
                double back = u.marginal(sol.active_wealths[j]) * r;
                CHECK(std::abs(back - lambda) <= 1e-10 * lambda);
            }
            if (sol.cash > 1e-12) {
                double lhs = lambda / u.marginal(sol.cash);
                double rhs = (1.0 - support.prefix.P) / (1.0 - support.prefix.Q);
                CHECK(std::abs(lhs - rhs) <= 1e-10 * rhs);
            }
            double budget = sol.cash;
            for (std::size_t i = 0; i < event.outcomes.size(); ++i) {
                budget += event.outcomes[i].price * sol.wagers[i];
            }
            CHECK(std::abs(budget - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("higher edge ratios earn strictly larger wagers") {
    Event event = event_three();  // two active outcomes
    for (const auto& u : {UtilitySpec::log(), UtilitySpec::crra(3.0), UtilitySpec::neg_exp(1.0)}) {
        SingleEventSolution sol = solve_single_event(event, u);
        EventSupport support = single_event_support(event);
        REQUIRE(support.prefix.k == 2);
        double g_hi = sol.wagers[support.order[0]];
        double g_lo = sol.wagers[support.order[1]];
        CHECK(g_hi > g_lo);
        CHECK(g_lo > 0.0);
        CHECK(sol.active_wealths[0] > sol.active_wealths[1]);
    }
}

TEST_CASE("support and weights separate: crra support equals log support") {
    Rng rng(kMarketGenSeed + 55);
    for (int i = 0; i < 10; ++i) {
        Event event = random_event(rng, "e" + std::to_string(i));
        SingleEventSolution log_sol = solve_single_event(event, UtilitySpec::log());
        SingleEventSolution crra_sol = solve_single_event(event, UtilitySpec::crra(2.5));
        for (std::size_t j = 0; j < event.outcomes.size(); ++j) {
            CHECK((log_sol.wagers[j] > 0.0) == (crra_sol.wagers[j] > 0.0));
        }
    }
}

TEST_CASE("a wrong support is flagged as inconsistent") {
    Event event = event_a();
    EventSupport bogus;
    bogus.order = {1, 0};  // worst outcome first
    bogus.prefix = PrefixState{1, event.outcomes[1].p, event.outcomes[1].price};
    bogus.tie_margin = 0.0;
    double lambda = solve_lambda_single(event, bogus, UtilitySpec::log());
    CHECK_THROWS_AS(assemble_single(event, bogus, UtilitySpec::log(), lambda), Error);
    try {
        assemble_single(event, bogus, UtilitySpec::log(), lambda);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::support_inconsistency);
    }
}

TEST_CASE("full-probability supports are rejected") {
    Event sure = make_event("S", {1.0}, {0.9});
    EventSupport support = single_event_support(sure);  // accepts k = 1, P = 1
    CHECK(support.prefix.k == 1);
    CHECK_THROWS_AS(solve_lambda_single(sure, support, UtilitySpec::log()), Error);
}
