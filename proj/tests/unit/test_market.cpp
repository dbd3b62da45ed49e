#include <doctest.h>

#include <cmath>

#include "kelly/market.hpp"
#include "support/fixtures.hpp"

using namespace kelly;
using namespace kelly::testing;

TEST_CASE("strict-overround event with margin validates cleanly") {
    Market market = make_market({make_event("E", {0.5, 0.5}, {0.55, 0.55})});
    ValidationReport report = validate_market(market);
    CHECK(report.ok());
    CHECK(report.issues.empty());
}

TEST_CASE("fair event is a degeneracy error under the strict policy") {
    Market market = make_market({make_event("E", {0.5, 0.5}, {0.5, 0.5})});
    ValidationReport report = validate_market(market);
    CHECK(!report.ok());
    CHECK(report.has_degeneracy_error());
    CHECK(report.issues.at(0).message.find("degeneracy") != std::string::npos);
}

TEST_CASE("fair event downgrades to a warning when allowed") {
    Market market =
        make_market({make_event("E", {0.5, 0.5}, {0.5, 0.5})}, OverroundPolicy::allow_with_warning);
    ValidationReport report = validate_market(market);
    CHECK(report.ok());
    CHECK(report.issues.size() == 1);
    CHECK(report.issues.at(0).severity == IssueSeverity::warning);
}

TEST_CASE("probability sums off by more than 1e-12 are rejected") {
    Market market = make_market({make_event("E", {0.7, 0.4}, {0.6, 0.6})});
    ValidationReport report = validate_market(market);
    CHECK(!report.ok());
    CHECK(report.issues.at(0).message.find("sum") != std::string::npos);

    renormalize_probabilities(market);
    CHECK(validate_market(market).ok());
}

TEST_CASE("non-positive probabilities, prices and duplicate labels are errors") {
    Event bad = make_event("E", {0.5, 0.5}, {0.6, -0.1});
    bad.outcomes[1].label = bad.outcomes[0].label;
    bad.outcomes[0].p = 0.0;
    Market market = make_market({bad});
    ValidationReport report = validate_market(market);
    int errors = 0;
    for (const auto& i : report.issues) {
        errors += i.severity == IssueSeverity::error;
    }
    CHECK(errors >= 3);
}

TEST_CASE("empty markets and empty events are rejected") {
    CHECK(!validate_market(Market{}).ok());
    Market market = make_market({Event{"E", {}}});
    CHECK(!validate_market(market).ok());
}

TEST_CASE("validation is idempotent") {
    Market market = make_market({event_a(), event_cash()});
    ValidationReport first = validate_market(market);
    ValidationReport second = validate_market(market);
    CHECK(first.issues.size() == second.issues.size());
    CHECK(first.ok() == second.ok());
}

TEST_CASE("edge ratio is probability per unit state price") {
    CHECK(edge_ratio(Outcome{"", 0.6, 0.5}) == doctest::Approx(1.2).epsilon(1e-14));
    CHECK(edge_ratio(Outcome{"", 0.5, 0.5}) == 1.0);
    CHECK(edge_ratio(Outcome{"", 0.4, 0.55}) ==
          doctest::Approx(0.727272727272727).epsilon(1e-12));
}

TEST_CASE("sort_event orders by decreasing ratio with stable ties") {
    Event e = make_event("E", {0.4, 0.36, 0.24}, {0.5, 0.3, 0.24});
    // ratios: 0.8, 1.2, 1.0
    CHECK(sort_event(e) == std::vector<std::size_t>{1, 2, 0});

    Event ties = make_event("E", {0.25, 0.25, 0.5}, {0.3, 0.3, 0.6});
    CHECK(sort_event(ties) == std::vector<std::size_t>{0, 1, 2});

    Event single = make_event("E", {1.0}, {1.1});
    CHECK(sort_event(single) == std::vector<std::size_t>{0});
}

TEST_CASE("budget residual and minimum wealth") {
    Market market = make_market({event_a()});
    Portfolio pf = all_cash_portfolio(market);
    CHECK(budget_residual(market, pf) == 0.0);
    CHECK(min_wealth(pf) == 1.0);

    pf.cash = 0.8;
    pf.wagers[0][0] = 0.4;
    CHECK(std::abs(budget_residual(market, pf)) <= 1e-12);
    CHECK(min_wealth(pf) == doctest::Approx(0.8));
}
