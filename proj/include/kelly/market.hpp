#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace kelly {

/// One outcome of an event: subjective probability and state price.
struct Outcome {
    std::string label;
    double p = 0.0;      // probability, in (0, 1]
    double price = 0.0;  // state price, > 0
};

/// An event with finitely many mutually exclusive outcomes.
struct Event {
    std::string label;
    std::vector<Outcome> outcomes;
};

enum class OverroundPolicy { require_strict, allow_with_warning };

/// A market of independent events.
struct Market {
    std::vector<Event> events;
    OverroundPolicy overround_policy = OverroundPolicy::require_strict;
};

/// Cash position plus per-event, per-outcome wager sizes, stored in the
/// market's original outcome order.
struct Portfolio {
    double cash = 1.0;
    std::vector<std::vector<double>> wagers;  // [event][outcome]
};

enum class IssueSeverity { error, warning };

/// Degeneracy-category issues (fair or sub-fair events) map to their own CLI
/// exit code; data issues cover everything else.
enum class IssueCategory { data, degeneracy };

struct ValidationIssue {
    IssueSeverity severity;
    IssueCategory category;
    std::string event_label;  // empty for market-level issues
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool ok() const;
    bool has_degeneracy_error() const;
    std::string summary() const;
};

/// Checks positivity of probabilities and prices, probability sums
/// (absolute tolerance 1e-12), within-event label uniqueness, and the
/// overround policy. Report-valued and side-effect free.
ValidationReport validate_market(const Market& market);

/// p / price.
double edge_ratio(const Outcome& outcome);

/// Outcome indices ordered by strictly decreasing edge ratio; ties keep the
/// original input order.
std::vector<std::size_t> sort_event(const Event& event);

/// Divides every probability of every event by its sum.
void renormalize_probabilities(Market& market);

/// c + sum(price * wager) - 1.
double budget_residual(const Market& market, const Portfolio& portfolio);

/// Minimum terminal wealth over all product states: cash plus the sum of
/// each event's smallest payout.
double min_wealth(const Portfolio& portfolio);

std::size_t product_state_count(const Market& market);

Portfolio all_cash_portfolio(const Market& market);

}  // namespace kelly
