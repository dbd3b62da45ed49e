#pragma once

#include <string>
#include <vector>

#include "kelly/market.hpp"

namespace kelly::testing {

inline Event make_event(std::string label, std::vector<double> probs, std::vector<double> prices) {
    Event event;
    event.label = std::move(label);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        event.outcomes.push_back(Outcome{"o" + std::to_string(i), probs[i], prices[i]});
    }
    return event;
}

inline Market make_market(std::vector<Event> events,
                          OverroundPolicy policy = OverroundPolicy::require_strict) {
    Market market;
    market.events = std::move(events);
    market.overround_policy = policy;
    return market;
}

/// k = 1, threshold 0.8, log solution cash 0.8 / wager 0.4.
inline Event event_a() { return make_event("A", {0.6, 0.4}, {0.5, 0.55}); }

/// k = 1, threshold 0.5, log solution cash 0.5 / wager 0.625.
inline Event event_b() { return make_event("B", {0.9, 0.1}, {0.8, 0.3}); }

/// Every edge ratio below one: all cash.
inline Event event_cash() { return make_event("C", {0.5, 0.5}, {0.55, 0.55}); }

/// Three outcomes, k = 2 (ratios 5/3, 1.2, 0.4 against final threshold 4/9).
inline Event event_three() { return make_event("T", {0.5, 0.3, 0.2}, {0.3, 0.25, 0.5}); }

/// Exact binary threshold tie: after the first outcome P = 0.75, Q = 0.5,
/// threshold = 0.25/0.5 = 0.5 and the second outcome's ratio is exactly
/// 0.125/0.25 = 0.5. Every quantity is a power of two, so the equality is
/// exact in floating point.
inline Event event_tie() { return make_event("TIE", {0.75, 0.125, 0.125}, {0.5, 0.25, 0.5}); }

}  // namespace kelly::testing
