#pragma once

#include <cstddef>
#include <vector>

#include "kelly/market.hpp"

namespace kelly {

/// Cumulative probability and price mass of a candidate active prefix.
struct PrefixState {
    std::size_t k = 0;  // prefix length in sorted order
    double P = 0.0;     // sum of probabilities over the prefix
    double Q = 0.0;     // sum of prices over the prefix
};

/// Active support of one event: the sorted-index permutation plus the prefix
/// length. Active outcomes are order[0..k).
struct EventSupport {
    std::vector<std::size_t> order;  // sorted position -> original index
    PrefixState prefix;
    /// r_{k+1} - threshold, the stopping-rule slack (<= 0 by construction).
    /// NaN when the prefix covers every outcome.
    double tie_margin = 0.0;
};

struct SupportFamily {
    std::vector<EventSupport> events;

    std::size_t active_count() const;
};

/// (1 - P) / (1 - Q). Throws ErrorCode::degenerate_denominator for Q >= 1,
/// which signals a fair or sub-fair prefix.
double threshold(double P, double Q);

/// Greedy prefix selection: returns the smallest k with k = n or
/// r_{k+1} <= (1-P_k)/(1-Q_k). Equality at the threshold stops the scan and
/// the equality outcome stays inactive (cash is preferred on ties). Depends
/// only on probabilities and prices, never on the utility.
EventSupport single_event_support(const Event& event);

/// Applies single_event_support independently to each event; no cross-event
/// data flows. Degeneracy errors are tagged with the offending event label.
SupportFamily simultaneous_support(const Market& market);

}  // namespace kelly
