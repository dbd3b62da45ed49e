#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kelly/market.hpp"
#include "kelly/utility.hpp"

namespace kelly {

/// Discrete law of a payout: strictly increasing values with positive
/// probabilities summing to one. Values equal under exact floating
/// comparison are merged; there is no epsilon merging, so the atom set is
/// deterministic and order-independent.
struct PayoutDistribution {
    std::vector<double> values;
    std::vector<double> probs;

    std::size_t size() const { return values.size(); }
};

inline constexpr std::size_t kDefaultMaxAtoms = 10'000'000;

/// Builds a distribution from (value, prob) atoms: sorts, merges exact
/// duplicates.
PayoutDistribution make_distribution(std::vector<std::pair<double, double>> atoms);

/// Law of the random payout g_{X} of one event: atom (wager_i, p_i) per
/// outcome, with equal wagers merged. `wagers` is in original outcome order.
PayoutDistribution event_payout_distribution(const Event& event, std::span<const double> wagers);

/// Exact law of the sum of two independent payouts. The atom-count product
/// must not exceed `max_atoms`; exceeding it is an error, not a truncation.
PayoutDistribution convolve(const PayoutDistribution& a, const PayoutDistribution& b,
                            std::size_t max_atoms = kDefaultMaxAtoms);

/// Adds a constant to every value (re-merging collisions produced by
/// rounding).
PayoutDistribution shift_distribution(const PayoutDistribution& dist, double shift);

/// E[U'(shift + V)], accumulated in ascending-value order with compensated
/// summation. Throws ErrorCode::nonpositive_wealth if any shifted value
/// is <= 0.
double expected_marginal(const PayoutDistribution& dist, double shift, const UtilitySpec& utility);

/// E[U(shift + V)], same contract as expected_marginal.
double expected_utility(const PayoutDistribution& dist, double shift, const UtilitySpec& utility);

/// E[U''(shift + V)], same contract as expected_marginal.
double expected_curvature(const PayoutDistribution& dist, double shift, const UtilitySpec& utility);

/// E[U(shift + V)] returning -infinity instead of throwing when some shifted
/// value is non-positive; used as the line-search feasibility sentinel.
double expected_utility_or_neg_inf(const PayoutDistribution& dist, double shift,
                                   const UtilitySpec& utility);

}  // namespace kelly
