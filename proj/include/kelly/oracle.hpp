#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "kelly/market.hpp"
#include "kelly/utility.hpp"

namespace kelly {

/// Brute-force reference solver. Deliberately independent of the support
/// selector and of the convolution pipeline: every expectation here is a
/// direct enumeration over product states, and the full wager vector (all
/// outcomes) is optimized with no structural assumptions.
struct OracleOptions {
    double pg_tol = 1e-9;            // projected-gradient norm target
    std::size_t max_iters = 20'000;  // per start
    double activity_eps = 1e-7;      // wagers below it count as zero
    std::size_t max_states = 1'000'000;
};

/// Start seeds for the four pseudo-random feasible starts (the fifth start is
/// all-cash). Fixed so every run is reproducible.
inline constexpr std::array<std::uint64_t, 4> kOracleStartSeeds = {101, 211, 307, 401};

struct OracleSolution {
    Portfolio portfolio;
    double objective = 0.0;
    double lambda_hat = 0.0;  // E[U'(W)], meaningful when cash > 0
    /// Outcomes with wager > activity_eps, per event, original indices.
    std::vector<std::vector<std::size_t>> support;
    bool converged = false;
    double pg_residual = 0.0;
    std::size_t iterations = 0;  // iterations spent on the winning start
    std::size_t winning_start = 0;
    /// Extraction ambiguity markers: the largest below-eps wager and the
    /// smallest above-eps wager (NaN when the corresponding set is empty).
    double largest_inactive_wager = 0.0;
    double smallest_active_wager = 0.0;
};

/// Maximizes E[U(W)] over cash >= 0, wagers >= 0 and the unit budget by
/// projected-gradient ascent with Armijo backtracking after cash
/// elimination. Runs from 5 deterministic starts and returns the best.
OracleSolution oracle_solve(const Market& market, const UtilitySpec& utility,
                            const OracleOptions& options = {});

/// E[U(W)] by direct product-state enumeration.
double enumerate_objective(const Market& market, const Portfolio& portfolio,
                           const UtilitySpec& utility);

/// E[U'(W)] by direct product-state enumeration.
double enumerate_expected_marginal(const Market& market, const Portfolio& portfolio,
                                   const UtilitySpec& utility);

/// Continuation factor of one event by direct conditional enumeration over
/// the other events' states.
double enumerate_continuation(const Market& market, const Portfolio& portfolio,
                              std::size_t event_index, const UtilitySpec& utility);

struct SolveReport;  // multi_event.hpp

struct ComparisonReport {
    bool support_equal = false;
    double max_wager_deviation = 0.0;
    double objective_solver = 0.0;
    double objective_oracle = 0.0;
    double objective_gap = 0.0;  // solver - oracle
    double lambda_gap = 0.0;
    double largest_inactive_wager = 0.0;
    double smallest_active_wager = 0.0;
    bool objective_within(double tol) const;
};

/// Compares an oracle solution with a solver report produced on the same
/// market and utility. Supports are compared after activity_eps
/// thresholding on both sides.
ComparisonReport compare(const Market& market, const OracleSolution& oracle,
                         const SolveReport& report, double activity_eps = 1e-7);

}  // namespace kelly
