#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kelly/distribution.hpp"
#include "kelly/market.hpp"
#include "kelly/support.hpp"
#include "kelly/utility.hpp"

namespace kelly {

struct SolverOptions {
    /// Stationarity target, relative to max(1, lambda).
    double stationarity_tol = 1e-10;
    std::size_t max_iters = 500;
    std::size_t max_atoms = kDefaultMaxAtoms;
    /// Cash below this switches the solve and the report to the boundary
    /// regime.
    double boundary_cash_eps = 1e-10;
    /// Upper bound on worker threads for per-event computations. Results are
    /// identical for every value: each event's block is computed
    /// independently and assembled by index.
    unsigned threads = 1;
};

/// Per-event diagnostics of a solve or of an arbitrary feasible portfolio.
struct EventReport {
    std::string label;
    std::vector<std::size_t> order;  // sorted position -> original index
    std::size_t k = 0;               // active prefix length (sorted order)
    double P = 0.0;
    double Q = 0.0;
    double threshold = 0.0;  // (1-P)/(1-Q)
    double K = 0.0;          // continuation factor
    /// |lambda (1-Q) - (1-P) K - nu| / lambda; nu is zero in the interior
    /// regime, so this is the plain identity residual there.
    double identity_residual = 0.0;
    /// |E[U'(W)] - sum_active p_i E_i - (1-P) K| / E[U'(W)]; exact at every
    /// feasible portfolio, not only at optima.
    double conditioning_residual = 0.0;
    /// |p_i E_i - lambda price_i| / lambda per active outcome, sorted order.
    std::vector<double> active_stationarity;
    struct ReducedCostMargin {
        std::size_t outcome = 0;  // original index
        double margin = 0.0;      // lambda price_j - p_j K  (>= 0 at optima)
    };
    std::vector<ReducedCostMargin> reduced_cost_margins;  // inactive outcomes
    /// Stopping-rule slack r_{k+1} - threshold from support selection
    /// (NaN when every outcome is active).
    double tie_margin = 0.0;
};

struct SolveReport {
    Portfolio portfolio;  // original outcome order
    double lambda = 0.0;
    double objective = 0.0;
    std::vector<EventReport> events;
    bool boundary_active = false;
    double nu = 0.0;  // lambda - E[U'(W)] in the boundary regime
    bool converged = false;
    std::size_t iterations = 0;
    double max_stationarity_residual = 0.0;
};

/// Maximizes E[U(W)] over the fixed support family by damped Newton on the
/// cash-eliminated wager vector (projected-gradient fallback on
/// ill-conditioned Hessians), with backtracking preserving wealth
/// positivity. When cash reaches the boundary the solve switches to the
/// budget-face regime and reports the slack nu. Non-convergence is reported
/// through `converged` with best-iterate diagnostics.
SolveReport fixed_support_solve(const Market& market, const SupportFamily& family,
                                const UtilitySpec& utility, const SolverOptions& options = {});

/// E[U'(R_l)] where R_l is cash plus the payouts of every event other than
/// l, built by convolution over the other events.
double continuation_factor(const Market& market, const Portfolio& portfolio,
                           std::size_t event_index, const UtilitySpec& utility,
                           std::size_t max_atoms = kDefaultMaxAtoms);

/// Full diagnostics block at an arbitrary feasible portfolio, with
/// lambda = E[U'(W)] and the given family taken as the active sets.
SolveReport kkt_and_identity_report(const Market& market, const Portfolio& portfolio,
                                    const SupportFamily& family, const UtilitySpec& utility,
                                    const SolverOptions& options = {});

/// E[U(W)] as a function of the active wagers (sorted order within each
/// event, events concatenated), cash eliminated through the budget. Returns
/// -infinity outside the feasible region.
double reduced_objective(const Market& market, const SupportFamily& family,
                         const UtilitySpec& utility, std::span<const double> active_wagers,
                         std::size_t max_atoms = kDefaultMaxAtoms);

/// Analytic gradient of reduced_objective.
std::vector<double> reduced_gradient(const Market& market, const SupportFamily& family,
                                     const UtilitySpec& utility,
                                     std::span<const double> active_wagers,
                                     std::size_t max_atoms = kDefaultMaxAtoms);

}  // namespace kelly
