#pragma once

#include <vector>

#include "kelly/market.hpp"
#include "kelly/support.hpp"
#include "kelly/utility.hpp"

namespace kelly {

/// Solution of the one-event problem on a fixed prefix support.
struct SingleEventSolution {
    double lambda = 0.0;
    double cash = 0.0;
    /// Wealth of each active outcome, sorted order: W_i = (U')^{-1}(lambda/r_i).
    std::vector<double> active_wealths;
    /// Wager per outcome in ORIGINAL order (0 off support).
    std::vector<double> wagers;
    bool boundary_cash = false;  // cash <= 1e-12
};

/// Left side minus one of the scalar budget equation in lambda:
///   (1-Q) (U')^{-1}(lambda (1-Q)/(1-P)) + sum_{i active} price_i (U')^{-1}(lambda/r_i) - 1.
/// Strictly decreasing in lambda. For neg_exp, lambda values pushing an
/// argument outside the marginal range throw ErrorCode::marginal_domain.
double budget_residual_single(double lambda, const Event& event, const EventSupport& support,
                              const UtilitySpec& utility);

/// Derivative of budget_residual_single in lambda (strictly negative).
double budget_residual_single_derivative(double lambda, const Event& event,
                                         const EventSupport& support, const UtilitySpec& utility);

/// Root of the budget equation: |residual| <= 1e-13 at the returned value.
/// log returns exactly 1 without iteration. Otherwise: geometric bracket
/// growth from marginal(1), bisection to width 1e-8, then Newton polish.
/// Throws ErrorCode::bracket_failure when no sign change exists within 200
/// doublings (degenerate support or a boundary-regime instance).
double solve_lambda_single(const Event& event, const EventSupport& support,
                           const UtilitySpec& utility);

/// Recovers cash and wagers from a solved multiplier. Throws
/// ErrorCode::support_inconsistency if a computed active wager is <= 0.
SingleEventSolution assemble_single(const Event& event, const EventSupport& support,
                                    const UtilitySpec& utility, double lambda);

/// single_event_support + solve_lambda_single + assemble_single.
SingleEventSolution solve_single_event(const Event& event, const UtilitySpec& utility);

}  // namespace kelly
