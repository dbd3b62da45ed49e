#include "kelly/single_event.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kelly/errors.hpp"

namespace kelly {

namespace {

constexpr double kResidualTarget = 1e-13;
constexpr double kBisectWidth = 1e-8;
constexpr int kMaxDoublings = 200;
constexpr int kNewtonSteps = 10;
constexpr double kBoundaryCashEps = 1e-12;

void check_prefix(const Event& event, const EventSupport& support) {
    const PrefixState& s = support.prefix;
    if (s.k > event.outcomes.size() || support.order.size() != event.outcomes.size()) {
        throw Error(ErrorCode::invalid_input, "support does not match event");
    }
    if (s.Q >= 1.0) {
        throw Error(ErrorCode::degenerate_denominator,
                    "event '" + event.label + "': active price mass >= 1");
    }
    if (s.P >= 1.0) {
        throw Error(ErrorCode::degenerate_denominator,
                    "event '" + event.label +
                        "': full probability mass active, no interior cash solution");
    }
}

/// Largest admissible lambda. Finite only for neg_exp, where every argument
/// of the inverse marginal must stay below the coefficient a.
double lambda_domain_sup(const Event& event, const EventSupport& support,
                         const UtilitySpec& utility) {
    if (utility.kind() != UtilityKind::neg_exp) {
        return std::numeric_limits<double>::infinity();
    }
    const PrefixState& s = support.prefix;
    double min_scale = (1.0 - s.P) / (1.0 - s.Q);  // cash argument is lambda / theta
    for (std::size_t j = 0; j < s.k; ++j) {
        min_scale = std::min(min_scale, edge_ratio(event.outcomes[support.order[j]]));
    }
    return utility.coef() * min_scale;
}

}  // namespace

double budget_residual_single(double lambda, const Event& event, const EventSupport& support,
                              const UtilitySpec& utility) {
    check_prefix(event, support);
    const PrefixState& s = support.prefix;
    double residual =
        (1.0 - s.Q) * utility.marginal_inverse(lambda * (1.0 - s.Q) / (1.0 - s.P)) - 1.0;
    for (std::size_t j = 0; j < s.k; ++j) {
        const Outcome& o = event.outcomes[support.order[j]];
        residual += o.price * utility.marginal_inverse(lambda / edge_ratio(o));
    }
    return residual;
}

double budget_residual_single_derivative(double lambda, const Event& event,
                                         const EventSupport& support, const UtilitySpec& utility) {
    const PrefixState& s = support.prefix;
    double scale = (1.0 - s.Q) / (1.0 - s.P);
    double d = (1.0 - s.Q) * scale * utility.marginal_inverse_derivative(lambda * scale);
    for (std::size_t j = 0; j < s.k; ++j) {
        const Outcome& o = event.outcomes[support.order[j]];
        double r = edge_ratio(o);
        d += (o.price / r) * utility.marginal_inverse_derivative(lambda / r);
    }
    return d;
}

double solve_lambda_single(const Event& event, const EventSupport& support,
                           const UtilitySpec& utility) {
    check_prefix(event, support);
    if (utility.kind() == UtilityKind::log) {
        // (1-Q)(1-P)/((1-Q)l) + sum price_i r_i / l - 1 = (1-P+P)/l - 1,
        // so the root is exactly 1.
        return 1.0;
    }

    const double sup = lambda_domain_sup(event, support, utility);
    auto residual_at = [&](double lambda) {
        return budget_residual_single(lambda, event, support, utility);
    };

    double lo = utility.marginal(1.0);
    if (std::isfinite(sup)) {
        lo = std::min(lo, 0.5 * sup);
    }
    double f_lo = residual_at(lo);
    if (std::abs(f_lo) <= kResidualTarget) {
        return lo;
    }

    double hi = lo;
    double f_hi = f_lo;
    if (f_lo > 0.0) {
        // Root lies above: grow hi toward the domain sup.
        bool bracketed = false;
        for (int i = 0; i < kMaxDoublings; ++i) {
            double next = hi * 2.0;
            if (std::isfinite(sup)) {
                next = std::min(next, sup * (1.0 - 1e-12));
            }
            if (next <= hi) {
                break;  // pinned at the domain boundary and still positive
            }
            hi = next;
            f_hi = residual_at(hi);
            if (f_hi <= 0.0) {
                bracketed = true;
                break;
            }
        }
        if (!bracketed) {
            throw Error(ErrorCode::bracket_failure,
                        "event '" + event.label +
                            "': budget residual has no interior root (no sign change within "
                            "200 doublings)");
        }
    } else {
        // Root lies below: shrink lo.
        std::swap(lo, hi);
        std::swap(f_lo, f_hi);
        bool bracketed = false;
        for (int i = 0; i < kMaxDoublings; ++i) {
            lo *= 0.5;
            f_lo = residual_at(lo);
            if (f_lo >= 0.0) {
                bracketed = true;
                break;
            }
        }
        if (!bracketed) {
            throw Error(ErrorCode::bracket_failure,
                        "event '" + event.label +
                            "': budget residual has no root within 200 halvings");
        }
    }

    // Bisection: residual is strictly decreasing, positive at lo.
    while (hi - lo > kBisectWidth * std::max(1.0, lo)) {
        double mid = 0.5 * (lo + hi);
        double f_mid = residual_at(mid);
        if (std::abs(f_mid) <= kResidualTarget) {
            return mid;
        }
        if (f_mid > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    double x = 0.5 * (lo + hi);
    for (int i = 0; i < kNewtonSteps; ++i) {
        double f = residual_at(x);
        if (std::abs(f) <= kResidualTarget) {
            return x;
        }
        if (f > 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        double d = budget_residual_single_derivative(x, event, support, utility);
        double next = x - f / d;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);  // safeguard: fall back to bisection
        }
        x = next;
    }
    if (std::abs(residual_at(x)) > kResidualTarget) {
        std::ostringstream os;
        os << "event '" << event.label << "': multiplier polish stalled at residual "
           << residual_at(x);
        throw Error(ErrorCode::no_convergence, os.str());
    }
    return x;
}

SingleEventSolution assemble_single(const Event& event, const EventSupport& support,
                                    const UtilitySpec& utility, double lambda) {
    check_prefix(event, support);
    const PrefixState& s = support.prefix;

    SingleEventSolution sol;
    sol.lambda = lambda;
    sol.cash = utility.marginal_inverse(lambda * (1.0 - s.Q) / (1.0 - s.P));
    sol.boundary_cash = sol.cash <= kBoundaryCashEps;
    sol.wagers.assign(event.outcomes.size(), 0.0);
    sol.active_wealths.reserve(s.k);
    for (std::size_t j = 0; j < s.k; ++j) {
        std::size_t idx = support.order[j];
        double wealth = utility.marginal_inverse(lambda / edge_ratio(event.outcomes[idx]));
        double wager = wealth - sol.cash;
        if (!(wager > 0.0)) {
            std::ostringstream os;
            os << "event '" << event.label << "': active outcome '"
               << event.outcomes[idx].label << "' received non-positive wager " << wager;
            throw Error(ErrorCode::support_inconsistency, os.str());
        }
        sol.active_wealths.push_back(wealth);
        sol.wagers[idx] = wager;
    }
    return sol;
}

SingleEventSolution solve_single_event(const Event& event, const UtilitySpec& utility) {
    EventSupport support = single_event_support(event);
    double lambda = solve_lambda_single(event, support, utility);
    return assemble_single(event, support, utility, lambda);
}

}  // namespace kelly
