#include "kelly/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "kelly/errors.hpp"
#include "kelly/multi_event.hpp"

namespace kelly {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Local compensated accumulator: the oracle keeps its numerics independent
// of the main pipeline's helpers.
struct Accumulator {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    double value() const { return sum + comp; }
};

struct Splitmix64 {
    std::uint64_t state;
    explicit Splitmix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

/// Flat view of the decision variables: one wager per outcome across all
/// events, cash eliminated through the budget.
struct FlatMarket {
    std::vector<double> p;
    std::vector<double> price;
    std::vector<std::size_t> event_of;
    std::vector<std::size_t> outcome_of;
    std::vector<std::size_t> event_begin;  // first flat index of each event
    std::vector<std::size_t> n;            // outcomes per event
    std::size_t states = 0;

    explicit FlatMarket(const Market& market) {
        for (std::size_t l = 0; l < market.events.size(); ++l) {
            event_begin.push_back(p.size());
            n.push_back(market.events[l].outcomes.size());
            for (std::size_t i = 0; i < market.events[l].outcomes.size(); ++i) {
                p.push_back(market.events[l].outcomes[i].p);
                price.push_back(market.events[l].outcomes[i].price);
                event_of.push_back(l);
                outcome_of.push_back(i);
            }
        }
        states = 1;
        for (std::size_t c : n) {
            states *= c;
        }
    }

    std::size_t dim() const { return p.size(); }
    std::size_t events() const { return n.size(); }

    double cash_of(const std::vector<double>& g) const {
        double spent = 0.0;
        for (std::size_t t = 0; t < g.size(); ++t) {
            spent += price[t] * g[t];
        }
        return 1.0 - spent;
    }
};

/// One enumeration pass: accumulates E[U(W)], E[U'(W)] and the per-outcome
/// slice sums S[t] = sum over states with X_l = i of prob * U'(W).
struct EnumerationPass {
    double objective = 0.0;
    double expected_marginal = 0.0;
    std::vector<double> slice_marginal;
    bool feasible = true;  // false when some state has W <= 0
};

EnumerationPass enumerate_pass(const FlatMarket& fm, const std::vector<double>& g, double cash,
                               const UtilitySpec& utility, bool want_gradient) {
    EnumerationPass out;
    Accumulator obj;
    Accumulator marg;
    std::vector<Accumulator> slices(want_gradient ? fm.dim() : 0);

    const std::size_t m = fm.events();
    std::vector<std::size_t> digits(m, 0);
    for (std::size_t s = 0; s < fm.states; ++s) {
        double prob = 1.0;
        double wealth = cash;
        for (std::size_t l = 0; l < m; ++l) {
            std::size_t t = fm.event_begin[l] + digits[l];
            prob *= fm.p[t];
            wealth += g[t];
        }
        if (!(wealth > 0.0)) {
            out.feasible = false;
            return out;
        }
        obj.add(prob * utility.value(wealth));
        double u1 = utility.marginal(wealth);
        marg.add(prob * u1);
        if (want_gradient) {
            for (std::size_t l = 0; l < m; ++l) {
                slices[fm.event_begin[l] + digits[l]].add(prob * u1);
            }
        }
        // mixed-radix increment
        for (std::size_t l = m; l-- > 0;) {
            if (++digits[l] < fm.n[l]) {
                break;
            }
            digits[l] = 0;
        }
    }

    out.objective = obj.value();
    out.expected_marginal = marg.value();
    if (want_gradient) {
        out.slice_marginal.resize(fm.dim());
        for (std::size_t t = 0; t < fm.dim(); ++t) {
            out.slice_marginal[t] = slices[t].value();
        }
    }
    return out;
}

double objective_at(const FlatMarket& fm, const std::vector<double>& g,
                    const UtilitySpec& utility) {
    double cash = fm.cash_of(g);
    if (cash < 0.0) {
        return -kInf;
    }
    EnumerationPass pass = enumerate_pass(fm, g, cash, utility, false);
    return pass.feasible ? pass.objective : -kInf;
}

/// Euclidean projection onto {g >= 0, price . g <= 1}. When clipping alone
/// overspends, solves the weighted-simplex projection
///   min ||x - g||^2  s.t.  x >= 0, price . x = 1
/// by exact breakpoint search on x_i = max(0, g_i - tau * price_i).
std::vector<double> project_feasible(const FlatMarket& fm, std::vector<double> g) {
    for (double& v : g) {
        v = std::max(v, 0.0);
    }
    double spent = 0.0;
    for (std::size_t t = 0; t < g.size(); ++t) {
        spent += fm.price[t] * g[t];
    }
    if (spent <= 1.0) {
        return g;
    }

    std::vector<double> breaks(g.size());
    for (std::size_t t = 0; t < g.size(); ++t) {
        breaks[t] = g[t] / fm.price[t];
    }
    std::vector<std::size_t> order(g.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return breaks[a] < breaks[b]; });

    // Walk tau upward through the breakpoints; coordinates with
    // break <= tau drop to zero.
    double active_spend = spent;   // price . g over still-active coords
    double active_weight = 0.0;    // sum price_i^2 over still-active coords
    for (std::size_t t = 0; t < g.size(); ++t) {
        active_weight += fm.price[t] * fm.price[t];
    }
    double tau = 0.0;
    std::size_t drop = 0;
    while (true) {
        tau = (active_spend - 1.0) / active_weight;
        if (drop >= order.size() || tau <= breaks[order[drop]]) {
            break;
        }
        std::size_t t = order[drop];
        active_spend -= fm.price[t] * g[t];
        active_weight -= fm.price[t] * fm.price[t];
        ++drop;
    }
    for (std::size_t t = 0; t < g.size(); ++t) {
        g[t] = std::max(0.0, g[t] - tau * fm.price[t]);
    }
    return g;
}

struct StartResult {
    std::vector<double> g;
    double objective = -kInf;
    double pg_residual = kInf;
    std::size_t iterations = 0;
    bool converged = false;
};

StartResult run_start(const FlatMarket& fm, std::vector<double> g, const UtilitySpec& utility,
                      const OracleOptions& options) {
    StartResult result;
    g = project_feasible(fm, g);

    std::vector<double> grad(fm.dim(), 0.0);
    std::vector<double> prev_g;
    std::vector<double> prev_grad;
    double objective = objective_at(fm, g, utility);
    double step = 1.0;
    double best_objective = objective;
    int flat_iterations = 0;

    for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
        result.iterations = iter + 1;
        double cash = fm.cash_of(g);
        EnumerationPass pass = enumerate_pass(fm, g, cash, utility, true);
        if (!pass.feasible) {
            throw Error(ErrorCode::nonpositive_wealth, "oracle iterate left the feasible region");
        }
        objective = pass.objective;
        for (std::size_t t = 0; t < fm.dim(); ++t) {
            grad[t] = pass.slice_marginal[t] - fm.price[t] * pass.expected_marginal;
        }

        // Natural-map residual at unit step.
        {
            std::vector<double> probe = g;
            for (std::size_t t = 0; t < fm.dim(); ++t) {
                probe[t] += grad[t];
            }
            probe = project_feasible(fm, probe);
            double res = 0.0;
            for (std::size_t t = 0; t < fm.dim(); ++t) {
                res = std::max(res, std::abs(probe[t] - g[t]));
            }
            result.pg_residual = res;
            if (res <= options.pg_tol) {
                result.converged = true;
                break;
            }
        }

        // Barzilai-Borwein trial step, clamped, with Armijo backtracking.
        if (!prev_g.empty()) {
            double ss = 0.0;
            double sy = 0.0;
            for (std::size_t t = 0; t < fm.dim(); ++t) {
                double s = g[t] - prev_g[t];
                double y = grad[t] - prev_grad[t];
                ss += s * s;
                sy += s * y;
            }
            if (sy < 0.0 && ss > 0.0) {
                step = ss / (-sy);
            }
        }
        step = std::clamp(step, 1e-12, 1e12);

        prev_g = g;
        prev_grad = grad;

        bool accepted = false;
        double alpha = step;
        for (int bt = 0; bt < 80; ++bt) {
            std::vector<double> trial = g;
            for (std::size_t t = 0; t < fm.dim(); ++t) {
                trial[t] += alpha * grad[t];
            }
            trial = project_feasible(fm, trial);
            double decrease = 0.0;
            for (std::size_t t = 0; t < fm.dim(); ++t) {
                decrease += grad[t] * (trial[t] - g[t]);
            }
            double trial_objective = objective_at(fm, trial, utility);
            if (trial_objective >= objective + 1e-4 * decrease && trial_objective > -kInf) {
                g = std::move(trial);
                objective = trial_objective;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            break;  // stalled; residual of the last iterate stands
        }
        // Accepted steps improve the objective mathematically, but near the
        // float-resolution optimum the improvements round to nothing while
        // gradient noise keeps the residual above target. Stop once progress
        // has been flat for a long stretch.
        if (objective > best_objective + 1e-15 * std::max(1.0, std::abs(best_objective))) {
            best_objective = objective;
            flat_iterations = 0;
        } else if (++flat_iterations >= 300) {
            break;
        }
    }

    result.g = std::move(g);
    result.objective = objective;
    return result;
}

}  // namespace

double enumerate_objective(const Market& market, const Portfolio& portfolio,
                           const UtilitySpec& utility) {
    FlatMarket fm(market);
    std::vector<double> g;
    for (const auto& ev : portfolio.wagers) {
        g.insert(g.end(), ev.begin(), ev.end());
    }
    EnumerationPass pass = enumerate_pass(fm, g, portfolio.cash, utility, false);
    if (!pass.feasible) {
        throw Error(ErrorCode::nonpositive_wealth, "portfolio has a non-positive wealth state");
    }
    return pass.objective;
}

double enumerate_expected_marginal(const Market& market, const Portfolio& portfolio,
                                   const UtilitySpec& utility) {
    FlatMarket fm(market);
    std::vector<double> g;
    for (const auto& ev : portfolio.wagers) {
        g.insert(g.end(), ev.begin(), ev.end());
    }
    EnumerationPass pass = enumerate_pass(fm, g, portfolio.cash, utility, false);
    if (!pass.feasible) {
        throw Error(ErrorCode::nonpositive_wealth, "portfolio has a non-positive wealth state");
    }
    return pass.expected_marginal;
}

double enumerate_continuation(const Market& market, const Portfolio& portfolio,
                              std::size_t event_index, const UtilitySpec& utility) {
    const std::size_t m = market.events.size();
    if (event_index >= m) {
        throw Error(ErrorCode::invalid_input, "event index out of range");
    }
    Accumulator acc;
    std::vector<std::size_t> digits(m, 0);
    std::size_t states = 1;
    for (std::size_t l = 0; l < m; ++l) {
        if (l != event_index) {
            states *= market.events[l].outcomes.size();
        }
    }
    for (std::size_t s = 0; s < states; ++s) {
        double prob = 1.0;
        double background = portfolio.cash;
        for (std::size_t l = 0; l < m; ++l) {
            if (l == event_index) {
                continue;
            }
            prob *= market.events[l].outcomes[digits[l]].p;
            background += portfolio.wagers[l][digits[l]];
        }
        if (!(background > 0.0)) {
            throw Error(ErrorCode::nonpositive_wealth, "non-positive background wealth");
        }
        acc.add(prob * utility.marginal(background));
        for (std::size_t l = m; l-- > 0;) {
            if (l == event_index) {
                continue;
            }
            if (++digits[l] < market.events[l].outcomes.size()) {
                break;
            }
            digits[l] = 0;
        }
    }
    return acc.value();
}

OracleSolution oracle_solve(const Market& market, const UtilitySpec& utility,
                            const OracleOptions& options) {
    FlatMarket fm(market);
    if (fm.states > options.max_states) {
        std::ostringstream os;
        os << "market has " << fm.states << " product states, oracle limit is "
           << options.max_states;
        throw Error(ErrorCode::invalid_input, os.str());
    }

    StartResult best;
    std::size_t best_start = 0;
    for (std::size_t start = 0; start < kOracleStartSeeds.size() + 1; ++start) {
        std::vector<double> g0(fm.dim(), 0.0);
        if (start > 0) {
            // Feasible interior start: random direction scaled to spend half
            // the bankroll.
            Splitmix64 rng(kOracleStartSeeds[start - 1]);
            double spend = 0.0;
            for (std::size_t t = 0; t < fm.dim(); ++t) {
                g0[t] = rng.uniform();
                spend += fm.price[t] * g0[t];
            }
            if (spend > 0.0) {
                for (double& v : g0) {
                    v *= 0.5 / spend;
                }
            }
        }
        StartResult r = run_start(fm, std::move(g0), utility, options);
        bool better = r.objective > best.objective ||
                      (r.objective == best.objective && r.pg_residual < best.pg_residual);
        if (start == 0 || better) {
            best = std::move(r);
            best_start = start;
        }
    }

    if (!best.converged) {
        // Keep the best iterate's diagnostics; callers decide how hard to fail.
    }

    OracleSolution sol;
    sol.portfolio.cash = fm.cash_of(best.g);
    sol.portfolio.wagers.resize(fm.events());
    for (std::size_t l = 0; l < fm.events(); ++l) {
        sol.portfolio.wagers[l].assign(fm.n[l], 0.0);
    }
    for (std::size_t t = 0; t < fm.dim(); ++t) {
        sol.portfolio.wagers[fm.event_of[t]][fm.outcome_of[t]] = best.g[t];
    }
    sol.objective = best.objective;
    sol.converged = best.converged;
    sol.pg_residual = best.pg_residual;
    sol.iterations = best.iterations;
    sol.winning_start = best_start;

    sol.support.resize(fm.events());
    double largest_inactive = std::numeric_limits<double>::quiet_NaN();
    double smallest_active = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t t = 0; t < fm.dim(); ++t) {
        double g = best.g[t];
        if (g > options.activity_eps) {
            sol.support[fm.event_of[t]].push_back(fm.outcome_of[t]);
            if (std::isnan(smallest_active) || g < smallest_active) {
                smallest_active = g;
            }
        } else if (std::isnan(largest_inactive) || g > largest_inactive) {
            largest_inactive = g;
        }
    }
    sol.largest_inactive_wager = largest_inactive;
    sol.smallest_active_wager = smallest_active;
    if (sol.portfolio.cash > 0.0) {
        sol.lambda_hat = enumerate_expected_marginal(market, sol.portfolio, utility);
    } else {
        sol.lambda_hat = std::numeric_limits<double>::quiet_NaN();
    }
    return sol;
}

bool ComparisonReport::objective_within(double tol) const {
    return objective_gap <= tol && objective_gap >= -tol;
}

ComparisonReport compare(const Market& market, const OracleSolution& oracle,
                         const SolveReport& report, double activity_eps) {
    ComparisonReport cmp;
    cmp.objective_oracle = oracle.objective;
    cmp.objective_solver = report.objective;
    cmp.objective_gap = report.objective - oracle.objective;
    cmp.lambda_gap = std::abs(report.lambda - oracle.lambda_hat);
    cmp.largest_inactive_wager = oracle.largest_inactive_wager;
    cmp.smallest_active_wager = oracle.smallest_active_wager;

    cmp.support_equal = true;
    cmp.max_wager_deviation = 0.0;
    for (std::size_t l = 0; l < market.events.size(); ++l) {
        for (std::size_t i = 0; i < market.events[l].outcomes.size(); ++i) {
            double go = oracle.portfolio.wagers[l][i];
            double gs = report.portfolio.wagers[l][i];
            cmp.max_wager_deviation = std::max(cmp.max_wager_deviation, std::abs(go - gs));
            if ((go > activity_eps) != (gs > activity_eps)) {
                cmp.support_equal = false;
            }
        }
    }
    return cmp;
}

}  // namespace kelly
