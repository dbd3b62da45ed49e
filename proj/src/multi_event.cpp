#include "kelly/multi_event.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <map>

#include "kelly/errors.hpp"

namespace kelly {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kHessianConditionLimit = 1e12;
constexpr double kArmijoSlope = 1e-4;
constexpr int kMaxBacktracks = 60;
constexpr double kCashFraction = 0.9995;  // fraction-to-boundary for the cash bound
constexpr double kBoundaryCashPin = 1e-12;

struct ActiveCoord {
    std::size_t event = 0;
    std::size_t slot = 0;  // position in sorted order
    std::size_t orig = 0;  // original outcome index
    double p = 0.0;
    double price = 0.0;
};

PayoutDistribution unit_distribution() { return PayoutDistribution{{0.0}, {1.0}}; }

void run_per_event(std::size_t m, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || m <= 1) {
        for (std::size_t l = 0; l < m; ++l) {
            fn(l);
        }
        return;
    }
    std::size_t workers = std::min<std::size_t>(threads, m);
    std::vector<std::future<void>> futures;
    futures.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&, w]() {
            for (std::size_t l = w; l < m; l += workers) {
                fn(l);
            }
        }));
    }
    for (auto& f : futures) {
        f.get();
    }
}

/// Shared state of one fixed-support solve: the coordinate map and the
/// distribution plumbing.
class Workspace {
public:
    Workspace(const Market& market, const SupportFamily& family, const UtilitySpec& utility,
              std::size_t max_atoms, unsigned threads)
        : market_(market), family_(family), utility_(utility), max_atoms_(max_atoms),
          threads_(threads) {
        if (family.events.size() != market.events.size()) {
            throw Error(ErrorCode::invalid_input, "support family does not match market");
        }
        for (std::size_t l = 0; l < market.events.size(); ++l) {
            coord_begin_.push_back(coords_.size());
            const EventSupport& s = family.events[l];
            if (s.order.size() != market.events[l].outcomes.size() ||
                s.prefix.k > s.order.size()) {
                throw Error(ErrorCode::invalid_input, "support order does not match event");
            }
            for (std::size_t j = 0; j < s.prefix.k; ++j) {
                std::size_t orig = s.order[j];
                const Outcome& o = market.events[l].outcomes[orig];
                coords_.push_back(ActiveCoord{l, j, orig, o.p, o.price});
            }
        }
        coord_begin_.push_back(coords_.size());
    }

    const Market& market() const { return market_; }
    const SupportFamily& family() const { return family_; }
    const UtilitySpec& utility() const { return utility_; }
    std::size_t dim() const { return coords_.size(); }
    std::size_t events() const { return market_.events.size(); }
    const ActiveCoord& coord(std::size_t t) const { return coords_[t]; }
    std::size_t coords_begin(std::size_t l) const { return coord_begin_[l]; }
    std::size_t coords_end(std::size_t l) const { return coord_begin_[l + 1]; }
    std::size_t max_atoms() const { return max_atoms_; }
    unsigned threads() const { return threads_; }

    double cash_of(std::span<const double> g) const {
        double spent = 0.0;
        for (std::size_t t = 0; t < g.size(); ++t) {
            spent += coords_[t].price * g[t];
        }
        return 1.0 - spent;
    }

    Portfolio portfolio_of(std::span<const double> g) const {
        Portfolio pf = all_cash_portfolio(market_);
        pf.cash = cash_of(g);
        for (std::size_t t = 0; t < g.size(); ++t) {
            pf.wagers[coords_[t].event][coords_[t].orig] = g[t];
        }
        return pf;
    }

    std::vector<PayoutDistribution> event_dists(std::span<const double> g) const {
        std::vector<PayoutDistribution> dists;
        dists.reserve(events());
        for (std::size_t l = 0; l < events(); ++l) {
            std::vector<double> wagers(market_.events[l].outcomes.size(), 0.0);
            for (std::size_t t = coords_begin(l); t < coords_end(l); ++t) {
                wagers[coords_[t].orig] = g[t];
            }
            dists.push_back(event_payout_distribution(market_.events[l], wagers));
        }
        return dists;
    }

    /// Convolution of every event distribution except the excluded indices.
    PayoutDistribution combine_excluding(const std::vector<PayoutDistribution>& dists,
                                         std::size_t skip_a = SIZE_MAX,
                                         std::size_t skip_b = SIZE_MAX) const {
        PayoutDistribution acc = unit_distribution();
        for (std::size_t l = 0; l < dists.size(); ++l) {
            if (l == skip_a || l == skip_b) {
                continue;
            }
            acc = convolve(acc, dists[l], max_atoms_);
        }
        return acc;
    }

    double objective_or_neg_inf(std::span<const double> g) const {
        double cash = cash_of(g);
        if (!(cash >= 0.0)) {
            return -kInf;
        }
        auto dists = event_dists(g);
        PayoutDistribution full = combine_excluding(dists);
        return expected_utility_or_neg_inf(full, cash, utility_);
    }

private:
    const Market& market_;
    const SupportFamily& family_;
    UtilitySpec utility_;
    std::size_t max_atoms_;
    unsigned threads_;
    std::vector<ActiveCoord> coords_;
    std::vector<std::size_t> coord_begin_;
};

/// Everything the Newton iteration needs at one point.
struct Evaluation {
    double cash = 0.0;
    double objective = 0.0;
    double lambda_cash = 0.0;  // E[U'(W)]
    double M = 0.0;            // E[U''(W)]
    std::vector<double> A;     // E_{-l}[U'(g_t + R_l)] per coord
    std::vector<double> B;     // E_{-l}[U''(g_t + R_l)] per coord
    std::vector<PayoutDistribution> event_dists;
};

/// `pinned_cash`, when not NaN, takes the place of the budget-derived cash:
/// in the face regime the pin is the authoritative value, since recovering
/// cash from the wagers cancels catastrophically at tiny levels.
Evaluation evaluate(const Workspace& ws, std::span<const double> g, bool want_curvature,
                    double pinned_cash = std::numeric_limits<double>::quiet_NaN()) {
    Evaluation ev;
    ev.cash = std::isnan(pinned_cash) ? ws.cash_of(g) : pinned_cash;
    ev.event_dists = ws.event_dists(g);
    PayoutDistribution full = ws.combine_excluding(ev.event_dists);
    ev.objective = expected_utility(full, ev.cash, ws.utility());
    ev.lambda_cash = expected_marginal(full, ev.cash, ws.utility());
    if (want_curvature) {
        ev.M = expected_curvature(full, ev.cash, ws.utility());
    }

    ev.A.assign(ws.dim(), 0.0);
    if (want_curvature) {
        ev.B.assign(ws.dim(), 0.0);
    }
    run_per_event(ws.events(), ws.threads(), [&](std::size_t l) {
        if (ws.coords_begin(l) == ws.coords_end(l)) {
            return;
        }
        PayoutDistribution leave = ws.combine_excluding(ev.event_dists, l);
        for (std::size_t t = ws.coords_begin(l); t < ws.coords_end(l); ++t) {
            double shift = ev.cash + g[t];
            ev.A[t] = expected_marginal(leave, shift, ws.utility());
            if (want_curvature) {
                ev.B[t] = expected_curvature(leave, shift, ws.utility());
            }
        }
    });
    return ev;
}

/// Hessian of the objective restricted to the free coordinates. `face` holds
/// cash fixed (budget-face regime); otherwise cash is eliminated through the
/// budget and the price terms appear.
std::vector<double> build_hessian(const Workspace& ws, std::span<const double> g,
                                  const Evaluation& ev, const std::vector<std::size_t>& free,
                                  bool face) {
    const std::size_t nf = free.size();
    std::vector<double> H(nf * nf, 0.0);

    // One leave-two-out distribution per pair of events represented in the
    // free set.
    std::map<std::pair<std::size_t, std::size_t>, PayoutDistribution> pair_dists;
    for (std::size_t a = 0; a < nf; ++a) {
        for (std::size_t b = a + 1; b < nf; ++b) {
            std::size_t la = ws.coord(free[a]).event;
            std::size_t lb = ws.coord(free[b]).event;
            if (la == lb) {
                continue;
            }
            auto key = std::minmax(la, lb);
            if (!pair_dists.count(key)) {
                pair_dists.emplace(key, ws.combine_excluding(ev.event_dists, key.first, key.second));
            }
        }
    }

    for (std::size_t a = 0; a < nf; ++a) {
        std::size_t t = free[a];
        const ActiveCoord& ct = ws.coord(t);
        for (std::size_t b = a; b < nf; ++b) {
            std::size_t u = free[b];
            const ActiveCoord& cu = ws.coord(u);
            double cross = 0.0;
            if (a != b && ct.event != cu.event) {
                const PayoutDistribution& both = pair_dists.at(std::minmax(ct.event, cu.event));
                cross = expected_curvature(both, ev.cash + g[t] + g[u], ws.utility());
            }
            double h;
            if (face) {
                if (a == b) {
                    h = ct.p * ev.B[t];
                } else if (ct.event == cu.event) {
                    h = 0.0;
                } else {
                    h = ct.p * cu.p * cross;
                }
            } else {
                if (a == b) {
                    h = ct.p * ev.B[t] * (1.0 - 2.0 * ct.price) + ct.price * ct.price * ev.M;
                } else if (ct.event == cu.event) {
                    h = -cu.price * ct.p * ev.B[t] - ct.price * cu.p * ev.B[u] +
                        ct.price * cu.price * ev.M;
                } else {
                    h = ct.p * cu.p * cross - cu.price * ct.p * ev.B[t] -
                        ct.price * cu.p * ev.B[u] + ct.price * cu.price * ev.M;
                }
            }
            H[a * nf + b] = h;
            H[b * nf + a] = h;
        }
    }
    return H;
}

/// Cholesky solve of (-H) x = rhs with a pivot-ratio condition estimate.
/// Returns false on a non-positive pivot or a condition estimate above the
/// limit; the caller then falls back to a gradient step.
bool cholesky_solve(std::vector<double> A, std::vector<double> rhs, std::size_t n,
                    std::vector<double>& x) {
    double max_pivot = 0.0;
    double min_pivot = kInf;
    for (std::size_t j = 0; j < n; ++j) {
        double d = A[j * n + j];
        for (std::size_t k = 0; k < j; ++k) {
            d -= A[j * n + k] * A[j * n + k];
        }
        if (!(d > 0.0)) {
            return false;
        }
        max_pivot = std::max(max_pivot, d);
        min_pivot = std::min(min_pivot, d);
        double root = std::sqrt(d);
        A[j * n + j] = root;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = A[i * n + j];
            for (std::size_t k = 0; k < j; ++k) {
                v -= A[i * n + k] * A[j * n + k];
            }
            A[i * n + j] = v / root;
        }
    }
    if (n > 0 && max_pivot / min_pivot > kHessianConditionLimit) {
        return false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double v = rhs[i];
        for (std::size_t k = 0; k < i; ++k) {
            v -= A[i * n + k] * rhs[k];
        }
        rhs[i] = v / A[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        double v = rhs[i];
        for (std::size_t k = i + 1; k < n; ++k) {
            v -= A[k * n + i] * rhs[k];
        }
        rhs[i] = v / A[i * n + i];
    }
    x = std::move(rhs);
    return true;
}

/// Dense LU with partial pivoting for the symmetric-indefinite face KKT
/// system.
bool lu_solve(std::vector<double> A, std::vector<double> rhs, std::size_t n,
              std::vector<double>& x) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) {
        perm[i] = i;
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(A[perm[col] * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            double v = std::abs(A[perm[r] * n + col]);
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (!(best > 0.0)) {
            return false;
        }
        std::swap(perm[col], perm[pivot]);
        double d = A[perm[col] * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = A[perm[r] * n + col] / d;
            A[perm[r] * n + col] = f;
            for (std::size_t c = col + 1; c < n; ++c) {
                A[perm[r] * n + c] -= f * A[perm[col] * n + c];
            }
        }
    }
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = rhs[perm[i]];
        for (std::size_t k = 0; k < i; ++k) {
            v -= A[perm[i] * n + k] * y[k];
        }
        y[i] = v;
    }
    x.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double v = y[i];
        for (std::size_t k = i + 1; k < n; ++k) {
            v -= A[perm[i] * n + k] * x[k];
        }
        x[i] = v / A[perm[i] * n + i];
    }
    return true;
}

struct SolveState {
    std::vector<double> g;
    bool boundary = false;
    double cash_pin = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    double max_residual = kInf;
};

/// Interior phase: damped Newton on the cash-eliminated problem, wager
/// bounds handled by pin/release. Leaves with `boundary` set when cash hits
/// the trigger, `converged` set on stationarity, or neither on a stall.
void solve_interior(const Workspace& ws, const SolverOptions& options, SolveState& state) {
    const std::size_t d = ws.dim();

    while (state.iterations < options.max_iters) {
        ++state.iterations;
        Evaluation ev = evaluate(ws, state.g, true);
        if (ev.cash < options.boundary_cash_eps) {
            state.boundary = true;
            return;
        }
        double scale = std::max(1.0, ev.lambda_cash);

        std::vector<double> grad(d);
        for (std::size_t t = 0; t < d; ++t) {
            grad[t] = ws.coord(t).p * ev.A[t] - ws.coord(t).price * ev.lambda_cash;
        }

        // A coordinate rests at zero only while its reduced cost favors
        // staying there.
        std::vector<std::size_t> free;
        free.reserve(d);
        for (std::size_t t = 0; t < d; ++t) {
            bool rest = state.g[t] == 0.0 && grad[t] <= options.stationarity_tol * scale;
            if (!rest) {
                free.push_back(t);
            }
        }
        double residual = 0.0;
        for (std::size_t t : free) {
            residual = std::max(residual, std::abs(grad[t]));
        }
        state.max_residual = residual;
        if (residual <= options.stationarity_tol * scale) {
            state.converged = true;
            return;
        }

        // Direction on the free block; coordinates at zero whose Newton
        // component points outward get re-pinned and the system re-solved.
        std::vector<double> step;
        bool newton_ok = false;
        while (true) {
            const std::size_t nf = free.size();
            std::vector<double> H = build_hessian(ws, state.g, ev, free, false);
            std::vector<double> negH(nf * nf);
            std::vector<double> rhs(nf);
            for (std::size_t a = 0; a < nf; ++a) {
                rhs[a] = grad[free[a]];
                for (std::size_t b = 0; b < nf; ++b) {
                    negH[a * nf + b] = -H[a * nf + b];
                }
            }
            newton_ok = cholesky_solve(std::move(negH), rhs, nf, step);
            if (!newton_ok) {
                break;
            }
            std::vector<std::size_t> kept;
            kept.reserve(nf);
            bool repinned = false;
            for (std::size_t a = 0; a < nf; ++a) {
                if (state.g[free[a]] == 0.0 && step[a] <= 0.0) {
                    repinned = true;
                } else {
                    kept.push_back(free[a]);
                }
            }
            if (!repinned) {
                break;
            }
            free = std::move(kept);
            if (free.empty()) {
                break;
            }
        }
        if (free.empty()) {
            state.converged = true;  // everything re-pinned with small reduced costs
            return;
        }
        const std::size_t nf = free.size();
        if (!newton_ok) {
            // Projected-gradient fallback, scaled by the largest curvature.
            double max_curv = 0.0;
            for (std::size_t t : free) {
                max_curv = std::max(max_curv, std::abs(ev.B[t]) * ws.coord(t).p);
            }
            double inv = max_curv > 0.0 ? 1.0 / max_curv : 1.0;
            step.resize(nf);
            for (std::size_t a = 0; a < nf; ++a) {
                step[a] = grad[free[a]] * inv;
                if (state.g[free[a]] == 0.0 && step[a] < 0.0) {
                    step[a] = 0.0;
                }
            }
        }
        double slope = 0.0;
        for (std::size_t a = 0; a < nf; ++a) {
            slope += grad[free[a]] * step[a];
        }
        if (!(slope > 0.0)) {
            state.converged = false;
            return;  // no usable ascent direction
        }

        // Ratio test: exact arrival on wager bounds, fractional approach to
        // the cash bound.
        double alpha = 1.0;
        std::size_t blocking = SIZE_MAX;
        for (std::size_t a = 0; a < nf; ++a) {
            if (step[a] < 0.0) {
                double cap = -state.g[free[a]] / step[a];
                if (cap < alpha) {
                    alpha = cap;
                    blocking = a;
                }
            }
        }
        double spend_rate = 0.0;
        for (std::size_t a = 0; a < nf; ++a) {
            spend_rate += ws.coord(free[a]).price * step[a];
        }
        if (spend_rate > 0.0) {
            double cap = kCashFraction * ev.cash / spend_rate;
            if (cap < alpha) {
                alpha = cap;
                blocking = SIZE_MAX;
            }
        }

        bool accepted = false;
        std::vector<double> trial(d);
        bool first_trial = true;
        for (int bt = 0; bt < kMaxBacktracks; ++bt) {
            trial = state.g;
            for (std::size_t a = 0; a < nf; ++a) {
                trial[free[a]] += alpha * step[a];
                if (trial[free[a]] < 0.0) {
                    trial[free[a]] = 0.0;
                }
            }
            if (first_trial && blocking != SIZE_MAX) {
                trial[free[blocking]] = 0.0;
            }
            double obj = ws.objective_or_neg_inf(trial);
            if (obj > -kInf && obj >= ev.objective + kArmijoSlope * alpha * slope) {
                state.g = trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
            first_trial = false;
        }
        if (!accepted) {
            // A repeated iteration would fail identically; classify and stop.
            if (ev.cash < 1e-8) {
                state.boundary = true;
            }
            return;
        }
    }
}

struct FaceResult {
    bool converged = false;
    double residual = kInf;
    double lambda = kQNaN;  // first active outcome's stationarity value
    double nu = kQNaN;      // lambda - E[U'(W)] at the face optimum
};

double face_objective(const Workspace& ws, std::span<const double> g, double pin) {
    auto dists = ws.event_dists(g);
    PayoutDistribution full = ws.combine_excluding(dists);
    return expected_utility_or_neg_inf(full, pin, ws.utility());
}

/// Inner boundary solver: maximizes the objective over the budget face at a
/// fixed cash pin, equality-constrained Newton with pin/release of wager
/// bounds. `g` enters feasible for some face and is rescaled to this one.
FaceResult solve_face_at(const Workspace& ws, const SolverOptions& options, double pin,
                         std::vector<double>& g, std::size_t& iterations) {
    const std::size_t d = ws.dim();
    FaceResult result;

    double spent = 0.0;
    for (std::size_t t = 0; t < d; ++t) {
        spent += ws.coord(t).price * g[t];
    }
    if (!(spent > 0.0)) {
        throw Error(ErrorCode::support_inconsistency, "boundary regime reached with no spending");
    }
    double rescale = (1.0 - pin) / spent;
    for (double& v : g) {
        v *= rescale;
    }

    while (iterations < options.max_iters) {
        ++iterations;
        Evaluation ev = evaluate(ws, g, true, pin);

        std::vector<double> fgrad(d);
        for (std::size_t t = 0; t < d; ++t) {
            fgrad[t] = ws.coord(t).p * ev.A[t];
        }

        std::vector<std::size_t> free;
        free.reserve(d);
        for (std::size_t t = 0; t < d; ++t) {
            if (g[t] > 0.0) {
                free.push_back(t);
            }
        }
        // Least-squares multiplier over the free set.
        double num = 0.0;
        double den = 0.0;
        for (std::size_t t : free) {
            num += ws.coord(t).price * fgrad[t];
            den += ws.coord(t).price * ws.coord(t).price;
        }
        double nu_mult = den > 0.0 ? num / den : 0.0;
        double scale = std::max(1.0, nu_mult);

        bool released = false;
        for (std::size_t t = 0; t < d; ++t) {
            if (g[t] == 0.0 &&
                fgrad[t] - nu_mult * ws.coord(t).price > options.stationarity_tol * scale) {
                free.push_back(t);
                released = true;
            }
        }
        if (released) {
            std::sort(free.begin(), free.end());
        }

        double residual = 0.0;
        for (std::size_t t : free) {
            residual = std::max(residual, std::abs(fgrad[t] - nu_mult * ws.coord(t).price));
        }
        result.residual = residual;
        if (residual <= options.stationarity_tol * scale && !released) {
            result.converged = true;
            break;
        }

        // Face KKT direction, re-pinning zero coordinates whose component
        // points outward (zeroing a component would leave the face).
        std::vector<double> step;
        bool solved = false;
        while (true) {
            const std::size_t nf = free.size();
            if (nf == 0) {
                break;
            }
            std::vector<double> H = build_hessian(ws, g, ev, free, true);
            std::vector<double> sys((nf + 1) * (nf + 1), 0.0);
            std::vector<double> rhs(nf + 1, 0.0);
            for (std::size_t a = 0; a < nf; ++a) {
                for (std::size_t b = 0; b < nf; ++b) {
                    sys[a * (nf + 1) + b] = H[a * nf + b];
                }
                sys[a * (nf + 1) + nf] = -ws.coord(free[a]).price;
                sys[nf * (nf + 1) + a] = -ws.coord(free[a]).price;
                rhs[a] = -(fgrad[free[a]] - nu_mult * ws.coord(free[a]).price);
            }
            std::vector<double> sol;
            solved = lu_solve(std::move(sys), rhs, nf + 1, sol);
            if (!solved) {
                break;
            }
            step.assign(sol.begin(), sol.begin() + nf);
            std::vector<std::size_t> kept;
            kept.reserve(nf);
            bool repinned = false;
            for (std::size_t a = 0; a < nf; ++a) {
                if (g[free[a]] == 0.0 && step[a] <= 0.0) {
                    repinned = true;
                } else {
                    kept.push_back(free[a]);
                }
            }
            if (!repinned) {
                break;
            }
            free = std::move(kept);
        }
        if (free.empty()) {
            result.converged = true;
            break;
        }
        const std::size_t nf = free.size();
        if (!solved) {
            // Gradient projected onto the face.
            double gp = 0.0;
            double pp = 0.0;
            for (std::size_t t : free) {
                gp += fgrad[t] * ws.coord(t).price;
                pp += ws.coord(t).price * ws.coord(t).price;
            }
            double proj = pp > 0.0 ? gp / pp : 0.0;
            step.resize(nf);
            for (std::size_t a = 0; a < nf; ++a) {
                step[a] = fgrad[free[a]] - proj * ws.coord(free[a]).price;
            }
        }
        double slope = 0.0;
        for (std::size_t a = 0; a < nf; ++a) {
            slope += (fgrad[free[a]] - nu_mult * ws.coord(free[a]).price) * step[a];
        }
        if (!(slope > 0.0)) {
            break;
        }

        double alpha = 1.0;
        std::size_t blocking = SIZE_MAX;
        for (std::size_t a = 0; a < nf; ++a) {
            if (step[a] < 0.0) {
                double cap = -g[free[a]] / step[a];
                if (cap < alpha) {
                    alpha = cap;
                    blocking = a;
                }
            }
        }
        bool accepted = false;
        std::vector<double> trial(d);
        bool first_trial = true;
        for (int bt = 0; bt < kMaxBacktracks; ++bt) {
            trial = g;
            for (std::size_t a = 0; a < nf; ++a) {
                trial[free[a]] += alpha * step[a];
                if (trial[free[a]] < 0.0) {
                    trial[free[a]] = 0.0;
                }
            }
            if (first_trial && blocking != SIZE_MAX) {
                trial[free[blocking]] = 0.0;
            }
            double obj = face_objective(ws, trial, pin);
            if (obj > -kInf && obj >= ev.objective + kArmijoSlope * alpha * slope) {
                g = trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
            first_trial = false;
        }
        if (!accepted) {
            break;
        }
    }

    // Multiplier from the first active coordinate and the cash-direction
    // slack at the converged point.
    Evaluation ev = evaluate(ws, g, false, pin);
    for (std::size_t t = 0; t < d; ++t) {
        if (g[t] > 0.0) {
            result.lambda = ws.coord(t).p * ev.A[t] / ws.coord(t).price;
            break;
        }
    }
    result.nu = result.lambda - ev.lambda_cash;
    return result;
}

/// Boundary phase. The cash floor is exactly zero when some event is fully
/// wagered (wealth then stays positive in every state), a tiny positive
/// level otherwise. A negative slack at the floor means the cash bound is
/// not truly active — the optimum sits at a cash level too small for the
/// interior phase to resolve — so the pin is bisected upward on the sign of
/// the slack until the two agree at double resolution.
void solve_face(const Workspace& ws, const SolverOptions& options, SolveState& state) {
    double cash_entry = std::max(ws.cash_of(state.g), 0.0);
    bool zero_feasible = false;
    for (std::size_t l = 0; l < ws.events(); ++l) {
        bool full = ws.coords_end(l) - ws.coords_begin(l) == ws.market().events[l].outcomes.size();
        if (!full) {
            continue;
        }
        bool all_positive = true;
        for (std::size_t t = ws.coords_begin(l); t < ws.coords_end(l); ++t) {
            all_positive = all_positive && state.g[t] > 0.0;
        }
        if (all_positive) {
            zero_feasible = true;
            break;
        }
    }
    double floor = 0.0;
    if (!zero_feasible) {
        floor = std::min(std::max(cash_entry, 0.0), kBoundaryCashPin);
        if (floor == 0.0) {
            floor = kBoundaryCashPin;
        }
    }

    state.boundary = true;
    FaceResult at_floor = solve_face_at(ws, options, floor, state.g, state.iterations);
    state.cash_pin = floor;
    state.max_residual = at_floor.residual;
    state.converged = at_floor.converged;
    double tol = options.stationarity_tol * std::max(1.0, std::abs(at_floor.lambda));
    if (!at_floor.converged || at_floor.nu >= -tol) {
        return;  // genuine boundary optimum (or an honest failure)
    }

    // Slack negative at the floor: bisect the pin toward the interior
    // trigger level, keeping the last pin whose slack is nonnegative.
    double lo = floor;
    double hi = std::max(options.boundary_cash_eps, cash_entry);
    std::vector<double> g_hi = state.g;
    std::size_t iter_hi = state.iterations;
    FaceResult at_hi = solve_face_at(ws, options, hi, g_hi, iter_hi);
    state.iterations = iter_hi;
    if (!at_hi.converged || at_hi.nu < 0.0) {
        // No bracket; report the floor solve as the best available.
        state.g = std::move(g_hi);
        state.cash_pin = hi;
        state.max_residual = at_hi.residual;
        state.converged = false;
        return;
    }
    state.g = g_hi;
    state.cash_pin = hi;
    state.max_residual = at_hi.residual;
    state.converged = at_hi.converged;

    while (state.iterations < options.max_iters) {
        double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) {
            break;  // interval exhausted at double resolution
        }
        std::vector<double> g_mid = state.g;
        FaceResult at_mid = solve_face_at(ws, options, mid, g_mid, state.iterations);
        if (!at_mid.converged) {
            break;
        }
        if (at_mid.nu >= 0.0) {
            hi = mid;
            state.g = std::move(g_mid);
            state.cash_pin = mid;
            state.max_residual = at_mid.residual;
            state.converged = true;
            double mid_tol = options.stationarity_tol * std::max(1.0, std::abs(at_mid.lambda));
            if (at_mid.nu <= mid_tol) {
                break;
            }
        } else {
            lo = mid;
        }
    }
}

/// Longest positive prefix of each event's selected support; a positive
/// wager past a zero slot would contradict the prefix structure.
SupportFamily positive_prefix_family(const Workspace& ws, std::span<const double> g) {
    SupportFamily trimmed = ws.family();
    for (std::size_t l = 0; l < ws.events(); ++l) {
        std::size_t k_eff = 0;
        bool hole = false;
        for (std::size_t t = ws.coords_begin(l); t < ws.coords_end(l); ++t) {
            if (g[t] > 0.0) {
                if (hole) {
                    throw Error(ErrorCode::support_inconsistency,
                                "positive wager past an inactive slot in event '" +
                                    ws.market().events[l].label + "'");
                }
                ++k_eff;
            } else {
                hole = true;
            }
        }
        double P = 0.0;
        double Q = 0.0;
        for (std::size_t j = 0; j < k_eff; ++j) {
            const Outcome& o = ws.market().events[l].outcomes[trimmed.events[l].order[j]];
            P += o.p;
            Q += o.price;
        }
        trimmed.events[l].prefix = PrefixState{k_eff, P, Q};
    }
    return trimmed;
}

struct RegimeInfo {
    bool boundary = false;
    bool converged = true;
    std::size_t iterations = 0;
    double max_residual = 0.0;
};

SolveReport build_report(const Market& market, const Portfolio& portfolio,
                         const SupportFamily& family, const UtilitySpec& utility,
                         const SolverOptions& options, const RegimeInfo& regime) {
    SolveReport report;
    report.portfolio = portfolio;
    report.converged = regime.converged;
    report.iterations = regime.iterations;
    report.max_stationarity_residual = regime.max_residual;
    report.boundary_active = regime.boundary;

    const std::size_t m = market.events.size();
    std::vector<PayoutDistribution> dists(m);
    for (std::size_t l = 0; l < m; ++l) {
        dists[l] = event_payout_distribution(market.events[l], portfolio.wagers[l]);
    }
    PayoutDistribution full = unit_distribution();
    for (std::size_t l = 0; l < m; ++l) {
        full = convolve(full, dists[l], options.max_atoms);
    }
    report.objective = expected_utility(full, portfolio.cash, utility);
    double lambda_cash = expected_marginal(full, portfolio.cash, utility);

    struct EventBlock {
        double K = 0.0;
        std::vector<double> active_marginal;  // E_{-l}[U'(g_i + R_l)] per active slot
    };
    std::vector<EventBlock> blocks(m);
    run_per_event(m, options.threads, [&](std::size_t l) {
        PayoutDistribution leave{{0.0}, {1.0}};
        for (std::size_t r = 0; r < m; ++r) {
            if (r != l) {
                leave = convolve(leave, dists[r], options.max_atoms);
            }
        }
        // Background wealth can touch zero when cash is exactly zero. The
        // continuation factor is then the limit value: infinite for
        // unbounded marginals, finite for neg_exp.
        if (portfolio.cash + leave.values.front() > 0.0) {
            blocks[l].K = expected_marginal(leave, portfolio.cash, utility);
        } else {
            double k = 0.0;
            for (std::size_t i = 0; i < leave.size(); ++i) {
                k += leave.probs[i] * utility.marginal(portfolio.cash + leave.values[i]);
            }
            blocks[l].K = k;
        }
        const EventSupport& s = family.events[l];
        blocks[l].active_marginal.resize(s.prefix.k);
        for (std::size_t j = 0; j < s.prefix.k; ++j) {
            double g = portfolio.wagers[l][s.order[j]];
            blocks[l].active_marginal[j] =
                expected_marginal(leave, portfolio.cash + g, utility);
        }
    });

    // Multiplier: expected marginal wealth in the interior regime, the first
    // active outcome's stationarity value on the boundary.
    double lambda = lambda_cash;
    if (regime.boundary) {
        lambda = kQNaN;
        for (std::size_t l = 0; l < m && std::isnan(lambda); ++l) {
            const EventSupport& s = family.events[l];
            if (s.prefix.k > 0) {
                const Outcome& o = market.events[l].outcomes[s.order[0]];
                lambda = o.p * blocks[l].active_marginal[0] / o.price;
            }
        }
        if (std::isnan(lambda)) {
            lambda = lambda_cash;
        }
    }
    report.lambda = lambda;
    report.nu = regime.boundary ? lambda - lambda_cash : 0.0;

    report.events.resize(m);
    for (std::size_t l = 0; l < m; ++l) {
        const EventSupport& s = family.events[l];
        EventReport& er = report.events[l];
        er.label = market.events[l].label;
        er.order = s.order;
        er.k = s.prefix.k;
        er.P = s.prefix.P;
        er.Q = s.prefix.Q;
        er.K = blocks[l].K;
        er.tie_margin = s.tie_margin;

        // The inactive probability mass is computed as a direct sum: probs
        // sum to one, so it equals 1 - P exactly, while the subtraction
        // cancels catastrophically when the active mass is close to one.
        double inactive_mass = 0.0;
        for (std::size_t j = s.prefix.k; j < s.order.size(); ++j) {
            inactive_mass += market.events[l].outcomes[s.order[j]].p;
        }
        er.threshold =
            s.prefix.Q < 1.0 ? inactive_mass / (1.0 - s.prefix.Q) : kQNaN;

        // The inactive-outcome term is an empty sum when every outcome is
        // active, regardless of K's value.
        double tail = s.prefix.k < s.order.size() ? inactive_mass * er.K : 0.0;
        er.identity_residual =
            std::abs(lambda * (1.0 - s.prefix.Q) - tail - report.nu) / lambda;

        double recombined = tail;
        er.active_stationarity.resize(s.prefix.k);
        for (std::size_t j = 0; j < s.prefix.k; ++j) {
            const Outcome& o = market.events[l].outcomes[s.order[j]];
            er.active_stationarity[j] =
                std::abs(o.p * blocks[l].active_marginal[j] - lambda * o.price) / lambda;
            recombined += o.p * blocks[l].active_marginal[j];
        }
        er.conditioning_residual = std::abs(lambda_cash - recombined) / lambda_cash;

        for (std::size_t j = s.prefix.k; j < s.order.size(); ++j) {
            const Outcome& o = market.events[l].outcomes[s.order[j]];
            er.reduced_cost_margins.push_back(
                EventReport::ReducedCostMargin{s.order[j], lambda * o.price - o.p * er.K});
        }
    }
    return report;
}

}  // namespace

SolveReport fixed_support_solve(const Market& market, const SupportFamily& family,
                                const UtilitySpec& utility, const SolverOptions& options) {
    Workspace ws(market, family, utility, options.max_atoms, options.threads);

    SolveState state;
    state.g.assign(ws.dim(), 0.0);
    if (ws.dim() > 0) {
        solve_interior(ws, options, state);
        if (state.boundary && !state.converged) {
            solve_face(ws, options, state);
        }
    } else {
        state.converged = true;
        state.max_residual = 0.0;
    }

    Portfolio pf = ws.portfolio_of(state.g);
    if (state.boundary) {
        pf.cash = state.cash_pin;  // authoritative; the budget-derived value cancels
    }
    SupportFamily trimmed = positive_prefix_family(ws, state.g);
    RegimeInfo regime;
    regime.boundary = state.boundary;
    regime.converged = state.converged;
    regime.iterations = state.iterations;
    regime.max_residual = state.max_residual;
    return build_report(market, pf, trimmed, utility, options, regime);
}

double continuation_factor(const Market& market, const Portfolio& portfolio,
                           std::size_t event_index, const UtilitySpec& utility,
                           std::size_t max_atoms) {
    if (event_index >= market.events.size()) {
        throw Error(ErrorCode::invalid_input, "event index out of range");
    }
    PayoutDistribution background{{0.0}, {1.0}};
    for (std::size_t r = 0; r < market.events.size(); ++r) {
        if (r == event_index) {
            continue;
        }
        background = convolve(
            background, event_payout_distribution(market.events[r], portfolio.wagers[r]),
            max_atoms);
    }
    background = shift_distribution(background, portfolio.cash);
    return expected_marginal(background, 0.0, utility);
}

SolveReport kkt_and_identity_report(const Market& market, const Portfolio& portfolio,
                                    const SupportFamily& family, const UtilitySpec& utility,
                                    const SolverOptions& options) {
    RegimeInfo regime;
    regime.boundary = false;
    regime.converged = true;
    regime.iterations = 0;
    regime.max_residual = std::numeric_limits<double>::quiet_NaN();
    return build_report(market, portfolio, family, utility, options, regime);
}

double reduced_objective(const Market& market, const SupportFamily& family,
                         const UtilitySpec& utility, std::span<const double> active_wagers,
                         std::size_t max_atoms) {
    Workspace ws(market, family, utility, max_atoms, 1);
    if (active_wagers.size() != ws.dim()) {
        throw Error(ErrorCode::invalid_input, "active wager vector has the wrong size");
    }
    return ws.objective_or_neg_inf(active_wagers);
}

std::vector<double> reduced_gradient(const Market& market, const SupportFamily& family,
                                     const UtilitySpec& utility,
                                     std::span<const double> active_wagers,
                                     std::size_t max_atoms) {
    Workspace ws(market, family, utility, max_atoms, 1);
    if (active_wagers.size() != ws.dim()) {
        throw Error(ErrorCode::invalid_input, "active wager vector has the wrong size");
    }
    Evaluation ev = evaluate(ws, active_wagers, false);
    std::vector<double> grad(ws.dim());
    for (std::size_t t = 0; t < ws.dim(); ++t) {
        grad[t] = ws.coord(t).p * ev.A[t] - ws.coord(t).price * ev.lambda_cash;
    }
    return grad;
}

}  // namespace kelly
