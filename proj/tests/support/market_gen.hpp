#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "kelly/market.hpp"
#include "kelly/support.hpp"

namespace kelly::testing {

/// Uniform deviates from mt19937_64 without std::uniform_real_distribution,
/// whose output is implementation-defined; this stream is identical on every
/// platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::size_t uniform_index(std::size_t n) {
        return std::min<std::size_t>(static_cast<std::size_t>(uniform() * static_cast<double>(n)),
                                     n - 1);
    }

private:
    std::mt19937_64 engine_;
};

inline constexpr std::uint64_t kMarketGenSeed = 0x6B656C6C79ULL;

/// One pseudo-random event: 2..6 outcomes, probabilities bounded away from
/// zero, target edge ratios in [0.5, 1.5], prices rescaled to an overround
/// drawn from [1.02, 1.20]. Events whose selected prefix sits within 1e-3 of
/// the stopping threshold are redrawn, so eps-thresholded support extraction
/// stays unambiguous (exact ties are exercised separately).
inline Event random_event(Rng& rng, const std::string& label) {
    for (int attempt = 0; attempt < 200; ++attempt) {
        std::size_t n = 2 + rng.uniform_index(5);
        std::vector<double> raw(n);
        double sum = 0.0;
        for (double& x : raw) {
            x = rng.uniform(0.05, 1.0);
            sum += x;
        }
        Event event;
        event.label = label;
        double head = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double p = i + 1 < n ? raw[i] / sum : 1.0 - head;
            head += p;
            event.outcomes.push_back(Outcome{"o" + std::to_string(i), p, 0.0});
        }
        bool tiny = false;
        for (const Outcome& o : event.outcomes) {
            tiny = tiny || o.p < 0.01;
        }
        if (tiny) {
            continue;
        }

        double price_sum = 0.0;
        for (Outcome& o : event.outcomes) {
            o.price = o.p / rng.uniform(0.5, 1.5);
            price_sum += o.price;
        }
        double overround = rng.uniform(1.02, 1.20);
        for (Outcome& o : event.outcomes) {
            o.price *= overround / price_sum;
        }

        EventSupport support = single_event_support(event);
        double thr = (1.0 - support.prefix.P) / (1.0 - support.prefix.Q);
        bool sharp = true;
        for (std::size_t j = 0; j < support.prefix.k; ++j) {
            sharp = sharp &&
                    edge_ratio(event.outcomes[support.order[j]]) - thr >= 1e-3;
        }
        if (support.prefix.k < n) {
            sharp = sharp &&
                    thr - edge_ratio(event.outcomes[support.order[support.prefix.k]]) >= 1e-3;
        }
        if (sharp) {
            return event;
        }
    }
    throw std::runtime_error("random_event failed to produce a sharp event");
}

/// m in {1,2,3}, per the parameters of the randomized sweeps.
inline Market random_market(Rng& rng, const std::string& label) {
    Market market;
    std::size_t m = 1 + rng.uniform_index(3);
    for (std::size_t l = 0; l < m; ++l) {
        market.events.push_back(random_event(rng, label + "-e" + std::to_string(l)));
    }
    return market;
}

/// Random feasible portfolio: cash in [0.1, 0.9], a random subset of
/// outcomes wagered, spending scaled to the budget. Wealth positivity holds
/// because cash is positive and wagers are nonnegative.
inline Portfolio random_feasible_portfolio(const Market& market, Rng& rng) {
    Portfolio pf = all_cash_portfolio(market);
    pf.cash = rng.uniform(0.1, 0.9);
    double spend = 0.0;
    for (std::size_t l = 0; l < market.events.size(); ++l) {
        for (std::size_t i = 0; i < market.events[l].outcomes.size(); ++i) {
            if (rng.uniform() < 0.6) {
                pf.wagers[l][i] = rng.uniform(0.05, 1.0);
                spend += market.events[l].outcomes[i].price * pf.wagers[l][i];
            }
        }
    }
    if (spend == 0.0) {
        pf.cash = 1.0;
        return pf;
    }
    double scale = (1.0 - pf.cash) / spend;
    for (auto& ev : pf.wagers) {
        for (double& g : ev) {
            g *= scale;
        }
    }
    return pf;
}

}  // namespace kelly::testing
