#include "kelly/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kelly/errors.hpp"
#include "kelly/numeric.hpp"

namespace kelly {

namespace {

PayoutDistribution merge_sorted(std::vector<std::pair<double, double>>& atoms) {
    PayoutDistribution dist;
    dist.values.reserve(atoms.size());
    dist.probs.reserve(atoms.size());
    for (const auto& [v, p] : atoms) {
        if (!dist.values.empty() && dist.values.back() == v) {
            dist.probs.back() += p;
        } else {
            dist.values.push_back(v);
            dist.probs.push_back(p);
        }
    }
    return dist;
}

template <typename F>
double expected_over(const PayoutDistribution& dist, double shift, F&& f) {
    CompensatedSum sum;
    for (std::size_t i = 0; i < dist.values.size(); ++i) {
        sum.add(dist.probs[i] * f(shift + dist.values[i]));
    }
    return sum.value();
}

void require_positive_wealth(const PayoutDistribution& dist, double shift) {
    if (dist.values.empty()) {
        throw Error(ErrorCode::invalid_input, "empty payout distribution");
    }
    if (!(shift + dist.values.front() > 0.0)) {
        std::ostringstream os;
        os << "non-positive wealth " << shift + dist.values.front()
           << " in expectation (shift " << shift << ")";
        throw Error(ErrorCode::nonpositive_wealth, os.str());
    }
}

}  // namespace

PayoutDistribution make_distribution(std::vector<std::pair<double, double>> atoms) {
    std::stable_sort(atoms.begin(), atoms.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    return merge_sorted(atoms);
}

PayoutDistribution event_payout_distribution(const Event& event, std::span<const double> wagers) {
    if (wagers.size() != event.outcomes.size()) {
        throw Error(ErrorCode::invalid_input, "wager vector size does not match outcome count");
    }
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(wagers.size());
    for (std::size_t i = 0; i < wagers.size(); ++i) {
        atoms.emplace_back(wagers[i], event.outcomes[i].p);
    }
    return make_distribution(std::move(atoms));
}

PayoutDistribution convolve(const PayoutDistribution& a, const PayoutDistribution& b,
                            std::size_t max_atoms) {
    if (a.size() == 0 || b.size() == 0) {
        throw Error(ErrorCode::invalid_input, "convolution of an empty distribution");
    }
    if (max_atoms == 0 || a.size() > max_atoms / b.size()) {
        std::ostringstream os;
        os << "atom budget exceeded: " << a.size() << " x " << b.size() << " atoms > "
           << max_atoms;
        throw Error(ErrorCode::atom_budget_exceeded, os.str());
    }
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            atoms.emplace_back(a.values[i] + b.values[j], a.probs[i] * b.probs[j]);
        }
    }
    return make_distribution(std::move(atoms));
}

PayoutDistribution shift_distribution(const PayoutDistribution& dist, double shift) {
    std::vector<std::pair<double, double>> atoms;
    atoms.reserve(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) {
        atoms.emplace_back(dist.values[i] + shift, dist.probs[i]);
    }
    return make_distribution(std::move(atoms));
}

double expected_marginal(const PayoutDistribution& dist, double shift, const UtilitySpec& utility) {
    require_positive_wealth(dist, shift);
    return expected_over(dist, shift, [&](double w) { return utility.marginal(w); });
}

double expected_utility(const PayoutDistribution& dist, double shift, const UtilitySpec& utility) {
    require_positive_wealth(dist, shift);
    return expected_over(dist, shift, [&](double w) { return utility.value(w); });
}

double expected_curvature(const PayoutDistribution& dist, double shift, const UtilitySpec& utility) {
    require_positive_wealth(dist, shift);
    return expected_over(dist, shift, [&](double w) { return utility.curvature(w); });
}

double expected_utility_or_neg_inf(const PayoutDistribution& dist, double shift,
                                   const UtilitySpec& utility) {
    if (dist.values.empty() || !(shift + dist.values.front() > 0.0)) {
        return -std::numeric_limits<double>::infinity();
    }
    return expected_over(dist, shift, [&](double w) { return utility.value(w); });
}

}  // namespace kelly
