#include "kelly/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "kelly/errors.hpp"

namespace kelly {

namespace {
constexpr double kProbSumTol = 1e-12;
}

bool ValidationReport::ok() const {
    return std::none_of(issues.begin(), issues.end(),
                        [](const ValidationIssue& i) { return i.severity == IssueSeverity::error; });
}

bool ValidationReport::has_degeneracy_error() const {
    return std::any_of(issues.begin(), issues.end(), [](const ValidationIssue& i) {
        return i.severity == IssueSeverity::error && i.category == IssueCategory::degeneracy;
    });
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (const auto& i : issues) {
        os << (i.severity == IssueSeverity::error ? "error" : "warning");
        if (!i.event_label.empty()) {
            os << " [" << i.event_label << "]";
        }
        os << ": " << i.message << "\n";
    }
    return os.str();
}

ValidationReport validate_market(const Market& market) {
    ValidationReport report;
    auto add = [&](IssueSeverity sev, IssueCategory cat, const std::string& label, const std::string& msg) {
        report.issues.push_back(ValidationIssue{sev, cat, label, msg});
    };

    if (market.events.empty()) {
        add(IssueSeverity::error, IssueCategory::data, "", "market has no events");
        return report;
    }

    for (const auto& event : market.events) {
        if (event.outcomes.empty()) {
            add(IssueSeverity::error, IssueCategory::data, event.label, "event has no outcomes");
            continue;
        }

        std::unordered_set<std::string> labels;
        double prob_sum = 0.0;
        double price_sum = 0.0;
        for (std::size_t i = 0; i < event.outcomes.size(); ++i) {
            const Outcome& o = event.outcomes[i];
            if (!(o.p > 0.0) || !std::isfinite(o.p)) {
                std::ostringstream os;
                os << "outcome '" << o.label << "' has non-positive probability " << o.p;
                add(IssueSeverity::error, IssueCategory::data, event.label, os.str());
            }
            if (!(o.price > 0.0) || !std::isfinite(o.price)) {
                std::ostringstream os;
                os << "outcome '" << o.label << "' has non-positive price " << o.price;
                add(IssueSeverity::error, IssueCategory::data, event.label, os.str());
            }
            if (!labels.insert(o.label).second) {
                add(IssueSeverity::error, IssueCategory::data, event.label,
                    "duplicate outcome label '" + o.label + "'");
            }
            prob_sum += o.p;
            price_sum += o.price;
        }

        if (std::abs(prob_sum - 1.0) > kProbSumTol) {
            std::ostringstream os;
            os << "probabilities sum to " << prob_sum << " (tolerance 1e-12; pass --renormalize to rescale)";
            add(IssueSeverity::error, IssueCategory::data, event.label, os.str());
        }

        if (price_sum <= 1.0) {
            std::ostringstream os;
            bool fair = std::abs(price_sum - 1.0) <= kProbSumTol;
            if (fair) {
                os << "fair-event cash-shift degeneracy risk: prices sum to exactly 1";
            } else {
                os << "event is sub-fair: prices sum to " << price_sum << " <= 1";
            }
            if (market.overround_policy == OverroundPolicy::require_strict) {
                add(IssueSeverity::error, IssueCategory::degeneracy, event.label, os.str());
            } else {
                add(IssueSeverity::warning, IssueCategory::degeneracy, event.label, os.str());
            }
        }
    }

    return report;
}

double edge_ratio(const Outcome& outcome) { return outcome.p / outcome.price; }

std::vector<std::size_t> sort_event(const Event& event) {
    std::vector<std::size_t> order(event.outcomes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return edge_ratio(event.outcomes[a]) > edge_ratio(event.outcomes[b]);
    });
    return order;
}

void renormalize_probabilities(Market& market) {
    for (auto& event : market.events) {
        double sum = 0.0;
        for (const auto& o : event.outcomes) {
            sum += o.p;
        }
        if (sum > 0.0) {
            for (auto& o : event.outcomes) {
                o.p /= sum;
            }
        }
    }
}

double budget_residual(const Market& market, const Portfolio& portfolio) {
    double spent = portfolio.cash;
    for (std::size_t l = 0; l < market.events.size(); ++l) {
        const auto& outcomes = market.events[l].outcomes;
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            spent += outcomes[i].price * portfolio.wagers[l][i];
        }
    }
    return spent - 1.0;
}

double min_wealth(const Portfolio& portfolio) {
    double w = portfolio.cash;
    for (const auto& event_wagers : portfolio.wagers) {
        double lo = std::numeric_limits<double>::infinity();
        for (double g : event_wagers) {
            lo = std::min(lo, g);
        }
        w += lo;
    }
    return w;
}

std::size_t product_state_count(const Market& market) {
    std::size_t count = 1;
    for (const auto& event : market.events) {
        if (event.outcomes.empty()) {
            return 0;
        }
        if (count > std::numeric_limits<std::size_t>::max() / event.outcomes.size()) {
            throw Error(ErrorCode::invalid_input, "product-state count overflows");
        }
        count *= event.outcomes.size();
    }
    return count;
}

Portfolio all_cash_portfolio(const Market& market) {
    Portfolio pf;
    pf.cash = 1.0;
    pf.wagers.reserve(market.events.size());
    for (const auto& event : market.events) {
        pf.wagers.emplace_back(event.outcomes.size(), 0.0);
    }
    return pf;
}

}  // namespace kelly
