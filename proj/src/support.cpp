#include "kelly/support.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "kelly/errors.hpp"

namespace kelly {

std::size_t SupportFamily::active_count() const {
    std::size_t n = 0;
    for (const auto& e : events) {
        n += e.prefix.k;
    }
    return n;
}

double threshold(double P, double Q) {
    if (Q >= 1.0) {
        std::ostringstream os;
        os << "degenerate threshold denominator: active price mass Q = " << Q << " >= 1";
        throw Error(ErrorCode::degenerate_denominator, os.str());
    }
    return (1.0 - P) / (1.0 - Q);
}

EventSupport single_event_support(const Event& event) {
    EventSupport support;
    support.order = sort_event(event);
    const std::size_t n = support.order.size();

    double P = 0.0;
    double Q = 0.0;
    std::size_t k = 0;
    while (k < n) {
        // Cannot fire after a rule-based inclusion when probabilities sum to
        // one and the overround is strict, but allow_with_warning inputs can
        // reach it.
        if (Q >= 1.0) {
            std::ostringstream os;
            os << "event '" << event.label << "': active price mass reached " << Q
               << " >= 1 while the stopping rule would continue";
            throw Error(ErrorCode::degenerate_denominator, os.str());
        }
        const Outcome& next = event.outcomes[support.order[k]];
        double r_next = edge_ratio(next);
        if (r_next <= threshold(P, Q)) {
            break;  // equality outcomes stay inactive
        }
        P += next.p;
        Q += next.price;
        ++k;
    }

    if (k == n && Q >= 1.0) {
        std::ostringstream os;
        os << "event '" << event.label << "': full support selected with price mass " << Q
           << " >= 1";
        throw Error(ErrorCode::degenerate_denominator, os.str());
    }

    support.prefix = PrefixState{k, P, Q};
    if (k < n) {
        support.tie_margin =
            edge_ratio(event.outcomes[support.order[k]]) - threshold(P, Q);
    } else {
        support.tie_margin = std::numeric_limits<double>::quiet_NaN();
    }
    return support;
}

SupportFamily simultaneous_support(const Market& market) {
    SupportFamily family;
    family.events.reserve(market.events.size());
    for (const auto& event : market.events) {
        family.events.push_back(single_event_support(event));
    }
    return family;
}

}  // namespace kelly
