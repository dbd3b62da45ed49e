#include "kelly/json_io.hpp"

#include <cmath>

#include <json.hpp>

#include "kelly/errors.hpp"

namespace kelly {

namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

[[noreturn]] void parse_error(const std::string& what) {
    throw Error(ErrorCode::invalid_input, "input JSON: " + what);
}

void require_fields(const json& obj, const char* where,
                    std::initializer_list<const char*> fields) {
    if (!obj.is_object()) {
        parse_error(std::string(where) + " must be an object");
    }
    for (const char* f : fields) {
        if (!obj.contains(f)) {
            parse_error(std::string(where) + " is missing field '" + f + "'");
        }
    }
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* f : fields) {
            known = known || key == f;
        }
        if (!known) {
            parse_error(std::string(where) + " has unknown field '" + key + "'");
        }
    }
}

double number_field(const json& obj, const char* where, const char* field) {
    const json& v = obj.at(field);
    if (!v.is_number()) {
        parse_error(std::string(where) + " field '" + field + "' must be a number");
    }
    return v.get<double>();
}

std::string string_field(const json& obj, const char* where, const char* field) {
    const json& v = obj.at(field);
    if (!v.is_string()) {
        parse_error(std::string(where) + " field '" + field + "' must be a string");
    }
    return v.get<std::string>();
}

/// NaN and infinities are not representable in JSON; diagnostics that can be
/// undefined or unbounded (tie margins at full support, continuation factors
/// at zero cash) serialize as null.
ordered_json number_or_null(double v) {
    if (!std::isfinite(v)) {
        return nullptr;
    }
    return v;
}

ordered_json wagers_to_json(const Market& market, const Portfolio& pf) {
    ordered_json wagers = ordered_json::array();
    for (std::size_t l = 0; l < market.events.size(); ++l) {
        for (std::size_t i = 0; i < market.events[l].outcomes.size(); ++i) {
            ordered_json w;
            w["event"] = market.events[l].label;
            w["outcome"] = market.events[l].outcomes[i].label;
            w["g"] = pf.wagers[l][i];
            wagers.push_back(std::move(w));
        }
    }
    return wagers;
}

}  // namespace

Market market_from_json(const std::string& text) {
    json root = json::parse(text, nullptr, false);
    if (root.is_discarded()) {
        parse_error("malformed JSON");
    }
    require_fields(root, "market", {"events"});
    if (!root.at("events").is_array()) {
        parse_error("'events' must be an array");
    }

    Market market;
    for (const json& ev : root.at("events")) {
        require_fields(ev, "event", {"label", "outcomes"});
        Event event;
        event.label = string_field(ev, "event", "label");
        if (!ev.at("outcomes").is_array()) {
            parse_error("event '" + event.label + "' field 'outcomes' must be an array");
        }
        for (const json& oc : ev.at("outcomes")) {
            require_fields(oc, "outcome", {"label", "p", "price"});
            Outcome outcome;
            outcome.label = string_field(oc, "outcome", "label");
            outcome.p = number_field(oc, "outcome", "p");
            outcome.price = number_field(oc, "outcome", "price");
            event.outcomes.push_back(std::move(outcome));
        }
        market.events.push_back(std::move(event));
    }
    return market;
}

std::string market_to_json(const Market& market) {
    ordered_json root;
    root["events"] = ordered_json::array();
    for (const Event& ev : market.events) {
        ordered_json e;
        e["label"] = ev.label;
        e["outcomes"] = ordered_json::array();
        for (const Outcome& oc : ev.outcomes) {
            ordered_json o;
            o["label"] = oc.label;
            o["p"] = oc.p;
            o["price"] = oc.price;
            e["outcomes"].push_back(std::move(o));
        }
        root["events"].push_back(std::move(e));
    }
    return root.dump();
}

UtilitySpec utility_from_json(const std::string& text) {
    json root = json::parse(text, nullptr, false);
    if (root.is_discarded()) {
        parse_error("malformed JSON");
    }
    if (!root.is_object() || !root.contains("kind") || !root.at("kind").is_string()) {
        parse_error("utility must be an object with a string field 'kind'");
    }
    std::string kind = root.at("kind").get<std::string>();
    if (kind == "log") {
        require_fields(root, "utility", {"kind"});
        return UtilitySpec::log();
    }
    if (kind == "crra") {
        require_fields(root, "utility", {"kind", "gamma"});
        return UtilitySpec::crra(number_field(root, "utility", "gamma"));
    }
    if (kind == "neg_exp") {
        require_fields(root, "utility", {"kind", "a"});
        return UtilitySpec::neg_exp(number_field(root, "utility", "a"));
    }
    parse_error("unknown utility kind '" + kind + "'");
}

std::string utility_to_json(const UtilitySpec& utility) {
    ordered_json root;
    switch (utility.kind()) {
        case UtilityKind::log:
            root["kind"] = "log";
            break;
        case UtilityKind::crra:
            root["kind"] = "crra";
            root["gamma"] = utility.gamma();
            break;
        case UtilityKind::neg_exp:
            root["kind"] = "neg_exp";
            root["a"] = utility.coef();
            break;
    }
    return root.dump();
}

std::string support_report_to_json(const Market& market, const SupportFamily& family) {
    ordered_json root;
    root["events"] = ordered_json::array();
    for (std::size_t l = 0; l < market.events.size(); ++l) {
        const Event& event = market.events[l];
        const EventSupport& s = family.events[l];
        ordered_json e;
        e["label"] = event.label;
        e["k"] = s.prefix.k;
        e["P"] = s.prefix.P;
        e["Q"] = s.prefix.Q;
        e["threshold"] = (1.0 - s.prefix.P) / (1.0 - s.prefix.Q);
        e["margin"] = number_or_null(s.tie_margin);
        e["order"] = s.order;
        ordered_json sorted = ordered_json::array();
        for (std::size_t j = 0; j < s.order.size(); ++j) {
            const Outcome& o = event.outcomes[s.order[j]];
            ordered_json oc;
            oc["label"] = o.label;
            oc["edge_ratio"] = edge_ratio(o);
            oc["active"] = j < s.prefix.k;
            sorted.push_back(std::move(oc));
        }
        e["outcomes"] = std::move(sorted);
        root["events"].push_back(std::move(e));
    }
    return root.dump();
}

std::string solve_report_to_json(const Market& market, const SolveReport& report) {
    ordered_json root;
    root["cash"] = report.portfolio.cash;
    root["wagers"] = wagers_to_json(market, report.portfolio);
    root["lambda"] = report.lambda;
    root["objective"] = report.objective;
    root["events"] = ordered_json::array();
    for (std::size_t l = 0; l < report.events.size(); ++l) {
        const EventReport& er = report.events[l];
        ordered_json e;
        e["label"] = er.label;
        e["k"] = er.k;
        e["P"] = er.P;
        e["Q"] = er.Q;
        e["threshold"] = number_or_null(er.threshold);
        e["K"] = number_or_null(er.K);
        e["identity_residual"] = er.identity_residual;
        ordered_json margins = ordered_json::array();
        for (const auto& rc : er.reduced_cost_margins) {
            ordered_json mj;
            mj["outcome"] = market.events[l].outcomes[rc.outcome].label;
            mj["margin"] = rc.margin;
            margins.push_back(std::move(mj));
        }
        e["reduced_cost_margins"] = std::move(margins);
        e["active_stationarity"] = er.active_stationarity;
        e["conditioning_residual"] = er.conditioning_residual;
        e["tie_margin"] = number_or_null(er.tie_margin);
        root["events"].push_back(std::move(e));
    }
    ordered_json boundary;
    boundary["active"] = report.boundary_active;
    boundary["nu"] = report.nu;
    root["boundary"] = std::move(boundary);
    root["converged"] = report.converged;
    root["iterations"] = report.iterations;
    root["max_stationarity_residual"] = number_or_null(report.max_stationarity_residual);
    return root.dump();
}

std::string oracle_solution_to_json(const Market& market, const OracleSolution& solution) {
    ordered_json root;
    root["cash"] = solution.portfolio.cash;
    root["wagers"] = wagers_to_json(market, solution.portfolio);
    root["objective"] = solution.objective;
    root["lambda_hat"] = number_or_null(solution.lambda_hat);
    root["support"] = ordered_json::array();
    for (std::size_t l = 0; l < market.events.size(); ++l) {
        ordered_json e;
        e["label"] = market.events[l].label;
        ordered_json active = ordered_json::array();
        for (std::size_t idx : solution.support[l]) {
            active.push_back(market.events[l].outcomes[idx].label);
        }
        e["outcomes"] = std::move(active);
        root["support"].push_back(std::move(e));
    }
    root["converged"] = solution.converged;
    root["pg_residual"] = solution.pg_residual;
    root["iterations"] = solution.iterations;
    root["winning_start"] = solution.winning_start;
    root["largest_inactive_wager"] = number_or_null(solution.largest_inactive_wager);
    root["smallest_active_wager"] = number_or_null(solution.smallest_active_wager);
    return root.dump();
}

std::string comparison_to_json(const ComparisonReport& cmp) {
    ordered_json root;
    root["support_equal"] = cmp.support_equal;
    root["max_wager_deviation"] = cmp.max_wager_deviation;
    root["objective_solver"] = cmp.objective_solver;
    root["objective_oracle"] = cmp.objective_oracle;
    root["objective_gap"] = cmp.objective_gap;
    root["lambda_gap"] = number_or_null(cmp.lambda_gap);
    root["largest_inactive_wager"] = number_or_null(cmp.largest_inactive_wager);
    root["smallest_active_wager"] = number_or_null(cmp.smallest_active_wager);
    return root.dump();
}

}  // namespace kelly
