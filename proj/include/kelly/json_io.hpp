#pragma once

#include <string>

#include "kelly/market.hpp"
#include "kelly/multi_event.hpp"
#include "kelly/oracle.hpp"
#include "kelly/support.hpp"
#include "kelly/utility.hpp"

namespace kelly {

/// Parses {"events":[{"label":...,"outcomes":[{"label":...,"p":...,"price":...}]}]}.
/// Parsing is strict: unknown fields and wrong types are errors.
Market market_from_json(const std::string& text);

std::string market_to_json(const Market& market);

/// Parses {"kind":"log"} | {"kind":"crra","gamma":...} | {"kind":"neg_exp","a":...}.
UtilitySpec utility_from_json(const std::string& text);

std::string utility_to_json(const UtilitySpec& utility);

/// Serializers share one float policy (shortest round-trip decimals) and a
/// fixed field order, so identical inputs produce byte-identical output.
std::string support_report_to_json(const Market& market, const SupportFamily& family);

std::string solve_report_to_json(const Market& market, const SolveReport& report);

std::string oracle_solution_to_json(const Market& market, const OracleSolution& solution);

std::string comparison_to_json(const ComparisonReport& cmp);

}  // namespace kelly
