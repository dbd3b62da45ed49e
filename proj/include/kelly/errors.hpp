#pragma once

#include <stdexcept>
#include <string>

namespace kelly {

enum class ErrorCode {
    invalid_input,
    marginal_domain,
    degenerate_denominator,
    bracket_failure,
    support_inconsistency,
    atom_budget_exceeded,
    nonpositive_wealth,
    no_convergence,
};

/// Library-wide exception. `code()` drives the CLI exit-code mapping.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_input: return "invalid_input";
        case ErrorCode::marginal_domain: return "marginal_domain";
        case ErrorCode::degenerate_denominator: return "degenerate_denominator";
        case ErrorCode::bracket_failure: return "bracket_failure";
        case ErrorCode::support_inconsistency: return "support_inconsistency";
        case ErrorCode::atom_budget_exceeded: return "atom_budget_exceeded";
        case ErrorCode::nonpositive_wealth: return "nonpositive_wealth";
        case ErrorCode::no_convergence: return "no_convergence";
    }
    return "unknown";
}

}  // namespace kelly
