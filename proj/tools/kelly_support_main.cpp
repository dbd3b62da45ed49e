#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "kelly/errors.hpp"
#include "kelly/json_io.hpp"
#include "kelly/market.hpp"
#include "kelly/multi_event.hpp"
#include "kelly/oracle.hpp"
#include "kelly/support.hpp"
#include "kelly/utility.hpp"

namespace {

// Exit-code contract, fixed for scripting:
//   0 ok, 2 validation error, 3 degeneracy, 4 no convergence, 5 verify mismatch.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitDegeneracy = 3;
constexpr int kExitNoConvergence = 4;
constexpr int kExitVerifyMismatch = 5;

struct CliConfig {
    std::string input_path;
    std::string utility_name = "log";
    double gamma = 2.0;
    double coef = 1.0;
    double tol = 1e-10;
    std::size_t max_atoms = kelly::kDefaultMaxAtoms;
    std::string format = "json";
    bool renormalize = false;
    bool allow_subfair = false;
};

std::string shortest(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw kelly::Error(kelly::ErrorCode::invalid_input, "cannot open input file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

unsigned thread_cap_from_env() {
    const char* env = std::getenv("KELLY_SUPPORT_THREADS");
    if (env == nullptr || *env == '\0') {
        return 1;
    }
    long v = std::strtol(env, nullptr, 10);
    return v > 0 ? static_cast<unsigned>(v) : 1;
}

kelly::UtilitySpec utility_from_config(const CliConfig& cfg) {
    if (cfg.utility_name == "log") {
        return kelly::UtilitySpec::log();
    }
    if (cfg.utility_name == "crra") {
        return kelly::UtilitySpec::crra(cfg.gamma);
    }
    if (cfg.utility_name == "neg_exp") {
        return kelly::UtilitySpec::neg_exp(cfg.coef);
    }
    throw kelly::Error(kelly::ErrorCode::invalid_input,
                       "unknown utility '" + cfg.utility_name + "'");
}

/// Loads, optionally renormalizes, and validates the market. Returns the
/// exit code to use when validation fails, 0 otherwise.
int load_market(const CliConfig& cfg, kelly::Market& market) {
    market = kelly::market_from_json(read_file(cfg.input_path));
    market.overround_policy = cfg.allow_subfair ? kelly::OverroundPolicy::allow_with_warning
                                                : kelly::OverroundPolicy::require_strict;
    if (cfg.renormalize) {
        kelly::renormalize_probabilities(market);
    }
    kelly::ValidationReport report = kelly::validate_market(market);
    for (const auto& issue : report.issues) {
        if (issue.severity == kelly::IssueSeverity::warning) {
            std::cerr << "warning";
            if (!issue.event_label.empty()) {
                std::cerr << " [" << issue.event_label << "]";
            }
            std::cerr << ": " << issue.message << "\n";
        }
    }
    if (!report.ok()) {
        std::cerr << report.summary();
        return report.has_degeneracy_error() ? kExitDegeneracy : kExitValidation;
    }
    return kExitOk;
}

void print_support_table(const kelly::Market& market, const kelly::SupportFamily& family) {
    for (std::size_t l = 0; l < market.events.size(); ++l) {
        const kelly::Event& event = market.events[l];
        const kelly::EventSupport& s = family.events[l];
        std::cout << "event " << event.label << ": k=" << s.prefix.k
                  << " P=" << shortest(s.prefix.P) << " Q=" << shortest(s.prefix.Q)
                  << " threshold=" << shortest((1.0 - s.prefix.P) / (1.0 - s.prefix.Q));
        if (!std::isnan(s.tie_margin)) {
            std::cout << " margin=" << shortest(s.tie_margin);
        }
        std::cout << "\n";
        for (std::size_t j = 0; j < s.order.size(); ++j) {
            const kelly::Outcome& o = event.outcomes[s.order[j]];
            std::cout << "  " << (j < s.prefix.k ? "active  " : "inactive") << "  " << o.label
                      << "  r=" << shortest(kelly::edge_ratio(o)) << "\n";
        }
    }
}

void print_solve_table(const kelly::Market& market, const kelly::SolveReport& report) {
    std::cout << "cash=" << shortest(report.portfolio.cash)
              << " lambda=" << shortest(report.lambda)
              << " objective=" << shortest(report.objective)
              << " converged=" << (report.converged ? "true" : "false") << "\n";
    if (report.boundary_active) {
        std::cout << "boundary regime: nu=" << shortest(report.nu) << "\n";
    }
    for (std::size_t l = 0; l < market.events.size(); ++l) {
        const kelly::EventReport& er = report.events[l];
        std::cout << "event " << er.label << ": k=" << er.k << " P=" << shortest(er.P)
                  << " Q=" << shortest(er.Q) << " threshold=" << shortest(er.threshold)
                  << " K=" << shortest(er.K)
                  << " identity_residual=" << shortest(er.identity_residual) << "\n";
        for (std::size_t i = 0; i < market.events[l].outcomes.size(); ++i) {
            const kelly::Outcome& o = market.events[l].outcomes[i];
            std::cout << "  " << o.label << "  g=" << shortest(report.portfolio.wagers[l][i])
                      << "\n";
        }
    }
}

int cmd_support(const CliConfig& cfg) {
    kelly::Market market;
    if (int rc = load_market(cfg, market); rc != kExitOk) {
        return rc;
    }
    kelly::SupportFamily family = kelly::simultaneous_support(market);
    if (cfg.format == "json") {
        std::cout << kelly::support_report_to_json(market, family) << "\n";
    } else {
        print_support_table(market, family);
    }
    return kExitOk;
}

int cmd_solve(const CliConfig& cfg) {
    kelly::Market market;
    if (int rc = load_market(cfg, market); rc != kExitOk) {
        return rc;
    }
    kelly::UtilitySpec utility = utility_from_config(cfg);
    kelly::SupportFamily family = kelly::simultaneous_support(market);
    kelly::SolverOptions options;
    options.stationarity_tol = cfg.tol;
    options.max_atoms = cfg.max_atoms;
    options.threads = thread_cap_from_env();
    kelly::SolveReport report = kelly::fixed_support_solve(market, family, utility, options);
    if (cfg.format == "json") {
        std::cout << kelly::solve_report_to_json(market, report) << "\n";
    } else {
        print_solve_table(market, report);
    }
    return report.converged ? kExitOk : kExitNoConvergence;
}

int cmd_oracle(const CliConfig& cfg) {
    kelly::Market market;
    if (int rc = load_market(cfg, market); rc != kExitOk) {
        return rc;
    }
    kelly::UtilitySpec utility = utility_from_config(cfg);
    kelly::OracleOptions options;
    kelly::OracleSolution sol = kelly::oracle_solve(market, utility, options);
    if (cfg.format == "json") {
        std::cout << kelly::oracle_solution_to_json(market, sol) << "\n";
    } else {
        std::cout << "cash=" << shortest(sol.portfolio.cash)
                  << " objective=" << shortest(sol.objective)
                  << " converged=" << (sol.converged ? "true" : "false")
                  << " pg_residual=" << shortest(sol.pg_residual) << "\n";
        for (std::size_t l = 0; l < market.events.size(); ++l) {
            for (std::size_t i = 0; i < market.events[l].outcomes.size(); ++i) {
                std::cout << "  " << market.events[l].label << "/"
                          << market.events[l].outcomes[i].label
                          << "  g=" << shortest(sol.portfolio.wagers[l][i]) << "\n";
            }
        }
    }
    return sol.converged ? kExitOk : kExitNoConvergence;
}

int cmd_verify(const CliConfig& cfg) {
    kelly::Market market;
    if (int rc = load_market(cfg, market); rc != kExitOk) {
        return rc;
    }
    kelly::UtilitySpec utility = utility_from_config(cfg);

    kelly::SupportFamily family = kelly::simultaneous_support(market);
    kelly::SolverOptions options;
    options.stationarity_tol = cfg.tol;
    options.max_atoms = cfg.max_atoms;
    options.threads = thread_cap_from_env();
    kelly::SolveReport report = kelly::fixed_support_solve(market, family, utility, options);
    kelly::OracleSolution sol = kelly::oracle_solve(market, utility);
    kelly::ComparisonReport cmp = kelly::compare(market, sol, report);

    if (cfg.format == "json") {
        std::cout << kelly::comparison_to_json(cmp) << "\n";
    } else {
        std::cout << "support_equal=" << (cmp.support_equal ? "true" : "false")
                  << " objective_gap=" << shortest(cmp.objective_gap)
                  << " max_wager_deviation=" << shortest(cmp.max_wager_deviation) << "\n";
    }
    bool ok = cmp.support_equal && cmp.objective_within(1e-9);
    return ok ? kExitOk : kExitVerifyMismatch;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Support selection and expected-utility portfolio solver for simultaneous "
                 "independent wagering markets"};
    app.require_subcommand(1);

    CliConfig cfg;
    auto add_common = [&](CLI::App* sub, bool with_utility) {
        sub->add_option("--input", cfg.input_path, "Market JSON file")->required();
        sub->add_option("--format", cfg.format, "Output format")
            ->check(CLI::IsMember({"json", "table"}));
        sub->add_flag("--renormalize", cfg.renormalize,
                      "Rescale probabilities to sum to one before validating");
        sub->add_flag("--allow-subfair", cfg.allow_subfair,
                      "Downgrade fair/sub-fair events to warnings");
        if (with_utility) {
            sub->add_option("--utility", cfg.utility_name, "Utility family")
                ->check(CLI::IsMember({"log", "crra", "neg_exp"}));
            sub->add_option("--gamma", cfg.gamma, "CRRA exponent");
            sub->add_option("--a", cfg.coef, "neg_exp coefficient");
            sub->add_option("--tol", cfg.tol, "Solver stationarity tolerance");
            sub->add_option("--max-atoms", cfg.max_atoms, "Convolution atom budget");
        }
    };

    CLI::App* support = app.add_subcommand("support", "Compute the active support per event");
    add_common(support, false);
    CLI::App* solve = app.add_subcommand("solve", "Solve on the selected support");
    add_common(solve, true);
    CLI::App* verify =
        app.add_subcommand("verify", "Cross-check the solver against the brute-force oracle");
    add_common(verify, true);
    CLI::App* oracle = app.add_subcommand("oracle", "Run the brute-force oracle alone");
    add_common(oracle, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (support->parsed()) {
            return cmd_support(cfg);
        }
        if (solve->parsed()) {
            return cmd_solve(cfg);
        }
        if (verify->parsed()) {
            return cmd_verify(cfg);
        }
        if (oracle->parsed()) {
            return cmd_oracle(cfg);
        }
    } catch (const kelly::Error& e) {
        std::cerr << "error (" << kelly::error_code_name(e.code()) << "): " << e.what() << "\n";
        switch (e.code()) {
            case kelly::ErrorCode::degenerate_denominator:
                return kExitDegeneracy;
            case kelly::ErrorCode::no_convergence:
                return kExitNoConvergence;
            default:
                return kExitValidation;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
