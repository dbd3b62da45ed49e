#include "kelly/utility.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "kelly/errors.hpp"

namespace kelly {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void domain_error(const char* what, double y) {
    std::ostringstream os;
    os << "marginal_inverse domain error: " << what << " (argument " << y << ")";
    throw Error(ErrorCode::marginal_domain, os.str());
}
}  // namespace

UtilitySpec UtilitySpec::log() { return UtilitySpec(UtilityKind::log, 1.0, 0.0); }

UtilitySpec UtilitySpec::crra(double gamma) {
    if (!(gamma > 0.0)) {
        throw Error(ErrorCode::invalid_input, "crra gamma must be positive");
    }
    if (gamma == 1.0) {
        return log();  // removable singularity in the (U')^{-1} exponent
    }
    return UtilitySpec(UtilityKind::crra, gamma, 0.0);
}

UtilitySpec UtilitySpec::neg_exp(double a) {
    if (!(a > 0.0)) {
        throw Error(ErrorCode::invalid_input, "neg_exp coefficient must be positive");
    }
    return UtilitySpec(UtilityKind::neg_exp, 0.0, a);
}

std::string UtilitySpec::name() const {
    std::ostringstream os;
    switch (kind_) {
        case UtilityKind::log: os << "log"; break;
        case UtilityKind::crra: os << "crra(" << gamma_ << ")"; break;
        case UtilityKind::neg_exp: os << "neg_exp(" << a_ << ")"; break;
    }
    return os.str();
}

double UtilitySpec::value(double w) const {
    if (!(w > 0.0)) {
        return -kInf;
    }
    switch (kind_) {
        case UtilityKind::log: return std::log(w);
        case UtilityKind::crra: return std::pow(w, 1.0 - gamma_) / (1.0 - gamma_);
        case UtilityKind::neg_exp: return -std::exp(-a_ * w);
    }
    return -kInf;
}

double UtilitySpec::marginal(double w) const {
    switch (kind_) {
        case UtilityKind::log: return 1.0 / w;
        case UtilityKind::crra: return std::pow(w, -gamma_);
        case UtilityKind::neg_exp: return a_ * std::exp(-a_ * w);
    }
    return 0.0;
}

double UtilitySpec::marginal_inverse(double y) const {
    if (!(y > 0.0)) {
        domain_error("argument must be positive", y);
    }
    switch (kind_) {
        case UtilityKind::log: return 1.0 / y;
        case UtilityKind::crra: return std::pow(y, -1.0 / gamma_);
        case UtilityKind::neg_exp:
            if (y >= a_) {
                domain_error("argument at or above the upper bound of the marginal range", y);
            }
            // log of the ratio, not a difference of logs: y/a is near 1 for
            // small wealths and the subtraction would cancel.
            return -std::log(y / a_) / a_;
    }
    return 0.0;
}

double UtilitySpec::marginal_inverse_derivative(double y) const {
    if (!(y > 0.0)) {
        domain_error("argument must be positive", y);
    }
    switch (kind_) {
        case UtilityKind::log: return -1.0 / (y * y);
        case UtilityKind::crra: return -(1.0 / gamma_) * std::pow(y, -1.0 / gamma_ - 1.0);
        case UtilityKind::neg_exp:
            if (y >= a_) {
                domain_error("argument at or above the upper bound of the marginal range", y);
            }
            return -1.0 / (a_ * y);
    }
    return 0.0;
}

double UtilitySpec::curvature(double w) const {
    switch (kind_) {
        case UtilityKind::log: return -1.0 / (w * w);
        case UtilityKind::crra: return -gamma_ * std::pow(w, -gamma_ - 1.0);
        case UtilityKind::neg_exp: return -a_ * a_ * std::exp(-a_ * w);
    }
    return 0.0;
}

}  // namespace kelly
