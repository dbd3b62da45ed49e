#pragma once

#include <string>

namespace kelly {

enum class UtilityKind { log, crra, neg_exp };

/// Member of the admissible utility family: strictly increasing, strictly
/// concave on (0, inf), with closed-form marginal and inverse marginal.
///
/// Bundled members:
///   log        U(w) = ln w
///   crra(g)    U(w) = w^(1-g) / (1-g), g > 0; crra(1) is dispatched to log
///   neg_exp(a) U(w) = -exp(-a w),      a > 0
class UtilitySpec {
public:
    static UtilitySpec log();
    static UtilitySpec crra(double gamma);
    static UtilitySpec neg_exp(double a);

    UtilityKind kind() const { return kind_; }
    double gamma() const { return gamma_; }
    double coef() const { return a_; }
    std::string name() const;

    /// U(w). Returns -infinity for w <= 0: wealth positivity is a hard
    /// constraint and line searches use the value as a feasibility sentinel.
    double value(double w) const;

    /// U'(w), w > 0. Strictly positive, strictly decreasing.
    double marginal(double w) const;

    /// (U')^{-1}(y). For neg_exp the range of U' is (0, a); arguments outside
    /// it throw ErrorCode::marginal_domain. For log/crra any y > 0 is valid.
    double marginal_inverse(double y) const;

    /// d/dy (U')^{-1}(y), same domain as marginal_inverse.
    double marginal_inverse_derivative(double y) const;

    /// U''(w), w > 0. Strictly negative.
    double curvature(double w) const;

private:
    UtilitySpec(UtilityKind kind, double gamma, double a) : kind_(kind), gamma_(gamma), a_(a) {}

    UtilityKind kind_;
    double gamma_ = 0.0;  // crra exponent
    double a_ = 0.0;      // neg_exp coefficient
};

}  // namespace kelly
