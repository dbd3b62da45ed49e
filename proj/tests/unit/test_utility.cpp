#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "kelly/errors.hpp"
#include "kelly/utility.hpp"

using kelly::Error;
using kelly::UtilityKind;
using kelly::UtilitySpec;

namespace {

void check_roundtrip(const UtilitySpec& u, const std::vector<double>& points) {
    for (double w : points) {
        double back = u.marginal_inverse(u.marginal(w));
        CHECK(std::abs(back - w) <= 1e-12 * w);
    }
}

void check_decreasing_positive(const UtilitySpec& u) {
    double prev = std::numeric_limits<double>::infinity();
    for (double w : {1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0, 10.0, 1e3}) {
        double m = u.marginal(w);
        CHECK(m > 0.0);
        CHECK(m < prev);
        prev = m;
    }
}

}  // namespace

TEST_CASE("marginal and inverse round-trip at sampled wealths") {
    check_roundtrip(UtilitySpec::log(), {1e-6, 1e-3, 1.0, 1e3});
    check_roundtrip(UtilitySpec::crra(0.5), {1e-6, 1e-3, 1.0, 1e3});
    check_roundtrip(UtilitySpec::crra(3.0), {1e-6, 1e-3, 1.0, 1e3});
    // neg_exp carries small wealths as exp(-a w) ~ 1 - a w, so a double
    // cannot hold w = 1e-6 to 1e-12 relative after the round trip (the
    // information is below the representational resolution of the marginal),
    // and the marginal underflows outright once a*w passes exp's range. The
    // samples stay where the inverse is representable.
    check_roundtrip(UtilitySpec::neg_exp(0.5), {1e-3, 1.0, 1e3});
    check_roundtrip(UtilitySpec::neg_exp(1.0), {1e-3, 1.0, 500.0});
}

TEST_CASE("marginal is strictly positive and strictly decreasing") {
    check_decreasing_positive(UtilitySpec::log());
    check_decreasing_positive(UtilitySpec::crra(0.5));
    check_decreasing_positive(UtilitySpec::crra(3.0));
    check_decreasing_positive(UtilitySpec::neg_exp(0.25));
}

TEST_CASE("crra(1) dispatches to log") {
    UtilitySpec u = UtilitySpec::crra(1.0);
    CHECK(u.kind() == UtilityKind::log);
    CHECK(u.value(2.0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("value is -infinity at non-positive wealth") {
    for (const auto& u : {UtilitySpec::log(), UtilitySpec::crra(0.5), UtilitySpec::neg_exp(1.0)}) {
        CHECK(u.value(0.0) == -std::numeric_limits<double>::infinity());
        CHECK(u.value(-1.0) == -std::numeric_limits<double>::infinity());
    }
}

TEST_CASE("neg_exp inverse rejects arguments outside the marginal range") {
    UtilitySpec u = UtilitySpec::neg_exp(2.0);
    CHECK_THROWS_AS(u.marginal_inverse(2.0), Error);
    CHECK_THROWS_AS(u.marginal_inverse(3.0), Error);
    CHECK_THROWS_AS(u.marginal_inverse(0.0), Error);
    CHECK(u.marginal_inverse(2.0 * std::exp(-2.0)) == doctest::Approx(1.0));
}

TEST_CASE("curvature is strictly negative") {
    for (const auto& u : {UtilitySpec::log(), UtilitySpec::crra(2.0), UtilitySpec::neg_exp(0.7)}) {
        for (double w : {0.1, 1.0, 5.0}) {
            CHECK(u.curvature(w) < 0.0);
        }
    }
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(UtilitySpec::crra(0.0), Error);
    CHECK_THROWS_AS(UtilitySpec::crra(-1.0), Error);
    CHECK_THROWS_AS(UtilitySpec::neg_exp(0.0), Error);
}
