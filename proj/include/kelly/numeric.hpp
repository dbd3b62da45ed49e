#pragma once

#include <cmath>

namespace kelly {

/// Neumaier compensated accumulator. Summation order is chosen by the caller;
/// every expectation in this library accumulates in ascending-value order so
/// results are bit-stable across runs and thread counts.
class CompensatedSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace kelly
