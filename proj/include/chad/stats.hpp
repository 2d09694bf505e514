#pragma once

// Small numeric helpers shared by the estimators and the dynamic program.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace chad {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf    =  std::numeric_limits<double>::infinity();

// log(e^a + e^b) without overflow; tolerates -inf on either side.
inline double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = a > b ? a : b;
    return m + std::log1p(std::exp((a > b ? b : a) - m));
}

// 1 / (1 + e^x), evaluated from the side that avoids overflow.  Used to turn
// terminal log odds into P(no change yet): 1/(1+Gamma) = sigmoid(-log Gamma).
inline double inv_one_plus_exp(double x) {
    if (x == kNegInf) return 1.0;
    if (x == kInf) return 0.0;
    if (x > 0) {
        const double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
}

// log(x / (1 - x)) for x in [0, 1]; the ends map to +-inf.
inline double logit(double x) {
    if (x <= 0.0) return kNegInf;
    if (x >= 1.0) return kInf;
    return std::log(x) - std::log1p(-x);
}

// Compensated (Neumaier) running sum.  Replication reductions happen in a
// fixed order, so the result is independent of the thread count; the
// compensation keeps 1e5+ term sums accurate enough for the identity checks.
class KahanSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct MeanSE {
    double mean = 0.0;
    double se = 0.0;  // standard error of the mean
};

// Two-pass mean and standard error.  Deterministic for a fixed input order.
inline MeanSE mean_se(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n == 0) return {};
    KahanSum s;
    for (double x : xs) s.add(x);
    const double mean = s.value() / static_cast<double>(n);
    if (n == 1) return {mean, 0.0};
    KahanSum sq;
    for (double x : xs) {
        const double d = x - mean;
        sq.add(d * d);
    }
    const double var = sq.value() / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

} // namespace chad
