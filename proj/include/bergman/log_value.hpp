#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>

namespace bergman {

/// A positive quantity stored as its natural logarithm. -inf encodes zero.
struct LogValue {
    double log = -std::numeric_limits<double>::infinity();

    static constexpr LogValue zero() { return {}; }
    static LogValue from_linear(double v) { return {std::log(v)}; }

    bool is_zero() const { return log == -std::numeric_limits<double>::infinity(); }
    double value() const { return std::exp(log); }

    friend LogValue operator+(LogValue a, LogValue b) {
        if (a.log < b.log) std::swap(a, b);
        if (b.is_zero()) return a;
        return {a.log + std::log1p(std::exp(b.log - a.log))};
    }
    LogValue& operator+=(LogValue o) { return *this = *this + o; }

    friend LogValue operator*(LogValue a, LogValue b) { return {a.log + b.log}; }
    friend LogValue operator/(LogValue a, LogValue b) { return {a.log - b.log}; }

    friend bool operator<(LogValue a, LogValue b) { return a.log < b.log; }
};

inline LogValue log_add(double a, double b) { return LogValue{a} + LogValue{b}; }

/// log(sum(exp(xs))), max-shifted, summed in the given order.
inline double log_sum_exp(std::span<const double> xs) {
    constexpr double ninf = -std::numeric_limits<double>::infinity();
    double m = ninf;
    for (double x : xs) m = std::max(m, x);
    if (m == ninf) return ninf;
    if (m == std::numeric_limits<double>::infinity()) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace bergman
