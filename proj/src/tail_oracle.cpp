// Poisson and binomial tails in log form. Point masses use Loader's
// saddle-point expansion (stirlerr + bd0), which keeps the absolute error of
// log P(N = j) near machine epsilon even when log j! is in the thousands.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bergman/error.hpp"
#include "bergman/logquad.hpp"

namespace bergman {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTermCut = 1e-17;

// log(n!) - log(sqrt(2 pi n) (n/e)^n) for n = 0..15.
constexpr std::array<double, 16> kStirlingErrors = {
    0.0,
    0.08106146679532725822,
    0.041340695955409294094,
    0.027677925684998339149,
    0.020790672103765093112,
    0.016644691189821192163,
    0.013876128823070747999,
    0.011896709945891770095,
    0.010411265261972096497,
    0.0092554621827127329177,
    0.0083305634333628712565,
    0.007573675487951840795,
    0.0069428401072095298657,
    0.0064089941880042070684,
    0.0059513701127588477356,
    0.005554733551962801371,
};

double stirling_error(std::int64_t n) {
    if (n <= 15) return kStirlingErrors[static_cast<std::size_t>(n)];
    constexpr double s0 = 1.0 / 12.0;
    constexpr double s1 = 1.0 / 360.0;
    constexpr double s2 = 1.0 / 1260.0;
    constexpr double s3 = 1.0 / 1680.0;
    constexpr double s4 = 1.0 / 1188.0;
    const double x = static_cast<double>(n);
    const double nn = x * x;
    if (n > 500) return (s0 - s1 / nn) / x;
    if (n > 80) return (s0 - (s1 - s2 / nn) / nn) / x;
    if (n > 35) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / x;
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / x;
}

// x log(x/m) + m - x, without cancellation when x ~ m.
double deviance(double x, double m) {
    if (std::abs(x - m) < 0.1 * (x + m)) {
        double v = (x - m) / (x + m);
        double s = (x - m) * v;
        if (std::abs(s) < std::numeric_limits<double>::min()) return s;
        double ej = 2.0 * x * v;
        v *= v;
        for (int j = 1; j < 1000; ++j) {
            ej *= v;
            double s1 = s + ej / (2 * j + 1);
            if (s1 == s) return s1;
            s = s1;
        }
    }
    return x * std::log(x / m) + m - x;
}

void check_rate(double rate) {
    if (!(rate >= 0.0) || !std::isfinite(rate)) {
        std::ostringstream os;
        os << "Poisson rate " << rate << " must be finite and >= 0";
        throw Error(ErrorKind::BadParams, os.str());
    }
}

void check_binomial(std::int64_t n, double p) {
    if (n < 0 || !(p >= 0.0 && p <= 1.0)) {
        std::ostringstream os;
        os << "binomial parameters (" << n << ", " << p << ") invalid";
        throw Error(ErrorKind::BadParams, os.str());
    }
}

struct Tails {
    double upper;  // log P(X >= threshold)
    double lower;  // log P(X <  threshold)
};

double complement(double log_p) {
    if (log_p == -kInf) return 0.0;
    return std::log1p(-std::exp(log_p));
}

// Sums log masses starting at `first` and stepping by `dir` while terms stay
// relevant. `ratio(j)` bounds mass(j + dir) / mass(j) from above.
template <class Mass, class Ratio>
double sum_tail(std::int64_t first, std::int64_t last, int dir, Mass mass, Ratio ratio) {
    double total = -kInf;
    for (std::int64_t j = first; dir > 0 ? j <= last : j >= last; j += dir) {
        double term = mass(j);
        total = (LogValue{total} + LogValue{term}).log;
        double r = ratio(j);
        if (r < 1.0 && term < total + std::log(kTermCut * (1.0 - r))) break;
    }
    return total;
}

Tails poisson_tails(std::int64_t n, double rate) {
    if (n <= 0) return {0.0, -kInf};
    if (rate == 0.0) return {-kInf, 0.0};
    auto mass = [rate](std::int64_t j) { return log_poisson_pmf(j, rate); };
    if (static_cast<double>(n) > rate) {
        double up = sum_tail(n, std::numeric_limits<std::int64_t>::max() - 1, +1, mass,
                             [rate](std::int64_t j) { return rate / static_cast<double>(j + 1); });
        return {up, complement(up)};
    }
    double low = sum_tail(n - 1, 0, -1, mass,
                          [rate](std::int64_t j) { return static_cast<double>(j) / rate; });
    return {complement(low), low};
}

Tails binomial_tails(std::int64_t m, std::int64_t n, double p) {
    if (m <= 0) return {0.0, -kInf};
    if (p == 0.0) return {-kInf, 0.0};
    if (p == 1.0) return {0.0, -kInf};
    const double q = 1.0 - p;
    auto mass = [n, p](std::int64_t j) { return log_binomial_pmf(j, n, p); };
    if (static_cast<double>(m) > static_cast<double>(n) * p) {
        double up = sum_tail(m, n, +1, mass, [n, p, q](std::int64_t j) {
            return static_cast<double>(n - j) * p / (static_cast<double>(j + 1) * q);
        });
        return {up, complement(up)};
    }
    double low = sum_tail(m - 1, 0, -1, mass, [n, p, q](std::int64_t j) {
        return static_cast<double>(j) * q / (static_cast<double>(n - j + 1) * p);
    });
    return {complement(low), low};
}

}  // namespace

double log_poisson_pmf(std::int64_t j, double rate) {
    check_rate(rate);
    if (j < 0) return -kInf;
    if (rate == 0.0) return j == 0 ? 0.0 : -kInf;
    if (j == 0) return -rate;
    const double x = static_cast<double>(j);
    return -stirling_error(j) - deviance(x, rate) - 0.5 * std::log(2.0 * std::numbers::pi * x);
}

double log_binomial_pmf(std::int64_t j, std::int64_t n, double p) {
    check_binomial(n, p);
    if (j < 0 || j > n) return -kInf;
    const double q = 1.0 - p;
    if (p == 0.0) return j == 0 ? 0.0 : -kInf;
    if (q == 0.0) return j == n ? 0.0 : -kInf;
    const double dn = static_cast<double>(n);
    if (j == 0) {
        if (n == 0) return 0.0;
        return p < 0.1 ? -deviance(dn, dn * q) - dn * p : dn * std::log(q);
    }
    if (j == n) {
        return q < 0.1 ? -deviance(dn, dn * p) - dn * q : dn * std::log(p);
    }
    const double x = static_cast<double>(j);
    double lc = stirling_error(n) - stirling_error(j) - stirling_error(n - j) -
                deviance(x, dn * p) - deviance(dn - x, dn * q);
    double lf = std::log(2.0 * std::numbers::pi) + std::log(x) + std::log1p(-x / dn);
    return lc - 0.5 * lf;
}

LogValue oracle_tail(TailKind kind, std::int64_t threshold, const TailParams& params) {
    if (threshold < 0) throw Error(ErrorKind::BadParams, "threshold must be >= 0");
    switch (kind) {
        case TailKind::PoissonUpper:
        case TailKind::PoissonLower: {
            check_rate(params.rate);
            Tails t = poisson_tails(threshold, params.rate);
            return LogValue{kind == TailKind::PoissonUpper ? t.upper : t.lower};
        }
        case TailKind::BinomialUpper:
        case TailKind::BinomialLower: {
            check_binomial(params.trials, params.success);
            if (threshold > params.trials) {
                std::ostringstream os;
                os << "threshold " << threshold << " exceeds " << params.trials << " trials";
                throw Error(ErrorKind::BadParams, os.str());
            }
            Tails t = binomial_tails(threshold, params.trials, params.success);
            return LogValue{kind == TailKind::BinomialUpper ? t.upper : t.lower};
        }
    }
    throw Error(ErrorKind::BadParams, "unknown tail kind");
}

}  // namespace bergman
