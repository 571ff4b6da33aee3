#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "bergman/error.hpp"
#include "bergman/logquad.hpp"

using namespace bergman;

namespace {

// Direct long-double summation of Poisson(rate) probabilities P(N >= m).
long double brute_poisson_upper(long long m, long double rate) {
    long double term = std::exp(-rate);
    long double below = 0.0L;
    for (long long j = 0; j < m; ++j) {
        below += term;
        term *= rate / static_cast<long double>(j + 1);
    }
    long double above = 0.0L;
    for (long long j = m; j < m + 4000; ++j) {
        above += term;
        term *= rate / static_cast<long double>(j + 1);
        if (term < above * 1e-22L) break;
    }
    return above;
}

}  // namespace

TEST_CASE("gauss-legendre rule integrates polynomials exactly") {
    const auto& r = panel_rule();
    REQUIRE(r.nodes.size() == 16);
    for (int deg = 0; deg <= 31; ++deg) {
        double s = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], deg);
        double exact = deg % 2 == 1 ? 0.0 : 2.0 / (deg + 1);
        CHECK(s == doctest::Approx(exact).epsilon(1e-14));
    }
}

TEST_CASE("log_integrate on a finite interval") {
    auto g = [](double t) { return -t * t; };
    auto v = log_integrate(g, -1.0, 2.0);
    double exact = 0.5 * std::sqrt(std::numbers::pi) * (std::erf(2.0) + std::erf(1.0));
    CHECK(v.log == doctest::Approx(std::log(exact)).epsilon(1e-13));
}

TEST_CASE("log_integrate over the real line with huge offsets") {
    const double shift = -5000.0;
    IntegrateOptions o;
    o.slope = [](double t) { return -2.0 * (t - 3.0); };
    o.anchor = 3.0;
    auto g = [&](double t) { return shift - (t - 3.0) * (t - 3.0); };
    auto v = log_integrate(g, -INFINITY, INFINITY, o);
    CHECK(v.log == doctest::Approx(shift + 0.5 * std::log(std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("gamma integral matches lgamma") {
    // int e^{a s - e^s} ds = Gamma(a)
    for (double a : {0.5, 3.0, 40.0, 900.0}) {
        IntegrateOptions o;
        o.slope = [a](double s) { return a - std::exp(s); };
        o.anchor = std::log(a);
        auto v = log_integrate([a](double s) { return a * s - std::exp(s); }, -INFINITY, INFINITY, o);
        CHECK(v.log == doctest::Approx(std::lgamma(a)).epsilon(1e-12));
    }
}

TEST_CASE("infinite endpoint without a slope is rejected") {
    CHECK_THROWS_AS(log_integrate([](double t) { return -t * t; }, 0.0, INFINITY), Error);
}

TEST_CASE("concave tail bound") {
    auto b = concave_tail_bound(-3.0, -2.0);
    CHECK(b.log == doctest::Approx(-3.0 - std::log(2.0)));
    try {
        concave_tail_bound(0.0, 0.0);
        FAIL("expected NonNegativeSlope");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonNegativeSlope);
    }
}

TEST_CASE("concave tail bound dominates random concave tails") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double s = -u(rng);
        const double c = 0.5 * u(rng);
        IntegrateOptions o;
        o.rel_tol = 1e-13;
        o.slope = [&](double t) { return s - 2.0 * c * t; };
        auto v = log_integrate([&](double t) { return s * t - c * t * t; }, 0.0, INFINITY, o);
        CHECK(v.log <= concave_tail_bound(0.0, s).log + 1e-12);
    }
}

TEST_CASE("poisson tails match a long-double brute force") {
    for (double rate : {0.5, 12.0, 80.0, 400.0}) {
        for (long long m : {0LL, 1LL, 5LL, 40LL, 90LL, 420LL}) {
            CAPTURE(rate);
            CAPTURE(m);
            long double ref = brute_poisson_upper(m, rate);
            if (ref < 1e-300L) continue;
            double got = poisson_upper(m, rate).log;
            CHECK(got == doctest::Approx(static_cast<double>(std::log(ref))).epsilon(1e-12));
            double lower = poisson_lower(m, rate).value();
            CHECK(lower + static_cast<double>(ref) == doctest::Approx(1.0).epsilon(1e-13));
        }
    }
}

TEST_CASE("tails agree with boost incomplete gamma and beta") {
    using boost::math::gamma_p;
    using boost::math::ibeta;
    for (double rate : {3.0, 50.0, 1000.0}) {
        for (long long m : {1LL, 10LL, 60LL, 1100LL}) {
            double ref = gamma_p(static_cast<double>(m), rate);
            if (ref < 1e-280) continue;
            CHECK(poisson_upper(m, rate).log == doctest::Approx(std::log(ref)).epsilon(1e-11));
        }
    }
    for (long long n : {10LL, 200LL, 5000LL}) {
        for (double p : {0.05, 0.3, 0.8}) {
            for (long long m : {1LL, n / 4, n / 2, n}) {
                double ref = ibeta(static_cast<double>(m), static_cast<double>(n - m + 1), p);
                if (ref < 1e-280) continue;
                CAPTURE(n);
                CAPTURE(p);
                CAPTURE(m);
                CHECK(binomial_upper(m, n, p).log == doctest::Approx(std::log(ref)).epsilon(1e-11));
            }
        }
    }
}

TEST_CASE("tail edge cases") {
    CHECK(poisson_upper(0, 3.0).log == 0.0);
    CHECK(poisson_lower(0, 3.0).is_zero());
    CHECK_THROWS_AS(binomial_upper(11, 10, 0.5), Error);
    CHECK(binomial_upper(10, 10, 0.5).log == doctest::Approx(10 * std::log(0.5)));
    CHECK_THROWS_AS(poisson_upper(3, -1.0), Error);
    CHECK_THROWS_AS(binomial_upper(3, 10, 1.5), Error);
}

TEST_CASE("pmf saddle-point forms") {
    for (long long j : {0LL, 1LL, 7LL, 300LL}) {
        double rate = 42.5;
        double ref = j * std::log(rate) - rate - std::lgamma(j + 1.0);
        CHECK(log_poisson_pmf(j, rate) == doctest::Approx(ref).epsilon(1e-13));
        double lb = std::lgamma(401.0) - std::lgamma(j + 1.0) - std::lgamma(401.0 - j) +
                    j * std::log(0.3) + (400 - j) * std::log(0.7);
        CHECK(log_binomial_pmf(j, 400, 0.3) == doctest::Approx(lb).epsilon(1e-12));
    }
}
