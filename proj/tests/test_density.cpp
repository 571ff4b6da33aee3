#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bergman/density.hpp"
#include "bergman/error.hpp"
#include "bergman/logquad.hpp"
#include "bergman/model1d.hpp"

using namespace bergman;

namespace {

const double kTwoPi = 2.0 * std::numbers::pi;

ModelGeometry bf_fiber() { return ModelGeometry::fiber(RadialPotential::bargmann_fock()); }

}  // namespace

TEST_CASE("bargmann-fock density is flat and its ratio is a poisson tail") {
    auto geo = bf_fiber();
    for (int k : {10, 100, 1000}) {
        DensityEngine e(geo, k);
        const long long a_min = admissible_order(0.2, k);
        for (double x : {0.0, 0.01, 0.1, 0.2, 0.35, 1.0, 3.0}) {
            std::vector<double> pt = {x};
            auto d = e.evaluate(pt, a_min);
            CAPTURE(k);
            CAPTURE(x);
            CHECK(d.log_rho.log == doctest::Approx(std::log(k / kTwoPi)).epsilon(1e-12));
            double oracle = poisson_upper(a_min, k * x).value();
            CHECK(std::abs(d.ratio - oracle) < 1e-12);
            CHECK((d.log_rho_partial + d.log_rho_complement).log ==
                  doctest::Approx(d.log_rho.log).epsilon(1e-12));
        }
    }
}

TEST_CASE("cp1 density is (k+1)/2pi and its ratio is a binomial tail") {
    auto geo = ModelGeometry::cp1();
    for (int k : {5, 60, 700}) {
        DensityEngine e(geo, k);
        const long long a_min = admissible_order(0.3, k);
        for (double x : {0.0, 0.05, 0.3, 0.43, 1.0, 25.0}) {
            std::vector<double> pt = {x};
            auto d = e.evaluate(pt, a_min);
            CAPTURE(k);
            CAPTURE(x);
            CHECK(d.log_rho.log == doctest::Approx(std::log((k + 1) / kTwoPi)).epsilon(1e-11));
            CHECK(d.mu[0] == doctest::Approx(x / (1 + x)));
            double oracle = binomial_upper(a_min, k, x / (1 + x)).value();
            CHECK(std::abs(d.ratio - oracle) < 1e-11);
            CHECK(d.degree_caps[0] <= k);
        }
    }
}

TEST_CASE("ratio increases along the ray and 1 - ratio is accurate") {
    auto geo = bf_fiber();
    DensityEngine e(geo, 500);
    double prev = -1.0;
    for (int i = 0; i <= 60; ++i) {
        std::vector<double> pt = {i * 0.01};
        auto d = e.evaluate(pt, 100);
        CHECK(d.ratio >= prev);
        prev = d.ratio;
        double oracle = poisson_lower(100, 500 * pt[0]).log;
        if (oracle > -700) CHECK(d.log_one_minus_ratio == doctest::Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("product partial density depends on nu only") {
    auto c2 = ModelGeometry::product(RadialPotential::bargmann_fock(), 2);
    const int k = 300;
    DensityEngine e(c2, k);
    const long long a_min = admissible_order(0.2, k);
    for (double nu : {0.05, 0.15, 0.2, 0.3}) {
        double oracle = poisson_upper(a_min, k * nu).value();
        for (double share : {0.0, 0.2, 0.5, 0.9}) {
            std::vector<double> pt = {share * nu, (1 - share) * nu};
            auto d = e.evaluate(pt, a_min);
            CHECK(d.nu == doctest::Approx(nu));
            CHECK(std::abs(d.ratio - oracle) < 1e-12);
            CHECK(d.log_rho.log == doctest::Approx(2 * std::log(k / kTwoPi)).epsilon(1e-12));
        }
    }
}

TEST_CASE("enumeration and the poisson fast path agree") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 0.15);
    for (int r : {1, 2, 3}) {
        auto geo = ModelGeometry::product(RadialPotential::bargmann_fock(), r);
        DensityEngine e(geo, 200);
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> pt(static_cast<std::size_t>(r));
            for (auto& v : pt) v = u(rng);
            auto a = e.evaluate(pt, 40, PartialMethod::Enumerate);
            auto b = e.evaluate(pt, 40, PartialMethod::PoissonFastPath);
            CHECK(std::abs(a.ratio - b.ratio) < 1e-12);
            CHECK(a.log_rho.log == doctest::Approx(b.log_rho.log).epsilon(1e-12));
        }
    }
}

TEST_CASE("higher rank uses the fast path and rejects enumeration") {
    auto c4 = ModelGeometry::product(RadialPotential::bargmann_fock(), 4);
    DensityEngine e(c4, 100);
    std::vector<double> pt = {0.05, 0.05, 0.05, 0.05};
    auto d = e.evaluate(pt, 20);
    CHECK(std::abs(d.ratio - poisson_upper(20, 20.0).value()) < 1e-12);
    CHECK_THROWS_AS(e.evaluate(pt, 20, PartialMethod::Enumerate), Error);
}

TEST_CASE("fast path needs bargmann-fock factors") {
    auto geo = ModelGeometry::cp1();
    DensityEngine e(geo, 50);
    std::vector<double> pt = {0.3};
    try {
        e.evaluate(pt, 10, PartialMethod::PoissonFastPath);
        FAIL("expected Unsupported");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::Unsupported);
    }
}

TEST_CASE("fubini-study fiber over C matches cp1") {
    auto fs = ModelGeometry::fiber(RadialPotential::fubini_study());
    auto cp1 = ModelGeometry::cp1();
    DensityEngine a(fs, 80), b(cp1, 80);
    for (double x : {0.02, 0.4, 2.0}) {
        std::vector<double> pt = {x};
        auto da = a.evaluate(pt, 16);
        auto db = b.evaluate(pt, 16);
        CHECK(da.log_rho.log == doctest::Approx(db.log_rho.log).epsilon(1e-11));
        CHECK(std::abs(da.ratio - db.ratio) < 1e-11);
    }
}

TEST_CASE("polynomial potential density against direct term sums") {
    auto geo = ModelGeometry::fiber(RadialPotential::polynomial({0.3}, 2.0));
    const int k = 40;
    DensityEngine e(geo, k);
    for (double x : {0.0, 0.1, 0.5, 1.5}) {
        auto terms = e.log_terms(0, x, 0);
        std::vector<double> pt = {x};
        auto d = e.evaluate(pt, 8);
        CHECK(d.log_rho.log == doctest::Approx(log_sum_exp(terms)).epsilon(1e-13));
        if (x == 0.0) {
            CHECK(terms.size() == 1);
            CHECK(d.log_rho_partial.is_zero());
            continue;
        }
        REQUIRE(terms.size() > 8);
        std::vector<double> high(terms.begin() + 8, terms.end());
        CHECK(d.log_rho_partial.log == doctest::Approx(log_sum_exp(high)).epsilon(1e-12));
    }
    std::vector<double> outside = {2.5};
    CHECK_THROWS_AS(e.evaluate(outside, 8), Error);
}

TEST_CASE("integrated densities count the sections") {
    const int k = 30;
    DensityEngine e(ModelGeometry::cp1(), k);
    CHECK(log_integrated_density(e, 0, DensityPart::Full, 0.0, 1.0).value() ==
          doctest::Approx(k + 1.0).epsilon(1e-9));
    CHECK(log_integrated_density(e, 10, DensityPart::Partial, 0.0, 1.0).value() ==
          doctest::Approx(k + 1.0 - 10.0).epsilon(1e-9));
    CHECK(log_integrated_density(e, 10, DensityPart::Complement, 0.0, 1.0).value() ==
          doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("admissible order and query validation") {
    CHECK(admissible_order(0.2, 100) == 20);
    CHECK(admissible_order(0.1, 30) == 3);
    CHECK(admissible_order(0.21, 100) == 21);
    CHECK(admissible_order(0.201, 100) == 21);
    CHECK(admissible_order(0.0, 100) == 0);
    CHECK_THROWS_AS(make_query(bf_fiber(), 100, 0.5), Error);
    CHECK_NOTHROW(make_query(bf_fiber(), 100, 0.5, 0.6));
    CHECK_THROWS_AS(make_query(bf_fiber(), 0, 0.2), Error);
}

TEST_CASE("profiles do not depend on the thread count") {
    auto c2 = ModelGeometry::product(RadialPotential::bargmann_fock(), 2);
    std::vector<double> dir = {1.0, 2.0};
    auto grid = ray_grid(c2, dir, 0.0, 0.5, 41);
    auto q = make_query(c2, 400, 0.2);
    auto a = partial_density(q, grid, {1});
    auto b = partial_density(q, grid, {4});
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].ratio == b.points[i].ratio);
        CHECK(a.points[i].log_rho.log == b.points[i].log_rho.log);
        CHECK(a.points[i].nu == doctest::Approx(0.5 * i / 40.0).epsilon(1e-12));
    }
}

TEST_CASE("boundary sits near delta and approaches it as k grows") {
    for (auto geo : {bf_fiber(), ModelGeometry::cp1()}) {
        double prev = INFINITY;
        for (int k : {100, 400, 1600, 6400}) {
            auto q = make_query(geo, k, 0.2);
            std::vector<double> dir = {1.0};
            auto b = boundary_detect(q, dir);
            const double dist = std::abs(b.nu_star - 0.2);
            CHECK(b.distance_to_delta == doctest::Approx(b.nu_star - 0.2));
            CHECK(dist * std::sqrt(0.2 * k) <= 0.8);
            CHECK(dist < prev);
            prev = dist;
            std::vector<double> pt = b.x_star;
            DensityEngine e(geo, k);
            CHECK(e.evaluate(pt, q.a_min).ratio == doctest::Approx(0.5).epsilon(1e-6));
        }
    }
}

TEST_CASE("no crossing is reported") {
    auto q = make_query(bf_fiber(), 100, 0.0);
    std::vector<double> dir = {1.0};
    try {
        boundary_detect(q, dir);
        FAIL("expected NoCrossing");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoCrossing);
    }
}

TEST_CASE("decay fit recovers the large-deviation rate") {
    auto geo = bf_fiber();
    std::vector<double> x = {0.1};
    std::vector<int> ladder = {100, 200, 400, 800, 1600, 3200, 6400};
    auto fit = decay_fit(geo, 0.2, x, ladder);
    auto rate = chernoff_rate(geo, 0.2, 0.1);
    REQUIRE(rate.has_value());
    CHECK(*rate == doctest::Approx(-(0.2 * std::log(2.0) - 0.1)).epsilon(1e-14));
    CHECK(std::abs(fit.slope / *rate - 1.0) < 0.05);
    CHECK(fit.r_squared >= 0.999);
    CHECK(fit.superpolynomial);
    CHECK_FALSE(fit.underflow);

    // The same fit against the exact Poisson tails.
    std::vector<double> ks, ys;
    for (int k : ladder) {
        ks.push_back(k);
        ys.push_back(poisson_upper(admissible_order(0.2, k), 0.1 * k).log);
    }
    double mk = 0, my = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) mk += ks[i] / ks.size(), my += ys[i] / ks.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) sxy += (ks[i] - mk) * (ys[i] - my), sxx += (ks[i] - mk) * (ks[i] - mk);
    CHECK(fit.slope == doctest::Approx(sxy / sxx).epsilon(1e-9));
}

TEST_CASE("decay fit flags underflow and rejects bad input") {
    auto geo = bf_fiber();
    std::vector<double> x = {0.01};
    auto fit = decay_fit(geo, 0.4, x, {100, 200, 400, 1000, 10000}, 1);
    CHECK(fit.underflow);
    CHECK(fit.usable >= 2);
    CHECK(fit.usable < 5);
    std::vector<double> inside = {0.3};
    CHECK_THROWS_AS(decay_fit(geo, 0.2, inside, {100, 200, 400, 800}), Error);
    CHECK_THROWS_AS(decay_fit(geo, 0.2, x, {100, 200, 400}), Error);
    CHECK_THROWS_AS(decay_fit(geo, 0.2, x, {100, 400, 200, 800}), Error);
}

TEST_CASE("chernoff rate for cp1 is a relative entropy") {
    double d = 0.3, n = 0.1;
    double kl = d * std::log(d / n) + (1 - d) * std::log((1 - d) / (1 - n));
    auto r = chernoff_rate(ModelGeometry::cp1(), d, n);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(-kl).epsilon(1e-14));
    auto poly = ModelGeometry::fiber(RadialPotential::polynomial({0.1}, 1.0));
    CHECK_FALSE(chernoff_rate(poly, d, n).has_value());
}

TEST_CASE("decay fit closer to the boundary") {
    // At x_star = 0.15 the finite-k correction -log(k)/2 still tilts the fit:
    // the slope matches the exact Poisson fit, and the asymptotic rate only
    // to within 10%.
    auto geo = bf_fiber();
    std::vector<double> x = {0.15};
    std::vector<int> ladder = {100, 200, 400, 800, 1600, 3200};
    auto fit = decay_fit(geo, 0.2, x, ladder);
    double rate = -(0.2 * std::log(4.0 / 3.0) - 0.05);
    CHECK(*chernoff_rate(geo, 0.2, 0.15) == doctest::Approx(rate).epsilon(1e-14));
    CHECK(rate == doctest::Approx(-0.007536).epsilon(1e-3));
    CHECK(fit.r_squared >= 0.999);
    CHECK(std::abs(fit.slope / rate - 1.0) < 0.10);
    std::vector<double> ys;
    double mk = 0, my = 0;
    for (int k : ladder) {
        ys.push_back(poisson_upper(admissible_order(0.2, k), 0.15 * k).log);
        mk += k / 6.0;
        my += ys.back() / 6.0;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        sxy += (ladder[i] - mk) * (ys[i] - my);
        sxx += (ladder[i] - mk) * (ladder[i] - mk);
    }
    CHECK(fit.slope == doctest::Approx(sxy / sxx).epsilon(1e-9));
}

TEST_CASE("admissible monomials keep almost no mass below delta - k^(-1/4)") {
    for (auto pot : {RadialPotential::bargmann_fock(), RadialPotential::fubini_study()}) {
        for (int k : {1000, 4000}) {
            const long long a_min = admissible_order(0.2, k);
            const double edge = 0.2 - std::pow(double(k), -0.25);
            for (long long a : {a_min, a_min + 7, 2 * a_min, static_cast<long long>(k) / 2}) {
                Model1DProblem p(pot, k, static_cast<int>(a));
                double frac = log_mass_in_moment_range(p, 0.0, edge).log - log_norm(p).log;
                CAPTURE(k);
                CAPTURE(a);
                CHECK(frac < -5.0 * std::log(double(k)));
            }
        }
    }
}

TEST_CASE("the complementary span concentrates below delta") {
    for (auto geo : {bf_fiber(), ModelGeometry::cp1()}) {
        for (int k : {1000, 3000}) {
            DensityEngine e(geo, k);
            const long long a_min = admissible_order(0.2, k);
            const double edge = 0.2 + 2.0 * std::pow(double(k), -0.25);
            // Complement terms are negligible beyond nu = 2 on the plane.
            const double sup = geo.nu_sup() == INFINITY ? 2.0 : geo.nu_sup();
            auto total = log_integrated_density(e, a_min, DensityPart::Complement, 0.0, sup);
            auto far = log_integrated_density(e, a_min, DensityPart::Complement, edge, sup);
            CHECK(total.value() == doctest::Approx(double(a_min)).epsilon(1e-8));
            CHECK(far.log - total.log < std::log(1e-8));
        }
    }
}

TEST_CASE("partial and complementary densities add up on products") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 0.2);
    for (int r : {2, 3}) {
        auto geo = ModelGeometry::product(RadialPotential::bargmann_fock(), r);
        DensityEngine e(geo, 150);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> pt(static_cast<std::size_t>(r));
            for (auto& v : pt) v = u(rng);
            auto d = e.evaluate(pt, 30, PartialMethod::Enumerate);
            CHECK((d.log_rho_partial + d.log_rho_complement).log ==
                  doctest::Approx(d.log_rho.log).epsilon(1e-12));
        }
    }
}

TEST_CASE("shifting weight between factors at fixed nu keeps the ratio") {
    auto c2 = ModelGeometry::product(RadialPotential::bargmann_fock(), 2);
    DensityEngine e(c2, 700);
    const long long a_min = admissible_order(0.2, 700);
    for (double x1 : {0.02, 0.1, 0.17}) {
        std::vector<double> p = {x1, 0.15};
        auto base = e.evaluate(p, a_min, PartialMethod::Enumerate);
        for (double h : {0.005, 0.01, 0.015}) {
            std::vector<double> q = {x1 + h, 0.15 - h};
            auto moved = e.evaluate(q, a_min, PartialMethod::Enumerate);
            CHECK(std::abs(moved.ratio - base.ratio) < 1e-10);
        }
    }
}
