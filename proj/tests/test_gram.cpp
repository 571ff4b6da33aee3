#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "bergman/error.hpp"
#include "bergman/gram.hpp"
#include "bergman/logquad.hpp"

using namespace bergman;
using cd = std::complex<double>;

namespace {

const double kPi = std::numbers::pi;

double disc_kernel(double x) { return 1.0 / (kPi * (1 - x) * (1 - x)); }

}  // namespace

TEST_CASE("total degree basis") {
    auto b = total_degree_basis(2, 3);
    CHECK(b.size() == 10);
    CHECK(b[0] == MultiIndex{0, 0});
    CHECK(b[1] == MultiIndex{1, 0});
    CHECK(b[2] == MultiIndex{0, 1});
    CHECK(b[3] == MultiIndex{2, 0});
    CHECK(total_degree_basis(3, 4).size() == 35);
    CHECK_THROWS_AS(total_degree_basis(0, 3), Error);
}

TEST_CASE("unit disc recovers the classical bergman kernel") {
    auto g = build_gram(GramWeight::unit(), {{1.0}}, 120);
    CHECK(max_offdiagonal_ratio(g) < 1e-12);
    CHECK(factorization_residual(g) < 1e-14);
    for (double x : {0.0, 0.04, 0.16, 0.36}) {
        cd z(std::sqrt(x) * std::cos(0.7), std::sqrt(x) * std::sin(0.7));
        std::span<const cd> pt(&z, 1);
        CHECK(kernel_from_gram(g, pt) == doctest::Approx(disc_kernel(x)).epsilon(1e-10));
    }
}

TEST_CASE("monomial norms on the unit disc") {
    auto g = build_gram(GramWeight::unit(), {{1.0}}, 10);
    for (int a = 0; a <= 10; ++a) {
        CHECK(g.gram(a, a).real() == doctest::Approx(kPi / (a + 1)).epsilon(1e-13));
    }
}

TEST_CASE("bidisc kernel is a product") {
    auto g = build_gram(GramWeight::unit(), {{1.0, 1.0}}, 12, {}, 2);
    Point p = {cd(0.2, 0.1), cd(-0.15, 0.25)};
    double ref = disc_kernel(std::norm(p[0])) * disc_kernel(std::norm(p[1]));
    CHECK(kernel_from_gram(g, p) == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("model weight on a large disc reproduces the flat density") {
    const int k = 20;
    auto g = build_gram(GramWeight::model(RadialPotential::bargmann_fock(), k), {{3.0}}, 160);
    for (double x : {0.0, 0.1, 0.5, 1.0}) {
        cd z(std::sqrt(x), 0.0);
        std::span<const cd> pt(&z, 1);
        CHECK(kernel_from_gram(g, pt) == doctest::Approx(k / (2 * kPi)).epsilon(1e-9));
    }
}

TEST_CASE("partial split is additive and matches the poisson tail") {
    const int k = 20;
    auto g = build_gram(GramWeight::model(RadialPotential::bargmann_fock(), k), {{3.0}}, 160);
    auto split = partial_split(g, 4);
    CHECK(split.has_low());
    for (double x : {0.05, 0.2, 0.4}) {
        cd z(0.0, std::sqrt(x));
        std::span<const cd> pt(&z, 1);
        double full = kernel_from_gram(g, pt);
        double hi = split.kernel_high(pt);
        double lo = split.kernel_low(pt);
        CHECK((hi + lo) == doctest::Approx(full).epsilon(1e-12));
        CHECK(std::abs(hi / full - poisson_upper(4, k * x).value()) < 1e-9);
    }
    auto all = partial_split(g, 0);
    CHECK_FALSE(all.has_low());
    cd z(0.3, 0.0);
    std::span<const cd> pt(&z, 1);
    CHECK(all.kernel_low(pt) == 0.0);
    try {
        partial_split(g, 161);
        FAIL("expected EmptySubspace");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptySubspace);
    }
}

TEST_CASE("scaling the metric leaves the kernel unchanged") {
    auto w = GramWeight::unit();
    auto g1 = build_gram(w, {{1.0}}, 30);
    auto g2 = build_gram(w.scaled(1e3), {{1.0}}, 30);
    cd z(0.3, 0.2);
    std::span<const cd> pt(&z, 1);
    CHECK(kernel_from_gram(g2, pt) == doctest::Approx(kernel_from_gram(g1, pt)).epsilon(1e-12));
}

TEST_CASE("cholesky detects singular and indefinite matrices") {
    Eigen::MatrixXcd m(2, 2);
    m << 1.0, 1.0, 1.0, 1.0;
    try {
        cholesky_factor(m);
        FAIL("expected NotPositiveDefinite");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotPositiveDefinite);
    }
    m << 4.0, cd(1.0, 1.0), cd(1.0, -1.0), 3.0;
    auto l = cholesky_factor(m);
    CHECK((l * l.adjoint() - m).norm() < 1e-14);
}

TEST_CASE("gram assembly is independent of the thread count") {
    auto w = GramWeight::model(RadialPotential::fubini_study(), 15);
    auto a = build_gram(w, {{1.5, 1.5}}, 8, {}, 1);
    auto b = build_gram(w, {{1.5, 1.5}}, 8, {}, 3);
    CHECK((a.gram - b.gram).norm() == 0.0);
}

TEST_CASE("bad gram inputs") {
    CHECK_THROWS_AS(build_gram(GramWeight::unit(), {{}}, 3), Error);
    CHECK_THROWS_AS(build_gram(GramWeight::unit(), {{-1.0}}, 3), Error);
    CHECK_THROWS_AS(build_gram(GramWeight::unit(), {{1.0}}, 3, {-1, 4}), Error);
    auto g = build_gram(GramWeight::unit(), {{1.0}}, 3);
    Point two = {cd(0.1), cd(0.1)};
    CHECK_THROWS_AS(kernel_from_gram(g, two), Error);
}

namespace {

GramWeight exp_weight(double c) {
    GramWeight w;
    w.metric = [c](std::span<const cd> z) { return std::exp(-c * std::norm(z[0])); };
    w.volume = [](std::span<const cd>) { return 1.0; };
    w.radial = true;
    w.name = "exp";
    return w;
}

}  // namespace

TEST_CASE("radial weight gives an orthogonal gram matrix") {
    auto g = build_gram(exp_weight(10.0), {{3.0}}, 20);
    CHECK(max_offdiagonal_ratio(g) < 1e-12);
}

TEST_CASE("under-resolved quadrature loses definiteness") {
    try {
        build_gram(GramWeight::unit(), {{1.0}}, 200, QuadratureSpec::uniform(8));
        FAIL("expected NotPositiveDefinite");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotPositiveDefinite);
    }
}

TEST_CASE("truncated model kernel matches the flat density at the origin") {
    const int k = 50;
    auto g = build_gram(GramWeight::model(RadialPotential::bargmann_fock(), k), {{2.0}}, 200);
    cd z(0.0, 0.0);
    std::span<const cd> pt(&z, 1);
    CHECK(kernel_from_gram(g, pt) == doctest::Approx(k / (2 * kPi)).epsilon(1e-8));
    auto split = partial_split(g, 10);
    for (double x : {0.05, 0.15, 0.25, 0.4}) {
        cd w(std::sqrt(x), 0.0);
        std::span<const cd> q(&w, 1);
        CHECK(std::abs(split.kernel_high(q) / kernel_from_gram(g, q) -
                       poisson_upper(10, k * x).value()) < 2e-6);
    }
}

TEST_CASE("split of the degree-two basis in two variables") {
    auto g = build_gram(GramWeight::unit(), {{1.0, 1.0}}, 2);
    auto split = partial_split(g, 1);
    REQUIRE(split.has_low());
    CHECK(split.low().basis == std::vector<MultiIndex>{{0, 0}});
    CHECK(split.high().basis.size() == 5);
}

TEST_CASE("kernel is invariant under constant rescaling of the weight") {
    auto w = exp_weight(4.0);
    auto g = build_gram(w, {{2.0}}, 40);
    for (double c : {1e-3, 1e3}) {
        auto gc = build_gram(w.scaled(c), {{2.0}}, 40);
        for (double x : {0.0, 0.3, 1.0}) {
            cd z(std::sqrt(x), 0.0);
            std::span<const cd> pt(&z, 1);
            double a = kernel_from_gram(g, pt);
            double b = kernel_from_gram(gc, pt);
            CHECK(std::abs(b / a - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("kernel does not depend on the basis order") {
    auto basis = total_degree_basis(2, 6);
    auto reversed = std::vector<MultiIndex>(basis.rbegin(), basis.rend());
    auto g1 = build_gram(GramWeight::unit(), {{1.0, 1.0}}, basis);
    auto g2 = build_gram(GramWeight::unit(), {{1.0, 1.0}}, reversed);
    Point p = {cd(0.1, 0.3), cd(0.2, -0.1)};
    CHECK(kernel_from_gram(g2, p) == doctest::Approx(kernel_from_gram(g1, p)).epsilon(1e-12));
}

TEST_CASE("the high-degree kernel never exceeds the full kernel") {
    GramWeight w;
    w.metric = [](std::span<const cd> z) { return std::exp(-std::norm(z[0]) - 0.3 * z[0].real()); };
    w.volume = [](std::span<const cd>) { return 1.0; };
    w.name = "tilted";
    auto g = build_gram(w, {{1.5}}, 24);
    CHECK(max_offdiagonal_ratio(g) > 1e-6);
    auto split = partial_split(g, 5);
    for (double re : {-0.9, -0.2, 0.0, 0.4, 1.1}) {
        cd z(re, 0.3);
        std::span<const cd> pt(&z, 1);
        double full = kernel_from_gram(g, pt);
        CHECK(split.kernel_high(pt) <= full * (1 + 1e-12));
        CHECK(split.kernel_low(pt) <= full * (1 + 1e-12));
    }
}
