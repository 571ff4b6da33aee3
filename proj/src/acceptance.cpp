#include "bergman/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "bergman/density.hpp"
#include "bergman/error.hpp"
#include "bergman/gram.hpp"
#include "bergman/logquad.hpp"
#include "bergman/model1d.hpp"

namespace bergman {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sub(double a, double b) { return a + std::log1p(-std::exp(b - a)); }

// Log masses of x^a e^{-kx} dx over a moment window, from the Poisson/Gamma
// duality P(Gamma(a+1, k) <= x) = P(Poisson(kx) >= a+1). Normalized by the
// total mass; only differences of logs are used.
double gamma_below(int k, int a, double x) { return poisson_upper(a + 1, k * x).log; }
double gamma_above(int k, int a, double x) { return poisson_lower(a + 1, k * x).log; }

// Oracle outside - inside log ratio for the bargmann-fock regime windows.
double oracle_log_ratio(const RegimeReport& rep, int k, int a) {
    switch (rep.regime) {
        case 1: {
            double out = gamma_below(k, a, rep.R1);
            double in = log_sub(gamma_below(k, a, rep.R), out);
            return out - in;
        }
        case 2: {
            double below = rep.inside_mu_lo > 0.0 ? gamma_below(k, a, rep.inside_mu_lo) : -kInf;
            double above = gamma_above(k, a, rep.inside_mu_hi);
            double out = (LogValue{below} + LogValue{above}).log;
            return out - std::log1p(-std::exp(out));
        }
        default: {
            double in = gamma_below(k, a, rep.inside_mu_hi);
            double out = gamma_above(k, a, rep.inside_mu_hi);
            return out - in;
        }
    }
}

struct Check {
    double value = 0.0;
    bool accurate = false;
    std::string detail;
};

template <class Body>
CriterionResult timed(int id, std::string title, std::string metric, double tol, double limit,
                      Body body) {
    CriterionResult r;
    r.id = id;
    r.title = std::move(title);
    r.metric = std::move(metric);
    r.tolerance = tol;
    r.time_limit = limit;
    auto t0 = std::chrono::steady_clock::now();
    try {
        Check c = body();
        r.value = c.value;
        r.accurate = c.accurate;
        r.detail = std::move(c.detail);
    } catch (const std::exception& e) {
        r.value = std::nan("");
        r.accurate = false;
        r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

CriterionResult poisson_equivalence(const AcceptanceOptions& o) {
    return timed(1, "Poisson-oracle equivalence", "max |ratio - P(Poisson(kx) >= a_min)|", 1e-10, 2.0,
                 [&] {
                     auto bf = ModelGeometry::fiber(RadialPotential::bargmann_fock());
                     double worst = 0.0;
                     for (int k : {100, 400, 1600}) {
                         auto q = make_query(bf, k, 0.2);
                         auto prof = partial_density(q, x_grid(0.0, 0.6, 121), {o.threads});
                         for (const auto& p : prof.points) {
                             double oracle = poisson_upper(q.a_min, k * p.x[0]).value();
                             worst = std::max(worst, std::abs(p.ratio - oracle));
                         }
                     }
                     return Check{worst, worst < 1e-10, "k in {100, 400, 1600}, 121 points"};
                 });
}

CriterionResult boundary(const AcceptanceOptions&) {
    return timed(2, "Forbidden-region boundary", "max |nu* - delta| sqrt(delta k)", 0.8, 2.0, [&] {
        double worst = 0.0;
        std::ostringstream os;
        const double delta = 0.2;
        const double dir[] = {1.0};
        for (auto geo : {ModelGeometry::fiber(RadialPotential::bargmann_fock()), ModelGeometry::cp1()}) {
            for (int k : {400, 1600, 6400}) {
                auto res = boundary_detect(make_query(geo, k, delta), dir);
                double scaled = std::abs(res.nu_star - delta) * std::sqrt(delta * k);
                worst = std::max(worst, scaled);
                os << geo.name() << " k=" << k << " nu*=" << res.nu_star << "; ";
            }
        }
        return Check{worst, worst <= 0.8, os.str()};
    });
}

CriterionResult diagonal_dependence(const AcceptanceOptions& o) {
    return timed(3, "Diagonal-moment dependence (C^2)",
                 "max(equal-nu spread, ratio at nu=0.1, 1 - ratio at nu=0.4)", 1e-10, 5.0, [&] {
                     auto geo = ModelGeometry::product(RadialPotential::bargmann_fock(), 2);
                     const int k = 2000;
                     auto q = make_query(geo, k, 0.2);
                     const std::vector<std::vector<double>> dirs = {
                         {1.0, 1.0}, {1.0, 3.0}, {3.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}, {2.0, 5.0}};
                     Grid grid;
                     for (const auto& d : dirs) {
                         auto g = ray_grid(geo, d, 0.0, 0.6, 31);
                         grid.insert(grid.end(), g.begin(), g.end());
                     }
                     auto prof = partial_density(q, grid, {o.threads});
                     const std::size_t per = 31;
                     double spread = 0.0;
                     for (std::size_t j = 0; j < per; ++j) {
                         double lo = kInf;
                         double hi = -kInf;
                         for (std::size_t d = 0; d < dirs.size(); ++d) {
                             double r = prof.points[d * per + j].ratio;
                             lo = std::min(lo, r);
                             hi = std::max(hi, r);
                         }
                         spread = std::max(spread, hi - lo);
                     }
                     DensityEngine engine(geo, k);
                     double forbidden = 0.0;
                     double allowed = 0.0;
                     for (const auto& d : dirs) {
                         forbidden = std::max(
                             forbidden, engine.evaluate(point_on_ray(geo, d, 0.1), q.a_min).ratio);
                         auto p = engine.evaluate(point_on_ray(geo, d, 0.4), q.a_min);
                         allowed = std::max(allowed, std::exp(p.log_one_minus_ratio));
                     }
                     std::ostringstream os;
                     os << "spread " << spread << ", ratio(nu=0.1) " << forbidden
                        << ", 1-ratio(nu=0.4) " << allowed;
                     bool ok = spread < 1e-10 && forbidden < 1e-12 && allowed < 1e-12;
                     return Check{std::max({spread, forbidden, allowed}), ok, os.str()};
                 });
}

CriterionResult decay(const AcceptanceOptions& o) {
    return timed(4, "Decay-rate fit", "|slope / chernoff - 1|", 0.05, 2.0, [&] {
        auto bf = ModelGeometry::fiber(RadialPotential::bargmann_fock());
        std::vector<int> ladder;
        for (int j = 0; j <= 5; ++j) ladder.push_back(100 << j);
        const double x[] = {0.1};
        auto fit = decay_fit(bf, 0.2, x, ladder, o.threads);
        const double rate = -0.038629;
        double rel = std::abs(fit.slope / rate - 1.0);
        std::ostringstream os;
        os << "slope " << fit.slope << ", R^2 " << fit.r_squared << ", superpolynomial "
           << (fit.superpolynomial ? "yes" : "no");
        bool ok = rel <= 0.05 && fit.r_squared >= 0.999 && fit.superpolynomial;
        return Check{rel, ok, os.str()};
    });
}

CriterionResult full_identities(const AcceptanceOptions& o) {
    return timed(5, "Full-density identities", "max relative error (rho; CP1 volume at 1e-6)", 1e-9,
                 2.0, [&] {
                     auto bf = ModelGeometry::fiber(RadialPotential::bargmann_fock());
                     auto cp = ModelGeometry::cp1();
                     double worst_rho = 0.0;
                     double worst_vol = 0.0;
                     for (int k : {10, 100, 1000, 10000}) {
                         const double two_pi = 2.0 * std::numbers::pi;
                         for (const auto& p : full_density(bf, k, x_grid(0.0, 1.0, 121), {o.threads}).points) {
                             worst_rho = std::max(worst_rho, std::abs(p.log_rho.value() * two_pi / k - 1.0));
                         }
                         DensityEngine engine(cp, k);
                         auto grid = x_grid(0.0, 10.0, 121);
                         for (const auto& x : grid) {
                             auto p = engine.evaluate(x, 0);
                             worst_rho = std::max(worst_rho,
                                                  std::abs(p.log_rho.value() * two_pi / (k + 1) - 1.0));
                         }
                         double vol = log_integrated_density(engine, 0, DensityPart::Full, 0.0, 1.0).value();
                         worst_vol = std::max(worst_vol, std::abs(vol / (k + 1) - 1.0));
                     }
                     std::ostringstream os;
                     os << "rho " << worst_rho << ", CP1 volume " << worst_vol
                        << "; k in {10, 100, 1000, 10000}";
                     bool ok = worst_rho < 1e-9 && worst_vol < 1e-6;
                     return Check{worst_rho, ok, os.str()};
                 });
}

CriterionResult laplace(const AcceptanceOptions&) {
    return timed(6, "Laplace-method accuracy", "max 10 a |laplace - quadrature|", 1.0, 1.0, [&] {
        auto bf = RadialPotential::bargmann_fock();
        double worst = 0.0;
        std::ostringstream os;
        for (int a : {100, 300, 1000, 5000}) {
            Model1DProblem p(bf, 10000, a);
            double diff = std::abs(laplace_log_norm(p).log - log_norm(p).log);
            worst = std::max(worst, 10.0 * a * diff);
            os << "a=" << a << ": " << diff << "; ";
        }
        return Check{worst, worst <= 1.0, os.str()};
    });
}

CriterionResult regimes(const AcceptanceOptions&) {
    return timed(7, "Regime certificates", "max |log ratio - oracle|", 1e-8, 5.0, [&] {
        auto bf = RadialPotential::bargmann_fock();
        RegimeParams params;
        std::ostringstream os;
        double worst = 0.0;
        bool ok = true;
        auto run = [&](int k, int a) {
            Model1DProblem p(bf, k, a);
            RegimeReport rep = mass_ratio(p, params);
            double oracle = oracle_log_ratio(rep, k, a);
            worst = std::max(worst, std::abs(rep.log_ratio() - oracle));
            return rep;
        };
        RegimeReport r2 = run(10000, 2500);
        RegimeReport r1 = run(10000, 9500);
        RegimeReport r3 = run(10000, 4);
        ok = ok && r2.regime == 2 && r2.log_ratio() < -50.0;
        ok = ok && r1.regime == 1 && r1.log_ratio() < 0.0;
        ok = ok && r3.regime == 3 && r3.log_ratio() < std::log(1e-8);
        os << "item2 " << r2.log_ratio() << ", item1 " << r1.log_ratio() << " (c = "
           << -r1.log_ratio() / 10000 << "), item3 " << r3.log_ratio() << "; ladder";
        double prev = kInf;
        for (int k : {100, 400, 1600, 6400}) {
            RegimeReport r = run(k, k / 4);
            double v = r.log_ratio() + 10.0 * std::log(double(k));
            os << " " << v;
            ok = ok && r.regime == 2 && v < prev;
            prev = v;
        }
        ok = ok && worst < 1e-8;
        return Check{worst, ok, os.str()};
    });
}

// f(x) = f0 + s0 (x - x0) - sum of curvature pieces; concave and piecewise
// quadratic with kinks at `knots`.
struct PiecewiseQuadratic {
    double x0 = 0.0;
    double f0 = 0.0;
    double s0 = -1.0;
    std::vector<double> knots;    // ascending, first == x0
    std::vector<double> curv;     // f'' = -curv[i] on [knots[i], knots[i+1])

    std::size_t piece(double x) const {
        std::size_t i = 0;
        while (i + 1 < knots.size() && x >= knots[i + 1]) ++i;
        return i;
    }
    // Value and slope at knots[i].
    std::pair<double, double> at_knot(std::size_t i) const {
        double f = f0;
        double s = s0;
        for (std::size_t j = 0; j < i; ++j) {
            double h = knots[j + 1] - knots[j];
            f += s * h - 0.5 * curv[j] * h * h;
            s -= curv[j] * h;
        }
        return {f, s};
    }
    double value(double x) const {
        std::size_t i = piece(x);
        auto [f, s] = at_knot(i);
        double h = x - knots[i];
        return f + s * h - 0.5 * curv[i] * h * h;
    }
    double slope(double x) const {
        std::size_t i = piece(x);
        auto [f, s] = at_knot(i);
        (void)f;
        return s - curv[i] * (x - knots[i]);
    }
};

CriterionResult tail_bound(const AcceptanceOptions& o) {
    return timed(8, "Concave tail bound", "max(log tail - log bound, linear |gap|)", 1e-12, 1.0, [&] {
        std::mt19937_64 rng(o.seed);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };
        double worst_excess = -kInf;
        double worst_linear = 0.0;
        int violations = 0;
        for (int trial = 0; trial < 200; ++trial) {
            PiecewiseQuadratic f;
            f.x0 = uni(-5.0, 5.0);
            f.f0 = uni(-5.0, 5.0);
            f.s0 = uni(-3.0, -0.05);
            const bool linear = trial % 10 == 0;
            int pieces = linear ? 1 : 1 + static_cast<int>(u01(rng) * 4.0);
            f.knots.push_back(f.x0);
            for (int i = 0; i < pieces; ++i) {
                f.curv.push_back(linear ? 0.0 : (u01(rng) < 0.2 ? 0.0 : uni(0.0, 5.0)));
                if (i + 1 < pieces) f.knots.push_back(f.knots.back() + uni(0.1, 3.0));
            }
            IntegrateOptions opts;
            opts.slope = [&f](double x) { return f.slope(x); };
            opts.breakpoints = f.knots;
            double tail = log_integrate([&f](double x) { return f.value(x); }, f.x0, kInf, opts).log;
            double bound = concave_tail_bound(f.f0, f.s0).log;
            double excess = tail - bound;
            worst_excess = std::max(worst_excess, excess);
            if (excess > 1e-12) ++violations;
            if (linear) worst_linear = std::max(worst_linear, std::abs(excess));
        }
        std::ostringstream os;
        os << violations << " of 200 above the bound (worst log excess " << worst_excess
           << "), linear cases |gap| <= " << worst_linear;
        double value = std::max(worst_excess, worst_linear);
        return Check{value, violations == 0 && worst_linear <= 1e-12, os.str()};
    });
}

CriterionResult gram_cross_check(const AcceptanceOptions& o) {
    return timed(9, "Gram cross-check", "max of the four relative errors against their bounds", 1.0,
                 10.0, [&] {
                     using cd = std::complex<double>;
                     // Disc Bergman kernel at cap 60.
                     auto disc = build_gram(GramWeight::unit(), {{1.0}}, 60, {}, o.threads);
                     double kernel_err = 0.0;
                     for (int i = 0; i <= 20; ++i) {
                         double x = 0.5 * i / 20.0;
                         for (double th : {0.0, 1.0, 2.5}) {
                             cd z = std::polar(std::sqrt(x), th);
                             double exact = 1.0 / (std::numbers::pi * (1 - x) * (1 - x));
                             double k = kernel_from_gram(disc, std::span<const cd>(&z, 1));
                             kernel_err = std::max(kernel_err, std::abs(k / exact - 1.0));
                         }
                     }
                     // Radial weight off-diagonals.
                     auto bf10 = GramWeight::model(RadialPotential::bargmann_fock(), 10);
                     auto radial = build_gram(bf10, {{3.0}}, 20, {}, o.threads);
                     double offdiag = std::max(max_offdiagonal_ratio(radial), max_offdiagonal_ratio(disc));
                     // Truncated bargmann-fock: additivity and the Poisson tail.
                     const int k = 50;
                     auto bfw = GramWeight::model(RadialPotential::bargmann_fock(), k);
                     auto trunc = build_gram(bfw, {{2.0}}, 200, {}, o.threads);
                     auto split = partial_split(trunc, admissible_order(0.2, k));
                     double additivity = 0.0;
                     double oracle_err = 0.0;
                     for (int i = 1; i <= 20; ++i) {
                         double x = 0.05 * i;
                         cd z = std::polar(std::sqrt(x), 0.7 * i);
                         std::span<const cd> pt(&z, 1);
                         double full = kernel_from_gram(trunc, pt);
                         double hi = split.kernel_high(pt);
                         double lo = split.kernel_low(pt);
                         additivity = std::max(additivity, std::abs((hi + lo) / full - 1.0));
                         double oracle = poisson_upper(split.a_min(), k * x).value();
                         oracle_err = std::max(oracle_err, std::abs(hi / full - oracle));
                     }
                     std::ostringstream os;
                     os << "disc kernel " << kernel_err << " (1e-6), off-diagonal " << offdiag
                        << " (1e-12), additivity " << additivity << " (1e-10), Poisson " << oracle_err
                        << " (2e-6)";
                     double worst = std::max({kernel_err / 1e-6, offdiag / 1e-12, additivity / 1e-10,
                                              oracle_err / 2e-6});
                     return Check{worst, worst < 1.0, os.str()};
                 });
}

}  // namespace

std::vector<int> acceptance_ids() { return {1, 2, 3, 4, 5, 6, 7, 8, 9}; }

CriterionResult run_criterion(int id, const AcceptanceOptions& opts) {
    switch (id) {
        case 1: return poisson_equivalence(opts);
        case 2: return boundary(opts);
        case 3: return diagonal_dependence(opts);
        case 4: return decay(opts);
        case 5: return full_identities(opts);
        case 6: return laplace(opts);
        case 7: return regimes(opts);
        case 8: return tail_bound(opts);
        case 9: return gram_cross_check(opts);
        default: break;
    }
    throw Error(ErrorKind::BadParams, "no acceptance check with id " + std::to_string(id));
}

std::string format_result(const CriterionResult& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "[%s] %d %s: %s = %.3g (tol %.3g), %.3f s (limit %.0f s)",
                  r.passed() ? "PASS" : "FAIL", r.id, r.title.c_str(), r.metric.c_str(), r.value,
                  r.tolerance, r.seconds, r.time_limit);
    std::string s = buf;
    if (!r.detail.empty()) s += "\n    " + r.detail;
    if (!r.in_time()) s += "\n    over the time limit";
    return s;
}

}  // namespace bergman
