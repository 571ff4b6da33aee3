#include "bergman/logquad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bergman/error.hpp"

namespace bergman {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxDepth = 48;
constexpr int kMaxTailSteps = 200000;
constexpr double kMaxTailGrowth = 16.0;
// log(1e-16): relative size of a discarded infinite tail.
const double kTailCut = std::log(1e-16);
// Largest panel discrepancy that may be attributed to rounding in g.
constexpr double kNoiseCeiling = 1e-9;

struct Integrator {
    const std::function<double(double)>& g;
    const IntegrateOptions& opts;
    const GaussLegendreRule& rule = panel_rule();

    double eval(double t) const {
        double v = g(t);
        if (std::isnan(v) || v == kInf) {
            std::ostringstream os;
            os.precision(17);
            os << "integrand is " << v << " at t = " << t;
            throw Error(ErrorKind::ToleranceNotMet, os.str());
        }
        if (opts.on_node) opts.on_node(t, v);
        return v;
    }

    // log of the 16-point estimate on [a, b].
    double panel(double a, double b) const {
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        std::array<double, 16> vals{};
        double m = -kInf;
        for (std::size_t i = 0; i < 16; ++i) {
            vals[i] = eval(mid + half * rule.nodes[i]);
            m = std::max(m, vals[i]);
        }
        if (m == -kInf) return -kInf;
        double s = 0.0;
        for (std::size_t i = 0; i < 16; ++i) s += rule.weights[i] * std::exp(vals[i] - m);
        return m + std::log(s * half);
    }

    // Bisects until the panel and its halves agree. Once the discrepancy is
    // small and stops shrinking under bisection it is rounding noise in g
    // itself, and the panel is accepted at that level.
    void refine(double a, double b, double whole, double negligible, int depth,
                double parent_diff, std::vector<double>& leaves) const {
        const double m = 0.5 * (a + b);
        const double left = panel(a, m);
        const double right = panel(m, b);
        const double halves = (LogValue{left} + LogValue{right}).log;
        const double top = std::max(whole, halves);
        const double diff = top == -kInf ? 0.0 : std::abs(whole - halves);
        const bool agree = diff <= opts.rel_tol;
        const bool noise = depth >= 3 && diff < kNoiseCeiling && diff > 0.1 * parent_diff;
        if (agree || noise || top < negligible) {
            leaves.push_back(halves);
            return;
        }
        if (depth >= kMaxDepth || !(m > a && m < b)) {
            std::ostringstream os;
            os.precision(17);
            os << "panel [" << a << ", " << b << "] did not converge (estimates " << whole << " vs "
               << halves << ")";
            throw Error(ErrorKind::ToleranceNotMet, os.str());
        }
        refine(a, m, left, negligible, depth + 1, diff, leaves);
        refine(m, b, right, negligible, depth + 1, diff, leaves);
    }

    // Extends from `start` towards +inf (dir = +1) or -inf (dir = -1) until the
    // concave tail bound is negligible against the running total. Returns the
    // panel boundaries visited (excluding start) and updates `total`.
    std::vector<double> extend(double start, int dir, double& total) const {
        std::vector<double> cuts;
        double b = start;
        bool seen_decay = false;
        double width = opts.tail_step;
        for (int step = 0; step < kMaxTailSteps; ++step) {
            double next = b + dir * width;
            double lo = std::min(b, next);
            double hi = std::max(b, next);
            total = (LogValue{total} + LogValue{panel(lo, hi)}).log;
            b = next;
            cuts.push_back(b);
            double gb = g(b);
            if (gb == -kInf) return cuts;
            if (std::isnan(gb)) throw Error(ErrorKind::ToleranceNotMet, "integrand is nan");
            double s = opts.slope(b) * dir;
            if (s < 0.0) {
                seen_decay = true;
                double bound = gb - std::log(-s);
                if (bound < total + kTailCut) return cuts;
                width = std::min(2.0 * width, kMaxTailGrowth * opts.tail_step);
            }
        }
        std::ostringstream os;
        os << "tail towards " << (dir > 0 ? "+" : "-") << "inf not certified after "
           << kMaxTailSteps << " steps";
        throw Error(seen_decay ? ErrorKind::ToleranceNotMet : ErrorKind::NoDecayCertificate,
                    os.str());
    }
};

}  // namespace

GaussLegendreRule gauss_legendre(int n) {
    GaussLegendreRule r;
    r.nodes.resize(static_cast<std::size_t>(n));
    r.weights.resize(static_cast<std::size_t>(n));
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        long double z = std::cos(std::numbers::pi_v<long double> * (i + 0.75L) / (n + 0.5L));
        long double dp = 0.0L;
        for (int it = 0; it < 100; ++it) {
            long double p0 = 1.0L;
            long double p1 = 0.0L;
            for (int j = 0; j < n; ++j) {
                long double p2 = p1;
                p1 = p0;
                p0 = ((2.0L * j + 1.0L) * z * p1 - j * p2) / (j + 1.0L);
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0L);
            long double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-19L) break;
        }
        // Recompute the derivative at the converged node.
        long double p0 = 1.0L;
        long double p1 = 0.0L;
        for (int j = 0; j < n; ++j) {
            long double p2 = p1;
            p1 = p0;
            p0 = ((2.0L * j + 1.0L) * z * p1 - j * p2) / (j + 1.0L);
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0L);
        long double w = 2.0L / ((1.0L - z * z) * dp * dp);
        auto lo = static_cast<std::size_t>(i);
        auto hi = static_cast<std::size_t>(n - 1 - i);
        r.nodes[lo] = static_cast<double>(-z);
        r.nodes[hi] = static_cast<double>(z);
        r.weights[lo] = r.weights[hi] = static_cast<double>(w);
    }
    return r;
}

const GaussLegendreRule& panel_rule() {
    static const GaussLegendreRule rule = gauss_legendre(16);
    return rule;
}

LogValue log_integrate(const std::function<double(double)>& g, double lo, double hi,
                       const IntegrateOptions& opts) {
    if (std::isnan(lo) || std::isnan(hi) || lo > hi) {
        throw Error(ErrorKind::BadParams, "log_integrate needs lo <= hi");
    }
    if (lo == hi) return LogValue::zero();
    const bool open_lo = lo == -kInf;
    const bool open_hi = hi == kInf;
    if ((open_lo || open_hi) && !opts.slope) {
        throw Error(ErrorKind::NoDecayCertificate,
                    "infinite endpoint requested without a slope certificate");
    }
    if (!(opts.tail_step > 0.0) || !(opts.rel_tol > 0.0)) {
        throw Error(ErrorKind::BadParams, "tail_step and rel_tol must be positive");
    }

    Integrator in{g, opts};

    double anchor = opts.anchor.value_or(open_lo ? (open_hi ? 0.0 : hi) : (open_hi ? lo : 0.5 * (lo + hi)));
    anchor = std::clamp(anchor, lo, hi);

    std::vector<double> cuts{anchor};
    double total = -kInf;
    if (open_hi) {
        auto right = in.extend(anchor, +1, total);
        cuts.insert(cuts.end(), right.begin(), right.end());
    } else if (anchor < hi) {
        cuts.push_back(hi);
    }
    if (open_lo) {
        auto left = in.extend(anchor, -1, total);
        cuts.insert(cuts.end(), left.begin(), left.end());
    } else if (anchor > lo) {
        cuts.push_back(lo);
    }
    const double a = *std::min_element(cuts.begin(), cuts.end());
    const double b = *std::max_element(cuts.begin(), cuts.end());
    for (double t : opts.breakpoints) {
        if (t > a && t < b) cuts.push_back(t);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<double> coarse(cuts.size() - 1);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) coarse[i] = in.panel(cuts[i], cuts[i + 1]);
    const double estimate = log_sum_exp(coarse);
    if (estimate == -kInf) return LogValue::zero();

    const double negligible =
        estimate + std::log(opts.rel_tol * 1e-3 / static_cast<double>(coarse.size()));
    std::vector<double> leaves;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        in.refine(cuts[i], cuts[i + 1], coarse[i], negligible, 0, kInf, leaves);
    }
    return LogValue{log_sum_exp(leaves)};
}

LogValue concave_tail_bound(double f_at_x0, double slope_at_x0) {
    if (!(slope_at_x0 < 0.0)) {
        std::ostringstream os;
        os << "slope " << slope_at_x0 << " is not negative";
        throw Error(ErrorKind::NonNegativeSlope, os.str());
    }
    return LogValue{f_at_x0 - std::log(-slope_at_x0)};
}

}  // namespace bergman
