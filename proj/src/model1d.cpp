#include "bergman/model1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bergman/error.hpp"
#include "bergman/logquad.hpp"

namespace bergman {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);
constexpr int kMaxNewton = 200;

void require_concave(const Model1DProblem& p) {
    if (!p.concave()) {
        std::ostringstream os;
        os << "k = " << p.k() << " is below the concavity threshold k0 = "
           << p.concavity_threshold();
        throw Error(ErrorKind::PreconditionViolated, os.str());
    }
}

void require_normalizable(const Model1DProblem& p) {
    auto cap = p.weight().max_normalizable_degree(p.potential(), p.k());
    if (cap && p.a() > *cap) {
        std::ostringstream os;
        os << "z^" << p.a() << " has infinite norm for k = " << p.k() << " (max degree " << *cap
           << ")";
        throw Error(ErrorKind::BadParams, os.str());
    }
}

// t-interval of {mu_lo <= mu <= mu_hi}; t decreases as mu increases.
std::pair<double, double> moment_window_to_t(const Model1DProblem& p, double mu_lo,
                                             double mu_hi) {
    const auto& pot = p.potential();
    double t_hi = mu_lo <= 0.0 ? kInf : -std::log(pot.inverse_moment(mu_lo));
    double t_lo = p.t_min();
    if (mu_hi < pot.moment_sup()) {
        double x = pot.inverse_moment(mu_hi);
        if (std::isfinite(x) && x < pot.x_max()) t_lo = std::max(t_lo, -std::log(x));
    }
    t_hi = std::max(t_hi, t_lo);
    return {t_lo, t_hi};
}

IntegrateOptions norm_options(const Model1DProblem& p, const PeakData& peak) {
    IntegrateOptions opts;
    opts.slope = [&p](double t) { return p.g_t(t); };
    opts.anchor = peak.t_a;
    double sigma = 1.0 / std::sqrt(std::max(-peak.g_second_at_peak, 1e-300));
    if (sigma < 1.0) {
        for (double m : {1.5, 4.0, 10.0}) {
            opts.breakpoints.push_back(peak.t_a - m * sigma);
            opts.breakpoints.push_back(peak.t_a + m * sigma);
        }
    }
    return opts;
}

}  // namespace

Model1DProblem::Model1DProblem(RadialPotential potential, int k, int a, FiberWeight weight)
    : potential_(std::move(potential)), weight_(weight), k_(k), a_(a) {
    if (k < 1) throw Error(ErrorKind::BadParams, "k must be >= 1");
    if (a < 0) throw Error(ErrorKind::BadParams, "a must be >= 0");
    if (!(std::exp(weight_.log_value(potential_, 0.0)) > 0.0)) {
        throw Error(ErrorKind::BadParams, "weight must be positive at the origin");
    }
    k0_ = weight_.concavity_threshold(potential_);
}

double Model1DProblem::t_min() const {
    return potential_.unbounded() ? -kInf : -std::log(potential_.x_max());
}

double Model1DProblem::g(double t) const {
    if (t < t_min()) return -kInf;
    if (potential_.kind() == PotentialKind::FubiniStudy && t < 0.0) {
        // phi = -t + log1p(e^t); collecting the linear parts avoids cancelling
        // two terms of size k|t|.
        double tail = std::log1p(std::exp(t));
        double lin = k_ - a_ - 1.0;
        double out = lin * t - k_ * tail;
        if (weight_.is_laplacian()) return out + 2.0 * t - 2.0 * tail;
        return out + std::log(weight_.constant_value());
    }
    double phi = potential_.phi_at_t(t);
    if (phi == kInf) return -kInf;
    return -k_ * phi - (a_ + 1.0) * t + weight_.log_value_at_t(potential_, t);
}

double Model1DProblem::g_t(double t) const {
    double x = std::exp(-t);
    return k_ * potential_.moment(x) - (a_ + 1.0) + weight_.log_t(potential_, x);
}

double Model1DProblem::g_tt(double t) const {
    double x = std::exp(-t);
    return -k_ * potential_.x_f(x) + weight_.log_tt(potential_, x);
}

PeakData find_peak(const Model1DProblem& p) {
    require_concave(p);
    const auto& pot = p.potential();
    const double target = (p.a() + 1.0) / p.k();
    double seed_mu = std::min(target, 0.999 * pot.moment_sup());
    double x0 = pot.inverse_moment(seed_mu);
    x0 = std::clamp(x0, 1e-300, pot.x_max());
    double t = -std::log(x0);
    const double tmin = p.t_min();
    t = std::max(t, tmin);

    // Bracket: g' > 0 at lo, g' < 0 at hi.
    double lo = t;
    double hi = t;
    double step = 1.0;
    if (p.g_t(t) > 0.0) {
        while (p.g_t(hi) > 0.0) {
            lo = hi;
            hi += step;
            step *= 2.0;
            if (step > 1e6) throw Error(ErrorKind::NoConvergence, "no sign change of g' to the right");
        }
    } else {
        while (p.g_t(lo) <= 0.0) {
            hi = lo;
            if (lo == tmin) {
                PeakData boundary;
                boundary.t_a = tmin;
                boundary.x_a = std::exp(-tmin);
                boundary.g_at_peak = p.g(tmin);
                boundary.g_second_at_peak = p.g_tt(tmin);
                boundary.at_boundary = true;
                return boundary;
            }
            lo = std::max(lo - step, tmin);
            step *= 2.0;
            if (step > 1e6) throw Error(ErrorKind::NoConvergence, "no sign change of g' to the left");
        }
    }

    const double tol = 1e-12 * p.k();
    for (int it = 1; it <= kMaxNewton; ++it) {
        double gp = p.g_t(t);
        bool width_exhausted = hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() *
                                              std::max(1.0, std::abs(t));
        if (std::abs(gp) <= tol || width_exhausted) {
            if (std::abs(gp) > tol * 1e3) break;
            PeakData out;
            out.t_a = t;
            out.x_a = std::exp(-t);
            out.g_at_peak = p.g(t);
            out.g_second_at_peak = p.g_tt(t);
            out.iterations = it;
            return out;
        }
        (gp > 0.0 ? lo : hi) = t;
        double newton = t - gp / p.g_tt(t);
        t = (newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
    }
    std::ostringstream os;
    os << "peak search for k = " << p.k() << ", a = " << p.a() << " did not converge";
    throw Error(ErrorKind::NoConvergence, os.str());
}

LogValue log_norm(const Model1DProblem& p) { return log_norm(p, find_peak(p)); }

LogValue log_norm(const Model1DProblem& p, const PeakData& peak) {
    require_concave(p);
    require_normalizable(p);
    auto opts = norm_options(p, peak);
    auto g = [&p](double t) { return p.g(t); };
    LogValue v = log_integrate(g, p.t_min(), kInf, opts);
    return LogValue{v.log + kLog2Pi};
}

LogValue laplace_log_norm(const Model1DProblem& p) {
    if (static_cast<long long>(p.a()) * p.a() < p.k()) {
        std::ostringstream os;
        os << "a = " << p.a() << " < sqrt(k) = " << std::sqrt(double(p.k()));
        throw Error(ErrorKind::RegimeTooSmall, os.str());
    }
    PeakData peak = find_peak(p);
    if (peak.at_boundary) {
        throw Error(ErrorKind::PreconditionViolated, "peak on the domain boundary");
    }
    double curvature = -peak.g_second_at_peak;
    return LogValue{kLog2Pi + peak.g_at_peak + 0.5 * std::log(2.0 * std::numbers::pi / curvature)};
}

LogValue log_mass_in_moment_range(const Model1DProblem& p, double mu_lo, double mu_hi) {
    require_concave(p);
    require_normalizable(p);
    if (!(mu_lo <= mu_hi)) throw Error(ErrorKind::BadParams, "empty moment range");
    PeakData peak = find_peak(p);
    auto [t_lo, t_hi] = moment_window_to_t(p, mu_lo, mu_hi);
    auto opts = norm_options(p, peak);
    auto g = [&p](double t) { return p.g(t); };
    LogValue v = log_integrate(g, t_lo, t_hi, opts);
    return v.is_zero() ? v : LogValue{v.log + kLog2Pi};
}

int classify_regime(const Model1DProblem& p, double R, double R1, double C) {
    if (!(R1 > 0.0 && R1 < R && R < 1.0) || !(C >= 0.0)) {
        std::ostringstream os;
        os << "need 0 < R1 < R < 1 and C >= 0 (R = " << R << ", R1 = " << R1 << ", C = " << C
           << ")";
        throw Error(ErrorKind::BadThresholds, os.str());
    }
    const double a = p.a();
    if (a > R * p.k() - C) return 1;
    if (static_cast<long long>(p.a()) * p.a() < p.k()) return 3;
    return 2;
}

RegimeReport mass_ratio(const Model1DProblem& p, const RegimeParams& params) {
    RegimeReport rep;
    rep.regime = classify_regime(p, params.R, params.R1, params.C);
    if (!(params.C1 > 0.0)) throw Error(ErrorKind::BadThresholds, "C1 must be positive");
    rep.R = params.R;
    rep.R1 = params.R1;
    rep.C = params.C;
    rep.C1 = params.C1;
    const double k = p.k();
    const double sup = p.potential().moment_sup();
    switch (rep.regime) {
        case 1:
            rep.inside_mu_lo = params.R1;
            rep.inside_mu_hi = params.R;
            rep.inside_log_mass = log_mass_in_moment_range(p, params.R1, params.R);
            rep.outside_log_mass = log_mass_in_moment_range(p, 0.0, params.R1);
            break;
        case 2: {
            double centre = p.a() / k;
            double half = params.C1 * std::sqrt(double(p.a())) * std::log(k) / k;
            rep.inside_mu_lo = std::max(0.0, centre - half);
            rep.inside_mu_hi = centre + half;
            rep.inside_log_mass = log_mass_in_moment_range(p, rep.inside_mu_lo, rep.inside_mu_hi);
            LogValue below = rep.inside_mu_lo > 0.0
                                 ? log_mass_in_moment_range(p, 0.0, rep.inside_mu_lo)
                                 : LogValue::zero();
            LogValue above = rep.inside_mu_hi < sup
                                 ? log_mass_in_moment_range(p, rep.inside_mu_hi, kInf)
                                 : LogValue::zero();
            rep.outside_log_mass = below + above;
            break;
        }
        default: {
            double cut = 2.0 * std::pow(k, -0.25);
            rep.inside_mu_lo = 0.0;
            rep.inside_mu_hi = cut;
            rep.inside_log_mass = log_mass_in_moment_range(p, 0.0, cut);
            rep.outside_log_mass =
                cut < sup ? log_mass_in_moment_range(p, cut, kInf) : LogValue::zero();
            break;
        }
    }
    return rep;
}

}  // namespace bergman
