#pragma once

#include "bergman/geometry.hpp"
#include "bergman/log_value.hpp"

namespace bergman {

/// One monomial z^a on a radial fiber: the log-integrand
///   g_a(t) = -k phi(x) - (a+1) t + log f1(x),   x = e^{-t},
/// whose integral gives the norm I_a = 2 pi int e^{g_a} dt.
class Model1DProblem {
public:
    Model1DProblem(RadialPotential potential, int k, int a,
                   FiberWeight weight = FiberWeight::laplacian());

    const RadialPotential& potential() const { return potential_; }
    const FiberWeight& weight() const { return weight_; }
    int k() const { return k_; }
    int a() const { return a_; }
    /// Smallest k for which g_a is concave on the whole t-line.
    int concavity_threshold() const { return k0_; }
    bool concave() const { return k_ >= k0_; }

    /// Lower end of the t-domain (-inf for the built-in potentials).
    double t_min() const;

    double g(double t) const;
    double g_t(double t) const;
    double g_tt(double t) const;

private:
    RadialPotential potential_;
    FiberWeight weight_;
    int k_;
    int a_;
    int k0_;
};

struct PeakData {
    double t_a = 0.0;
    double x_a = 0.0;
    double g_at_peak = 0.0;
    double g_second_at_peak = 0.0;
    /// The maximum sits on the boundary t = t_min (bounded potentials only).
    bool at_boundary = false;
    int iterations = 0;
};

/// Maximizer of g_a: Newton on g_a' from the moment-map seed, safeguarded by
/// bisection. Throws PreconditionViolated if k < k0, NoConvergence on failure.
PeakData find_peak(const Model1DProblem& p);

/// log I_a by quadrature.
LogValue log_norm(const Model1DProblem& p);
/// As log_norm, reusing an already computed peak.
LogValue log_norm(const Model1DProblem& p, const PeakData& peak);

/// Laplace approximation log(2 pi) + g(t_a) + 0.5 log(2 pi / |g''(t_a)|).
/// Throws RegimeTooSmall when a < sqrt(k).
LogValue laplace_log_norm(const Model1DProblem& p);

/// log of 2 pi times the integral of e^{g_a} over mu_lo <= mu(x) <= mu_hi.
LogValue log_mass_in_moment_range(const Model1DProblem& p, double mu_lo, double mu_hi);

/// Constants of the three-regime concentration statement. C and C1 are
/// existential in the statement; these defaults are what the tests pin.
struct RegimeParams {
    double R = 0.9;
    double R1 = 0.5;
    double C = 20.0;
    double C1 = 3.0;
};

/// 1 if a > Rk - C; 3 if a < sqrt(k); 2 otherwise (a = sqrt(k) is regime 2).
/// Throws BadThresholds unless 0 < R1 < R < 1 and C >= 0.
int classify_regime(const Model1DProblem& p, double R, double R1, double C);

struct RegimeReport {
    int regime = 0;
    double R = 0.0;
    double R1 = 0.0;
    double C = 0.0;
    double C1 = 0.0;
    /// Moment-map windows, as [lo, hi] pairs; outside may have two pieces.
    double inside_mu_lo = 0.0;
    double inside_mu_hi = 0.0;
    LogValue inside_log_mass;
    LogValue outside_log_mass;

    double log_ratio() const { return outside_log_mass.log - inside_log_mass.log; }
};

/// Masses of the concentration region and its competitor for the regime of p:
///   1: inside R1 <= mu <= R, outside mu < R1
///   2: inside |mu - a/k| < C1 sqrt(a) log k / k, outside the complement
///   3: inside mu < 2 k^{-1/4}, outside the complement
RegimeReport mass_ratio(const Model1DProblem& p, const RegimeParams& params = {});

}  // namespace bergman
