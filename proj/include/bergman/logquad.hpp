#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "bergman/log_value.hpp"

namespace bergman {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

GaussLegendreRule gauss_legendre(int n);

/// The 16-point rule used for every panel of log_integrate.
const GaussLegendreRule& panel_rule();

struct IntegrateOptions {
    double rel_tol = 1e-12;
    /// g'(t). Required for an infinite endpoint: tails are cut where the
    /// concave tail bound certifies the remainder is negligible.
    std::function<double(double)> slope;
    /// Where to start extending infinite tails (typically the peak of g).
    std::optional<double> anchor;
    /// Extra panel boundaries inside (lo, hi).
    std::vector<double> breakpoints;
    /// Panel length used when extending towards an infinite endpoint.
    double tail_step = 1.0;
    /// Called with (t, g(t)) at every quadrature node evaluated.
    std::function<void(double, double)> on_node;
};

/// log of the integral of e^{g(t)} over (lo, hi). Infinite endpoints need
/// `opts.slope`; g must be eventually concave with slope of the right sign.
///
/// Composite 16-point Gauss-Legendre: each panel is bisected until the panel
/// estimate and the sum of its halves agree to rel_tol (or the panel is
/// negligible against the total). Panels are combined in ascending t.
LogValue log_integrate(const std::function<double(double)>& g, double lo, double hi,
                       const IntegrateOptions& opts = {});

/// log of e^{f(x0)} / (-f'(x0)), an upper bound for the integral of e^f over
/// [x0, inf) when f is concave there. Throws NonNegativeSlope if slope >= 0.
LogValue concave_tail_bound(double f_at_x0, double slope_at_x0);

enum class TailKind { PoissonUpper, PoissonLower, BinomialUpper, BinomialLower };

struct TailParams {
    double rate = 0.0;             // Poisson mean
    std::int64_t trials = 0;       // binomial trials
    double success = 0.0;          // binomial success probability
};

/// Closed-form tail probabilities, returned in log form:
///   PoissonUpper  P(N >= threshold), N ~ Poisson(rate)
///   PoissonLower  P(N <  threshold)
///   BinomialUpper P(B >= threshold), B ~ Binomial(trials, success)
///   BinomialLower P(B <  threshold)
/// The smaller tail is summed term by term in log form; the other side is
/// obtained as log1p(-smaller). Throws BadParams on invalid parameters.
LogValue oracle_tail(TailKind kind, std::int64_t threshold, const TailParams& params);

inline LogValue poisson_upper(std::int64_t threshold, double rate) {
    return oracle_tail(TailKind::PoissonUpper, threshold, {.rate = rate});
}
inline LogValue poisson_lower(std::int64_t threshold, double rate) {
    return oracle_tail(TailKind::PoissonLower, threshold, {.rate = rate});
}
inline LogValue binomial_upper(std::int64_t threshold, std::int64_t trials, double p) {
    return oracle_tail(TailKind::BinomialUpper, threshold, {.trials = trials, .success = p});
}
inline LogValue binomial_lower(std::int64_t threshold, std::int64_t trials, double p) {
    return oracle_tail(TailKind::BinomialLower, threshold, {.trials = trials, .success = p});
}

/// log P(N = j) for N ~ Poisson(rate), via the saddle-point expansion.
double log_poisson_pmf(std::int64_t j, double rate);
/// log P(B = j) for B ~ Binomial(n, p), via the saddle-point expansion.
double log_binomial_pmf(std::int64_t j, std::int64_t n, double p);

}  // namespace bergman
