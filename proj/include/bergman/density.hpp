#pragma once

#include <array>
#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "bergman/geometry.hpp"
#include "bergman/log_value.hpp"

namespace bergman {

/// log I_a for a = 0, 1, 2, ... on one fiber, computed by quadrature on demand.
/// Safe to share between threads: entries are written once under a lock and
/// published through an atomic count.
class FiberNorms {
public:
    FiberNorms(RadialPotential potential, FiberWeight weight, int k, std::optional<int> cap);
    FiberNorms(const FiberNorms&) = delete;
    FiberNorms& operator=(const FiberNorms&) = delete;

    int k() const { return k_; }
    const RadialPotential& potential() const { return potential_; }
    /// Largest degree in the family, if finite.
    std::optional<int> cap() const { return cap_; }

    double log_norm(int a) const;
    /// Makes degrees 0..a available without further locking.
    void ensure(int a) const;
    int available() const { return static_cast<int>(count_.load(std::memory_order_acquire)); }

    /// Hard ceiling on the number of cached degrees.
    static constexpr int kMaxDegrees = 1 << 22;

private:
    static constexpr int kChunkBits = 12;
    static constexpr int kChunk = 1 << kChunkBits;
    static constexpr int kMaxChunks = kMaxDegrees / kChunk;

    RadialPotential potential_;
    FiberWeight weight_;
    int k_;
    std::optional<int> cap_;
    mutable std::mutex mutex_;
    mutable std::atomic<std::size_t> count_{0};
    mutable std::array<std::unique_ptr<double[]>, kMaxChunks> chunks_;
};

enum class PartialMethod {
    Auto,             // enumeration for rank <= 3, Poisson fast path above
    Enumerate,        // sum over multi-indices, grouped by total degree
    PoissonFastPath,  // bargmann-fock only: ratio = P(Poisson(k nu) >= a_min)
};

enum class DensityPart { Full, Partial, Complement };

struct DensityPoint {
    std::vector<double> x;
    std::vector<double> mu;
    double nu = 0.0;
    LogValue log_rho;
    LogValue log_rho_partial;
    /// Density of the span of the degrees below a_min.
    LogValue log_rho_complement;
    double ratio = 0.0;
    /// log(1 - ratio), accurate when the ratio is close to one.
    double log_one_minus_ratio = 0.0;
    /// Highest degree summed, per factor.
    std::vector<int> degree_caps;
};

/// Evaluates rho_k and its restriction to total degree >= a_min on one
/// geometry at fixed k. Norms are cached per factor and shared by all points.
class DensityEngine {
public:
    DensityEngine(const ModelGeometry& geometry, int k);

    const ModelGeometry& geometry() const { return geometry_; }
    int k() const { return k_; }

    DensityPoint evaluate(std::span<const double> x, long long a_min,
                          PartialMethod method = PartialMethod::Auto) const;

    /// Per-degree log terms a log x - k phi(x) - log I_a on factor i, summed
    /// until the certified truncation point (or the exact cap).
    std::vector<double> log_terms(int i, double x, long long a_min) const;

private:
    friend LogValue log_integrated_density(const DensityEngine&, long long, DensityPart, double,
                                           double);
    // No domain check: CP1 integrals reach the point at infinity.
    DensityPoint evaluate_at(std::vector<double> x, std::vector<double> mu, long long a_min,
                             PartialMethod method) const;

    ModelGeometry geometry_;
    int k_;
    std::vector<std::unique_ptr<FiberNorms>> norms_;
};

struct PartialDensityQuery {
    ModelGeometry geometry;
    int k = 1;
    double delta = 0.0;
    long long a_min = 0;
};

/// ceil(delta k), snapping delta k to the nearest integer when it is within
/// rounding of one.
long long admissible_order(double delta, int k);

/// Validates k >= 1 and 0 <= delta <= delta_max.
PartialDensityQuery make_query(const ModelGeometry& geometry, int k, double delta,
                               double delta_max = 0.4);

using Grid = std::vector<std::vector<double>>;

struct DensityProfile {
    ModelGeometry geometry;
    int k = 1;
    double delta = 0.0;
    long long a_min = 0;
    std::vector<DensityPoint> points;
};

struct DensityOptions {
    int threads = 1;
    PartialMethod method = PartialMethod::Auto;
};

/// rho_k on the grid; the partial fields equal the full ones.
DensityProfile full_density(const ModelGeometry& geometry, int k, const Grid& grid,
                            const DensityOptions& opts = {});
DensityProfile partial_density(const PartialDensityQuery& q, const Grid& grid,
                               const DensityOptions& opts = {});

/// n points x in [lo, hi] on a rank-1 geometry.
Grid x_grid(double lo, double hi, int n);
/// Points s * direction (s >= 0) whose nu runs uniformly over [nu_lo, nu_hi].
Grid ray_grid(const ModelGeometry& geometry, std::span<const double> direction, double nu_lo,
              double nu_hi, int n);
/// The point s * direction with nu = target.
std::vector<double> point_on_ray(const ModelGeometry& geometry, std::span<const double> direction,
                                 double target);

struct BoundaryResult {
    std::vector<double> x_star;
    double nu_star = 0.0;
    /// nu_star - delta (signed).
    double distance_to_delta = 0.0;
    int evaluations = 0;
};

/// Where the ratio crosses 1/2 along the ray through `direction`: a scan in
/// nu brackets the crossing, bisection refines it to 1e-10 in nu.
/// Throws NoCrossing if the ratio stays on one side.
BoundaryResult boundary_detect(const PartialDensityQuery& q, std::span<const double> direction);

struct DecayFit {
    std::vector<double> x_star;
    std::vector<int> k_ladder;
    std::vector<double> log_ratio;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    /// For every p = 1..10, log ratio + p log k strictly decreases over the
    /// upper half of the ladder and ends below where it started.
    bool superpolynomial = false;
    /// Points beyond this many ladder entries had log ratio < -700 and were
    /// left out of the fit.
    std::size_t usable = 0;
    bool underflow = false;
};

/// OLS fit of log ratio against k at a fixed point in the forbidden region.
/// Throws PreconditionViolated unless nu(x_star) < delta, BadParams unless the
/// ladder is increasing with at least four entries, RatioUnderflow when fewer
/// than two ladder entries are usable.
DecayFit decay_fit(const ModelGeometry& geometry, double delta, std::span<const double> x_star,
                   const std::vector<int>& k_ladder, int threads = 1);

/// Large-deviation exponent lim (1/k) log ratio for the built-in models:
/// Poisson (bargmann-fock factors) or binomial (CP1). Empty otherwise.
std::optional<double> chernoff_rate(const ModelGeometry& geometry, double delta, double nu);

/// log of the integral of the chosen density against the volume form over
/// mu in [mu_lo, mu_hi], on a rank-1 geometry. With dV = d(theta) d(mu) this
/// is log(2 pi) + log of the integral of rho over mu.
LogValue log_integrated_density(const DensityEngine& engine, long long a_min, DensityPart part,
                                double mu_lo, double mu_hi);

}  // namespace bergman
