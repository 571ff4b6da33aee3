#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bergman {

enum class PotentialKind { BargmannFock, FubiniStudy, Polynomial };

/// Sentinel domain bound for the built-in potentials, which live on all of C.
inline constexpr double kUnboundedXMax = 1e6;

/// Rotation-invariant Kähler potential phi(x) on C, x = |z|^2, normalized so
/// that phi(0) = 0 and phi_x(0) = 1. Everything is closed form.
///
/// Coordinates: x = |z|^2, t = -log x. The Laplacian density is
/// f = phi_x + x phi_xx, so that omega = f i dz^dzbar, and the moment map is
/// mu = x phi_x = -phi_t.
class RadialPotential {
public:
    static RadialPotential bargmann_fock();
    static RadialPotential fubini_study();
    /// phi = x + sum_{j>=2} c_j x^j on [0, x_max]; `higher` holds c_2, c_3, ...
    /// Throws NonPositiveCurvature if f <= 0 somewhere on the validation grid.
    static RadialPotential polynomial(std::vector<double> higher, double x_max);
    /// `bargmann-fock` or `fubini-study`.
    static RadialPotential from_name(std::string_view name);

    PotentialKind kind() const { return kind_; }
    std::string name() const;
    double x_max() const { return x_max_; }
    /// Built-ins are integrated over the whole plane; polynomials over x <= x_max.
    bool unbounded() const { return kind_ != PotentialKind::Polynomial; }
    const std::vector<double>& coefficients() const { return coeffs_; }

    double phi(double x) const;
    double phi_x(double x) const;
    double phi_xx(double x) const;
    double f(double x) const;
    double f_x(double x) const;
    double f_xx(double x) const;

    /// mu = x phi_x, without domain checks.
    double moment(double x) const;
    /// Supremum of mu over the integration domain (+inf for bargmann-fock).
    double moment_sup() const;
    /// The x with moment(x) == mu. Returns +inf when mu >= moment_sup() on an
    /// unbounded potential, x_max when mu exceeds the range of a polynomial.
    double inverse_moment(double mu) const;

    double phi_t(double t) const;
    double phi_tt(double t) const;

    /// phi(e^{-t}), finite for very negative t on unbounded potentials.
    double phi_at_t(double t) const;
    /// x f(x), which is phi_tt at t = -log x; finite as x -> inf.
    double x_f(double x) const;
    /// d/dt and d^2/dt^2 of log f(e^{-t}), evaluated at x = e^{-t}.
    double log_f_t(double x) const;
    double log_f_tt(double x) const;
    /// log f(e^{-t}).
    double log_f_at_t(double t) const;

    /// Smallest k for which g_a is concave in t for every a, with f1 = f.
    int concavity_threshold_laplacian() const { return k0_laplacian_; }
    /// Smallest k for which g_a is concave in t for every a, with f1 constant.
    int concavity_threshold_constant() const { return k0_constant_; }

    /// lim_{x->inf} -x f'(x)/f(x); only meaningful for unbounded potentials.
    double laplacian_log_slope_at_infinity() const;

private:
    RadialPotential(PotentialKind kind, std::vector<double> coeffs, double x_max);
    void validate_and_measure();

    PotentialKind kind_;
    // Full power-series coefficients p_0..p_n of phi (polynomial kind only).
    std::vector<double> coeffs_;
    double x_max_;
    int k0_laplacian_ = 1;
    int k0_constant_ = 1;
};

/// The weight f1 multiplying e^{-k phi} in the fiber norms.
class FiberWeight {
public:
    /// f1 = f, i.e. norms are taken against omega itself.
    static FiberWeight laplacian() { return FiberWeight(true, 1.0); }
    static FiberWeight constant(double value = 1.0);

    bool is_laplacian() const { return laplacian_; }
    double constant_value() const { return value_; }
    std::string name() const;

    double log_value(const RadialPotential& p, double x) const;
    double log_value_at_t(const RadialPotential& p, double t) const;
    /// d/dt log f1(e^{-t}), evaluated at x = e^{-t}.
    double log_t(const RadialPotential& p, double x) const;
    /// d^2/dt^2 log f1(e^{-t}), evaluated at x = e^{-t}.
    double log_tt(const RadialPotential& p, double x) const;

    int concavity_threshold(const RadialPotential& p) const;
    /// Largest monomial degree with finite norm, if the family is finite.
    std::optional<int> max_normalizable_degree(const RadialPotential& p, int k) const;

private:
    FiberWeight(bool laplacian, double value) : laplacian_(laplacian), value_(value) {}
    bool laplacian_;
    double value_;
};

/// Checked moment map: throws DomainExceeded unless 0 <= x <= x_max.
double moment_map(const RadialPotential& p, double x);

enum class GeometryKind { FiberC, ProductC, CP1 };

/// Torus-invariant model: one fiber over C, a product C^r, or CP^1 with the
/// Fubini-Study metric. The vanishing locus V is {x = 0} in every factor.
class ModelGeometry {
public:
    static ModelGeometry fiber(RadialPotential p, FiberWeight w = FiberWeight::laplacian());
    static ModelGeometry product(std::vector<RadialPotential> factors,
                                 std::vector<FiberWeight> weights = {});
    static ModelGeometry product(const RadialPotential& p, int r);
    static ModelGeometry cp1();

    GeometryKind kind() const { return kind_; }
    std::string name() const;
    int rank() const { return static_cast<int>(factors_.size()); }
    const RadialPotential& factor(int i) const { return factors_.at(static_cast<std::size_t>(i)); }
    const FiberWeight& weight(int i) const { return weights_.at(static_cast<std::size_t>(i)); }
    bool all_bargmann_fock() const;

    /// Exact degree bound for the holomorphic sections (CP1: k), if any.
    std::optional<int> degree_cap(int i, int k) const;

    /// Sum of the factor moments; throws DomainExceeded outside the domain.
    double nu(std::span<const double> x) const;
    std::vector<double> moments(std::span<const double> x) const;
    /// Supremum of nu.
    double nu_sup() const;

private:
    ModelGeometry(GeometryKind kind, std::vector<RadialPotential> f, std::vector<FiberWeight> w);
    GeometryKind kind_;
    std::vector<RadialPotential> factors_;
    std::vector<FiberWeight> weights_;
};

/// nu = sum_i mu_i(x_i).
double diagonal_moment(const ModelGeometry& g, std::span<const double> x);

std::string_view to_string(GeometryKind kind);

}  // namespace bergman
