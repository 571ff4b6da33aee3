#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bergman/geometry.hpp"

namespace bergman {

using Point = std::vector<std::complex<double>>;
using MultiIndex = std::vector<int>;

/// All multi-indices in `vars` variables with total degree <= cap, ordered by
/// total degree and then lexicographically (descending in the first slot).
std::vector<MultiIndex> total_degree_basis(int vars, int cap);

/// The weight of the inner product, split in two:
///   <s1, s2> = int s1 conj(s2) metric volume dA
/// where dA is Lebesgue measure. Kernels are reported in density form
/// sum |s_i|^2 metric, so the metric is the fiber metric h and the volume is
/// the density of the integration measure against dA.
struct GramWeight {
    std::function<double(std::span<const std::complex<double>>)> metric;
    std::function<double(std::span<const std::complex<double>>)> volume;
    /// Depends on |z_i| only; enables the angular orthogonality checks.
    bool radial = false;
    std::string name;

    /// metric = volume = 1: the classical Bergman kernel of the domain.
    static GramWeight unit();
    /// metric e^{-k phi} and volume 2 f in each variable: the norms used by
    /// the model densities (dtheta d(r^2) = 2 dA).
    static GramWeight model(const RadialPotential& p, int k);
    /// Multiplies the metric by c.
    GramWeight scaled(double c) const;
};

/// A polydisc {|z_i| <= radii[i]}.
struct PolydiscDomain {
    std::vector<double> radii;
};

/// Tensor quadrature: Gauss-Legendre in each radius, trapezoid in each angle.
/// Zero fields are sized from the degree cap (angular >= 2 cap + 1, radial
/// >= cap + 16).
struct QuadratureSpec {
    int radial_order = 0;
    int angular_points = 0;

    /// Both counts set to `order`.
    static QuadratureSpec uniform(int order) { return {order, order}; }
};

struct GramSystem {
    std::vector<MultiIndex> basis;
    GramWeight weight;
    PolydiscDomain domain;
    QuadratureSpec quadrature;
    Eigen::MatrixXcd gram;
    /// Lower-triangular L with gram = L L^H.
    Eigen::MatrixXcd factor;
    /// log10 of max/min |L_jj|.
    double diagonal_span_decades = 0.0;
    /// Set when the diagonal of the factor spans more than 14 decades.
    bool ill_conditioned = false;
};

/// Hermitian factorization with breakdown detection. Throws
/// NotPositiveDefinite naming the first pivot that is not safely positive.
Eigen::MatrixXcd cholesky_factor(const Eigen::MatrixXcd& gram);

/// max |gram - L L^H| / max |gram|.
double factorization_residual(const GramSystem& g);

GramSystem build_gram(const GramWeight& weight, const PolydiscDomain& domain,
                      std::vector<MultiIndex> basis, QuadratureSpec quadrature = {},
                      int threads = 1);
/// Basis of all monomials of total degree <= degree_cap.
GramSystem build_gram(const GramWeight& weight, const PolydiscDomain& domain, int degree_cap,
                      QuadratureSpec quadrature = {}, int threads = 1);

/// sum_i |s_i(z)|^2 metric(z) for an orthonormal basis s_i of the span.
double kernel_from_gram(const GramSystem& g, std::span<const std::complex<double>> point);

/// Largest |gram_ij| / sqrt(gram_ii gram_jj) over pairs with distinct indices.
double max_offdiagonal_ratio(const GramSystem& g);

/// The span split by total degree: high = degrees >= a_min, low = the rest.
/// Each part is factorized on its own.
class PartialSplit {
public:
    PartialSplit(const GramSystem& g, long long a_min);

    long long a_min() const { return a_min_; }
    const GramSystem& high() const { return *high_; }
    bool has_low() const { return low_ != nullptr; }
    const GramSystem& low() const { return *low_; }

    double kernel_high(std::span<const std::complex<double>> point) const;
    /// Zero when the low part is empty.
    double kernel_low(std::span<const std::complex<double>> point) const;

private:
    long long a_min_;
    std::shared_ptr<GramSystem> high_;
    std::shared_ptr<GramSystem> low_;
};

/// Throws EmptySubspace when no basis element has degree >= a_min.
PartialSplit partial_split(const GramSystem& g, long long a_min);

}  // namespace bergman
