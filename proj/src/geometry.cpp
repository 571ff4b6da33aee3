#include "bergman/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bergman/error.hpp"

namespace bergman {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kValidationPoints = 4096;

// Horner evaluation of sum_j scale(j) * p_j * x^(j - shift), over j >= shift.
template <class Scale>
double poly_series(const std::vector<double>& p, double x, int shift, Scale scale) {
    double acc = 0.0;
    for (int j = static_cast<int>(p.size()) - 1; j >= shift; --j) {
        acc = acc * x + scale(j) * p[static_cast<std::size_t>(j)];
    }
    return acc;
}

// Chebyshev-Lobatto points on [0, x_max], ascending.
std::vector<double> validation_grid(double x_max) {
    std::vector<double> xs(kValidationPoints);
    for (int j = 0; j < kValidationPoints; ++j) {
        double c = std::cos(std::numbers::pi * j / (kValidationPoints - 1));
        xs[static_cast<std::size_t>(j)] = 0.5 * x_max * (1.0 - c);
    }
    xs.front() = 0.0;
    xs.back() = x_max;
    return xs;
}

}  // namespace

RadialPotential::RadialPotential(PotentialKind kind, std::vector<double> coeffs, double x_max)
    : kind_(kind), coeffs_(std::move(coeffs)), x_max_(x_max) {}

RadialPotential RadialPotential::bargmann_fock() {
    return RadialPotential(PotentialKind::BargmannFock, {}, kUnboundedXMax);
}

RadialPotential RadialPotential::fubini_study() {
    return RadialPotential(PotentialKind::FubiniStudy, {}, kUnboundedXMax);
}

RadialPotential RadialPotential::polynomial(std::vector<double> higher, double x_max) {
    if (!(x_max > 0.0) || !std::isfinite(x_max)) {
        throw Error(ErrorKind::BadParams, "polynomial potential needs a finite x_max > 0");
    }
    std::vector<double> p{0.0, 1.0};
    for (double c : higher) {
        if (!std::isfinite(c)) throw Error(ErrorKind::BadParams, "non-finite coefficient");
        p.push_back(c);
    }
    RadialPotential pot(PotentialKind::Polynomial, std::move(p), x_max);
    pot.validate_and_measure();
    return pot;
}

RadialPotential RadialPotential::from_name(std::string_view name) {
    if (name == "bargmann-fock") return bargmann_fock();
    if (name == "fubini-study") return fubini_study();
    throw Error(ErrorKind::BadParams, "unknown potential '" + std::string(name) + "'");
}

void RadialPotential::validate_and_measure() {
    double worst = -kInf;
    for (double x : validation_grid(x_max_)) {
        double fx = f(x);
        if (!(fx > 0.0)) {
            std::ostringstream os;
            os.precision(17);
            os << "f(" << x << ") = " << fx << " <= 0";
            throw Error(ErrorKind::NonPositiveCurvature, os.str());
        }
        double r = f_x(x) / fx;
        double q = r / fx + x * (f_xx(x) / fx - r * r) / fx;
        worst = std::max(worst, q);
    }
    k0_laplacian_ = worst < 1.0 ? 1 : static_cast<int>(std::floor(worst)) + 1;
    k0_constant_ = 1;
}

std::string RadialPotential::name() const {
    switch (kind_) {
        case PotentialKind::BargmannFock: return "bargmann-fock";
        case PotentialKind::FubiniStudy: return "fubini-study";
        case PotentialKind::Polynomial: break;
    }
    std::ostringstream os;
    os.precision(17);
    os << "polynomial(";
    for (std::size_t j = 2; j < coeffs_.size(); ++j) os << (j > 2 ? " " : "") << coeffs_[j];
    os << "; x_max=" << x_max_ << ")";
    return os.str();
}

double RadialPotential::phi(double x) const {
    switch (kind_) {
        case PotentialKind::BargmannFock: return x;
        case PotentialKind::FubiniStudy: return std::log1p(x);
        case PotentialKind::Polynomial: return poly_series(coeffs_, x, 0, [](int) { return 1.0; });
    }
    return 0.0;
}

double RadialPotential::phi_x(double x) const {
    switch (kind_) {
        case PotentialKind::BargmannFock: return 1.0;
        case PotentialKind::FubiniStudy: return 1.0 / (1.0 + x);
        case PotentialKind::Polynomial:
            return poly_series(coeffs_, x, 1, [](int j) { return double(j); });
    }
    return 0.0;
}

double RadialPotential::phi_xx(double x) const {
    switch (kind_) {
        case PotentialKind::BargmannFock: return 0.0;
        case PotentialKind::FubiniStudy: return -1.0 / ((1.0 + x) * (1.0 + x));
        case PotentialKind::Polynomial:
            return poly_series(coeffs_, x, 2, [](int j) { return double(j) * (j - 1); });
    }
    return 0.0;
}

double RadialPotential::f(double x) const {
    switch (kind_) {
        case PotentialKind::BargmannFock: return 1.0;
        case PotentialKind::FubiniStudy: return 1.0 / ((1.0 + x) * (1.0 + x));
        case PotentialKind::Polynomial:
            return poly_series(coeffs_, x, 1, [](int j) { return double(j) * j; });
    }
    return 0.0;
}

double RadialPotential::f_x(double x) const {
    switch (kind_) {
        case PotentialKind::BargmannFock: return 0.0;
        case PotentialKind::FubiniStudy: return -2.0 / std::pow(1.0 + x, 3);
        case PotentialKind::Polynomial:
            return poly_series(coeffs_, x, 2, [](int j) { return double(j) * j * (j - 1); });
    }
    return 0.0;
}

double RadialPotential::f_xx(double x) const {
    switch (kind_) {
        case PotentialKind::BargmannFock: return 0.0;
        case PotentialKind::FubiniStudy: return 6.0 / std::pow(1.0 + x, 4);
        case PotentialKind::Polynomial:
            return poly_series(coeffs_, x, 3,
                               [](int j) { return double(j) * j * (j - 1) * (j - 2); });
    }
    return 0.0;
}

double RadialPotential::moment(double x) const {
    switch (kind_) {
        case PotentialKind::BargmannFock: return x;
        case PotentialKind::FubiniStudy: return x > 0.0 ? 1.0 / (1.0 + 1.0 / x) : 0.0;
        case PotentialKind::Polynomial:
            return x * poly_series(coeffs_, x, 1, [](int j) { return double(j); });
    }
    return 0.0;
}

double RadialPotential::moment_sup() const {
    switch (kind_) {
        case PotentialKind::BargmannFock: return kInf;
        case PotentialKind::FubiniStudy: return 1.0;
        case PotentialKind::Polynomial: return moment(x_max_);
    }
    return 0.0;
}

double RadialPotential::inverse_moment(double mu) const {
    if (mu <= 0.0) return 0.0;
    switch (kind_) {
        case PotentialKind::BargmannFock: return mu;
        case PotentialKind::FubiniStudy: return mu >= 1.0 ? kInf : mu / (1.0 - mu);
        case PotentialKind::Polynomial: break;
    }
    if (mu >= moment(x_max_)) return x_max_;
    double lo = 0.0;
    double hi = x_max_;
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (moment(mid) < mu ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double RadialPotential::phi_t(double t) const {
    double x = std::exp(-t);
    return -x * phi_x(x);
}

double RadialPotential::phi_tt(double t) const { return x_f(std::exp(-t)); }

double RadialPotential::phi_at_t(double t) const {
    if (kind_ == PotentialKind::FubiniStudy) {
        return t >= 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
    }
    return phi(std::exp(-t));
}

double RadialPotential::x_f(double x) const {
    if (kind_ == PotentialKind::FubiniStudy) return moment(x) / (1.0 + x);
    return x * f(x);
}

double RadialPotential::log_f_t(double x) const {
    switch (kind_) {
        case PotentialKind::BargmannFock: return 0.0;
        case PotentialKind::FubiniStudy: return 2.0 * moment(x);
        case PotentialKind::Polynomial: break;
    }
    return -x * f_x(x) / f(x);
}

double RadialPotential::log_f_tt(double x) const {
    switch (kind_) {
        case PotentialKind::BargmannFock: return 0.0;
        case PotentialKind::FubiniStudy: return -2.0 * x_f(x);
        case PotentialKind::Polynomial: break;
    }
    double fx = f(x);
    double r = f_x(x) / fx;
    return x * r + x * x * (f_xx(x) / fx - r * r);
}

double RadialPotential::log_f_at_t(double t) const {
    switch (kind_) {
        case PotentialKind::BargmannFock: return 0.0;
        case PotentialKind::FubiniStudy: return -2.0 * phi_at_t(t);
        case PotentialKind::Polynomial: break;
    }
    return std::log(f(std::exp(-t)));
}

double RadialPotential::laplacian_log_slope_at_infinity() const {
    return kind_ == PotentialKind::FubiniStudy ? 2.0 : 0.0;
}

FiberWeight FiberWeight::constant(double value) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw Error(ErrorKind::BadParams, "constant weight must be positive and finite");
    }
    return FiberWeight(false, value);
}

std::string FiberWeight::name() const {
    if (laplacian_) return "laplacian";
    std::ostringstream os;
    os.precision(17);
    os << "constant(" << value_ << ")";
    return os.str();
}

double FiberWeight::log_value(const RadialPotential& p, double x) const {
    return laplacian_ ? std::log(p.f(x)) : std::log(value_);
}

double FiberWeight::log_value_at_t(const RadialPotential& p, double t) const {
    return laplacian_ ? p.log_f_at_t(t) : std::log(value_);
}

double FiberWeight::log_t(const RadialPotential& p, double x) const {
    return laplacian_ ? p.log_f_t(x) : 0.0;
}

double FiberWeight::log_tt(const RadialPotential& p, double x) const {
    return laplacian_ ? p.log_f_tt(x) : 0.0;
}

int FiberWeight::concavity_threshold(const RadialPotential& p) const {
    return laplacian_ ? p.concavity_threshold_laplacian() : p.concavity_threshold_constant();
}

std::optional<int> FiberWeight::max_normalizable_degree(const RadialPotential& p, int k) const {
    if (!p.unbounded() || !std::isfinite(p.moment_sup())) return std::nullopt;
    // g_a'(t) -> k mu_sup - (a+1) + h_t(inf) as t -> -inf; the norm is finite
    // iff that limit is positive.
    double limit = k * p.moment_sup() + (laplacian_ ? p.laplacian_log_slope_at_infinity() : 0.0);
    return static_cast<int>(std::ceil(limit)) - 2;
}

double moment_map(const RadialPotential& p, double x) {
    if (!(x >= 0.0) || x > p.x_max()) {
        std::ostringstream os;
        os.precision(17);
        os << "x = " << x << " outside [0, " << p.x_max() << "]";
        throw Error(ErrorKind::DomainExceeded, os.str());
    }
    return p.moment(x);
}

ModelGeometry::ModelGeometry(GeometryKind kind, std::vector<RadialPotential> f,
                             std::vector<FiberWeight> w)
    : kind_(kind), factors_(std::move(f)), weights_(std::move(w)) {}

ModelGeometry ModelGeometry::fiber(RadialPotential p, FiberWeight w) {
    return ModelGeometry(GeometryKind::FiberC, {std::move(p)}, {w});
}

ModelGeometry ModelGeometry::product(std::vector<RadialPotential> factors,
                                     std::vector<FiberWeight> weights) {
    if (factors.empty()) throw Error(ErrorKind::BadParams, "product needs r >= 1 factors");
    if (weights.empty()) weights.assign(factors.size(), FiberWeight::laplacian());
    if (weights.size() != factors.size()) {
        throw Error(ErrorKind::BadParams, "one weight per factor required");
    }
    return ModelGeometry(GeometryKind::ProductC, std::move(factors), std::move(weights));
}

ModelGeometry ModelGeometry::product(const RadialPotential& p, int r) {
    if (r < 1) throw Error(ErrorKind::BadParams, "product needs r >= 1 factors");
    return product(std::vector<RadialPotential>(static_cast<std::size_t>(r), p));
}

ModelGeometry ModelGeometry::cp1() {
    return ModelGeometry(GeometryKind::CP1, {RadialPotential::fubini_study()},
                         {FiberWeight::laplacian()});
}

std::string ModelGeometry::name() const {
    std::string s(to_string(kind_));
    if (kind_ == GeometryKind::ProductC) s += std::to_string(rank());
    if (kind_ != GeometryKind::CP1) s += ":" + factors_.front().name();
    return s;
}

bool ModelGeometry::all_bargmann_fock() const {
    return std::all_of(factors_.begin(), factors_.end(), [](const RadialPotential& p) {
        return p.kind() == PotentialKind::BargmannFock;
    });
}

std::optional<int> ModelGeometry::degree_cap(int i, int k) const {
    if (kind_ == GeometryKind::CP1) return k;
    return weight(i).max_normalizable_degree(factor(i), k);
}

double ModelGeometry::nu(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != rank()) {
        throw Error(ErrorKind::BadParams, "point has " + std::to_string(x.size()) +
                                              " coordinates, geometry has rank " +
                                              std::to_string(rank()));
    }
    double s = 0.0;
    for (int i = 0; i < rank(); ++i) s += moment_map(factor(i), x[static_cast<std::size_t>(i)]);
    return s;
}

std::vector<double> ModelGeometry::moments(std::span<const double> x) const {
    nu(x);
    std::vector<double> mu;
    for (int i = 0; i < rank(); ++i) mu.push_back(factor(i).moment(x[static_cast<std::size_t>(i)]));
    return mu;
}

double ModelGeometry::nu_sup() const {
    double s = 0.0;
    for (const auto& p : factors_) s += p.moment_sup();
    return s;
}

double diagonal_moment(const ModelGeometry& g, std::span<const double> x) { return g.nu(x); }

std::string_view to_string(GeometryKind kind) {
    switch (kind) {
        case GeometryKind::FiberC: return "fiber-C";
        case GeometryKind::ProductC: return "product-C^";
        case GeometryKind::CP1: return "CP1";
    }
    return "?";
}

}  // namespace bergman
