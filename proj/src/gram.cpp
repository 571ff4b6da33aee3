#include "bergman/gram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bergman/error.hpp"
#include "bergman/logquad.hpp"
#include "bergman/parallel.hpp"

namespace bergman {

namespace {

using cd = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPivotFactor = 64.0;
constexpr double kWarnDecades = 14.0;
constexpr std::size_t kNodeBlock = 4096;

int total_degree(const MultiIndex& a) {
    int s = 0;
    for (int v : a) s += v;
    return s;
}

int max_degree(const std::vector<MultiIndex>& basis) {
    int m = 0;
    for (const auto& a : basis) m = std::max(m, total_degree(a));
    return m;
}

cd monomial(const MultiIndex& a, std::span<const cd> z) {
    cd v = 1.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (int p = 0; p < a[i]; ++p) v *= z[i];
    }
    return v;
}

// Gauss-Legendre nodes on [0, radius] with the polar Jacobian r folded in.
struct RadialRule {
    std::vector<double> r;
    std::vector<double> w;
};

RadialRule radial_rule(double radius, int order) {
    GaussLegendreRule gl = gauss_legendre(order);
    RadialRule out;
    for (std::size_t j = 0; j < gl.nodes.size(); ++j) {
        double r = 0.5 * radius * (1.0 + gl.nodes[j]);
        out.r.push_back(r);
        out.w.push_back(0.5 * radius * gl.weights[j] * r);
    }
    return out;
}

void validate(const GramWeight& weight, const PolydiscDomain& domain,
              const std::vector<MultiIndex>& basis) {
    if (!weight.metric || !weight.volume) throw Error(ErrorKind::BadParams, "weight is empty");
    if (domain.radii.empty()) throw Error(ErrorKind::BadParams, "domain needs at least one radius");
    for (double r : domain.radii) {
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw Error(ErrorKind::BadParams, "polydisc radii must be finite and positive");
        }
    }
    if (basis.empty()) throw Error(ErrorKind::EmptySubspace, "empty basis");
    for (const auto& a : basis) {
        if (a.size() != domain.radii.size()) {
            throw Error(ErrorKind::BadParams, "multi-index length differs from the domain rank");
        }
        for (int v : a) {
            if (v < 0) throw Error(ErrorKind::BadParams, "negative exponent in basis");
        }
    }
}

// One variable: integrate the angle first. With F_j(d) the d-th Fourier
// coefficient of the weight on the circle of radius r_j,
//   gram_ab = sum_j w_j r_j^(a+b) F_j(a - b).
Eigen::MatrixXcd gram_one_variable(const GramWeight& weight, double radius,
                                   const std::vector<MultiIndex>& basis, const QuadratureSpec& q,
                                   int threads) {
    const RadialRule rr = radial_rule(radius, q.radial_order);
    const int na = q.angular_points;
    const int dmax = max_degree(basis);
    std::vector<cd> roots(static_cast<std::size_t>(na));
    for (int m = 0; m < na; ++m) roots[static_cast<std::size_t>(m)] = std::polar(1.0, kTwoPi * m / na);

    const std::size_t nr = rr.r.size();
    const auto width = static_cast<std::size_t>(2 * dmax + 1);
    std::vector<cd> fourier(nr * width);
    parallel_for(nr, threads, [&](std::size_t j) {
        std::vector<double> w(static_cast<std::size_t>(na));
        for (int m = 0; m < na; ++m) {
            cd z = rr.r[j] * roots[static_cast<std::size_t>(m)];
            std::span<const cd> pt(&z, 1);
            w[static_cast<std::size_t>(m)] = weight.metric(pt) * weight.volume(pt);
        }
        for (int d = -dmax; d <= dmax; ++d) {
            cd s = 0.0;
            for (int m = 0; m < na; ++m) {
                long long idx = (static_cast<long long>(d) * m) % na;
                if (idx < 0) idx += na;
                s += w[static_cast<std::size_t>(m)] * roots[static_cast<std::size_t>(idx)];
            }
            fourier[j * width + static_cast<std::size_t>(d + dmax)] = s * (kTwoPi / na);
        }
    });

    const auto n = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXcd g(n, n);
    parallel_for(basis.size(), threads, [&](std::size_t ia) {
        const int a = basis[ia][0];
        for (Eigen::Index ib = 0; ib < n; ++ib) {
            const int b = basis[static_cast<std::size_t>(ib)][0];
            const auto col = static_cast<std::size_t>(a - b + dmax);
            cd s = 0.0;
            for (std::size_t j = 0; j < nr; ++j) {
                s += rr.w[j] * std::pow(rr.r[j], a + b) * fourier[j * width + col];
            }
            g(static_cast<Eigen::Index>(ia), ib) = s;
        }
    });
    return g;
}

// Several variables: gram = V^T conj(V) with V_na = z_n^a sqrt(weight_n),
// accumulated over fixed blocks of tensor nodes.
Eigen::MatrixXcd gram_tensor(const GramWeight& weight, const PolydiscDomain& domain,
                             const std::vector<MultiIndex>& basis, const QuadratureSpec& q) {
    const std::size_t vars = domain.radii.size();
    std::vector<RadialRule> rules;
    for (double r : domain.radii) rules.push_back(radial_rule(r, q.radial_order));
    const auto nr = static_cast<std::size_t>(q.radial_order);
    const auto na = static_cast<std::size_t>(q.angular_points);
    const std::size_t per_var = nr * na;
    std::size_t total = 1;
    for (std::size_t v = 0; v < vars; ++v) total *= per_var;

    const auto nb = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(nb, nb);
    Eigen::MatrixXcd block;
    std::vector<cd> z(vars);
    for (std::size_t start = 0; start < total; start += kNodeBlock) {
        const std::size_t len = std::min(kNodeBlock, total - start);
        block.resize(static_cast<Eigen::Index>(len), nb);
        for (std::size_t t = 0; t < len; ++t) {
            std::size_t rest = start + t;
            double w = 1.0;
            for (std::size_t v = 0; v < vars; ++v) {
                std::size_t local = rest % per_var;
                rest /= per_var;
                std::size_t j = local / na;
                std::size_t m = local % na;
                z[v] = std::polar(rules[v].r[j], kTwoPi * static_cast<double>(m) / static_cast<double>(na));
                w *= rules[v].w[j] * (kTwoPi / static_cast<double>(na));
            }
            w *= weight.metric(z) * weight.volume(z);
            double sw = std::sqrt(w);
            for (Eigen::Index b = 0; b < nb; ++b) {
                block(static_cast<Eigen::Index>(t), b) = monomial(basis[static_cast<std::size_t>(b)], z) * sw;
            }
        }
        g.noalias() += block.transpose() * block.conjugate();
    }
    return g;
}

QuadratureSpec resolve(QuadratureSpec q, int cap) {
    if (q.radial_order < 0 || q.angular_points < 0) {
        throw Error(ErrorKind::BadParams, "quadrature sizes must be >= 0");
    }
    if (q.radial_order == 0) q.radial_order = cap + 16;
    if (q.angular_points == 0) q.angular_points = 2 * cap + 1;
    return q;
}

GramSystem finish(GramSystem g) {
    g.factor = cholesky_factor(g.gram);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (Eigen::Index j = 0; j < g.factor.rows(); ++j) {
        double d = std::abs(g.factor(j, j));
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    g.diagonal_span_decades = std::log10(hi / lo);
    g.ill_conditioned = g.diagonal_span_decades > kWarnDecades;
    return g;
}

GramSystem subsystem(const GramSystem& g, const std::vector<std::size_t>& keep) {
    GramSystem s;
    s.weight = g.weight;
    s.domain = g.domain;
    s.quadrature = g.quadrature;
    const auto n = static_cast<Eigen::Index>(keep.size());
    s.gram.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        s.basis.push_back(g.basis[keep[static_cast<std::size_t>(i)]]);
        for (Eigen::Index j = 0; j < n; ++j) {
            s.gram(i, j) = g.gram(static_cast<Eigen::Index>(keep[static_cast<std::size_t>(i)]),
                                  static_cast<Eigen::Index>(keep[static_cast<std::size_t>(j)]));
        }
    }
    return finish(std::move(s));
}

}  // namespace

std::vector<MultiIndex> total_degree_basis(int vars, int cap) {
    if (vars < 1 || cap < 0) throw Error(ErrorKind::BadParams, "need vars >= 1 and cap >= 0");
    std::vector<MultiIndex> out;
    MultiIndex cur(static_cast<std::size_t>(vars), 0);
    // Compositions of d into `vars` parts, first slot descending.
    std::function<void(std::size_t, int)> fill = [&](std::size_t slot, int left) {
        if (slot + 1 == cur.size()) {
            cur[slot] = left;
            out.push_back(cur);
            return;
        }
        for (int v = left; v >= 0; --v) {
            cur[slot] = v;
            fill(slot + 1, left - v);
        }
    };
    for (int d = 0; d <= cap; ++d) fill(0, d);
    return out;
}

GramWeight GramWeight::unit() {
    GramWeight w;
    w.metric = [](std::span<const cd>) { return 1.0; };
    w.volume = [](std::span<const cd>) { return 1.0; };
    w.radial = true;
    w.name = "unit";
    return w;
}

GramWeight GramWeight::model(const RadialPotential& p, int k) {
    GramWeight w;
    w.metric = [p, k](std::span<const cd> z) {
        double s = 0.0;
        for (cd v : z) s += p.phi(std::norm(v));
        return std::exp(-k * s);
    };
    w.volume = [p](std::span<const cd> z) {
        double s = 1.0;
        for (cd v : z) s *= 2.0 * p.f(std::norm(v));
        return s;
    };
    w.radial = true;
    w.name = p.name() + ":k=" + std::to_string(k);
    return w;
}

GramWeight GramWeight::scaled(double c) const {
    GramWeight w = *this;
    auto m = metric;
    w.metric = [m, c](std::span<const cd> z) { return c * m(z); };
    return w;
}

Eigen::MatrixXcd cholesky_factor(const Eigen::MatrixXcd& gram) {
    const Eigen::Index n = gram.rows();
    if (gram.cols() != n) throw Error(ErrorKind::BadParams, "gram matrix is not square");
    Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double gjj = gram(j, j).real();
        double d = gjj;
        for (Eigen::Index p = 0; p < j; ++p) d -= std::norm(l(j, p));
        if (!std::isfinite(d) || !(gjj > 0.0) ||
            !(d > kPivotFactor * std::numeric_limits<double>::epsilon() * gjj)) {
            std::ostringstream os;
            os << "pivot " << j << " is " << d << " against diagonal " << gjj;
            throw Error(ErrorKind::NotPositiveDefinite, os.str());
        }
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            cd s = gram(i, j);
            for (Eigen::Index p = 0; p < j; ++p) s -= l(i, p) * std::conj(l(j, p));
            l(i, j) = s / ljj;
        }
    }
    return l;
}

double factorization_residual(const GramSystem& g) {
    Eigen::MatrixXcd r = g.gram - g.factor * g.factor.adjoint();
    return r.cwiseAbs().maxCoeff() / g.gram.cwiseAbs().maxCoeff();
}

GramSystem build_gram(const GramWeight& weight, const PolydiscDomain& domain,
                      std::vector<MultiIndex> basis, QuadratureSpec quadrature, int threads) {
    validate(weight, domain, basis);
    GramSystem g;
    g.quadrature = resolve(quadrature, max_degree(basis));
    g.basis = std::move(basis);
    g.weight = weight;
    g.domain = domain;
    if (domain.radii.size() == 1) {
        g.gram = gram_one_variable(weight, domain.radii[0], g.basis, g.quadrature, threads);
    } else {
        g.gram = gram_tensor(weight, domain, g.basis, g.quadrature);
    }
    return finish(std::move(g));
}

GramSystem build_gram(const GramWeight& weight, const PolydiscDomain& domain, int degree_cap,
                      QuadratureSpec quadrature, int threads) {
    return build_gram(weight, domain,
                      total_degree_basis(static_cast<int>(domain.radii.size()), degree_cap),
                      quadrature, threads);
}

double kernel_from_gram(const GramSystem& g, std::span<const std::complex<double>> point) {
    if (point.size() != g.domain.radii.size()) {
        throw Error(ErrorKind::BadParams, "point rank differs from the domain rank");
    }
    Eigen::VectorXcd v(static_cast<Eigen::Index>(g.basis.size()));
    for (std::size_t a = 0; a < g.basis.size(); ++a) {
        v(static_cast<Eigen::Index>(a)) = monomial(g.basis[a], point);
    }
    Eigen::VectorXcd y = g.factor.triangularView<Eigen::Lower>().solve(v);
    return y.squaredNorm() * g.weight.metric(point);
}

double max_offdiagonal_ratio(const GramSystem& g) {
    double worst = 0.0;
    const Eigen::Index n = g.gram.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (g.basis[static_cast<std::size_t>(i)] == g.basis[static_cast<std::size_t>(j)]) continue;
            double s = std::sqrt(g.gram(i, i).real() * g.gram(j, j).real());
            worst = std::max(worst, std::abs(g.gram(i, j)) / s);
        }
    }
    return worst;
}

PartialSplit::PartialSplit(const GramSystem& g, long long a_min) : a_min_(a_min) {
    std::vector<std::size_t> hi;
    std::vector<std::size_t> lo;
    for (std::size_t i = 0; i < g.basis.size(); ++i) {
        (total_degree(g.basis[i]) >= a_min ? hi : lo).push_back(i);
    }
    if (hi.empty()) {
        std::ostringstream os;
        os << "no basis element has degree >= " << a_min << " (cap " << max_degree(g.basis) << ")";
        throw Error(ErrorKind::EmptySubspace, os.str());
    }
    high_ = std::make_shared<GramSystem>(subsystem(g, hi));
    if (!lo.empty()) low_ = std::make_shared<GramSystem>(subsystem(g, lo));
}

double PartialSplit::kernel_high(std::span<const std::complex<double>> point) const {
    return kernel_from_gram(*high_, point);
}

double PartialSplit::kernel_low(std::span<const std::complex<double>> point) const {
    return low_ ? kernel_from_gram(*low_, point) : 0.0;
}

PartialSplit partial_split(const GramSystem& g, long long a_min) { return PartialSplit(g, a_min); }

}  // namespace bergman
