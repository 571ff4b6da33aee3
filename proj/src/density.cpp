#include "bergman/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bergman/error.hpp"
#include "bergman/logquad.hpp"
#include "bergman/model1d.hpp"
#include "bergman/parallel.hpp"

namespace bergman {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogEps = std::log(std::numeric_limits<double>::epsilon());
constexpr int kQuietRun = 20;
constexpr double kUnderflowLog = -700.0;
constexpr int kScanPoints = 64;
constexpr double kBisectTol = 1e-10;

double lse_range(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    lo = std::min(lo, v.size());
    hi = std::min(hi, v.size());
    if (lo >= hi) return -kInf;
    return log_sum_exp(std::span<const double>(v.data() + lo, hi - lo));
}

// c[m] = log sum_j exp(a[j] + b[m - j]).
std::vector<double> log_convolve(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> c(a.size() + b.size() - 1, -kInf);
    std::vector<double> buf;
    for (std::size_t m = 0; m < c.size(); ++m) {
        std::size_t j_lo = m >= b.size() ? m - b.size() + 1 : 0;
        std::size_t j_hi = std::min(m, a.size() - 1);
        buf.clear();
        for (std::size_t j = j_lo; j <= j_hi; ++j) buf.push_back(a[j] + b[m - j]);
        c[m] = log_sum_exp(buf);
    }
    return c;
}

// Prefix sums P[m] = log sum_{i < m} exp(v[i]) for m = 0..n.
std::vector<double> log_prefix(const std::vector<double>& v) {
    std::vector<double> p(v.size() + 1, -kInf);
    for (std::size_t i = 0; i < v.size(); ++i) p[i + 1] = (LogValue{p[i]} + LogValue{v[i]}).log;
    return p;
}

// Suffix sums S[m] = log sum_{i >= m} exp(v[i]) for m = 0..n.
std::vector<double> log_suffix(const std::vector<double>& v) {
    std::vector<double> s(v.size() + 1, -kInf);
    for (std::size_t i = v.size(); i-- > 0;) s[i] = (LogValue{s[i + 1]} + LogValue{v[i]}).log;
    return s;
}

std::size_t clamp_index(long long m, std::size_t n) {
    if (m <= 0) return 0;
    return std::min(static_cast<std::size_t>(m), n);
}

void check_direction(const ModelGeometry& g, std::span<const double> dir) {
    if (static_cast<int>(dir.size()) != g.rank()) {
        throw Error(ErrorKind::BadParams, "ray direction needs one entry per factor");
    }
    bool any = false;
    for (double d : dir) {
        if (!(d >= 0.0) || !std::isfinite(d)) {
            throw Error(ErrorKind::BadParams, "ray direction entries must be finite and >= 0");
        }
        any = any || d > 0.0;
    }
    if (!any) throw Error(ErrorKind::BadParams, "ray direction is zero");
}

std::vector<double> scaled(std::span<const double> dir, double s) {
    std::vector<double> x(dir.begin(), dir.end());
    for (double& v : x) v *= s;
    return x;
}

// Largest s with s * dir inside every factor's domain.
double ray_extent(const ModelGeometry& g, std::span<const double> dir) {
    double s = kInf;
    for (int i = 0; i < g.rank(); ++i) {
        double d = dir[static_cast<std::size_t>(i)];
        if (d > 0.0) s = std::min(s, g.factor(i).x_max() / d);
    }
    return s;
}

double ray_nu(const ModelGeometry& g, std::span<const double> dir, double s) {
    double nu = 0.0;
    for (int i = 0; i < g.rank(); ++i) nu += g.factor(i).moment(s * dir[static_cast<std::size_t>(i)]);
    return nu;
}

}  // namespace

FiberNorms::FiberNorms(RadialPotential potential, FiberWeight weight, int k, std::optional<int> cap)
    : potential_(std::move(potential)), weight_(weight), k_(k), cap_(cap) {
    if (cap_ && *cap_ < 0) {
        throw Error(ErrorKind::BadParams, "no normalizable monomials at k = " + std::to_string(k));
    }
}

double FiberNorms::log_norm(int a) const {
    if (a < 0 || (cap_ && a > *cap_)) {
        std::ostringstream os;
        os << "degree " << a << " outside the family";
        throw Error(ErrorKind::BadParams, os.str());
    }
    if (a >= available()) ensure(a + std::max(64, available() / 4));
    auto i = static_cast<std::size_t>(a);
    return chunks_[i >> kChunkBits][i & (kChunk - 1)];
}

void FiberNorms::ensure(int a) const {
    if (cap_) a = std::min(a, *cap_);
    if (a < available()) return;
    if (a >= kMaxDegrees) {
        std::ostringstream os;
        os << "degree " << a << " exceeds the cache limit " << kMaxDegrees;
        throw Error(ErrorKind::TruncationNotConverged, os.str());
    }
    std::lock_guard lock(mutex_);
    std::size_t n = count_.load(std::memory_order_relaxed);
    for (; n <= static_cast<std::size_t>(a); ++n) {
        auto& chunk = chunks_[n >> kChunkBits];
        if (!chunk) chunk = std::make_unique<double[]>(kChunk);
        Model1DProblem p(potential_, k_, static_cast<int>(n), weight_);
        chunk[n & (kChunk - 1)] = bergman::log_norm(p).log;
        count_.store(n + 1, std::memory_order_release);
    }
}

DensityEngine::DensityEngine(const ModelGeometry& geometry, int k) : geometry_(geometry), k_(k) {
    if (k < 1) throw Error(ErrorKind::BadParams, "k must be >= 1");
    for (int i = 0; i < geometry_.rank(); ++i) {
        norms_.push_back(std::make_unique<FiberNorms>(geometry_.factor(i), geometry_.weight(i), k,
                                                      geometry_.degree_cap(i, k)));
    }
}

std::vector<double> DensityEngine::log_terms(int i, double x, long long a_min) const {
    const FiberNorms& norms = *norms_.at(static_cast<std::size_t>(i));
    const RadialPotential& pot = norms.potential();
    if (x == 0.0) return {-norms.log_norm(0)};

    const double lx = std::log(x);
    const double base = -k_ * pot.phi(x);
    const double peak = k_ * pot.moment(x);
    const std::optional<int> cap = norms.cap();
    // Terms decrease geometrically past the peak; stop once a run of them is
    // negligible against the admissible part of the sum.
    const double check_from = std::max(std::ceil(peak), static_cast<double>(a_min));

    std::vector<double> terms;
    double partial = -kInf;
    int quiet = 0;
    for (long long a = 0;; ++a) {
        if (cap && a > *cap) break;
        if (a >= FiberNorms::kMaxDegrees) {
            std::ostringstream os;
            os.precision(17);
            os << "degree sum at x = " << x << " did not settle below " << FiberNorms::kMaxDegrees;
            throw Error(ErrorKind::TruncationNotConverged, os.str());
        }
        double term = static_cast<double>(a) * lx + base - norms.log_norm(static_cast<int>(a));
        terms.push_back(term);
        if (a >= a_min) partial = (LogValue{partial} + LogValue{term}).log;
        if (static_cast<double>(a) >= check_from) {
            quiet = term < partial + kLogEps ? quiet + 1 : 0;
            if (quiet >= kQuietRun) break;
        }
    }
    return terms;
}

DensityPoint DensityEngine::evaluate(std::span<const double> x, long long a_min,
                                     PartialMethod method) const {
    std::vector<double> mu = geometry_.moments(x);
    return evaluate_at(std::vector<double>(x.begin(), x.end()), std::move(mu), a_min, method);
}

DensityPoint DensityEngine::evaluate_at(std::vector<double> x, std::vector<double> mu,
                                        long long a_min, PartialMethod method) const {
    DensityPoint out;
    out.x = std::move(x);
    out.mu = std::move(mu);
    for (double m : out.mu) out.nu += m;

    const int r = geometry_.rank();
    if (method == PartialMethod::Auto) {
        method = r <= 3 ? PartialMethod::Enumerate : PartialMethod::PoissonFastPath;
    }
    if (method == PartialMethod::Enumerate && r > 3) {
        throw Error(ErrorKind::Unsupported, "multi-index enumeration supports rank <= 3");
    }
    if (method == PartialMethod::PoissonFastPath && !geometry_.all_bargmann_fock()) {
        throw Error(ErrorKind::Unsupported, "the Poisson fast path needs bargmann-fock factors");
    }

    std::vector<std::vector<double>> terms;
    double log_rho = 0.0;
    for (int i = 0; i < r; ++i) {
        terms.push_back(log_terms(i, out.x[static_cast<std::size_t>(i)], a_min));
        out.degree_caps.push_back(static_cast<int>(terms.back().size()) - 1);
        log_rho += lse_range(terms.back(), 0, terms.back().size());
    }

    double partial = 0.0;
    double complement = 0.0;
    if (a_min <= 0) {
        partial = log_rho;
        complement = -kInf;
    } else if (method == PartialMethod::PoissonFastPath) {
        double rate = k_ * out.nu;
        partial = log_rho + poisson_upper(a_min, rate).log;
        complement = log_rho + poisson_lower(a_min, rate).log;
    } else {
        std::vector<double> head = terms.front();
        for (int i = 1; i + 1 < r; ++i) head = log_convolve(head, terms[static_cast<std::size_t>(i)]);
        if (r == 1) {
            auto split = clamp_index(a_min, head.size());
            partial = lse_range(head, split, head.size());
            complement = lse_range(head, 0, split);
        } else {
            const auto& last = terms.back();
            auto pre = log_prefix(last);
            auto suf = log_suffix(last);
            std::vector<double> hi(head.size());
            std::vector<double> lo(head.size());
            for (std::size_t j = 0; j < head.size(); ++j) {
                long long need = a_min - static_cast<long long>(j);
                hi[j] = head[j] + suf[clamp_index(need, last.size())];
                lo[j] = head[j] + pre[clamp_index(need, last.size())];
            }
            partial = log_sum_exp(hi);
            complement = log_sum_exp(lo);
        }
    }
    const double total = (LogValue{partial} + LogValue{complement}).log;
    const bool exact_product = r > 1 && method == PartialMethod::Enumerate;
    out.log_rho = LogValue{exact_product ? total : log_rho};
    out.log_rho_partial = LogValue{partial};
    out.log_rho_complement = LogValue{complement};
    out.ratio = partial == -kInf ? 0.0 : std::exp(partial - total);
    out.log_one_minus_ratio = complement == -kInf ? -kInf : complement - total;
    return out;
}

long long admissible_order(double delta, int k) {
    double dk = delta * k;
    double nearest = std::round(dk);
    if (std::abs(dk - nearest) <= 1e-9 * std::max(1.0, std::abs(dk))) {
        return static_cast<long long>(nearest);
    }
    return static_cast<long long>(std::ceil(dk));
}

PartialDensityQuery make_query(const ModelGeometry& geometry, int k, double delta,
                               double delta_max) {
    if (k < 1) throw Error(ErrorKind::BadParams, "k must be >= 1");
    if (!(delta >= 0.0 && delta <= delta_max)) {
        std::ostringstream os;
        os << "delta = " << delta << " outside [0, " << delta_max << "]";
        throw Error(ErrorKind::BadParams, os.str());
    }
    return PartialDensityQuery{geometry, k, delta, admissible_order(delta, k)};
}

namespace {

DensityProfile run_profile(const ModelGeometry& geometry, int k, double delta, long long a_min,
                           const Grid& grid, const DensityOptions& opts) {
    DensityEngine engine(geometry, k);
    DensityProfile prof{geometry, k, delta, a_min, {}};
    prof.points.resize(grid.size());
    // Warm the norm caches from the point needing the highest degrees so the
    // parallel pass only reads.
    if (!grid.empty()) {
        std::size_t far = 0;
        double far_nu = -1.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double nu = geometry.nu(grid[i]);
            if (nu > far_nu) {
                far_nu = nu;
                far = i;
            }
        }
        prof.points[far] = engine.evaluate(grid[far], a_min, opts.method);
    }
    parallel_for(grid.size(), opts.threads, [&](std::size_t i) {
        if (prof.points[i].x.empty()) prof.points[i] = engine.evaluate(grid[i], a_min, opts.method);
    });
    return prof;
}

}  // namespace

DensityProfile full_density(const ModelGeometry& geometry, int k, const Grid& grid,
                            const DensityOptions& opts) {
    return run_profile(geometry, k, 0.0, 0, grid, opts);
}

DensityProfile partial_density(const PartialDensityQuery& q, const Grid& grid,
                               const DensityOptions& opts) {
    if (q.a_min < 0) throw Error(ErrorKind::BadParams, "a_min must be >= 0");
    return run_profile(q.geometry, q.k, q.delta, q.a_min, grid, opts);
}

Grid x_grid(double lo, double hi, int n) {
    if (n < 1 || !(lo <= hi)) throw Error(ErrorKind::BadParams, "grid needs n >= 1 and lo <= hi");
    Grid g;
    for (int i = 0; i < n; ++i) {
        double x = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
        g.push_back({x});
    }
    return g;
}

std::vector<double> point_on_ray(const ModelGeometry& geometry, std::span<const double> direction,
                                 double target) {
    check_direction(geometry, direction);
    if (!(target >= 0.0)) throw Error(ErrorKind::BadParams, "target nu must be >= 0");
    if (target == 0.0) return scaled(direction, 0.0);
    const double extent = ray_extent(geometry, direction);
    if (geometry.all_bargmann_fock()) {
        double sum = 0.0;
        for (double d : direction) sum += d;
        double s = target / sum;
        if (s > extent) throw Error(ErrorKind::DomainExceeded, "nu beyond the domain on this ray");
        return scaled(direction, s);
    }
    if (geometry.rank() == 1) {
        double x = geometry.factor(0).inverse_moment(target);
        if (!(x <= geometry.factor(0).x_max()) || geometry.factor(0).moment(x) < target * (1 - 1e-15)) {
            throw Error(ErrorKind::DomainExceeded, "nu beyond the domain on this ray");
        }
        return scaled(direction, x / direction[0]);
    }
    if (ray_nu(geometry, direction, extent) < target) {
        throw Error(ErrorKind::DomainExceeded, "nu beyond the domain on this ray");
    }
    double lo = 0.0;
    double hi = extent;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (ray_nu(geometry, direction, mid) < target ? lo : hi) = mid;
    }
    return scaled(direction, 0.5 * (lo + hi));
}

Grid ray_grid(const ModelGeometry& geometry, std::span<const double> direction, double nu_lo,
              double nu_hi, int n) {
    if (n < 1 || !(nu_lo >= 0.0 && nu_lo <= nu_hi)) {
        throw Error(ErrorKind::BadParams, "ray grid needs n >= 1 and 0 <= nu_lo <= nu_hi");
    }
    Grid g;
    for (int i = 0; i < n; ++i) {
        double nu = n == 1 ? nu_lo : nu_lo + (nu_hi - nu_lo) * i / (n - 1);
        g.push_back(point_on_ray(geometry, direction, nu));
    }
    return g;
}

BoundaryResult boundary_detect(const PartialDensityQuery& q, std::span<const double> direction) {
    check_direction(q.geometry, direction);
    DensityEngine engine(q.geometry, q.k);
    BoundaryResult res;
    auto ratio_at = [&](double nu) {
        ++res.evaluations;
        return engine.evaluate(point_on_ray(q.geometry, direction, nu), q.a_min).ratio;
    };
    const double ray_sup = ray_nu(q.geometry, direction, ray_extent(q.geometry, direction));
    const double nu_hi = std::min(std::max(1.0, 3.0 * q.delta), 0.999 * ray_sup);

    double lo = 0.0;
    double hi = -1.0;
    if (ratio_at(0.0) >= 0.5) {
        throw Error(ErrorKind::NoCrossing, "ratio is already >= 1/2 on V");
    }
    for (int j = 1; j <= kScanPoints; ++j) {
        double nu = nu_hi * j / kScanPoints;
        if (ratio_at(nu) >= 0.5) {
            hi = nu;
            break;
        }
        lo = nu;
    }
    if (hi < 0.0) {
        std::ostringstream os;
        os << "ratio stays below 1/2 for nu <= " << nu_hi;
        throw Error(ErrorKind::NoCrossing, os.str());
    }
    while (hi - lo > kBisectTol) {
        double mid = 0.5 * (lo + hi);
        (ratio_at(mid) >= 0.5 ? hi : lo) = mid;
    }
    res.nu_star = 0.5 * (lo + hi);
    res.x_star = point_on_ray(q.geometry, direction, res.nu_star);
    res.distance_to_delta = res.nu_star - q.delta;
    return res;
}

DecayFit decay_fit(const ModelGeometry& geometry, double delta, std::span<const double> x_star,
                   const std::vector<int>& k_ladder, int threads) {
    double nu = geometry.nu(x_star);
    if (!(nu < delta)) {
        std::ostringstream os;
        os << "x_star has nu = " << nu << ", which is not below delta = " << delta;
        throw Error(ErrorKind::PreconditionViolated, os.str());
    }
    if (k_ladder.size() < 4) throw Error(ErrorKind::BadParams, "k ladder needs at least 4 entries");
    for (std::size_t j = 0; j < k_ladder.size(); ++j) {
        if (k_ladder[j] < 1 || (j > 0 && k_ladder[j] <= k_ladder[j - 1])) {
            throw Error(ErrorKind::BadParams, "k ladder must be positive and increasing");
        }
    }
    DecayFit fit;
    fit.x_star.assign(x_star.begin(), x_star.end());
    fit.k_ladder = k_ladder;
    fit.log_ratio.resize(k_ladder.size());
    parallel_for(k_ladder.size(), threads, [&](std::size_t j) {
        DensityEngine engine(geometry, k_ladder[j]);
        auto pt = engine.evaluate(x_star, admissible_order(delta, k_ladder[j]));
        fit.log_ratio[j] = pt.log_rho_partial.log - pt.log_rho.log;
    });

    while (fit.usable < k_ladder.size() && fit.log_ratio[fit.usable] >= kUnderflowLog) ++fit.usable;
    fit.underflow = fit.usable < k_ladder.size();
    if (fit.usable < 2) {
        std::ostringstream os;
        os << "log ratio below " << kUnderflowLog << " from k = " << k_ladder[fit.usable]
           << "; shrink the ladder";
        throw Error(ErrorKind::RatioUnderflow, os.str());
    }

    const std::size_t n = fit.usable;
    double mk = 0.0;
    double my = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        mk += k_ladder[j];
        my += fit.log_ratio[j];
    }
    mk /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double dx = k_ladder[j] - mk;
        double dy = fit.log_ratio[j] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mk;
    fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;

    bool superpoly = true;
    for (int p = 1; p <= 10 && superpoly; ++p) {
        auto v = [&](std::size_t j) { return fit.log_ratio[j] + p * std::log(double(k_ladder[j])); };
        for (std::size_t j = (n - 1) / 2; j + 1 < n; ++j) superpoly = superpoly && v(j + 1) < v(j);
        superpoly = superpoly && v(n - 1) < v(0);
    }
    fit.superpolynomial = superpoly;
    return fit;
}

std::optional<double> chernoff_rate(const ModelGeometry& geometry, double delta, double nu) {
    if (!(nu >= 0.0) || !(delta >= 0.0)) throw Error(ErrorKind::BadParams, "need nu, delta >= 0");
    if (nu >= delta) return 0.0;
    if (geometry.all_bargmann_fock()) {
        if (nu == 0.0) return -kInf;
        return -(delta * std::log(delta / nu) - delta + nu);
    }
    if (geometry.kind() == GeometryKind::CP1) {
        if (nu == 0.0) return -kInf;
        double kl = delta * std::log(delta / nu);
        if (delta < 1.0) kl += (1.0 - delta) * std::log((1.0 - delta) / (1.0 - nu));
        return -kl;
    }
    return std::nullopt;
}

LogValue log_integrated_density(const DensityEngine& engine, long long a_min, DensityPart part,
                                double mu_lo, double mu_hi) {
    const ModelGeometry& geo = engine.geometry();
    if (geo.rank() != 1) throw Error(ErrorKind::Unsupported, "integration is implemented for rank 1");
    const RadialPotential& pot = geo.factor(0);
    const double sup = pot.unbounded() ? pot.moment_sup() : pot.moment(pot.x_max());
    if (!(mu_lo >= 0.0 && mu_lo <= mu_hi && mu_hi <= sup && std::isfinite(mu_hi))) {
        std::ostringstream os;
        os << "moment range [" << mu_lo << ", " << mu_hi << "] outside [0, " << sup << "]";
        throw Error(ErrorKind::BadParams, os.str());
    }
    auto g = [&](double mu) {
        double x = mu <= 0.0 ? 0.0 : pot.inverse_moment(mu);
        auto pt = engine.evaluate_at({x}, {mu}, a_min, PartialMethod::Enumerate);
        switch (part) {
            case DensityPart::Full: return pt.log_rho.log;
            case DensityPart::Partial: return pt.log_rho_partial.log;
            case DensityPart::Complement: return pt.log_rho_complement.log;
        }
        return pt.log_rho.log;
    };
    IntegrateOptions opts;
    opts.rel_tol = 1e-10;
    LogValue v = log_integrate(g, mu_lo, mu_hi, opts);
    return v.is_zero() ? v : LogValue{v.log + std::log(2.0 * std::numbers::pi)};
}

}  // namespace bergman
