#include "bergman/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bergman/error.hpp"

namespace bergman::cli {

namespace {

namespace pt = boost::property_tree;

class Problems {
public:
    void add(const std::string& where, const std::string& what) { lines_.push_back(where + ": " + what); }
    bool empty() const { return lines_.empty(); }
    std::string joined() const {
        std::string s = std::to_string(lines_.size()) + " problem(s) in config";
        for (const auto& l : lines_) s += "\n  " + l;
        return s;
    }

private:
    std::vector<std::string> lines_;
};

std::optional<double> to_double(const std::string& s) {
    std::string t = boost::trim_copy(s);
    if (t.empty()) return std::nullopt;
    std::size_t used = 0;
    try {
        double v = std::stod(t, &used);
        if (used != t.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::optional<int> to_int(const std::string& s) {
    auto v = to_double(s);
    if (!v || *v != std::floor(*v) || std::abs(*v) > 2e9) return std::nullopt;
    return static_cast<int>(*v);
}

// Reads the keys of one section into typed fields, recording problems.
class Section {
public:
    Section(std::string name, const pt::ptree& tree, Problems& problems)
        : name_(std::move(name)), tree_(tree), problems_(problems) {}

    void real(const std::string& key, double& out, std::function<bool(double)> ok = {},
              const std::string& rule = {}) {
        if (auto raw = take(key)) {
            auto v = to_double(*raw);
            if (!v) return bad(key, "'" + *raw + "' is not a number");
            if (ok && !ok(*v)) return bad(key, rule);
            out = *v;
        }
    }
    void integer(const std::string& key, int& out, std::function<bool(int)> ok = {},
                 const std::string& rule = {}) {
        if (auto raw = take(key)) {
            auto v = to_int(*raw);
            if (!v) return bad(key, "'" + *raw + "' is not an integer");
            if (ok && !ok(*v)) return bad(key, rule);
            out = *v;
        }
    }
    void reals(const std::string& key, std::vector<double>& out, std::function<bool(double)> ok = {},
               const std::string& rule = {}) {
        if (auto raw = take(key)) {
            std::vector<double> vals;
            for (const auto& item : split(*raw)) {
                auto v = to_double(item);
                if (!v) return bad(key, "'" + item + "' is not a number");
                if (ok && !ok(*v)) return bad(key, rule);
                vals.push_back(*v);
            }
            out = vals;
        }
    }
    void integers(const std::string& key, std::vector<int>& out, std::function<bool(int)> ok = {},
                  const std::string& rule = {}) {
        if (auto raw = take(key)) {
            std::vector<int> vals;
            for (const auto& item : split(*raw)) {
                auto v = to_int(item);
                if (!v) return bad(key, "'" + item + "' is not an integer");
                if (ok && !ok(*v)) return bad(key, rule);
                vals.push_back(*v);
            }
            out = vals;
        }
    }
    void word(const std::string& key, std::string& out, const std::vector<std::string>& allowed) {
        if (auto raw = take(key)) {
            std::string v = boost::trim_copy(*raw);
            if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
                return bad(key, "'" + v + "' is not one of " + boost::join(allowed, ", "));
            }
            out = v;
        }
    }
    void flag(const std::string& key, bool& out) {
        if (auto raw = take(key)) {
            std::string v = boost::to_lower_copy(boost::trim_copy(*raw));
            if (v == "true" || v == "yes" || v == "1") out = true;
            else if (v == "false" || v == "no" || v == "0") out = false;
            else bad(key, "'" + v + "' is not a boolean");
        }
    }
    void reject(const std::string& key, const std::string& why) {
        if (take(key)) bad(key, why);
    }
    // Reports keys that no reader consumed.
    void finish() {
        for (const auto& [key, value] : tree_) {
            if (!seen_.count(key)) bad(key, "unknown key");
        }
    }
    void bad(const std::string& key, const std::string& what) { problems_.add("[" + name_ + "] " + key, what); }

private:
    std::optional<std::string> take(const std::string& key) {
        seen_[key] = true;
        auto it = tree_.find(key);
        if (it == tree_.not_found()) return std::nullopt;
        return it->second.data();
    }
    static std::vector<std::string> split(const std::string& s) {
        std::vector<std::string> parts;
        boost::split(parts, s, boost::is_any_of(","));
        for (auto& p : parts) boost::trim(p);
        if (parts.size() == 1 && parts[0].empty()) parts.clear();
        return parts;
    }

    std::string name_;
    const pt::ptree& tree_;
    Problems& problems_;
    std::map<std::string, bool> seen_;
};

const auto positive = [](double v) { return v > 0.0; };
const auto nonneg = [](double v) { return v >= 0.0; };
const auto positive_int = [](int v) { return v >= 1; };

void read_delta(Section& s, double& delta, double& delta_max) {
    s.real("delta_max", delta_max, [](double v) { return v >= 0.0 && v <= 1.0; }, "must lie in [0, 1]");
    s.real("delta", delta, nonneg, "must be >= 0");
}

void check_delta(Problems& p, const std::string& section, double delta, double delta_max) {
    if (delta > delta_max) {
        std::ostringstream os;
        os << "delta = " << delta << " exceeds delta_max = " << delta_max;
        p.add("[" + section + "] delta", os.str());
    }
}

}  // namespace

ModelGeometry GeometrySpec::build() const {
    if (kind == "cp1") return ModelGeometry::cp1();
    RadialPotential p = potential == "polynomial"
                            ? RadialPotential::polynomial(coefficients, x_max.value_or(0.0))
                            : RadialPotential::from_name(potential);
    FiberWeight w = weight == "constant" ? FiberWeight::constant(weight_value) : FiberWeight::laplacian();
    if (kind == "product") {
        return ModelGeometry::product(std::vector<RadialPotential>(static_cast<std::size_t>(rank), p),
                                      std::vector<FiberWeight>(static_cast<std::size_t>(rank), w));
    }
    return ModelGeometry::fiber(p, w);
}

Grid GridSpec::build(const ModelGeometry& geometry) const {
    std::vector<double> dir = direction;
    if (dir.empty()) dir.assign(static_cast<std::size_t>(geometry.rank()), 1.0);
    if (static_cast<int>(dir.size()) != geometry.rank()) {
        throw Error(ErrorKind::InvalidConfig, "[grid] direction needs one entry per factor");
    }
    if (axis == "nu") return ray_grid(geometry, dir, lo, hi, count);
    Grid g;
    for (int i = 0; i < count; ++i) {
        double s = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
        std::vector<double> x = dir;
        for (double& v : x) v *= s;
        g.push_back(std::move(x));
    }
    return g;
}

RunConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("unreadable config: ") + e.what());
    }
    RunConfig cfg;
    Problems problems;
    for (const auto& [name, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            problems.add(name, "keys must sit inside a [section]");
            continue;
        }
        Section s(name, body, problems);
        if (name == "geometry") {
            auto& g = cfg.geometry;
            s.word("kind", g.kind, {"fiber", "product", "cp1"});
            s.word("potential", g.potential, {"bargmann-fock", "fubini-study", "polynomial"});
            s.reals("coefficients", g.coefficients);
            double xm = 0.0;
            s.real("x_max", xm, positive, "must be > 0");
            if (xm > 0.0) g.x_max = xm;
            s.integer("rank", g.rank, [](int r) { return r >= 1 && r <= 64; }, "must lie in [1, 64]");
            s.word("weight", g.weight, {"laplacian", "constant"});
            s.real("weight_value", g.weight_value, positive, "must be > 0");
        } else if (name == "grid") {
            auto& g = cfg.grid;
            s.word("axis", g.axis, {"x", "nu"});
            s.real("lo", g.lo, nonneg, "must be >= 0");
            s.real("hi", g.hi, nonneg, "must be >= 0");
            s.integer("count", g.count, [](int n) { return n >= 1 && n <= 1000000; },
                      "must lie in [1, 1e6]");
            s.reals("direction", g.direction, nonneg, "entries must be >= 0");
            if (g.hi < g.lo) s.bad("hi", "must be >= lo");
        } else if (name == "output") {
            s.flag("plot", cfg.plot);
        } else if (name == "density") {
            DensityParams d;
            s.integers("k", d.k, positive_int, "entries must be >= 1");
            s.reject("delta", "delta belongs to [partial]; [density] computes the full density");
            cfg.density = d;
        } else if (name == "partial") {
            PartialParams d;
            s.integers("k", d.k, positive_int, "entries must be >= 1");
            read_delta(s, d.delta, d.delta_max);
            std::string method = "auto";
            s.word("method", method, {"auto", "enumerate", "poisson"});
            d.method = method == "enumerate" ? PartialMethod::Enumerate
                       : method == "poisson" ? PartialMethod::PoissonFastPath
                                             : PartialMethod::Auto;
            check_delta(problems, name, d.delta, d.delta_max);
            cfg.partial = d;
        } else if (name == "boundary") {
            BoundaryParams d;
            s.integers("k", d.k, positive_int, "entries must be >= 1");
            read_delta(s, d.delta, d.delta_max);
            s.reals("direction", d.direction, nonneg, "entries must be >= 0");
            check_delta(problems, name, d.delta, d.delta_max);
            cfg.boundary = d;
        } else if (name == "decay-fit") {
            DecayParams d;
            read_delta(s, d.delta, d.delta_max);
            s.reals("x_star", d.x_star, nonneg, "entries must be >= 0");
            s.integers("ladder", d.ladder, positive_int, "entries must be >= 1");
            check_delta(problems, name, d.delta, d.delta_max);
            cfg.decay_fit = d;
        } else if (name == "regimes") {
            RegimesParams d;
            s.integers("k", d.k, positive_int, "entries must be >= 1");
            s.integers("a", d.a, [](int a) { return a >= 0; }, "entries must be >= 0");
            s.reals("a_over_k", d.a_over_k, nonneg, "entries must be >= 0");
            s.real("R", d.thresholds.R);
            s.real("R1", d.thresholds.R1);
            s.real("C", d.thresholds.C);
            s.real("C1", d.thresholds.C1);
            const auto& t = d.thresholds;
            if (!(t.R1 > 0.0 && t.R1 < t.R && t.R < 1.0)) s.bad("R, R1", "need 0 < R1 < R < 1");
            if (!(t.C >= 0.0)) s.bad("C", "must be >= 0");
            if (!(t.C1 > 0.0)) s.bad("C1", "must be > 0");
            cfg.regimes = d;
        } else if (name == "gram-check") {
            GramCheckParams d;
            s.integer("k", d.k, positive_int, "must be >= 1");
            s.real("radius", d.radius, positive, "must be > 0");
            s.integer("degree_cap", d.degree_cap, [](int c) { return c >= 0 && c <= 2000; },
                      "must lie in [0, 2000]");
            s.integer("radial_order", d.radial_order, [](int v) { return v >= 0; }, "must be >= 0");
            s.integer("angular_points", d.angular_points, [](int v) { return v >= 0; }, "must be >= 0");
            s.real("delta", d.delta, nonneg, "must be >= 0");
            s.reals("points", d.points, nonneg, "entries (|z|^2) must be >= 0");
            cfg.gram_check = d;
        } else if (name == "sweep") {
            SweepParams d;
            s.integers("k", d.k, positive_int, "entries must be >= 1");
            read_delta(s, d.delta, d.delta_max);
            check_delta(problems, name, d.delta, d.delta_max);
            cfg.sweep = d;
        } else if (name == "verify") {
            s.integers("criteria", cfg.verify.criteria, [](int c) { return c >= 1 && c <= 9; },
                       "entries must lie in 1..9");
        } else {
            problems.add("[" + name + "]", "unknown section");
            continue;
        }
        s.finish();
    }

    if (cfg.geometry.potential == "polynomial" && cfg.geometry.kind != "cp1" && !cfg.geometry.x_max) {
        problems.add("[geometry] x_max", "required for polynomial potentials");
    }
    if (cfg.geometry.kind == "fiber" && cfg.geometry.rank != 1) {
        problems.add("[geometry] rank", "a fiber has rank 1; use kind = product");
    }
    if (problems.empty()) {
        try {
            cfg.geometry.build();
        } catch (const Error& e) {
            problems.add("[geometry]", e.what());
        }
    }
    if (!problems.empty()) throw Error(ErrorKind::InvalidConfig, problems.joined());
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open config " + path);
    return parse_config(in);
}

void require_command(const RunConfig& cfg, const std::string& command) {
    Problems p;
    auto need_k = [&](const std::string& section, const std::vector<int>& k) {
        if (k.empty()) p.add("[" + section + "] k", "at least one value required");
    };
    if (command == "density") {
        if (!cfg.density) p.add("[density]", "section required");
        else need_k(command, cfg.density->k);
    } else if (command == "partial") {
        if (!cfg.partial) p.add("[partial]", "section required");
        else need_k(command, cfg.partial->k);
    } else if (command == "boundary") {
        if (!cfg.boundary) p.add("[boundary]", "section required");
        else need_k(command, cfg.boundary->k);
    } else if (command == "decay-fit") {
        if (!cfg.decay_fit) {
            p.add("[decay-fit]", "section required");
        } else {
            if (cfg.decay_fit->x_star.empty()) p.add("[decay-fit] x_star", "required");
            if (cfg.decay_fit->ladder.size() < 4) p.add("[decay-fit] ladder", "needs at least 4 entries");
        }
    } else if (command == "regimes") {
        if (!cfg.regimes) {
            p.add("[regimes]", "section required");
        } else {
            need_k(command, cfg.regimes->k);
            if (cfg.regimes->a.empty() && cfg.regimes->a_over_k.empty()) {
                p.add("[regimes] a", "give a or a_over_k");
            }
        }
    } else if (command == "gram-check") {
        if (cfg.geometry.kind == "cp1" || cfg.geometry.rank != 1) {
            p.add("[geometry]", "gram-check compares against a rank-1 fiber");
        }
    } else if (command == "sweep") {
        if (!cfg.sweep) p.add("[sweep]", "section required");
        else need_k(command, cfg.sweep->k);
    } else if (command != "verify") {
        p.add("command", "unknown command '" + command + "'");
    }
    if (!p.empty()) throw Error(ErrorKind::InvalidConfig, p.joined());
}

}  // namespace bergman::cli
