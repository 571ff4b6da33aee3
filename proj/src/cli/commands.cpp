#include "bergman/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "bergman/acceptance.hpp"
#include "bergman/density.hpp"
#include "bergman/gram.hpp"
#include "bergman/logquad.hpp"
#include "bergman/model1d.hpp"
#include "bergman/parallel.hpp"

namespace bergman::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::ofstream open_out(const fs::path& p, bool append = false) {
    fs::create_directories(p.parent_path());
    std::ofstream f(p, append ? std::ios::app : std::ios::trunc);
    if (!f) throw Error(ErrorKind::InvalidConfig, "cannot write " + p.string());
    return f;
}

std::string csv_header(int rank) {
    std::string h = "x";
    for (int i = 2; i <= rank; ++i) h += ",x" + std::to_string(i);
    h += ",mu";
    for (int i = 2; i <= rank; ++i) h += ",mu" + std::to_string(i);
    return h + ",nu,log_rho,log_rho_partial,ratio";
}

void write_profile(const DensityProfile& prof, const fs::path& path, bool full, bool plot) {
    auto f = open_out(path);
    f << csv_header(prof.geometry.rank()) << '\n';
    for (const auto& p : prof.points) {
        std::string row;
        for (double x : p.x) row += fmt17(x) + ",";
        for (double m : p.mu) row += fmt17(m) + ",";
        row += fmt17(p.nu) + "," + fmt17(p.log_rho.log) + ",";
        row += full ? fmt17(p.log_rho.log) + ",1" : fmt17(p.log_rho_partial.log) + "," + fmt17(p.ratio);
        f << row << '\n';
    }
    if (!plot) return;
    fs::path script = path;
    script.replace_extension(".gp");
    auto g = open_out(script);
    const int rank = prof.geometry.rank();
    const int nu_col = 2 * rank + 1;
    g << "set datafile separator ','\n"
      << "set key autotitle columnhead\n"
      << "set xlabel 'nu'\n";
    if (full) {
        g << "set ylabel 'log rho'\n"
          << "plot '" << path.filename().string() << "' using " << nu_col << ":" << nu_col + 1
          << " with lines\n";
    } else {
        g << "set ylabel 'ratio'\n"
          << "set title 'k = " << prof.k << ", delta = " << short_num(prof.delta) << "'\n"
          << "plot '" << path.filename().string() << "' using " << nu_col << ":" << nu_col + 4
          << " with lines\n";
    }
}

std::string partial_name(int k, double delta) {
    return "partial_k" + std::to_string(k) + "_delta" + short_num(delta) + ".csv";
}

json to_json(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? "inf" : "-inf";
}

int run_density(const RunConfig& cfg, const RunOptions& o, int threads, std::ostream& out) {
    auto geo = cfg.geometry.build();
    auto grid = cfg.grid.build(geo);
    for (int k : cfg.density->k) {
        auto prof = full_density(geo, k, grid, {threads});
        fs::path p = fs::path(o.out_dir) / ("density_k" + std::to_string(k) + ".csv");
        write_profile(prof, p, true, cfg.plot);
        out << "wrote " << p.string() << " (" << prof.points.size() << " rows)\n";
    }
    return kExitOk;
}

int run_partial(const RunConfig& cfg, const RunOptions& o, int threads, std::ostream& out) {
    const auto& pp = *cfg.partial;
    auto geo = cfg.geometry.build();
    auto grid = cfg.grid.build(geo);
    for (int k : pp.k) {
        auto q = make_query(geo, k, pp.delta, pp.delta_max);
        auto prof = partial_density(q, grid, {threads, pp.method});
        fs::path p = fs::path(o.out_dir) / partial_name(k, pp.delta);
        write_profile(prof, p, false, cfg.plot);
        out << "wrote " << p.string() << " (" << prof.points.size() << " rows, a_min = " << q.a_min
            << ")\n";
    }
    return kExitOk;
}

json boundary_record(const PartialDensityQuery& q, const std::vector<double>& dir,
                     const BoundaryResult& b) {
    return {{"command", "boundary"},
            {"geometry", q.geometry.name()},
            {"k", q.k},
            {"delta", q.delta},
            {"a_min", q.a_min},
            {"direction", dir},
            {"nu_star", b.nu_star},
            {"x_star", b.x_star},
            {"distance_to_delta", b.distance_to_delta},
            {"clt_bound", 0.8 / std::sqrt(q.delta * q.k)},
            {"evaluations", b.evaluations}};
}

std::vector<double> direction_for(const ModelGeometry& geo, std::vector<double> dir) {
    if (dir.empty()) dir.assign(static_cast<std::size_t>(geo.rank()), 1.0);
    return dir;
}

int run_boundary(const RunConfig& cfg, const RunOptions& o, int threads, std::ostream& out) {
    const auto& bp = *cfg.boundary;
    auto geo = cfg.geometry.build();
    auto dir = direction_for(geo, bp.direction);
    std::vector<json> records(bp.k.size());
    parallel_for(bp.k.size(), threads, [&](std::size_t i) {
        auto q = make_query(geo, bp.k[i], bp.delta, bp.delta_max);
        records[i] = boundary_record(q, dir, boundary_detect(q, dir));
    });
    auto f = open_out(fs::path(o.out_dir) / "boundary.jsonl");
    for (const auto& r : records) {
        f << r.dump() << '\n';
        out << "k = " << r["k"] << ": nu* = " << fmt17(r["nu_star"].get<double>()) << '\n';
    }
    return kExitOk;
}

int run_decay(const RunConfig& cfg, const RunOptions& o, int threads, std::ostream& out) {
    const auto& dp = *cfg.decay_fit;
    auto geo = cfg.geometry.build();
    if (static_cast<int>(dp.x_star.size()) != geo.rank()) {
        throw Error(ErrorKind::InvalidConfig, "[decay-fit] x_star needs one entry per factor");
    }
    make_query(geo, dp.ladder.front(), dp.delta, dp.delta_max);
    auto fit = decay_fit(geo, dp.delta, dp.x_star, dp.ladder, threads);
    auto rate = chernoff_rate(geo, dp.delta, geo.nu(dp.x_star));
    json rec = {{"command", "decay-fit"},
                {"k_ladder", fit.k_ladder},
                {"slope", fit.slope},
                {"intercept", fit.intercept},
                {"r_squared", fit.r_squared},
                {"superpolynomial", fit.superpolynomial},
                {"oracle_slope", rate ? to_json(*rate) : json(nullptr)},
                {"rel_err", rate ? to_json(std::abs(fit.slope / *rate - 1.0)) : json(nullptr)}};
    auto f = open_out(fs::path(o.out_dir) / "fits.jsonl", true);
    f << rec.dump() << '\n';
    out << rec.dump() << '\n';
    if (fit.underflow) {
        out << "warning: log ratio below -700 beyond the first " << fit.usable
            << " ladder entries; fit uses that prefix\n";
    }
    return kExitOk;
}

int run_regimes(const RunConfig& cfg, const RunOptions& o, int threads, std::ostream& out) {
    const auto& rp = *cfg.regimes;
    auto geo = cfg.geometry.build();
    struct Job {
        int k;
        int a;
    };
    std::vector<Job> jobs;
    for (int k : rp.k) {
        for (int a : rp.a) jobs.push_back({k, a});
        for (double f : rp.a_over_k) jobs.push_back({k, static_cast<int>(std::floor(f * k))});
    }
    std::vector<json> records(jobs.size());
    parallel_for(jobs.size(), threads, [&](std::size_t i) {
        Model1DProblem p(geo.factor(0), jobs[i].k, jobs[i].a, geo.weight(0));
        auto rep = mass_ratio(p, rp.thresholds);
        records[i] = {{"command", "regimes"},
                      {"potential", geo.factor(0).name()},
                      {"k", jobs[i].k},
                      {"a", jobs[i].a},
                      {"regime", rep.regime},
                      {"R", rep.R},
                      {"R1", rep.R1},
                      {"C", rep.C},
                      {"C1", rep.C1},
                      {"inside_mu_lo", rep.inside_mu_lo},
                      {"inside_mu_hi", rep.inside_mu_hi},
                      {"inside_log_mass", to_json(rep.inside_log_mass.log)},
                      {"outside_log_mass", to_json(rep.outside_log_mass.log)},
                      {"log_ratio", to_json(rep.log_ratio())}};
    });
    auto f = open_out(fs::path(o.out_dir) / "regimes.jsonl");
    for (const auto& r : records) {
        f << r.dump() << '\n';
        out << "k = " << r["k"] << ", a = " << r["a"] << ": regime " << r["regime"]
            << ", log ratio " << r["log_ratio"] << '\n';
    }
    return kExitOk;
}

int run_gram_check(const RunConfig& cfg, const RunOptions& o, int threads, std::ostream& out) {
    GramCheckParams gp = cfg.gram_check.value_or(GramCheckParams{});
    auto geo = cfg.geometry.build();
    if (geo.rank() != 1) {
        throw Error(ErrorKind::Unsupported, "gram-check runs on a single fiber");
    }
    using cd = std::complex<double>;
    auto weight = GramWeight::model(geo.factor(0), gp.k);
    auto g = build_gram(weight, {{gp.radius}}, gp.degree_cap, {gp.radial_order, gp.angular_points},
                        threads);
    const long long a_min = admissible_order(gp.delta, gp.k);
    auto split = partial_split(g, a_min);
    DensityEngine engine(geo, gp.k);
    auto f = open_out(fs::path(o.out_dir) / "gram_check.jsonl");
    json summary = {{"command", "gram-check"},
                    {"geometry", geo.name()},
                    {"k", gp.k},
                    {"radius", gp.radius},
                    {"degree_cap", gp.degree_cap},
                    {"radial_order", g.quadrature.radial_order},
                    {"angular_points", g.quadrature.angular_points},
                    {"a_min", a_min},
                    {"max_offdiagonal", max_offdiagonal_ratio(g)},
                    {"factorization_residual", factorization_residual(g)},
                    {"diagonal_span_decades", g.diagonal_span_decades},
                    {"ill_conditioned", g.ill_conditioned}};
    f << summary.dump() << '\n';
    out << summary.dump() << '\n';
    if (g.ill_conditioned) {
        out << "warning: the factor diagonal spans " << g.diagonal_span_decades << " decades\n";
    }
    for (double x : gp.points) {
        if (x > gp.radius * gp.radius) {
            throw Error(ErrorKind::DomainExceeded, "gram-check point outside the quadrature disc");
        }
        cd z(std::sqrt(x), 0.0);
        std::span<const cd> pt(&z, 1);
        double full = kernel_from_gram(g, pt);
        double hi = split.kernel_high(pt);
        double lo = split.kernel_low(pt);
        std::vector<double> xv = {x};
        auto d = engine.evaluate(xv, a_min);
        json rec = {{"x", x},
                    {"kernel_gram", full},
                    {"rho_density", d.log_rho.value()},
                    {"rel_err", std::abs(full / d.log_rho.value() - 1.0)},
                    {"ratio_gram", hi / full},
                    {"ratio_density", d.ratio},
                    {"ratio_abs_err", std::abs(hi / full - d.ratio)},
                    {"additivity_err", std::abs((hi + lo) / full - 1.0)}};
        f << rec.dump() << '\n';
    }
    out << "wrote " << (fs::path(o.out_dir) / "gram_check.jsonl").string() << '\n';
    return kExitOk;
}

int run_sweep(const RunConfig& cfg, const RunOptions& o, int threads, std::ostream& out) {
    const auto& sp = *cfg.sweep;
    auto geo = cfg.geometry.build();
    auto grid = cfg.grid.build(geo);
    auto dir = direction_for(geo, cfg.grid.direction);
    std::vector<std::optional<DensityProfile>> profiles(sp.k.size());
    std::vector<json> records(sp.k.size());
    parallel_for(sp.k.size(), threads, [&](std::size_t i) {
        auto q = make_query(geo, sp.k[i], sp.delta, sp.delta_max);
        profiles[i] = partial_density(q, grid);
        json rec = boundary_record(q, dir, boundary_detect(q, dir));
        rec["command"] = "sweep";
        records[i] = rec;
    });
    auto f = open_out(fs::path(o.out_dir) / "sweep.jsonl");
    for (std::size_t i = 0; i < sp.k.size(); ++i) {
        write_profile(*profiles[i], fs::path(o.out_dir) / partial_name(sp.k[i], sp.delta), false,
                      cfg.plot);
        f << records[i].dump() << '\n';
        out << "k = " << sp.k[i] << ": nu* = " << fmt17(records[i]["nu_star"].get<double>()) << '\n';
    }
    return kExitOk;
}

int run_verify(const RunConfig& cfg, const RunOptions& o, int threads, std::ostream& out) {
    AcceptanceOptions ao{o.seed, threads};
    auto f = open_out(fs::path(o.out_dir) / "acceptance.jsonl");
    bool all = true;
    for (int id : cfg.verify.criteria) {
        auto r = run_criterion(id, ao);
        all = all && r.passed();
        out << format_result(r) << '\n';
        f << json{{"id", r.id},
                  {"title", r.title},
                  {"metric", r.metric},
                  {"value", to_json(r.value)},
                  {"tolerance", r.tolerance},
                  {"seconds", r.seconds},
                  {"time_limit", r.time_limit},
                  {"passed", r.passed()},
                  {"detail", r.detail}}
                 .dump()
          << '\n';
    }
    out << (all ? "all checks passed" : "some checks failed") << '\n';
    return all ? kExitOk : kExitVerifyFailed;
}

void report(const std::string& command, const std::string& kind, const std::string& message,
            int code, const RunOptions& o, std::ostream& err) {
    json rec = {{"command", command}, {"error", kind}, {"message", message}, {"exit_code", code}};
    err << rec.dump() << '\n';
    try {
        auto f = open_out(fs::path(o.out_dir) / "errors.jsonl", true);
        f << rec.dump() << '\n';
    } catch (const std::exception&) {
        // The stderr record is the one that matters.
    }
}

}  // namespace

int exit_code_for(ErrorKind kind) { return is_numerical(kind) ? kExitNumerical : kExitValidation; }

int execute(const std::string& command, const RunConfig& cfg, const RunOptions& opts,
            std::ostream& out, std::ostream& err) {
    try {
        require_command(cfg, command);
        const int threads = resolve_threads(opts.threads);
        if (command == "density") return run_density(cfg, opts, threads, out);
        if (command == "partial") return run_partial(cfg, opts, threads, out);
        if (command == "boundary") return run_boundary(cfg, opts, threads, out);
        if (command == "decay-fit") return run_decay(cfg, opts, threads, out);
        if (command == "regimes") return run_regimes(cfg, opts, threads, out);
        if (command == "gram-check") return run_gram_check(cfg, opts, threads, out);
        if (command == "sweep") return run_sweep(cfg, opts, threads, out);
        return run_verify(cfg, opts, threads, out);
    } catch (const Error& e) {
        int code = exit_code_for(e.kind());
        report(command, std::string(to_string(e.kind())), e.what(), code, opts, err);
        return code;
    } catch (const std::exception& e) {
        report(command, "Internal", e.what(), kExitInternal, opts, err);
        return kExitInternal;
    }
}

int execute(const std::string& command, const RunOptions& opts, std::ostream& out,
            std::ostream& err) {
    RunConfig cfg;
    try {
        if (opts.config_path) cfg = load_config(*opts.config_path);
    } catch (const Error& e) {
        int code = exit_code_for(e.kind());
        report(command, std::string(to_string(e.kind())), e.what(), code, opts, err);
        return code;
    }
    return execute(command, cfg, opts, out, err);
}

}  // namespace bergman::cli
