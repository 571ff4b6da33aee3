#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bergman/cli/commands.hpp"
#include "bergman/cli/config.hpp"
#include "bergman/error.hpp"

using namespace bergman;
using namespace bergman::cli;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("bergman_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ErrorKind parse_error_kind(const std::string& text) {
    try {
        parse(text);
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Unsupported;
}

const char* kBase = R"(
[geometry]
kind = product
potential = bargmann-fock
rank = 2

[grid]
axis = nu
lo = 0
hi = 0.5
count = 26
direction = 1, 3

[partial]
k = 200, 800
delta = 0.2

[boundary]
k = 200, 800
delta = 0.2

[sweep]
k = 100, 200, 400
delta = 0.2
)";

int run(const std::string& cmd, const RunConfig& cfg, const fs::path& out, int threads,
        std::string* stderr_text = nullptr) {
    RunOptions o;
    o.out_dir = out.string();
    o.threads = threads;
    std::ostringstream so, se;
    int code = execute(cmd, cfg, o, so, se);
    if (stderr_text) *stderr_text = se.str();
    return code;
}

}  // namespace

TEST_CASE("config parses typed sections") {
    auto cfg = parse(kBase);
    CHECK(cfg.geometry.kind == "product");
    CHECK(cfg.geometry.rank == 2);
    CHECK(cfg.grid.count == 26);
    REQUIRE(cfg.partial.has_value());
    CHECK(cfg.partial->k == std::vector<int>{200, 800});
    CHECK(cfg.partial->delta == 0.2);
    CHECK_FALSE(cfg.density.has_value());
    auto geo = cfg.geometry.build();
    CHECK(geo.rank() == 2);
    auto grid = cfg.grid.build(geo);
    CHECK(grid.size() == 26);
    CHECK(grid.back()[1] == doctest::Approx(3 * grid.back()[0]));
}

TEST_CASE("config problems are reported together") {
    const std::string text = "[geometry]\nkind = torus\nrank = 0\n[partial]\nk = 10\ndelta = 0.5\n";
    try {
        parse(text);
        FAIL("expected InvalidConfig");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidConfig);
        std::string msg = e.what();
        CHECK(msg.find("kind") != std::string::npos);
        CHECK(msg.find("rank") != std::string::npos);
        CHECK(msg.find("delta") != std::string::npos);
    }
}

TEST_CASE("config rejections") {
    CHECK(parse_error_kind("[density]\nk = 10\ndelta = 0.2\n") == ErrorKind::InvalidConfig);
    CHECK(parse_error_kind("[partial]\nk = 10\ncolour = red\n") == ErrorKind::InvalidConfig);
    CHECK(parse_error_kind("[nonsense]\nk = 1\n") == ErrorKind::InvalidConfig);
    CHECK(parse_error_kind("[geometry]\npotential = polynomial\ncoefficients = 0.1\n") ==
          ErrorKind::InvalidConfig);
    CHECK(parse_error_kind("[regimes]\nk = 100\na = 1\nR = 0.4\nR1 = 0.6\n") ==
          ErrorKind::InvalidConfig);
    CHECK(parse_error_kind("[partial]\nk = ten\n") == ErrorKind::InvalidConfig);
    CHECK_NOTHROW(parse("[partial]\nk = 10\ndelta = 0.5\ndelta_max = 0.6\n"));
}

TEST_CASE("missing sections fail validation with exit code 2") {
    auto cfg = parse("[geometry]\nkind = fiber\n");
    auto out = scratch("missing");
    std::string err;
    CHECK(run("partial", cfg, out, 1, &err) == kExitValidation);
    auto rec = nlohmann::json::parse(err);
    CHECK(rec["command"] == "partial");
    CHECK(rec["error"] == "InvalidConfig");
    CHECK(rec["exit_code"] == 2);
    CHECK(fs::exists(out / "errors.jsonl"));
}

TEST_CASE("numerical failures exit with code 3") {
    auto cfg = parse("[boundary]\nk = 100\ndelta = 0\n");
    auto out = scratch("numerical");
    std::string err;
    CHECK(run("boundary", cfg, out, 1, &err) == kExitNumerical);
    CHECK(nlohmann::json::parse(err)["error"] == "NoCrossing");
    CHECK(exit_code_for(ErrorKind::NoCrossing) == kExitNumerical);
    CHECK(exit_code_for(ErrorKind::DomainExceeded) == kExitValidation);
}

TEST_CASE("partial writes one csv per k with the expected columns") {
    auto cfg = parse(kBase);
    auto out = scratch("partial");
    REQUIRE(run("partial", cfg, out, 1) == kExitOk);
    auto text = slurp(out / "partial_k200_delta0.2.csv");
    CHECK(text.rfind("x,x2,mu,mu2,nu,log_rho,log_rho_partial,ratio\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 27);
    CHECK(fs::exists(out / "partial_k800_delta0.2.csv"));
}

TEST_CASE("outputs do not depend on the thread count") {
    auto cfg = parse(kBase);
    auto one = scratch("t1");
    auto four = scratch("t4");
    for (const char* cmd : {"partial", "boundary", "sweep"}) {
        REQUIRE(run(cmd, cfg, one, 1) == kExitOk);
        REQUIRE(run(cmd, cfg, four, 4) == kExitOk);
    }
    for (const char* f : {"partial_k200_delta0.2.csv", "partial_k800_delta0.2.csv",
                          "partial_k400_delta0.2.csv", "boundary.jsonl", "sweep.jsonl"}) {
        CAPTURE(f);
        CHECK(slurp(one / f) == slurp(four / f));
        CHECK_FALSE(slurp(one / f).empty());
    }
}

TEST_CASE("decay-fit writes the documented record") {
    auto cfg = parse("[decay-fit]\ndelta = 0.2\nx_star = 0.1\nladder = 100, 200, 400, 800, 1600\n");
    auto out = scratch("decay");
    REQUIRE(run("decay-fit", cfg, out, 1) == kExitOk);
    auto rec = nlohmann::json::parse(slurp(out / "fits.jsonl"));
    for (const char* key : {"command", "k_ladder", "slope", "intercept", "r_squared",
                            "superpolynomial", "oracle_slope", "rel_err"}) {
        CHECK(rec.contains(key));
    }
    CHECK(rec.size() == 8);
    CHECK(rec["slope"].get<double>() < 0.0);
}

TEST_CASE("density and regimes commands") {
    auto cfg = parse("[grid]\nhi = 1\ncount = 11\n[density]\nk = 50\n[regimes]\nk = 400\na = 0, 100\n"
                     "a_over_k = 0.95\n[output]\nplot = true\n");
    auto out = scratch("density");
    REQUIRE(run("density", cfg, out, 1) == kExitOk);
    CHECK(fs::exists(out / "density_k50.csv"));
    CHECK(fs::exists(out / "density_k50.gp"));
    REQUIRE(run("regimes", cfg, out, 1) == kExitOk);
    std::istringstream lines(slurp(out / "regimes.jsonl"));
    std::vector<int> regimes;
    for (std::string line; std::getline(lines, line);) {
        regimes.push_back(nlohmann::json::parse(line)["regime"].get<int>());
    }
    CHECK(regimes == std::vector<int>{3, 2, 1});
}

TEST_CASE("gram-check agrees with the density engine") {
    auto cfg = parse("[gram-check]\nk = 20\nradius = 3\ndegree_cap = 120\npoints = 0.1, 0.2, 0.4\n");
    auto out = scratch("gram");
    REQUIRE(run("gram-check", cfg, out, 1) == kExitOk);
    std::istringstream lines(slurp(out / "gram_check.jsonl"));
    std::string line;
    std::getline(lines, line);
    int rows = 0;
    while (std::getline(lines, line)) {
        auto rec = nlohmann::json::parse(line);
        CHECK(rec["rel_err"].get<double>() < 1e-8);
        CHECK(rec["ratio_abs_err"].get<double>() < 1e-8);
        ++rows;
    }
    CHECK(rows == 3);
}

#ifdef BERGMAN_LAB_PATH
TEST_CASE("the executable maps failures to exit codes") {
    auto dir = scratch("exe");
    auto ini = dir / "bad.ini";
    std::ofstream(ini) << "[density]\nk = 10\ndelta = 0.2\n";
    auto sh = [&](const std::string& args) {
        std::string cmd = std::string(BERGMAN_LAB_PATH) + " " + args + " --out " + (dir / "o").string() +
                          " > /dev/null 2>&1";
        int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };
    CHECK(sh("no-such-command") == 2);
    CHECK(sh("density --config " + ini.string()) == 2);
    CHECK(sh("density --config " + (dir / "absent.ini").string()) == 2);
    CHECK(sh("partial --threads -3") == 2);
    CHECK(sh("verify --help") == 0);
}
#endif

#ifdef BERGMAN_DEFAULT_CONFIG
TEST_CASE("shipped config: partial ratio crosses one half near x = delta") {
    auto cfg = load_config(BERGMAN_DEFAULT_CONFIG);
    cfg.partial->k = {1600};
    auto out = scratch("shipped");
    REQUIRE(run("partial", cfg, out, 0) == kExitOk);
    std::istringstream lines(slurp(out / "partial_k1600_delta0.2.csv"));
    std::string line;
    std::getline(lines, line);
    CHECK(line == "x,mu,nu,log_rho,log_rho_partial,ratio");
    int rows = 0;
    double cross = -1.0, prev_x = 0.0, prev_r = 0.0;
    while (std::getline(lines, line)) {
        double x = std::stod(line.substr(0, line.find(',')));
        double r = std::stod(line.substr(line.rfind(',') + 1));
        if (rows > 0 && prev_r < 0.5 && r >= 0.5) cross = 0.5 * (x + prev_x);
        prev_x = x;
        prev_r = r;
        ++rows;
    }
    CHECK(rows == 121);
    CHECK(cross == doctest::Approx(0.2).epsilon(0.02));
}

TEST_CASE("shipped config: verify passes") {
    auto cfg = load_config(BERGMAN_DEFAULT_CONFIG);
    auto out = scratch("verify");
    CHECK(run("verify", cfg, out, 1) == kExitOk);
    std::istringstream lines(slurp(out / "acceptance.jsonl"));
    int n = 0;
    for (std::string line; std::getline(lines, line); ++n) {
        CHECK(nlohmann::json::parse(line)["passed"] == true);
    }
    CHECK(n == 9);
}
#endif
