#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bergman/density.hpp"
#include "bergman/geometry.hpp"
#include "bergman/model1d.hpp"

namespace bergman::cli {

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> names = {"density",  "partial",    "boundary", "decay-fit",
                                                   "regimes",  "gram-check", "sweep",    "verify"};
    return names;
}

struct GeometrySpec {
    std::string kind = "fiber";  // fiber, product, cp1
    std::string potential = "bargmann-fock";
    std::vector<double> coefficients;  // c_2, c_3, ... for polynomial potentials
    std::optional<double> x_max;
    int rank = 1;
    std::string weight = "laplacian";  // laplacian or constant
    double weight_value = 1.0;

    ModelGeometry build() const;
};

struct GridSpec {
    std::string axis = "x";  // x: points s * direction, s in [lo, hi]; nu: uniform in nu
    double lo = 0.0;
    double hi = 0.6;
    int count = 121;
    std::vector<double> direction;  // defaults to all ones

    Grid build(const ModelGeometry& geometry) const;
};

struct DensityParams {
    std::vector<int> k;
};

struct PartialParams {
    std::vector<int> k;
    double delta = 0.2;
    double delta_max = 0.4;
    PartialMethod method = PartialMethod::Auto;
};

struct BoundaryParams {
    std::vector<int> k;
    double delta = 0.2;
    double delta_max = 0.4;
    std::vector<double> direction;
};

struct DecayParams {
    double delta = 0.2;
    double delta_max = 0.4;
    std::vector<double> x_star;
    std::vector<int> ladder;
};

struct RegimesParams {
    std::vector<int> k;
    std::vector<int> a;
    /// Degrees given as fractions of k, rounded down.
    std::vector<double> a_over_k;
    RegimeParams thresholds;
};

struct GramCheckParams {
    int k = 50;
    double radius = 2.0;
    int degree_cap = 200;
    int radial_order = 0;
    int angular_points = 0;
    double delta = 0.2;
    std::vector<double> points = {0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0};
};

struct SweepParams {
    std::vector<int> k;
    double delta = 0.2;
    double delta_max = 0.4;
};

struct VerifyParams {
    std::vector<int> criteria = {1, 2, 3, 4, 5, 6, 7, 8, 9};
};

struct RunConfig {
    GeometrySpec geometry;
    GridSpec grid;
    bool plot = false;
    std::optional<DensityParams> density;
    std::optional<PartialParams> partial;
    std::optional<BoundaryParams> boundary;
    std::optional<DecayParams> decay_fit;
    std::optional<RegimesParams> regimes;
    std::optional<GramCheckParams> gram_check;
    std::optional<SweepParams> sweep;
    VerifyParams verify;
};

/// Parses and validates an INI config. Every problem found is collected into
/// one InvalidConfig error, one line per problem.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// Checks that the section `command` needs is present and complete.
void require_command(const RunConfig& cfg, const std::string& command);

}  // namespace bergman::cli
