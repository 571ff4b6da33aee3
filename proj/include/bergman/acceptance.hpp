#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bergman {

struct AcceptanceOptions {
    std::uint64_t seed = 20240601;
    int threads = 1;
};

struct CriterionResult {
    int id = 0;
    std::string title;
    /// What `value` measures and the bound it is held to.
    std::string metric;
    double value = 0.0;
    double tolerance = 0.0;
    double seconds = 0.0;
    double time_limit = 0.0;
    bool accurate = false;
    std::string detail;

    bool in_time() const { return seconds < time_limit; }
    bool passed() const { return accurate && in_time(); }
};

/// Identifiers of the acceptance checks, 1..9.
std::vector<int> acceptance_ids();

/// Runs one check. Errors raised by the library are caught and reported as a
/// failed result carrying the message.
CriterionResult run_criterion(int id, const AcceptanceOptions& opts = {});

/// One line: "[PASS] 3 title: metric = value (tol ...), 0.12 s (limit 5 s)".
std::string format_result(const CriterionResult& r);

}  // namespace bergman
