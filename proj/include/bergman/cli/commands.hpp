#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "bergman/cli/config.hpp"
#include "bergman/error.hpp"

namespace bergman::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitValidation = 2,
    kExitNumerical = 3,
    kExitVerifyFailed = 4,
};

struct RunOptions {
    std::optional<std::string> config_path;
    std::string out_dir = "out";
    /// 0 picks one thread per core; results do not depend on it.
    int threads = 0;
    std::uint64_t seed = 20240601;
};

int exit_code_for(ErrorKind kind);

/// Runs one command end to end: loads and validates the config, computes,
/// writes artifacts under opts.out_dir. Failures are reported as a JSON
/// record on `err` and appended to <out>/errors.jsonl; the return value is
/// the process exit code.
int execute(const std::string& command, const RunOptions& opts, std::ostream& out,
            std::ostream& err);

/// As execute, with an already parsed config.
int execute(const std::string& command, const RunConfig& cfg, const RunOptions& opts,
            std::ostream& out, std::ostream& err);

}  // namespace bergman::cli
