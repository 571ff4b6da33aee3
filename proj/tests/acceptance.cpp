#include <cstdlib>
#include <iostream>

#include "bergman/acceptance.hpp"

int main(int argc, char** argv) {
    bergman::AcceptanceOptions opts;
    if (argc > 1) opts.seed = std::strtoull(argv[1], nullptr, 10);
    int failed = 0;
    for (int id : bergman::acceptance_ids()) {
        auto r = bergman::run_criterion(id, opts);
        std::cout << bergman::format_result(r) << std::endl;
        if (!r.passed()) ++failed;
    }
    std::cout << (failed == 0 ? "all 9 criteria passed" : std::to_string(failed) + " failed")
              << std::endl;
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
