// one line per acceptance criterion; exit status counts failures
#include <cstdio>
#include <cstdlib>

#include "divergence/checks.hpp"

int main(int argc, char** argv) {
    std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 20240917;
    int failed = 0;
    for (const auto& spec : divergence::checks::registry()) {
        divergence::checks::CheckResult r;
        try {
            r = divergence::checks::run_check(spec.id, seed);
        } catch (const std::exception& e) {
            r.id = spec.id;
            r.name = spec.name;
            r.detail = std::string("error: ") + e.what();
        }
        failed += !r.passed;
        std::printf("[%s] criterion %d %s: %s (%.2f s)\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(),
                    r.detail.c_str(), r.seconds);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, divergence::checks::registry().size());
    return failed == 0 ? 0 : 1;
}
