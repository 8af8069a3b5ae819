#include <cstdio>
#include <cstdlib>
#include <string>

#include "slitmod/acceptance.hpp"

// Usage: acceptance [criterion ids...]
int main(int argc, char** argv) {
    slitmod::AcceptanceOptions opt;
    for (int i = 1; i < argc; ++i) opt.only.insert(std::atoi(argv[i]));
    int failed = 0;
    for (int id = 1; id <= slitmod::kCriteria; ++id) {
        if (!opt.only.empty() && !opt.only.count(id)) continue;
        auto r = slitmod::run_criterion(id, opt);
        std::printf("%s\n", slitmod::format_result(r, true).c_str());
        std::fflush(stdout);
        if (!r.pass) ++failed;
    }
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
