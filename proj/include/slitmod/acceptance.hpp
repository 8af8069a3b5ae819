#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace slitmod {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0;
};

struct AcceptanceOptions {
    std::uint64_t seed = 1;
    std::set<int> only;  // empty = all
};

inline constexpr int kCriteria = 11;

CriterionResult run_criterion(int id, const AcceptanceOptions& opt = {});
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt = {});

/** "criterion N PASS|FAIL name: detail" */
std::string format_result(const CriterionResult& r, bool timing = false);

}  // namespace slitmod
