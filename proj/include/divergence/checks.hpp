#pragma once

#include <optional>
#include <string>
#include <vector>

#include "divergence/dimension.hpp"
#include "divergence/evolution.hpp"
#include "divergence/io.hpp"

namespace divergence::checks {

struct CheckResult {
    int id = 0;
    std::string name;
    bool passed = false;
    double measured = 0;
    std::string detail;
    double seconds = 0;
    double time_limit = 0;
};

// outputs gathered while running checks, for CSV emission
struct Artifacts {
    std::vector<evolution::EvaluationSample> samples;
    std::vector<int> interference_flags;  // per sample: -1 not audited, 0/1 audit verdict
    std::optional<dimension::BoxCountCurve> curve;
    std::vector<std::pair<std::string, dimension::FrostmanAudit>> audits;
    std::optional<fractions::SelectionResult> selection;
};

struct CheckSpec {
    int id;
    std::string name;
    double time_limit;  // seconds
};
const std::vector<CheckSpec>& registry();

CheckResult run_check(int id, std::uint64_t seed, Artifacts* art = nullptr);

// lower-bound sweep shared by criteria 3 and 4 and the verify command
std::vector<evolution::EvaluationSample> lower_bound_sweep(int n, double a, double b, const std::vector<int>& ks,
                                                           double c, double c1, std::uint64_t seed,
                                                           std::size_t max_centres = 400);

std::string samples_csv(const std::vector<evolution::EvaluationSample>& s, const std::vector<int>& flags, int n);
std::string slabs_csv(const std::vector<construction::SlabGrid>& grids);
std::string boxcount_csv(const dimension::BoxCountCurve& c);
std::string frostman_csv(const std::vector<std::pair<std::string, dimension::FrostmanAudit>>& audits);
std::string fractions_csv(const std::vector<fractions::AdmissibleFraction>& f, int n);

}  // namespace divergence::checks
