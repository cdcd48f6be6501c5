#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "divergence/common.hpp"

namespace divergence::fractions {

// (p1/q, ..., pn/q); p[0] is p1
struct AdmissibleFraction {
    std::vector<i64> p;
    i64 q = 1;
    bool operator==(const AdmissibleFraction&) const = default;
};

struct FractionFamily {
    int n = 2;
    i64 max_denominator = 1;
    std::vector<AdmissibleFraction> items;
};

// tail numerators p2..pn over q
struct FractionTail {
    std::vector<i64> p;
    i64 q = 1;
};

struct StageCounts {
    std::size_t family = 0;
    std::size_t restricted = 0;       // q = 0 mod 4, even tails
    std::size_t restricted_tails = 0;
    std::size_t desirable_tails = 0;  // after dropping approximable tails
    std::size_t kept_tails = 0;       // after greedy cube selection
    std::size_t kept = 0;             // after re-attaching every p1
};

struct SelectionResult {
    std::vector<AdmissibleFraction> kept;
    double separation = std::numeric_limits<double>::infinity();
    double epsilon = 0.0;
    double cube_side = 0.0;
    bool pipeline_applied = false;
    StageCounts stages;
    double restricted_ratio = 0.0;    // |A1|/|A0|
    std::optional<std::string> failure;
};

inline constexpr std::size_t default_enumeration_cap = 20'000'000;

double separation_constant(int n);  // 2^-(n+4)
inline constexpr double count_constant = 0.25;

i64 totient(i64 q);
bool is_admissible(std::span<const i64> p, i64 q);

FractionFamily enumerate_admissible(int n, i64 Q, std::size_t cap = default_enumeration_cap);
// closed form of the family size, used by the overflow guard
double admissible_count(int n, i64 Q);

double dirichlet_radius(int n, i64 Q, i64 q);
FractionTail dirichlet_approximate(std::span<const double> y, i64 Q);

SelectionResult select_separated(const FractionFamily& family, double epsilon);

// min pairwise Euclidean distance between distinct tail values; +inf for fewer than two
double min_tail_separation(const std::vector<FractionTail>& tails);

// stage-2 bookkeeping: summed volume of the covering boxes, and a direct grid estimate of their union
double undesirable_volume_sum(int n, i64 Q);
double undesirable_volume_grid(int n, i64 Q, int cells_per_axis);

}  // namespace divergence::fractions
