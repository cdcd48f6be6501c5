#pragma once

#include <string>
#include <vector>

#include "divergence/lattice.hpp"

namespace divergence::dimension {

using construction::Box;
using construction::SlabGrid;
using construction::SlabLattice;

struct BoxCountCurve {
    std::vector<double> scales;  // decreasing
    std::vector<i64> counts;
    double fitted_dim = 0;
    double residual = 0;
    bool degenerate = false;
};

struct Fit {
    double slope = 0;
    double residual = 0;
    bool degenerate = false;
};

inline constexpr std::size_t default_cell_cap = 200'000'000;

// cells of the r-grid anchored at box.lo that meet F
i64 box_count(const SlabLattice& f, double r, const Box& box, std::size_t cap = default_cell_cap);
// same over an explicit slab list (independent hash-set counter)
i64 box_count(const SlabGrid& g, double r, const Box& box);

Fit fit_dimension(const std::vector<double>& scales, const std::vector<i64>& counts);
// dyadic scales from the box side down to r_min
BoxCountCurve box_count_curve(const SlabLattice& f, const Box& box, double r_min);
BoxCountCurve box_count_curve(const SlabGrid& g, const Box& box, double r_min, double r_max);

struct BallSample {
    double r = 0, mu = 0, bound = 0, ratio = 0;
};

struct RegimeResult {
    std::string label;
    double r_lo = 0, r_hi = 0;  // [r_lo, r_hi)
    double max_ratio = 0;
    std::vector<BallSample> balls;
};

struct FrostmanAudit {
    double delta = 0, beta = 0, alpha = 0;
    std::vector<RegimeResult> regime_results;
    double global_C = 0;
    double mass = 0;                // |F cap Q(delta)|
    double normalization = 0;       // mass / (R^{alpha-n} delta^n)
    double density_lower_bound = 0; // delta^beta / C
    double slack = 0;               // R^{-(alpha-beta)} delta^{beta-n}
    bool passed(double C_allowed) const { return global_C <= C_allowed; }
};

inline constexpr double frostman_constant = 64.0;

FrostmanAudit frostman_audit_type1(const SlabLattice& f, double delta, double beta, std::size_t samples,
                                   std::uint64_t seed, bool enforce_slack = true);
FrostmanAudit frostman_audit_type2(const SlabLattice& f, double delta, double beta, double epsilon,
                                   std::size_t samples, std::uint64_t seed, bool enforce_slack = true);

// sum_{k0 <= k <= k1} R_k^{alpha - beta'}
double covering_tail_sum(double alpha, double beta_prime, int k0, int k1);

struct MonteCarlo {
    double estimate = 0, sigma = 0;
};
MonteCarlo monte_carlo_measure(const SlabLattice& f, const Box& box, std::size_t samples, std::uint64_t seed);

}  // namespace divergence::dimension
