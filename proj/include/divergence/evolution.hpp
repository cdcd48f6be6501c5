#pragma once

#include <memory>
#include <random>
#include <vector>

#include "divergence/construction.hpp"
#include "divergence/expsum.hpp"

namespace divergence::evolution {

using construction::AdmissibleFraction;
using construction::BumpProfile;
using construction::CounterexampleParams;
using construction::DatumSpec;

// x = slab centre of `fraction` at level (R, D), displaced by (delta1, eps)
struct EvaluationPoint {
    AdmissibleFraction fraction;
    i64 R = 1, D = 2;
    double delta1 = 0;
    std::vector<double> eps;

    static EvaluationPoint centre(const CounterexampleParams& p, const AdmissibleFraction& f);
    double t() const;
    std::vector<double> x() const;
    bool in_slab(double half_1, double half_tail) const;
};

struct TailFactor {
    cplx total{0, 0};
    cplx main{0, 0};
    cplx pert{0, 0};  // total - main
};

struct EvaluationSample {
    EvaluationPoint point;
    int k = 0;
    cplx value{0, 0};
    cplx f1_factor{0, 0};
    cplx tail_factor{0, 0};
    double main_mag = 0, pert_mag = 0;  // worst coordinate by |pert|/|main|
    double norm_f = 0;
    double predicted = 0;
    double ratio = 0;
};

// U f1 at (x1, t), datum at scale R
cplx evolve_f1(double x1, double t, i64 R, const BumpProfile& bump);
// same, with x1 given as a level point (exact rational phase)
cplx evolve_f1_at(const DatumSpec& d, const EvaluationPoint& pt);

// one tail coordinate j (1-based, j >= 1) of datum d at a point of possibly another level;
// main and pert only meaningful when d and pt share (R, D)
TailFactor evolve_tail(const DatumSpec& d, const EvaluationPoint& pt, int j);

// full value of U f_D (unnormalised)
cplx evolve_datum(const DatumSpec& d, const EvaluationPoint& pt);

inline constexpr double ratio_band = 4.0;

EvaluationSample evaluate_sample(const EvaluationPoint& pt, const CounterexampleParams& p,
                                 std::shared_ptr<const BumpProfile> bump, bool enforce_band = true);

struct DecayResult {
    double measured = 0;
    double bound = 0;
    double constant = 0;  // C_N
};
DecayResult packet_decay(double x, double t, int N, const BumpProfile& bump);

struct InterferenceRow {
    EvaluationPoint point;
    double star_mag = 0;
    std::vector<double> other_mag;  // per k_other
    double worst_fraction = 0;      // max_k other/star
};
struct InterferenceReport {
    int k_star = 0;
    std::vector<int> k_other;
    std::vector<InterferenceRow> rows;
    std::vector<double> measured_C;  // max |U h_other| R_other^{1/2}
    double worst_fraction = 0;
    double min_star_over_k = 0;      // min |U h_star| / k_star
    bool passed = false;
};
inline constexpr double interference_tolerance = 0.1;
inline constexpr double interference_constant = 8.0;
inline constexpr double star_floor = 0.25;  // |U h_star| >= star_floor * k_star

InterferenceReport interference_audit(int k_star, const std::vector<int>& k_other,
                                      const std::vector<CounterexampleParams>& levels,
                                      const std::vector<EvaluationPoint>& points,
                                      std::shared_ptr<const BumpProfile> bump);

struct Truncated {
    cplx value{0, 0};
    bool truncated = false;  // cube cuts part of the datum's spectrum
};
Truncated truncated_propagator(const DatumSpec& d, double N, const EvaluationPoint& pt);
// sum of weight * S_N f_{D_k}
Truncated truncated_series(const std::vector<DatumSpec>& series, double N, const EvaluationPoint& pt);

// ||U phi(., tau)||_2^2 by x-space quadrature
double spatial_energy(const BumpProfile& bump, double tau, double L = 40.0, int steps = 8000);

// centres of every (q, fraction) stratum in the box [c0,c1] x [0,c1]^{n-1}, plus seeded
// in-slab offsets
std::vector<EvaluationPoint> sampling_plan(const CounterexampleParams& p, double c0, double c1,
                                           int offsets_per_centre, std::uint64_t seed,
                                           std::size_t max_centres = 400);

}  // namespace divergence::evolution
