#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "divergence/construction.hpp"

namespace divergence::construction {

// F_k as a bi-infinite periodic union of slabs, clipped to x1 >= h1 so that only
// slabs with positive centre survive. No slab enumeration; volumes are closed form.
class SlabLattice {
public:
    struct Level {
        i64 q = 1;
        std::vector<double> offsets;               // x1 centres mod P1, in [0, P1)
        std::vector<std::vector<double>> pattern;  // tail centres mod 1/D
    };
    struct Segment {
        double lo = 0, hi = 0;  // within [0, P1)
        int set = -1;           // index into point_sets, -1 when no slab is active
        std::uint64_t mask = 0;
    };

    SlabLattice(const CounterexampleParams& p, const fractions::FractionFamily& residues);
    static SlabLattice full(const CounterexampleParams& p);

    const CounterexampleParams& params() const { return params_; }
    int n() const { return params_.n; }
    double period_1() const { return P1_; }
    double period_tail() const { return Pt_; }
    double half_1() const { return h1_; }
    double half_tail() const { return ht_; }
    double cut() const { return h1_; }
    const std::vector<Level>& levels() const { return levels_; }
    const std::vector<Segment>& segments() const { return segments_; }
    const std::vector<std::vector<std::vector<double>>>& point_sets() const { return point_sets_; }
    bool tails_disjoint() const { return tails_disjoint_; }

    // Lebesgue measure of box cap F
    double measure(const Box& b) const;
    bool contains(std::span<const double> x) const;

    // a slab centre inside the box, optionally moved uniformly within its slab
    std::vector<double> sample_point(std::mt19937_64& rng, const Box& box, bool inside_slab) const;

private:
    double tail_measure(int set, const Box& b) const;

    CounterexampleParams params_;
    double P1_ = 0, Pt_ = 0, h1_ = 0, ht_ = 0;
    std::vector<Level> levels_;
    std::vector<Segment> segments_;
    std::vector<std::vector<std::vector<double>>> point_sets_;
    bool tails_disjoint_ = true;
};

// measure of [lo, hi] cap union_m [a + mP, a + mP + w), 0 <= w <= P
double periodic_overlap(double lo, double hi, double a, double w, double P);

}  // namespace divergence::construction
