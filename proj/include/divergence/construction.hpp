#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "divergence/bump.hpp"
#include "divergence/fractions.hpp"

namespace divergence::construction {

using fractions::AdmissibleFraction;

struct CounterexampleParams {
    int n = 2;
    double a = 1.0, b = 0.5;
    int k = 8;
    i64 R = 256;
    i64 D = 2, Q = 1;
    double D_nominal = 0, Q_nominal = 0;
    double s = 0, alpha = 0;
    double c = 0.1, c1 = 0.01, c0 = 0.001;
    i64 l_lo = 1, l_hi = 1;  // lattice R/(2D) < l < R/D

    // recorded condition checks
    bool separation_ok = false;   // R/(DQ) >= 10 sqrt(ln Q)
    bool restriction_a = false;   // R^-a >= R^-1
    bool restriction_b = false;   // R^-b >= R^-1/2
    bool exceptional_gap = false; // n - 2s < alpha

    double halfwidth_1() const;     // c R^{-1/2} / 2
    double halfwidth_tail() const;  // c R^{-1} / 2
    double x1_period() const;       // 2R/D^2
    double tail_period() const;     // 1/D
    i64 lattice_count() const { return l_hi - l_lo + 1; }
    // alpha re-derived from the rounded D, Q
    double alpha_effective() const;
};

struct Bijection {
    double a = 0, b = 0, s = 0;
};

double s_from_ab(int n, double a, double b);
double s_from_alpha(int n, double alpha);
double alpha_from_ab(int n, double a, double b);

CounterexampleParams derive_params(int n, double a, double b, int k, double c = 0.1, double c1 = 0.01);
Bijection alpha_s_bijection(int n, double alpha);

struct Box {
    std::vector<double> lo, hi;
    static Box cube(int n, double lo, double hi) { return {std::vector<double>(n, lo), std::vector<double>(n, hi)}; }
    int dim() const { return int(lo.size()); }
    double volume() const;
};

struct Slab {
    std::vector<double> center;
    double half_1 = 0, half_tail = 0;
    AdmissibleFraction fraction;
    double t_value = 0;
    bool contains(std::span<const double> x) const;
};

struct SlabGrid {
    CounterexampleParams params;
    Box box;
    std::vector<Slab> slabs;
    std::vector<double> cell;  // periodic unit cell [0, 2R/D^2] x [0, 1/D]^{n-1}
};

inline constexpr std::size_t default_slab_cap = 5'000'000;

// slabs with p1 >= 1 meeting the box; residues restricts to a fraction family (mod q)
SlabGrid build_slab_grid(const CounterexampleParams& p, const Box& box,
                         const fractions::FractionFamily* residues = nullptr,
                         std::size_t cap = default_slab_cap);

Slab make_slab(const CounterexampleParams& p, const AdmissibleFraction& f);

struct DatumSpec {
    int n = 2;
    i64 R = 1, D = 2;
    i64 l_lo = 1, l_hi = 1;
    std::shared_ptr<const BumpProfile> bump;
    double weight = 1.0;
    int k = 0;

    static DatumSpec from_params(const CounterexampleParams& p, std::shared_ptr<const BumpProfile> bump);
};

double datum_l2_norm(const DatumSpec& d);

struct SobolevSeries {
    std::vector<double> terms;   // k R_k^{2(s'-s)}
    std::vector<double> partial; // running sums
    double sum = 0;
    double tail_ratio = 0;       // t_{k1}/t_{k1-1}
    double corrected_ratio = 0;  // same, with the factor k removed
    double geometric_ratio = 0;  // 2^{2(s'-s)}
    bool converges = false;
};

SobolevSeries sobolev_partial_norm(int k0, int k1, double s, double s_prime);

}  // namespace divergence::construction
