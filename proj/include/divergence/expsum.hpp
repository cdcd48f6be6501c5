#pragma once

#include <optional>
#include <span>
#include <utility>

#include "divergence/common.hpp"

namespace divergence::expsum {

// f(r) = (a r^2 + b r)/q
struct QuadraticPhase {
    i64 a = 1;
    i64 b = 0;
    i64 q = 1;
};

struct IntegerInterval {
    i64 lo = 0;
    i64 hi = 0;  // inclusive
    i64 size() const { return hi - lo + 1; }
};

struct SumResult {
    cplx value{0.0, 0.0};
    double magnitude = 0.0;
    i64 terms = 0;
};

enum class Direction { increasing, decreasing };

struct PerturbedSum {
    SumResult sum;
    double partial_bound = 0.0;  // sup over sub-intervals of |sum of phase terms|
    double abel_bound = 0.0;
};

// empty when admissible, else the name of the violated condition
std::optional<std::string> phase_violation(const QuadraticPhase& p);
void require_phase(const QuadraticPhase& p);

// (a k^2 + b k) mod q, exact
i64 phase_residue(const QuadraticPhase& p, i64 k);
cplx term(const QuadraticPhase& p, i64 k);

// c_q sqrt(q)
double gauss_magnitude(i64 q);

SumResult gauss_sum(const QuadraticPhase& p);
SumResult weyl_sum(const QuadraticPhase& p, const IntegerInterval& I);
SumResult naive_sum(const QuadraticPhase& p, const IntegerInterval& I);

std::pair<QuadraticPhase, IntegerInterval> shift_normalize(const QuadraticPhase& p,
                                                           const IntegerInterval& I);

// max over all sub-intervals J of I, O(|I|^2)
double max_partial_sum(const QuadraticPhase& p, const IntegerInterval& I);

PerturbedSum perturbed_sum(const QuadraticPhase& p, const IntegerInterval& I,
                           std::span<const double> weights, Direction dir,
                           std::optional<double> partial_bound = std::nullopt);

// fixed envelope constant for the incomplete remainder
inline constexpr double weyl_remainder_constant = 3.0;

struct Envelope {
    double lower = 0.0;
    double upper = 0.0;
};
Envelope weyl_envelope(i64 q, i64 length);

}  // namespace divergence::expsum
