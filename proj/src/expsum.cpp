#include "divergence/expsum.hpp"

#include <cmath>
#include <vector>

namespace divergence::expsum {

namespace {

// roots of unity e(m/q), rebuilt when q changes; one cache per thread
const std::vector<cplx>& roots(i64 q) {
    thread_local i64 cached_q = 0;
    thread_local std::vector<cplx> table;
    if (cached_q != q) {
        table.resize(static_cast<std::size_t>(q));
        for (i64 m = 0; m < q; ++m) table[m] = unit(static_cast<double>(m) / static_cast<double>(q));
        cached_q = q;
    }
    return table;
}

constexpr i64 table_limit = i64(1) << 22;

SumResult finish(cplx v, i64 terms) { return {v, std::abs(v), terms}; }

// Neumaier compensated sum, per component
struct Accumulator {
    double s[2] = {0, 0}, c[2] = {0, 0};
    void add(cplx z) {
        double v[2] = {z.real(), z.imag()};
        for (int i = 0; i < 2; ++i) {
            double t = s[i] + v[i];
            c[i] += std::abs(s[i]) >= std::abs(v[i]) ? (s[i] - t) + v[i] : (v[i] - t) + s[i];
            s[i] = t;
        }
    }
    cplx value() const { return {s[0] + c[0], s[1] + c[1]}; }
};

}  // namespace

std::optional<std::string> phase_violation(const QuadraticPhase& p) {
    if (p.q < 1) return "q>=1";
    if (std::gcd(mod_floor(p.a, p.q), p.q) != 1) return "gcd(a,q)≠1";
    i64 r4 = p.q % 4;
    i64 bpar = mod_floor(p.b, 2);
    if (r4 == 0 && bpar != 0) return "b even when q≡0 (mod 4)";
    if (r4 == 2 && bpar != 1) return "b odd when q≡2 (mod 4)";
    return std::nullopt;
}

void require_phase(const QuadraticPhase& p) {
    if (auto v = phase_violation(p)) throw PreconditionError(*v);
}

i64 phase_residue(const QuadraticPhase& p, i64 k) {
    i128 kk = k;
    return mod_floor(i128(p.a) * kk * kk + i128(p.b) * kk, p.q);
}

cplx term(const QuadraticPhase& p, i64 k) {
    return unit(static_cast<double>(phase_residue(p, k)) / static_cast<double>(p.q));
}

double gauss_magnitude(i64 q) {
    return (q % 2 == 1 ? 1.0 : std::sqrt(2.0)) * std::sqrt(static_cast<double>(q));
}

SumResult gauss_sum(const QuadraticPhase& p) {
    require_phase(p);
    const i64 q = p.q;
    if (q > table_limit) return naive_sum(p, {0, q - 1});
    const auto& w = roots(q);
    i64 a = mod_floor(p.a, q), b = mod_floor(p.b, q);
    // f(r+1) - f(r) = a(2r+1) + b
    i64 r = 0, step = mod_floor(i128(a) + b, q), a2 = mod_floor(2 * i128(a), q);
    Accumulator acc;
    for (i64 k = 0; k < q; ++k) {
        acc.add(w[r]);
        r += step;
        if (r >= q) r -= q;
        step += a2;
        if (step >= q) step -= q;
    }
    return finish(acc.value(), q);
}

SumResult naive_sum(const QuadraticPhase& p, const IntegerInterval& I) {
    require(I.lo <= I.hi, "empty interval");
    Accumulator acc;
    for (i64 k = I.lo; k <= I.hi; ++k) acc.add(term(p, k));
    return finish(acc.value(), I.size());
}

std::pair<QuadraticPhase, IntegerInterval> shift_normalize(const QuadraticPhase& p,
                                                           const IntegerInterval& I) {
    require_phase(p);
    require(I.lo <= I.hi, "empty interval");
    QuadraticPhase out = p;
    out.b = mod_floor(i128(p.b) + 2 * i128(p.a) * I.lo, 2 * p.q);
    return {out, {0, I.hi - I.lo}};
}

SumResult weyl_sum(const QuadraticPhase& p, const IntegerInterval& I) {
    require_phase(p);
    require(I.lo <= I.hi, "empty interval");
    auto [sp, J] = shift_normalize(p, I);
    // f(k + L) = f'(k) + f(L)
    cplx pre = term(p, I.lo);
    const i64 len = J.size();
    cplx s = 0.0;
    if (len >= p.q) {
        i64 blocks = len / p.q;
        s = static_cast<double>(blocks) * gauss_sum(sp).value;
        i64 rest = len - blocks * p.q;
        if (rest > 0) s += naive_sum(sp, {0, rest - 1}).value;
    } else {
        s = naive_sum(sp, J).value;
    }
    return finish(pre * s, len);
}

double max_partial_sum(const QuadraticPhase& p, const IntegerInterval& I) {
    require(I.lo <= I.hi, "empty interval");
    std::vector<cplx> pre(1, 0.0);
    Accumulator acc;
    for (i64 k = I.lo; k <= I.hi; ++k) {
        acc.add(term(p, k));
        pre.push_back(acc.value());
    }
    double best = 0.0;
    for (std::size_t i = 0; i < pre.size(); ++i)
        for (std::size_t j = i + 1; j < pre.size(); ++j) best = std::max(best, std::abs(pre[j] - pre[i]));
    return best;
}

PerturbedSum perturbed_sum(const QuadraticPhase& p, const IntegerInterval& I,
                           std::span<const double> weights, Direction dir,
                           std::optional<double> partial_bound) {
    require_phase(p);
    require(I.lo <= I.hi, "empty interval");
    require(static_cast<i64>(weights.size()) == I.size(), "one weight per interval point");
    for (std::size_t i = 0; i < weights.size(); ++i) {
        require(weights[i] >= 0.0, "weights nonnegative");
        if (i == 0) continue;
        bool ok = dir == Direction::decreasing ? weights[i] <= weights[i - 1] : weights[i] >= weights[i - 1];
        require(ok, "weights monotone in the given direction");
    }
    PerturbedSum out;
    Accumulator acc;
    for (i64 k = I.lo; k <= I.hi; ++k) acc.add(weights[k - I.lo] * term(p, k));
    out.sum = finish(acc.value(), I.size());
    out.partial_bound = partial_bound ? *partial_bound : max_partial_sum(p, I);
    double w = dir == Direction::decreasing ? weights.front() : weights.back();
    out.abel_bound = out.partial_bound * w;
    if (out.sum.magnitude > out.abel_bound * (1 + 1e-12) + 1e-12)
        throw InvariantViolation("Abel bound violated: |sum| exceeds C times extreme weight");
    return out;
}

Envelope weyl_envelope(i64 q, i64 length) {
    double sq = std::sqrt(static_cast<double>(q));
    double rem = weyl_remainder_constant * std::sqrt(q * std::log(static_cast<double>(q)));
    double n = static_cast<double>(length);
    return {n / (2 * sq) - rem, std::sqrt(2.0) * n / sq + rem};
}

}  // namespace divergence::expsum
