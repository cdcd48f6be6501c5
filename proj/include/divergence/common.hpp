#pragma once

#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace divergence {

using cplx = std::complex<double>;
using i64 = std::int64_t;
using i128 = __int128;

// bad input: message names the violated condition
struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// a contract the code itself promised and broke
struct InvariantViolation : std::logic_error {
    using std::logic_error::logic_error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw PreconditionError(what);
}

inline i64 mod_floor(i128 x, i64 m) {
    i128 r = x % m;
    if (r < 0) r += m;
    return static_cast<i64>(r);
}

inline i64 gcd64(i64 a, i64 b) { return std::gcd(a, b); }

// e^{2 pi i turns}
inline cplx unit(double turns) {
    double a = 2.0 * std::numbers::pi * turns;
    return {std::cos(a), std::sin(a)};
}

// e^{2 pi i num/den}, num reduced exactly first
inline cplx unit_rational(i128 num, i64 den) {
    return unit(static_cast<double>(mod_floor(num, den)) / static_cast<double>(den));
}

}  // namespace divergence
