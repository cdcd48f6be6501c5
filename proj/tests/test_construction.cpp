#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "divergence/construction.hpp"
#include "divergence/lattice.hpp"

using namespace divergence;
using namespace divergence::construction;

namespace {

double box_slab_volume(const Slab& s, const Box& b) {
    double v = 1;
    for (std::size_t j = 0; j < s.center.size(); ++j) {
        double h = j == 0 ? s.half_1 : s.half_tail;
        double lo = std::max(b.lo[j], s.center[j] - h), hi = std::min(b.hi[j], s.center[j] + h);
        if (hi <= lo) return 0;
        v *= hi - lo;
    }
    return v;
}

const BumpProfile& bump() {
    static BumpProfile b = BumpProfile::smooth();
    return b;
}

}  // namespace

TEST_CASE("derive_params: planar Bourgain exponents") {
    auto p = derive_params(2, 1.0, 0.5, 12);
    CHECK(p.D_nominal == doctest::Approx(256.0));
    CHECK(p.D == 256);
    CHECK(p.Q_nominal == doctest::Approx(4.0));
    CHECK(p.Q == 4);
    CHECK(p.alpha == doctest::Approx(2.0));
    CHECK(p.s == doctest::Approx(1.0 / 3));
    CHECK(p.l_lo == 9);
    CHECK(p.l_hi == 15);
    CHECK(p.x1_period() == doctest::Approx(2.0 * 4096 / (256.0 * 256)));
    CHECK(p.restriction_a);
    CHECK(p.restriction_b);
}

TEST_CASE("derive_params: boundary and type I cases") {
    auto p = derive_params(2, 0.75, 0.5, 12);
    CHECK(p.alpha == doctest::Approx(1.75));
    CHECK(p.s == doctest::Approx(0.375));
    CHECK(p.s == doctest::Approx(1.0 / 3 + 1.0 / 24));

    auto t = derive_params(2, 0.6, 0.2, 12);
    CHECK(t.Q == 1);
    CHECK(t.Q_nominal == doctest::Approx(1.0));
    CHECK(t.exceptional_gap == (2 - 2 * t.s < t.alpha));
}

TEST_CASE("derive_params rejects bad inputs") {
    CHECK_THROWS_AS(derive_params(2, 0.5, 0.5, 12), PreconditionError);
    CHECK_THROWS_AS(derive_params(2, 1.2, 0.5, 12), PreconditionError);
    CHECK_THROWS_AS(derive_params(2, 1.0, 0.6, 12), PreconditionError);
    CHECK_THROWS_AS(derive_params(1, 1.0, 0.5, 12), PreconditionError);
    CHECK_THROWS_AS(derive_params(2, 1.0, 0.5, 1), PreconditionError);
    CHECK_NOTHROW(derive_params(2, 1.0, 0.5, 2));
}

TEST_CASE("alpha/s bijection") {
    auto top = alpha_s_bijection(2, 2.0);
    CHECK(top.a == doctest::Approx(1.0));
    CHECK(top.b == doctest::Approx(0.5));
    CHECK(top.s == doctest::Approx(2.0 / 6));
    auto mid = alpha_s_bijection(2, 1.75);
    CHECK(mid.a == doctest::Approx(0.75));
    CHECK(mid.b == doctest::Approx(0.5));
    CHECK(2 * mid.a - 1 == doctest::Approx(mid.b));
    CHECK_THROWS_AS(alpha_s_bijection(2, 1.0), PreconditionError);
    CHECK_THROWS_AS(alpha_s_bijection(2, 2.1), PreconditionError);

    std::mt19937_64 rng(1);
    for (int n = 2; n <= 5; ++n)
        for (int i = 0; i < 200; ++i) {
            double al = std::uniform_real_distribution<double>(n / 2.0 + 1e-6, n)(rng);
            auto bj = alpha_s_bijection(n, al);
            REQUIRE(alpha_from_ab(n, bj.a, bj.b) == doctest::Approx(al).epsilon(1e-12));
            REQUIRE(s_from_ab(n, bj.a, bj.b) == doctest::Approx(bj.s).epsilon(1e-12));
            REQUIRE(bj.b <= 0.5 + 1e-12);
            REQUIRE(bj.a <= 1 + 1e-12);
            REQUIRE(2 * bj.a >= 1 + bj.b - 1e-12);
        }
}

TEST_CASE("rounding D and Q moves alpha only slightly") {
    for (auto [n, a, b] : std::vector<std::tuple<int, double, double>>{{2, 1, 0.5}, {2, 0.75, 0.5}, {2, 0.6, 0.2}, {3, 0.8, 0.5}, {3, 1, 0.5}})
        for (int k = 12; k <= 40; k += 4) {
            auto p = derive_params(n, a, b, k);
            // floor on a small Q costs up to log(Qn/Q)/log R in the exponents
            double tol = p.Q_nominal >= 4 ? 0.05 : 0.25;
            REQUIRE(std::abs(p.alpha_effective() - p.alpha) < tol);
        }
}

TEST_CASE("slab grid: counts and geometry") {
    auto p = derive_params(2, 0.6, 0.2, 12);
    auto g = build_slab_grid(p, Box::cube(2, 0, 1));
    double target = std::pow(double(p.R), 0.8);
    MESSAGE("slabs " << g.slabs.size() << " vs R^0.8 = " << target);
    CHECK(double(g.slabs.size()) >= target / 4);
    CHECK(double(g.slabs.size()) <= target * 4);
    for (const auto& s : g.slabs) {
        REQUIRE(s.fraction.q == 1);
        double m = s.center[1] * p.D;
        REQUIRE(std::abs(m - std::round(m)) < 1e-9);
        REQUIRE(s.center[0] == doctest::Approx(s.t_value * p.R));
        REQUIRE(s.fraction.p[0] >= 1);
    }
    // same tail, distinct p1: only x1 differs
    std::map<double, std::set<double>> by_tail;
    for (const auto& s : g.slabs) by_tail[s.center[1]].insert(s.center[0]);
    for (const auto& [tail, xs] : by_tail) CHECK(xs.size() == by_tail.begin()->second.size());

    auto q = derive_params(2, 1.0, 0.5, 10, 1.0);
    auto gq = build_slab_grid(q, Box::cube(2, 0, 0.5));
    for (const auto& s : gq.slabs) {
        REQUIRE(fractions::is_admissible(s.fraction.p, s.fraction.q));
        REQUIRE(s.fraction.q <= q.Q);
        double t = 2.0 * s.fraction.p[0] / (double(q.D) * q.D * s.fraction.q);
        REQUIRE(s.t_value == doctest::Approx(t));
        REQUIRE(s.center[1] == doctest::Approx(double(s.fraction.p[1]) / (q.D * s.fraction.q)));
    }
    CHECK_THROWS_AS(build_slab_grid(q, Box::cube(2, 0, 1), nullptr, 10), PreconditionError);
}

TEST_CASE("bump profile") {
    const auto& b = bump();
    CHECK(b.value(0.0) == doctest::Approx(1.0).epsilon(1e-9));
    for (double x = -30; x <= 30; x += 0.37) {
        auto v = b.propagate(x, 0.0);
        REQUIRE(std::abs(v.imag()) < 1e-12);
        REQUIRE(v.real() >= -1e-12);
        REQUIRE(v.real() <= 1 + 1e-12);
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
        REQUIRE(std::abs(b.nodes()[i]) <= 1.0);
        REQUIRE(b.values()[i] >= 0.0);
    }
    double freq = b.l2_norm(), space = bump_l2_norm_spatial(b);
    MESSAGE("||phi|| frequency " << freq << " spatial " << space);
    CHECK(std::abs(freq - space) < 1e-6);
    CHECK(std::abs(b.propagate_checked(3.0, 0.7) - b.propagate(3.0, 0.7)) < 1e-6);

    auto pm = BumpProfile::point_mass();
    CHECK(std::abs(pm.propagate(17.0, 3.0) - cplx(1, 0)) < 1e-15);
}

TEST_CASE("datum norm") {
    auto sb = std::make_shared<const BumpProfile>(bump());
    const double nphi = sb->l2_norm();

    auto p = derive_params(2, 1.0, 0.5, 12);
    auto d = DatumSpec::from_params(p, sb);
    double pred = std::pow(double(p.R), -0.25) * std::sqrt(double(p.R) / p.D);
    double ratio = datum_l2_norm(d) / pred;
    MESSAGE("||f|| / (R^-1/4 (R/D)^1/2) = " << ratio);
    CHECK(ratio >= 0.5);
    CHECK(ratio <= 2.0);
    CHECK(datum_l2_norm(d) * d.weight == doctest::Approx(p.k * std::pow(double(p.R), -p.s)));

    auto p3 = derive_params(3, 1.0, 0.5, 12);
    auto p2 = p3;
    p2.n = 2;
    auto d3 = DatumSpec::from_params(p3, sb), d2 = DatumSpec::from_params(p2, sb);
    double L = double(p3.lattice_count());
    CHECK(datum_l2_norm(d3) / datum_l2_norm(d2) == doctest::Approx(std::sqrt(L) * nphi).epsilon(0.01));

    auto single = d;
    single.l_hi = single.l_lo;
    CHECK(datum_l2_norm(single) == doctest::Approx(std::pow(double(p.R), -0.25) * nphi * nphi).epsilon(1e-12));

    // tail factor in x space: phi(x) sum_l e(D l x), D = 4, l = 1..3
    DatumSpec small = d;
    small.D = 4;
    small.l_lo = 1;
    small.l_hi = 3;
    small.R = 16;
    const double h = 1.0 / 400;
    double acc = 0;
    for (double x = -25; x <= 25; x += h) {
        double ph = sb->value(x);
        cplx s = 0;
        for (int l = 1; l <= 3; ++l) s += std::polar(1.0, 2 * M_PI * 4 * l * x);
        acc += h * ph * ph * std::norm(s);
    }
    double oracle = std::pow(16.0, -0.25) * nphi * std::sqrt(acc);
    CHECK(datum_l2_norm(small) == doctest::Approx(oracle).epsilon(1e-5));
}

TEST_CASE("Sobolev bookkeeping") {
    double s = 1.0 / 3;
    auto eq = sobolev_partial_norm(1, 40, s, s);
    CHECK(eq.sum == doctest::Approx(40.0 * 41 / 2));
    CHECK_FALSE(eq.converges);
    for (std::size_t i = 1; i < eq.partial.size(); ++i) CHECK(eq.partial[i] > eq.partial[i - 1]);

    auto below = sobolev_partial_norm(1, 200, s, s - 0.1);
    CHECK(below.converges);
    CHECK(below.corrected_ratio == doctest::Approx(std::pow(2.0, -0.2)).epsilon(1e-12));
    CHECK(below.geometric_ratio == doctest::Approx(0.8705505633).epsilon(1e-9));
    // closed form of sum k x^k
    double x = std::pow(2.0, -0.2), closed = 0;
    for (int k = 1; k <= 200; ++k) closed += k * std::pow(x, k);
    CHECK(below.sum == doctest::Approx(closed).epsilon(1e-12));

    auto above = sobolev_partial_norm(1, 40, s, s + 0.1);
    CHECK_FALSE(above.converges);
    CHECK(above.tail_ratio > 1.0);
    CHECK_THROWS_AS(sobolev_partial_norm(5, 4, s, s), PreconditionError);
}

TEST_CASE("periodic lattice measure agrees with explicit slabs") {
    auto p = derive_params(2, 1.0, 0.5, 10, 1.0);
    auto lat = SlabLattice::full(p);
    auto grid = build_slab_grid(p, Box::cube(2, 0, 0.5));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 0.4);
    for (int i = 0; i < 40; ++i) {
        double x = u(rng), y = u(rng), w = std::uniform_real_distribution<double>(0.002, 0.1)(rng);
        Box b{{x, y}, {x + w, y + w}};
        double expl = 0;
        for (const auto& s : grid.slabs) expl += box_slab_volume(s, b);
        REQUIRE(lat.measure(b) == doctest::Approx(expl).epsilon(1e-9).scale(1e-15));
    }
    for (int i = 0; i < 20000; ++i) {
        std::vector<double> pt{u(rng), u(rng)};
        bool in = false;
        for (const auto& s : grid.slabs) in |= s.contains(pt);
        REQUIRE(lat.contains(pt) == in);
    }
    CHECK(lat.tails_disjoint());
}

TEST_CASE("periodic_overlap") {
    CHECK(periodic_overlap(0, 1, 0, 0.25, 1) == doctest::Approx(0.25));
    CHECK(periodic_overlap(0, 10, 0.5, 0.25, 1) == doctest::Approx(2.5));
    CHECK(periodic_overlap(0.1, 0.2, 0, 0.25, 1) == doctest::Approx(0.1));
    CHECK(periodic_overlap(-1.9, -1.8, 0.05, 0.1, 1) == doctest::Approx(0.05));
}
