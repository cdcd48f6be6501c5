#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "divergence/fractions.hpp"

using namespace divergence;
using namespace divergence::fractions;

namespace {

std::vector<FractionTail> tails(const std::vector<AdmissibleFraction>& v) {
    std::vector<FractionTail> out;
    for (const auto& f : v) out.push_back({std::vector<i64>(f.p.begin() + 1, f.p.end()), f.q});
    return out;
}

double brute_separation(const std::vector<AdmissibleFraction>& v) {
    std::set<std::vector<long double>> pts;
    for (const auto& f : v) {
        std::vector<long double> x;
        for (std::size_t j = 1; j < f.p.size(); ++j) x.push_back((long double)f.p[j] / f.q);
        pts.insert(x);
    }
    std::vector<std::vector<long double>> p(pts.begin(), pts.end());
    double best = INFINITY;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j) {
            long double d = 0;
            for (std::size_t c = 0; c < p[i].size(); ++c) d += (p[i][c] - p[j][c]) * (p[i][c] - p[j][c]);
            if (d > 1e-24L) best = std::min(best, double(std::sqrt(d)));
        }
    return best;
}

}  // namespace

TEST_CASE("is_admissible examples") {
    CHECK(is_admissible(std::vector<i64>{1, 0, 0}, 1));
    CHECK(is_admissible(std::vector<i64>{1, 2, 2}, 4));
    CHECK_FALSE(is_admissible(std::vector<i64>{1, 1, 2}, 4));
    CHECK_FALSE(is_admissible(std::vector<i64>{2, 1, 1}, 4));
    CHECK(is_admissible(std::vector<i64>{1, 1}, 2));
    CHECK_FALSE(is_admissible(std::vector<i64>{1, 0}, 2));
    CHECK(is_admissible(std::vector<i64>{2, 5, 7}, 9));
}

TEST_CASE("totient") {
    CHECK(totient(1) == 1);
    CHECK(totient(12) == 4);
    for (i64 q = 1; q <= 500; ++q) {
        i64 c = 0;
        for (i64 a = 1; a <= q; ++a) c += std::gcd(a, q) == 1;
        REQUIRE(totient(q) == c);
    }
    double lo = INFINITY;
    for (i64 q = 1; q <= 10000; ++q) lo = std::min(lo, totient(q) / std::pow(double(q), 0.8));
    MESSAGE("min phi(q)/q^0.8 over q <= 1e4: " << lo);
    CHECK(lo > 0.1);
}

TEST_CASE("enumerate_admissible small cases") {
    auto f1 = enumerate_admissible(2, 1);
    REQUIRE(f1.items.size() == 1);
    CHECK(f1.items[0].q == 1);
    CHECK(f1.items[0].p == std::vector<i64>{0, 0});

    auto f2 = enumerate_admissible(2, 2);
    bool half_half = false, half_zero = false;
    for (const auto& f : f2.items) {
        if (f.q == 2 && f.p == std::vector<i64>{1, 1}) half_half = true;
        if (f.q == 2 && f.p == std::vector<i64>{1, 0}) half_zero = true;
    }
    CHECK(half_half);
    CHECK_FALSE(half_zero);
}

TEST_CASE("enumerate_admissible: admissible, unique, counted, Q^{n+1} growth") {
    for (int n : {2, 3}) {
        auto fam = enumerate_admissible(n, 24);
        std::set<std::vector<std::pair<i64, i64>>> values;
        for (const auto& f : fam.items) {
            REQUIRE(is_admissible(f.p, f.q));
            REQUIRE(f.q <= 24);
            std::vector<std::pair<i64, i64>> key;
            for (i64 v : f.p) key.emplace_back(v / std::gcd(v, f.q), f.q / std::gcd(v, f.q));
            values.insert(key);
            for (i64 v : f.p) REQUIRE((v >= 0 && v < f.q));
        }
        CHECK(values.size() == fam.items.size());
        CHECK(double(fam.items.size()) == admissible_count(n, 24));
    }
    std::vector<double> x, y;
    for (i64 Q : {8, 16, 32, 64}) {
        x.push_back(std::log(double(Q)));
        y.push_back(std::log(double(enumerate_admissible(2, Q).items.size())));
    }
    double mx = 0, my = 0;
    for (int i = 0; i < 4; ++i) mx += x[i] / 4, my += y[i] / 4;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 4; ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    MESSAGE("count exponent " << sxy / sxx);
    CHECK(sxy / sxx == doctest::Approx(3.0).epsilon(0.1));
    CHECK_THROWS_AS(enumerate_admissible(3, 64, 1000), PreconditionError);
}

TEST_CASE("dirichlet_approximate examples") {
    std::vector<double> zero{0.0};
    auto t0 = dirichlet_approximate(zero, 64);
    CHECK(t0.q == 4);
    CHECK(t0.p == std::vector<i64>{0});

    std::vector<double> third{1.0 / 3.0};
    auto t = dirichlet_approximate(third, 100);
    CHECK(t.q == 12);
    CHECK(t.p == std::vector<i64>{4});
    // exhaustive oracle: smallest q' <= 25 with |2/3 - p'/q'| <= 1/(25 q')
    i64 best = 0;
    for (i64 qp = 1; qp <= 25 && !best; ++qp)
        for (i64 pp = 0; pp <= 2 * qp; ++pp)
            if (std::abs(2.0 / 3 - double(pp) / qp) <= 1.0 / (25.0 * qp)) best = qp;
    CHECK(t.q == 4 * best);
    CHECK(std::abs(1.0 / 3 - double(t.p[0]) / t.q) <= 1.0 / (t.q * 25.0));

    std::vector<double> y3{std::sqrt(2.0) - 1, std::sqrt(3.0) - 1};
    auto t3 = dirichlet_approximate(y3, 256);
    CHECK(t3.q % 4 == 0);
    CHECK(t3.q <= 256);
    for (int j = 0; j < 2; ++j) {
        CHECK(t3.p[j] % 2 == 0);
        CHECK(std::abs(y3[j] - double(t3.p[j]) / t3.q) <= 8.0 / (t3.q * 8.0));
    }
    CHECK_THROWS_AS(dirichlet_approximate(y3, 16), PreconditionError);
}

TEST_CASE("dirichlet error bound on random targets") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (auto [n, Q] : std::vector<std::pair<int, i64>>{{2, 16}, {2, 100}, {3, 32}, {3, 256}, {4, 64}}) {
        for (int i = 0; i < 1000; ++i) {
            std::vector<double> y(n - 1);
            for (double& v : y) v = u(rng);
            auto t = dirichlet_approximate(y, Q);
            REQUIRE(t.q % 4 == 0);
            REQUIRE(t.q <= Q);
            for (int j = 0; j < n - 1; ++j) {
                REQUIRE(t.p[j] % 2 == 0);
                REQUIRE(std::abs(y[j] - double(t.p[j]) / t.q) <= dirichlet_radius(n, Q, t.q) * (1 + 1e-12));
            }
        }
    }
}

TEST_CASE("select_separated degenerate and planar families") {
    FractionFamily one{3, 40, {{{1, 0, 0}, 1}}};
    auto s = select_separated(one, 0.1);
    CHECK(s.kept.size() == 1);
    CHECK(std::isinf(s.separation));

    auto fam = enumerate_admissible(2, 30);
    auto s2 = select_separated(fam, 0.1);
    CHECK_FALSE(s2.pipeline_applied);
    CHECK(s2.kept.size() == fam.items.size());
    CHECK(s2.separation == doctest::Approx(brute_separation(fam.items)).epsilon(1e-12));
    CHECK(s2.separation >= separation_constant(2) * std::pow(30.0, -2.0));
    CHECK_FALSE(s2.failure);
    CHECK_THROWS_AS(select_separated(FractionFamily{2, 3, {}}, 0.1), PreconditionError);
    CHECK_THROWS_AS(select_separated(fam, 1.5), PreconditionError);
}

TEST_CASE("select_separated pipeline at n=3, Q=32") {
    auto fam = enumerate_admissible(3, 32);
    auto s = select_separated(fam, 0.1);
    CHECK(s.pipeline_applied);
    CHECK(s.stages.family == 127054);
    CHECK(s.stages.restricted == 9128);
    MESSAGE("|A1|/|A0| = " << s.restricted_ratio << ", tails " << s.stages.restricted_tails << " -> "
                           << s.stages.desirable_tails << " -> " << s.stages.kept_tails << ", kept " << s.kept.size());
    for (const auto& f : s.kept) {
        REQUIRE(f.q % 4 == 0);
        REQUIRE(is_admissible(f.p, f.q));
    }
    // every kept tail carries all phi(q) numerators p1
    std::map<std::pair<i64, std::vector<i64>>, i64> per;
    for (const auto& f : s.kept) per[{f.q, {f.p.begin() + 1, f.p.end()}}]++;
    for (const auto& [key, c] : per) CHECK(c == totient(key.first));
    double brute = brute_separation(s.kept);
    CHECK(s.separation == doctest::Approx(brute).epsilon(1e-12));
    CHECK(s.separation >= separation_constant(3) * std::pow(32.0, -1.5));
    CHECK(s.separation >= s.cube_side * (1 - 1e-12));
    // count invariant is not met here: stage 1 alone keeps 7% of the family
    REQUIRE(s.failure);
    CHECK(s.failure->find("stage 1") != std::string::npos);
}

TEST_CASE("undesirable points occupy at most half the tail cube") {
    for (auto [n, Q] : std::vector<std::pair<int, i64>>{{3, 32}, {3, 64}, {3, 100}, {4, 128}}) {
        double sum = undesirable_volume_sum(n, Q);
        CHECK(sum <= 0.5 + 1e-12);
        if (Q % (i64(1) << (n + 2)) == 0) CHECK(sum == doctest::Approx(0.5).epsilon(1e-12));
        double grid = undesirable_volume_grid(n, Q, n == 3 ? 400 : 60);
        MESSAGE("n=" << n << " Q=" << Q << " summed " << sum << ", union on grid " << grid);
        CHECK(grid <= sum + 0.02);
    }
}
