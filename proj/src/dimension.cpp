#include "divergence/dimension.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <unordered_set>

namespace divergence::dimension {

namespace {

struct Axis {
    double lo = 0, hi = 0, r = 1;
    i64 cells = 1;
    // cells meeting [a, b]; false when disjoint
    bool range(double a, double b, i64& i0, i64& i1) const {
        if (b < lo || a > hi) return false;
        i0 = i64(std::floor((std::max(a, lo) - lo) / r));
        i1 = std::min(cells - 1, i64(std::floor((std::min(b, hi) - lo) / r)));
        i0 = std::min(i0, cells - 1);
        return i0 <= i1;
    }
};

std::vector<Axis> make_axes(double r, const Box& box) {
    std::vector<Axis> ax;
    for (int j = 0; j < box.dim(); ++j) {
        Axis a{box.lo[j], box.hi[j], r, 0};
        a.cells = std::max<i64>(1, i64(std::ceil((box.hi[j] - box.lo[j]) / r - 1e-9)));
        ax.push_back(a);
    }
    return ax;
}

void check_scale(double r, double R, const Box& box) {
    double side = 0;
    for (int j = 0; j < box.dim(); ++j) side = std::max(side, box.hi[j] - box.lo[j]);
    require(r >= 1.0 / R * (1 - 1e-12), "scale r >= R^-1 (slabs unresolved below)");
    require(r <= side * (1 + 1e-12), "scale r <= box side");
}

}  // namespace

i64 box_count(const SlabLattice& f, double r, const Box& box, std::size_t cap) {
    const auto& p = f.params();
    require(box.dim() == p.n, "box dimension matches n");
    check_scale(r, double(p.R), box);
    auto ax = make_axes(r, box);
    require(double(ax[0].cells) <= double(cap), "x1 cell count exceeds cap");
    const double P1 = f.period_1(), Pt = f.period_tail(), h1 = f.half_1(), ht = f.half_tail();
    const auto& levels = f.levels();

    std::vector<std::uint64_t> mask(ax[0].cells, 0);
    for (std::size_t li = 0; li < levels.size(); ++li) {
        for (double o : levels[li].offsets) {
            i64 m0 = i64(std::ceil((box.lo[0] - h1 - o) / P1)), m1 = i64(std::floor((box.hi[0] + h1 - o) / P1));
            for (i64 m = m0; m <= m1; ++m) {
                double c = o + double(m) * P1;
                if (c <= 0) continue;
                i64 a, b;
                if (!ax[0].range(c - h1, c + h1, a, b)) continue;
                for (i64 i = a; i <= b; ++i) mask[i] |= std::uint64_t(1) << li;
            }
        }
    }
    // tail cells per level, linearised
    std::vector<std::vector<i64>> cells(levels.size());
    double est = 0;
    for (const auto& lv : levels) {
        double per = double(lv.pattern.size());
        for (int j = 1; j < p.n; ++j) per *= ((box.hi[j] - box.lo[j]) / Pt + 2) * (2 * ht / r + 2);
        est += per;
    }
    require(est <= double(cap), "tail cell enumeration exceeds cap");
    for (std::size_t li = 0; li < levels.size(); ++li) {
        auto& out = cells[li];
        for (const auto& pt : levels[li].pattern) {
            std::vector<std::vector<std::pair<i64, i64>>> ranges(p.n - 1);
            bool empty = false;
            for (int j = 1; j < p.n && !empty; ++j) {
                i64 m0 = i64(std::ceil((box.lo[j] - ht - pt[j - 1]) / Pt));
                i64 m1 = i64(std::floor((box.hi[j] + ht - pt[j - 1]) / Pt));
                for (i64 m = m0; m <= m1; ++m) {
                    double c = pt[j - 1] + double(m) * Pt;
                    i64 a, b;
                    if (ax[j].range(c - ht, c + ht, a, b)) ranges[j - 1].emplace_back(a, b);
                }
                empty = ranges[j - 1].empty();
            }
            if (empty) continue;
            // product over axes of the union of ranges
            std::vector<std::vector<i64>> idx(p.n - 1);
            for (int j = 0; j < p.n - 1; ++j) {
                for (auto [a, b] : ranges[j])
                    for (i64 i = a; i <= b; ++i) idx[j].push_back(i);
                std::sort(idx[j].begin(), idx[j].end());
                idx[j].erase(std::unique(idx[j].begin(), idx[j].end()), idx[j].end());
            }
            std::vector<std::size_t> it(p.n - 1, 0);
            while (true) {
                i64 lin = 0;
                for (int j = 0; j < p.n - 1; ++j) lin = lin * ax[j + 1].cells + idx[j][it[j]];
                out.push_back(lin);
                int j = p.n - 2;
                while (j >= 0 && ++it[j] == idx[j].size()) it[j--] = 0;
                if (j < 0) break;
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    }
    std::map<std::uint64_t, i64> union_size;
    i64 total = 0;
    for (std::uint64_t m : mask) {
        if (!m) continue;
        auto it = union_size.find(m);
        if (it == union_size.end()) {
            std::vector<i64> u;
            for (std::size_t li = 0; li < levels.size(); ++li) {
                if (!(m >> li & 1)) continue;
                std::vector<i64> merged;
                std::set_union(u.begin(), u.end(), cells[li].begin(), cells[li].end(), std::back_inserter(merged));
                u.swap(merged);
            }
            it = union_size.emplace(m, i64(u.size())).first;
        }
        total += it->second;
    }
    return total;
}

i64 box_count(const SlabGrid& g, double r, const Box& box) {
    require(box.dim() == g.params.n, "box dimension matches n");
    check_scale(r, double(g.params.R), box);
    auto ax = make_axes(r, box);
    std::unordered_set<i64> seen;
    for (const auto& s : g.slabs) {
        std::vector<std::pair<i64, i64>> rg;
        bool ok = true;
        for (int j = 0; j < box.dim() && ok; ++j) {
            double h = j == 0 ? s.half_1 : s.half_tail;
            i64 a, b;
            ok = ax[j].range(s.center[j] - h, s.center[j] + h, a, b);
            rg.emplace_back(a, b);
        }
        if (!ok) continue;
        std::vector<i64> it;
        for (auto [a, b] : rg) it.push_back(a);
        while (true) {
            i64 lin = 0;
            for (int j = 0; j < box.dim(); ++j) lin = lin * ax[j].cells + it[j];
            seen.insert(lin);
            int j = box.dim() - 1;
            while (j >= 0 && ++it[j] > rg[j].second) it[j] = rg[j].first, --j;
            if (j < 0) break;
        }
    }
    return i64(seen.size());
}

Fit fit_dimension(const std::vector<double>& scales, const std::vector<i64>& counts) {
    require(scales.size() == counts.size(), "one count per scale");
    require(scales.size() >= 5, "at least 5 scales");
    Fit f;
    const std::size_t m = scales.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < m; ++i) {
        require(counts[i] > 0, "positive counts");
        xs.push_back(-std::log(scales[i]));
        ys.push_back(std::log(double(counts[i])));
    }
    for (std::size_t i = 0; i < m; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double den = m * sxx - sx * sx;
    f.degenerate = std::all_of(counts.begin(), counts.end(), [&](i64 c) { return c == counts[0]; }) || den <= 0;
    if (den <= 0) return f;
    f.slope = (m * sxy - sx * sy) / den;
    double icpt = (sy - f.slope * sx) / m, rss = 0;
    for (std::size_t i = 0; i < m; ++i) rss += std::pow(ys[i] - icpt - f.slope * xs[i], 2);
    f.residual = std::sqrt(rss / m);
    return f;
}

namespace {

template <class Counter>
BoxCountCurve curve_impl(Counter count, const Box& box, double r_min, double r_max) {
    BoxCountCurve c;
    for (double r = r_max; r >= r_min * (1 - 1e-12); r /= 2) {
        c.scales.push_back(r);
        c.counts.push_back(count(r));
        if (c.counts.size() > 1 && c.counts.back() < c.counts[c.counts.size() - 2])
            throw InvariantViolation("box counts decreased under refinement");
    }
    auto f = fit_dimension(c.scales, c.counts);
    c.fitted_dim = f.slope;
    c.residual = f.residual;
    c.degenerate = f.degenerate;
    (void)box;
    return c;
}

double box_side(const Box& box) {
    double s = 0;
    for (int j = 0; j < box.dim(); ++j) s = std::max(s, box.hi[j] - box.lo[j]);
    return s;
}

}  // namespace

BoxCountCurve box_count_curve(const SlabLattice& f, const Box& box, double r_min) {
    return curve_impl([&](double r) { return box_count(f, r, box); }, box, r_min, box_side(box));
}

BoxCountCurve box_count_curve(const SlabGrid& g, const Box& box, double r_min, double r_max) {
    return curve_impl([&](double r) { return box_count(g, r, box); }, box, r_min, r_max);
}

namespace {

FrostmanAudit audit(const SlabLattice& f, double delta, double beta, std::size_t samples, std::uint64_t seed,
                    const std::vector<std::pair<std::string, std::pair<double, double>>>& regimes,
                    bool enforce_slack, double norm_lo) {
    const auto& p = f.params();
    const int n = p.n;
    const double R = double(p.R);
    require(delta > 0 && delta <= 1, "0 < delta <= 1");
    require(samples >= 1, "samples >= 1");
    FrostmanAudit a;
    a.delta = delta;
    a.beta = beta;
    a.alpha = p.alpha;
    a.slack = std::pow(R, -(p.alpha - beta)) * std::pow(delta, beta - n);
    if (enforce_slack && !(a.slack < 0.1))
        throw PreconditionError("k too small for delta: R^-(alpha-beta) delta^(beta-n) = " + std::to_string(a.slack) +
                                " >= 1/10; use a larger k");
    Box qd = Box::cube(n, 0.0, delta);
    a.mass = f.measure(qd);
    a.normalization = a.mass / (std::pow(R, p.alpha - n) * std::pow(delta, n));
    if (a.normalization < norm_lo || a.normalization > 4.0)
        throw PreconditionError("normalisation |F cap Q| / R^(alpha-n) delta^n = " + std::to_string(a.normalization) +
                                " out of range; use a larger k");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& [label, range] : regimes) {
        RegimeResult rr;
        rr.label = label;
        rr.r_lo = range.first;
        rr.r_hi = range.second;
        if (rr.r_hi <= rr.r_lo) {
            a.regime_results.push_back(rr);
            continue;
        }
        for (std::size_t i = 0; i < samples; ++i) {
            double r = rr.r_lo * std::pow(rr.r_hi / rr.r_lo, u(rng));
            auto x = f.sample_point(rng, qd, i % 2 == 1);
            Box b;
            for (int j = 0; j < n; ++j) {
                b.lo.push_back(std::max(0.0, x[j] - r / 2));
                b.hi.push_back(std::min(delta, x[j] + r / 2));
            }
            BallSample s;
            s.r = r;
            s.mu = f.measure(b) / a.mass;
            s.bound = std::pow(r / delta, beta);
            s.ratio = s.mu / s.bound;
            rr.max_ratio = std::max(rr.max_ratio, s.ratio);
            rr.balls.push_back(s);
        }
        a.global_C = std::max(a.global_C, rr.max_ratio);
        a.regime_results.push_back(std::move(rr));
    }
    a.density_lower_bound = a.global_C > 0 ? std::pow(delta, beta) / a.global_C : 0;
    return a;
}

}  // namespace

FrostmanAudit frostman_audit_type1(const SlabLattice& f, double delta, double beta, std::size_t samples,
                                   std::uint64_t seed, bool enforce_slack) {
    const auto& p = f.params();
    require(std::abs(p.b - (2 * p.a - 1)) < 1e-9, "type I parameters (b = 2a - 1)");
    const double R = double(p.R);
    const double r1 = 1 / R, ra = std::pow(R, -p.a), rh = std::pow(R, -0.5), rb = std::pow(R, -p.b);
    return audit(f, delta, beta, samples, seed,
                 {{"r<R^-1", {r1 / 16, r1}},
                  {"R^-1<=r<R^-a", {r1, ra}},
                  {"R^-a<=r<R^-1/2", {ra, rh}},
                  {"R^-1/2<=r<R^-b", {rh, rb}},
                  {"R^-b<=r<delta", {rb, delta}}},
                 enforce_slack, 0.25);
}

FrostmanAudit frostman_audit_type2(const SlabLattice& f, double delta, double beta, double epsilon,
                                   std::size_t samples, std::uint64_t seed, bool enforce_slack) {
    const auto& p = f.params();
    require(std::abs(p.b - 0.5) < 1e-9, "type II parameters (b = 1/2)");
    require(epsilon > 0 && epsilon < 1, "0 < epsilon < 1");
    const double R = double(p.R);
    const double r1 = 1 / R, ra = std::pow(R, -p.a), rc = R / (double(p.D) * double(p.D));
    return audit(f, delta, beta, samples, seed,
                 {{"r<R^-1", {r1 / 16, r1}},
                  {"R^-1<=r<R^-a", {r1, ra}},
                  {"R^-a<=r<R/D^2", {ra, rc}},
                  {"R/D^2<=r<delta", {rc, delta}}},
                 enforce_slack, std::pow(R, -epsilon) / 4);
}

double covering_tail_sum(double alpha, double beta_prime, int k0, int k1) {
    double s = 0;
    for (int k = k0; k <= k1; ++k) s += std::exp2(k * (alpha - beta_prime));
    return s;
}

MonteCarlo monte_carlo_measure(const SlabLattice& f, const Box& box, std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uniform_real_distribution<double>> d;
    for (int j = 0; j < box.dim(); ++j) d.emplace_back(box.lo[j], box.hi[j]);
    std::vector<double> x(box.dim());
    std::size_t hit = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        for (int j = 0; j < box.dim(); ++j) x[j] = d[j](rng);
        hit += f.contains(x);
    }
    double p = double(hit) / double(samples), v = box.volume();
    return {v * p, v * std::sqrt(p * (1 - p) / double(samples))};
}

}  // namespace divergence::dimension
