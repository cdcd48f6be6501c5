#include "divergence/fractions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace divergence::fractions {

namespace {

// tails compared as reduced rationals per coordinate
using RatKey = std::vector<std::pair<i64, i64>>;

RatKey tail_key(std::span<const i64> p, i64 q) {
    RatKey k;
    for (i64 v : p) {
        i64 g = std::gcd(v, q);
        k.emplace_back(v / g, q / g);
    }
    return k;
}

bool tail_parity_ok(std::span<const i64> tail, i64 q) {
    i64 r = q % 4;
    for (i64 v : tail) {
        i64 par = mod_floor(v, 2);
        if (r == 0 && par != 0) return false;
        if (r == 2 && par != 1) return false;
    }
    return true;
}

}  // namespace

double separation_constant(int n) { return std::ldexp(1.0, -(n + 4)); }

i64 totient(i64 q) {
    require(q >= 1, "q>=1");
    i64 r = q;
    for (i64 p = 2; p * p <= q; ++p) {
        if (q % p) continue;
        while (q % p == 0) q /= p;
        r -= r / p;
    }
    if (q > 1) r -= r / q;
    return r;
}

bool is_admissible(std::span<const i64> p, i64 q) {
    if (q < 1 || p.empty()) return false;
    if (std::gcd(mod_floor(p[0], q), q) != 1) return false;
    return tail_parity_ok(p.subspan(1), q);
}

double admissible_count(int n, i64 Q) {
    double total = 0;
    for (i64 q = 1; q <= Q; ++q) {
        double per = (q % 2 == 1) ? double(q) : double(q / 2);
        total += double(totient(q)) * std::pow(per, n - 1);
    }
    return total;
}

FractionFamily enumerate_admissible(int n, i64 Q, std::size_t cap) {
    require(n >= 2, "n>=2");
    require(Q >= 1, "Q>=1");
    if (admissible_count(n, Q) > double(cap))
        throw PreconditionError("admissible fraction count exceeds cap; lower Q or raise caps");
    FractionFamily fam{n, Q, {}};
    std::vector<i64> p(n);
    for (i64 q = 1; q <= Q; ++q) {
        // p1/q reduced, so each point has exactly one representation
        std::vector<i64> tails;
        for (i64 v = 0; v < q; ++v)
            if (tail_parity_ok(std::span<const i64>(&v, 1), q)) tails.push_back(v);
        std::vector<std::size_t> idx(n - 1, 0);
        for (i64 p1 = 0; p1 < q; ++p1) {
            if (std::gcd(p1, q) != 1) continue;
            std::fill(idx.begin(), idx.end(), 0);
            while (true) {
                p[0] = p1;
                for (int j = 0; j < n - 1; ++j) p[j + 1] = tails[idx[j]];
                fam.items.push_back({p, q});
                int j = n - 2;
                while (j >= 0 && ++idx[j] == tails.size()) idx[j--] = 0;
                if (j < 0) break;
            }
        }
    }
    return fam;
}

double dirichlet_radius(int n, i64 Q, i64 q) {
    return std::pow(2.0, double(n + 1) / (n - 1)) / (double(q) * std::pow(double(Q), 1.0 / (n - 1)));
}

FractionTail dirichlet_approximate(std::span<const double> y, i64 Q) {
    const int n = int(y.size()) + 1;
    require(n >= 2, "tail dimension >= 1");
    require(Q >= (i64(1) << (n + 2)), "Q >= 2^(n+2)");
    for (double v : y) require(v >= 0.0 && v <= 1.0, "y in [0,1]^(n-1)");
    const double Q4 = double(Q) / 4.0;
    const double scale = std::pow(Q4, 1.0 / (n - 1));
    const i64 qmax = Q / 4;
    for (i64 qp = 1; qp <= qmax; ++qp) {
        std::vector<i64> pp;
        bool ok = true;
        for (double v : y) {
            i64 c = std::llround(2.0 * v * double(qp));
            if (std::abs(2.0 * v - double(c) / double(qp)) > 1.0 / (double(qp) * scale) * (1 + 1e-12)) {
                ok = false;
                break;
            }
            pp.push_back(c);
        }
        if (!ok) continue;
        // p'/q' approximates 2y, so 2p'/(4q') approximates y
        FractionTail t{{}, 4 * qp};
        for (i64 c : pp) t.p.push_back(2 * c);
        return t;
    }
    throw InvariantViolation("Dirichlet search found no denominator");
}

double min_tail_separation(const std::vector<FractionTail>& tails) {
    std::set<RatKey> seen;
    std::vector<std::vector<double>> pts;
    for (const auto& t : tails) {
        if (!seen.insert(tail_key(t.p, t.q)).second) continue;
        std::vector<double> v;
        for (i64 x : t.p) v.push_back(double(x) / double(t.q));
        pts.push_back(std::move(v));
    }
    double best = std::numeric_limits<double>::infinity();
    if (pts.size() < 2) return best;
    std::sort(pts.begin(), pts.end());
    // sweep on the first coordinate
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double dx = pts[j][0] - pts[i][0];
            if (dx >= best) break;
            double d2 = 0;
            for (std::size_t c = 0; c < pts[i].size(); ++c) d2 += (pts[j][c] - pts[i][c]) * (pts[j][c] - pts[i][c]);
            best = std::min(best, std::sqrt(d2));
        }
    }
    return best;
}

namespace {

// exists q' <= qlim, p' with |2y - p'/q'| <= 1/(q' (Q/4)^{1/(n-1)}) in every coordinate
bool approximable(std::span<const i64> p, i64 q, i64 qlim, double scale) {
    for (i64 qp = 1; qp <= qlim; ++qp) {
        bool all = true;
        for (i64 v : p) {
            // |2v q' - p' q| <= q / scale
            i128 num = 2 * i128(v) * qp;
            i64 c = i64((num + q / 2) / q);
            double best = std::numeric_limits<double>::infinity();
            for (i64 cc = c - 1; cc <= c + 1; ++cc)
                best = std::min(best, std::abs(double(num - i128(cc) * q)));
            if (best > double(q) / scale * (1 + 1e-12)) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

std::vector<FractionTail> tails_of(const std::vector<AdmissibleFraction>& items) {
    std::set<std::pair<i64, std::vector<i64>>> seen;
    std::vector<FractionTail> out;
    for (const auto& f : items) {
        std::vector<i64> t(f.p.begin() + 1, f.p.end());
        if (seen.insert({f.q, t}).second) out.push_back({t, f.q});
    }
    return out;
}

}  // namespace

SelectionResult select_separated(const FractionFamily& family, double epsilon) {
    require(!family.items.empty(), "family nonempty");
    require(epsilon > 0.0 && epsilon < 1.0, "0 < epsilon < 1");
    const int n = family.n;
    const i64 Q = family.max_denominator;
    SelectionResult res;
    res.epsilon = epsilon;
    res.stages.family = family.items.size();
    const double target = std::pow(double(Q), -epsilon) * double(family.items.size());

    if (n == 2 || family.items.size() == 1 || Q < (i64(1) << (n + 2))) {
        res.kept = family.items;
        res.stages.kept = res.kept.size();
        res.separation = min_tail_separation(tails_of(res.kept));
        res.stages.kept_tails = tails_of(res.kept).size();
    } else {
        res.pipeline_applied = true;
        std::vector<AdmissibleFraction> a1;
        for (const auto& f : family.items)
            if (f.q % 4 == 0) a1.push_back(f);
        res.stages.restricted = a1.size();
        res.restricted_ratio = double(a1.size()) / double(family.items.size());

        auto tails = tails_of(a1);
        res.stages.restricted_tails = tails.size();
        const double scale = std::pow(double(Q) / 4.0, 1.0 / (n - 1));
        const i64 qlim = Q >> (n + 2);
        std::vector<FractionTail> good;
        for (const auto& t : tails)
            if (!approximable(t.p, t.q, qlim, scale)) good.push_back(t);
        res.stages.desirable_tails = good.size();

        const double ell = std::pow(2.0, n + 2 + 2.0 / (n - 1)) / std::pow(double(Q), double(n) / (n - 1));
        res.cube_side = ell;
        auto coords = [](const FractionTail& t) {
            std::vector<double> v;
            for (i64 x : t.p) v.push_back(double(x) / double(t.q));
            return v;
        };
        auto cell = [&](const std::vector<double>& v) {
            std::vector<i64> c;
            for (double x : v) c.push_back(i64(std::floor(x / ell)));
            return c;
        };
        std::sort(good.begin(), good.end(), [&](const FractionTail& x, const FractionTail& y) {
            auto cx = coords(x), cy = coords(y);
            auto gx = cell(cx), gy = cell(cy);
            if (gx != gy) return gx < gy;
            if (cx != cy) return cx < cy;
            return x.q < y.q;
        });
        // cubes of side ell are disjoint iff sup-distance >= ell
        std::map<std::vector<i64>, std::vector<std::vector<double>>> grid;
        std::set<std::pair<i64, std::vector<i64>>> kept_tails;
        for (const auto& t : good) {
            auto v = coords(t);
            auto c = cell(v);
            bool clash = false;
            std::vector<i64> d(n - 1, -1);
            while (!clash) {
                std::vector<i64> nb(c);
                for (int j = 0; j < n - 1; ++j) nb[j] += d[j];
                if (auto it = grid.find(nb); it != grid.end()) {
                    for (const auto& w : it->second) {
                        double m = 0;
                        for (int j = 0; j < n - 1; ++j) m = std::max(m, std::abs(w[j] - v[j]));
                        if (m < ell) clash = true;
                    }
                }
                int j = 0;
                while (j < n - 1 && ++d[j] > 1) d[j++] = -1;
                if (j == n - 1) break;
            }
            if (clash) continue;
            grid[c].push_back(v);
            kept_tails.insert({t.q, t.p});
        }
        res.stages.kept_tails = kept_tails.size();
        for (const auto& f : a1) {
            std::vector<i64> t(f.p.begin() + 1, f.p.end());
            if (kept_tails.count({f.q, t})) res.kept.push_back(f);
        }
        res.stages.kept = res.kept.size();
        res.separation = min_tail_separation(tails_of(res.kept));

        if (double(res.kept.size()) < target) {
            std::string stage;
            if (double(res.stages.restricted) < target)
                stage = "stage 1 (q = 0 mod 4 restriction)";
            else if (double(res.stages.desirable_tails) * double(res.stages.restricted) /
                         double(std::max<std::size_t>(1, res.stages.restricted_tails)) < target)
                stage = "stage 2 (undesirable tails)";
            else
                stage = "stage 3 (greedy cube selection)";
            res.failure = "kept " + std::to_string(res.kept.size()) + " < Q^-eps |family| = " +
                          std::to_string(target) + "; first collapse at " + stage;
        }
    }
    return res;
}

double undesirable_volume_sum(int n, i64 Q) {
    const i64 qlim = Q >> (n + 2);
    double total = 0;
    for (i64 qp = 1; qp <= qlim; ++qp) {
        // (2q')^{n-1} centres p'/(2q') in [0,1]^{n-1}, each box of side 1/(q' (Q/4)^{1/(n-1)})
        double side = 1.0 / (double(qp) * std::pow(double(Q) / 4.0, 1.0 / (n - 1)));
        total += std::pow(2.0 * qp, n - 1) * std::pow(side, n - 1);
    }
    return total;
}

double undesirable_volume_grid(int n, i64 Q, int cells) {
    const i64 qlim = Q >> (n + 2);
    const double scale = std::pow(double(Q) / 4.0, 1.0 / (n - 1));
    const int d = n - 1;
    std::vector<int> idx(d, 0);
    i64 hit = 0, total = 0;
    while (true) {
        bool in = false;
        for (i64 qp = 1; qp <= qlim && !in; ++qp) {
            bool all = true;
            for (int j = 0; j < d && all; ++j) {
                double y = (idx[j] + 0.5) / cells;
                double z = 2 * y * qp;
                all = std::abs(2 * y - std::round(z) / qp) <= 1.0 / (qp * scale);
            }
            in = all;
        }
        hit += in;
        ++total;
        int j = 0;
        while (j < d && ++idx[j] == cells) idx[j++] = 0;
        if (j == d) break;
    }
    return double(hit) / double(total);
}

}  // namespace divergence::fractions
