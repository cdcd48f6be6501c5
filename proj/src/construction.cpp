#include "divergence/construction.hpp"

#include <cmath>
#include <set>

namespace divergence::construction {

double CounterexampleParams::halfwidth_1() const { return c / std::sqrt(double(R)) / 2.0; }
double CounterexampleParams::halfwidth_tail() const { return c / double(R) / 2.0; }
double CounterexampleParams::x1_period() const { return 2.0 * double(R) / (double(D) * double(D)); }
double CounterexampleParams::tail_period() const { return 1.0 / double(D); }

double CounterexampleParams::alpha_effective() const {
    double lr = std::log(double(R));
    double d = std::log(double(D)) / lr, e = std::log(double(Q)) / lr;
    double ae = d + n * e / (n - 1);
    double be = 2 * ae - 1 - (n + 1) * e / (n - 1);
    return alpha_from_ab(n, ae, be);
}

double s_from_ab(int n, double a, double b) {
    return 0.25 + (n - 1) * (n - (n - 1) * a - b) / (2.0 * (n + 1));
}

double s_from_alpha(int n, double alpha) {
    return n / (2.0 * (n + 1)) + (n - 1) * (n - alpha) / (2.0 * (n + 1));
}

double alpha_from_ab(int n, double a, double b) { return 0.5 + (n - 1) * a + b; }

CounterexampleParams derive_params(int n, double a, double b, int k, double c, double c1) {
    constexpr double tol = 1e-12;
    require(n >= 2, "n>=2");
    require(a > 0 && a <= 1 + tol, "0 < a <= 1");
    require(b > 0 && b <= 0.5 + tol, "0 < b <= 1/2");
    require(2 * a >= 1 + b - tol, "2a >= 1+b");
    require(k >= 1 && k <= 60, "1 <= k <= 60");
    require(c > 0 && c1 > 0, "smallness constants positive");
    CounterexampleParams p;
    p.n = n;
    p.a = a;
    p.b = b;
    p.k = k;
    p.R = i64(1) << k;
    p.c = c;
    p.c1 = c1;
    p.c0 = c1 / 10.0;
    const double R = double(p.R);
    p.D_nominal = std::pow(R, (n - (n - 1) * a + n * b) / (n + 1));
    p.Q_nominal = std::pow(R, (n - 1) * (2 * a - b - 1) / (n + 1));
    p.D = std::max<i64>(2, std::llround(p.D_nominal));
    p.Q = std::max<i64>(1, i64(std::floor(p.Q_nominal + 1e-9)));
    p.l_lo = p.R / (2 * p.D) + 1;
    p.l_hi = (p.R - 1) / p.D;
    if (p.l_lo > p.l_hi)
        throw PreconditionError("lattice (R/(2D), R/D) is empty at k=" + std::to_string(k) + "; use a larger k");
    p.s = s_from_ab(n, a, b);
    p.alpha = alpha_from_ab(n, a, b);
    p.separation_ok = R / (double(p.D) * double(p.Q)) >= 10.0 * std::sqrt(std::log(double(p.Q)));
    p.restriction_a = a <= 1 + tol;
    p.restriction_b = b <= 0.5 + tol;
    p.exceptional_gap = n - 2 * p.s < p.alpha;
    return p;
}

Bijection alpha_s_bijection(int n, double alpha) {
    require(n >= 2, "n>=2");
    require(alpha > n / 2.0 && alpha <= n + 1e-12, "n/2 < alpha <= n");
    Bijection out;
    if (alpha <= (3.0 * n + 1) / 4.0) {
        out.a = (alpha + 0.5) / (n + 1);
        out.b = 2 * out.a - 1;
    } else {
        out.a = (alpha - 1) / (n - 1);
        out.b = 0.5;
    }
    out.s = s_from_alpha(n, alpha);
    return out;
}

double Box::volume() const {
    double v = 1;
    for (std::size_t j = 0; j < lo.size(); ++j) v *= hi[j] - lo[j];
    return v;
}

bool Slab::contains(std::span<const double> x) const {
    if (std::abs(x[0] - center[0]) > half_1) return false;
    for (std::size_t j = 1; j < center.size(); ++j)
        if (std::abs(x[j] - center[j]) > half_tail) return false;
    return true;
}

Slab make_slab(const CounterexampleParams& p, const AdmissibleFraction& f) {
    require(int(f.p.size()) == p.n, "fraction dimension matches n");
    require(fractions::is_admissible(f.p, f.q), "fraction admissible");
    require(f.q <= p.Q, "q <= Q");
    Slab s;
    const double D = double(p.D), q = double(f.q);
    s.t_value = 2.0 * double(f.p[0]) / (D * D * q);
    s.center.push_back(s.t_value * double(p.R));
    for (int j = 1; j < p.n; ++j) s.center.push_back(double(f.p[j]) / (D * q));
    s.half_1 = p.halfwidth_1();
    s.half_tail = p.halfwidth_tail();
    s.fraction = f;
    return s;
}

SlabGrid build_slab_grid(const CounterexampleParams& p, const Box& box,
                         const fractions::FractionFamily* residues, std::size_t cap) {
    require(box.dim() == p.n, "box dimension matches n");
    for (int j = 0; j < p.n; ++j) require(box.lo[j] >= 0 && box.hi[j] <= 1 && box.lo[j] < box.hi[j], "box inside [0,1]^n");
    SlabGrid g;
    g.params = p;
    g.box = box;
    g.cell.push_back(p.x1_period());
    for (int j = 1; j < p.n; ++j) g.cell.push_back(p.tail_period());

    std::set<std::pair<i64, std::vector<i64>>> allowed;
    if (residues) {
        for (const auto& f : residues->items) {
            std::vector<i64> r;
            for (i64 v : f.p) r.push_back(mod_floor(v, f.q));
            allowed.insert({f.q, r});
        }
    }
    const double h1 = p.halfwidth_1(), ht = p.halfwidth_tail();
    const double D = double(p.D), R = double(p.R);
    for (i64 q = 1; q <= p.Q; ++q) {
        double qd = double(q);
        i64 lo1 = std::max<i64>(1, i64(std::ceil((box.lo[0] - h1) * qd * D * D / (2 * R))));
        i64 hi1 = i64(std::floor((box.hi[0] + h1) * qd * D * D / (2 * R)));
        std::vector<i64> p1s;
        for (i64 v = lo1; v <= hi1; ++v)
            if (std::gcd(v, q) == 1) p1s.push_back(v);
        std::vector<std::vector<i64>> tails(p.n - 1);
        for (int j = 1; j < p.n; ++j) {
            i64 lo = i64(std::ceil((box.lo[j] - ht) * D * qd));
            i64 hi = i64(std::floor((box.hi[j] + ht) * D * qd));
            for (i64 v = lo; v <= hi; ++v) {
                i64 par = mod_floor(v, 2);
                if (q % 4 == 0 && par != 0) continue;
                if (q % 4 == 2 && par != 1) continue;
                tails[j - 1].push_back(v);
            }
        }
        double est = double(p1s.size());
        for (const auto& t : tails) est *= double(t.size());
        if (double(g.slabs.size()) + est > double(cap))
            throw PreconditionError("slab count exceeds cap; use a smaller k or box");
        if (p1s.empty()) continue;
        bool empty = false;
        for (const auto& t : tails) empty |= t.empty();
        if (empty) continue;
        std::vector<std::size_t> idx(p.n - 1, 0);
        AdmissibleFraction f;
        f.q = q;
        f.p.resize(p.n);
        for (i64 p1 : p1s) {
            std::fill(idx.begin(), idx.end(), 0);
            while (true) {
                f.p[0] = p1;
                for (int j = 1; j < p.n; ++j) f.p[j] = tails[j - 1][idx[j - 1]];
                bool take = true;
                if (residues) {
                    std::vector<i64> r;
                    for (i64 v : f.p) r.push_back(mod_floor(v, q));
                    take = allowed.count({q, r}) > 0;
                }
                if (take) g.slabs.push_back(make_slab(p, f));
                int j = p.n - 2;
                while (j >= 0 && ++idx[j] == tails[j].size()) idx[j--] = 0;
                if (j < 0) break;
            }
        }
    }
    return g;
}

DatumSpec DatumSpec::from_params(const CounterexampleParams& p, std::shared_ptr<const BumpProfile> bump) {
    require(bump != nullptr, "bump profile");
    DatumSpec d;
    d.n = p.n;
    d.R = p.R;
    d.D = p.D;
    d.l_lo = p.l_lo;
    d.l_hi = p.l_hi;
    d.bump = std::move(bump);
    d.k = p.k;
    d.weight = p.k * std::pow(double(p.R), -p.s) / datum_l2_norm(d);
    return d;
}

double datum_l2_norm(const DatumSpec& d) {
    require(d.bump != nullptr, "bump profile");
    require(d.l_lo <= d.l_hi, "lattice nonempty");
    const double nphi = d.bump->l2_norm();
    const double L = double(d.l_hi - d.l_lo + 1);
    return std::pow(double(d.R), -0.25) * nphi * std::pow(nphi * std::sqrt(L), d.n - 1);
}

SobolevSeries sobolev_partial_norm(int k0, int k1, double s, double s_prime) {
    require(k1 >= k0 && k0 >= 1, "k1 >= k0 >= 1");
    SobolevSeries out;
    for (int k = k0; k <= k1; ++k) {
        out.terms.push_back(k * std::exp2(2.0 * k * (s_prime - s)));
        out.sum += out.terms.back();
        out.partial.push_back(out.sum);
    }
    out.geometric_ratio = std::exp2(2.0 * (s_prime - s));
    if (k1 > k0) {
        out.tail_ratio = out.terms.back() / out.terms[out.terms.size() - 2];
        out.corrected_ratio = out.tail_ratio * double(k1 - 1) / double(k1);
    }
    out.converges = s_prime < s;
    return out;
}

}  // namespace divergence::construction
