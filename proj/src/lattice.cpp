#include "divergence/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace divergence::construction {

namespace {

double count_below(double y, double w, double P) {
    double m = std::floor(y / P);
    return m * w + std::clamp(y - m * P, 0.0, w);
}

double circ_dist(double x, double c, double P) {
    double d = std::fmod(x - c, P);
    if (d < 0) d += P;
    return std::min(d, P - d);
}

}  // namespace

double periodic_overlap(double lo, double hi, double a, double w, double P) {
    if (hi <= lo || w <= 0) return 0.0;
    return count_below(hi - a, w, P) - count_below(lo - a, w, P);
}

SlabLattice SlabLattice::full(const CounterexampleParams& p) {
    return SlabLattice(p, fractions::enumerate_admissible(p.n, p.Q));
}

SlabLattice::SlabLattice(const CounterexampleParams& p, const fractions::FractionFamily& residues)
    : params_(p) {
    require(residues.n == p.n, "family dimension matches n");
    require(p.Q <= 64, "lattice supports Q <= 64");
    P1_ = p.x1_period();
    Pt_ = p.tail_period();
    h1_ = p.halfwidth_1();
    ht_ = p.halfwidth_tail();
    require(2 * h1_ < P1_, "x1 slabs narrower than the x1 period");

    // per q: p1 residues and tail residue vectors; must form a product set
    std::map<i64, std::set<i64>> p1s;
    std::map<i64, std::set<std::vector<i64>>> tails;
    std::map<i64, std::set<std::pair<i64, std::vector<i64>>>> pairs;
    for (const auto& f : residues.items) {
        require(f.q <= p.Q, "family denominators <= Q");
        i64 r1 = mod_floor(f.p[0], f.q);
        std::vector<i64> t;
        for (int j = 1; j < p.n; ++j) t.push_back(mod_floor(f.p[j], f.q));
        p1s[f.q].insert(r1);
        tails[f.q].insert(t);
        pairs[f.q].insert({r1, t});
    }
    std::set<std::vector<std::pair<i64, i64>>> seen_pts;
    for (auto& [q, ps] : p1s) {
        require(pairs[q].size() == ps.size() * tails[q].size(), "family is a product set for each q");
        Level lv;
        lv.q = q;
        for (i64 r : ps) lv.offsets.push_back(double(r) / double(q) * P1_);
        for (const auto& t : tails[q]) {
            std::vector<double> pt;
            for (i64 v : t) pt.push_back(double(v) / (double(q) * double(p.D)));
            lv.pattern.push_back(pt);
        }
        levels_.push_back(std::move(lv));
    }
    // tail cubes from distinct centres are disjoint when 1/(D Q^2) >= 2 ht
    tails_disjoint_ = 1.0 / (double(p.D) * double(p.Q) * double(p.Q)) >= 2 * ht_;

    double first = P1_;
    for (const auto& lv : levels_)
        for (double o : lv.offsets)
            if (o > 0) first = std::min(first, o);
    require(first >= 2 * h1_, "first positive slab clears the x1 cut");

    std::vector<double> br = {0.0, P1_};
    for (const auto& lv : levels_)
        for (double o : lv.offsets)
            for (double e : {o - h1_, o + h1_}) {
                double m = std::fmod(e, P1_);
                if (m < 0) m += P1_;
                br.push_back(m);
            }
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    std::map<std::uint64_t, int> ids;
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
        Segment s{br[i], br[i + 1], -1, 0};
        if (s.hi <= s.lo) continue;
        double mid = 0.5 * (s.lo + s.hi);
        for (std::size_t li = 0; li < levels_.size(); ++li)
            for (double o : levels_[li].offsets)
                if (circ_dist(mid, o, P1_) < h1_) s.mask |= std::uint64_t(1) << li;
        if (s.mask) {
            auto it = ids.find(s.mask);
            if (it == ids.end()) {
                std::set<std::vector<std::pair<i64, i64>>> keys;
                std::vector<std::vector<double>> pts;
                for (std::size_t li = 0; li < levels_.size(); ++li) {
                    if (!(s.mask >> li & 1)) continue;
                    for (const auto& t : tails[levels_[li].q]) {
                        std::vector<std::pair<i64, i64>> key;
                        for (i64 v : t) {
                            i64 g = std::gcd(v, levels_[li].q);
                            key.emplace_back(v / g, levels_[li].q / g);
                        }
                        if (!keys.insert(key).second) continue;
                        std::vector<double> pt;
                        for (auto [a, b] : key) pt.push_back(double(a) / (double(b) * double(p.D)));
                        pts.push_back(pt);
                    }
                }
                it = ids.emplace(s.mask, int(point_sets_.size())).first;
                point_sets_.push_back(std::move(pts));
            }
            s.set = it->second;
        }
        segments_.push_back(s);
    }
}

double SlabLattice::tail_measure(int set, const Box& b) const {
    double total = 0;
    for (const auto& pt : point_sets_[set]) {
        double prod = 1;
        for (int j = 1; j < n() && prod > 0; ++j)
            prod *= periodic_overlap(b.lo[j], b.hi[j], pt[j - 1] - ht_, 2 * ht_, Pt_);
        total += prod;
    }
    return total;
}

double SlabLattice::measure(const Box& b) const {
    require(b.dim() == n(), "box dimension matches n");
    if (!tails_disjoint_) throw PreconditionError("tail cubes overlap; exact measure unavailable");
    double u = std::max(b.lo[0], h1_), v = b.hi[0];
    if (v <= u) return 0.0;
    std::vector<double> cache(point_sets_.size(), -1.0);
    double total = 0;
    for (const auto& s : segments_) {
        if (s.set < 0) continue;
        double len = periodic_overlap(u, v, s.lo, s.hi - s.lo, P1_);
        if (len <= 0) continue;
        if (cache[s.set] < 0) cache[s.set] = tail_measure(s.set, b);
        total += len * cache[s.set];
    }
    return total;
}

bool SlabLattice::contains(std::span<const double> x) const {
    if (x[0] < h1_) return false;
    for (const auto& lv : levels_) {
        bool hit = false;
        for (double o : lv.offsets) hit |= circ_dist(x[0], o, P1_) <= h1_;
        if (!hit) continue;
        for (const auto& pt : lv.pattern) {
            bool in = true;
            for (int j = 1; j < n() && in; ++j) in = circ_dist(x[j], pt[j - 1], Pt_) <= ht_;
            if (in) return true;
        }
    }
    return false;
}

std::vector<double> SlabLattice::sample_point(std::mt19937_64& rng, const Box& box, bool inside_slab) const {
    std::vector<double> w;
    for (const auto& lv : levels_) w.push_back(double(lv.offsets.size() * lv.pattern.size()));
    std::discrete_distribution<std::size_t> pick_level(w.begin(), w.end());
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const auto& lv = levels_[pick_level(rng)];
        double o = lv.offsets[std::uniform_int_distribution<std::size_t>(0, lv.offsets.size() - 1)(rng)];
        const auto& pt = lv.pattern[std::uniform_int_distribution<std::size_t>(0, lv.pattern.size() - 1)(rng)];
        auto pick = [&](double base, double P, double lo, double hi, double& out) {
            double m0 = std::ceil((lo - base) / P), m1 = std::floor((hi - base) / P);
            if (m1 < m0) return false;
            double m = m0 + std::floor(std::uniform_real_distribution<double>(0, 1)(rng) * (m1 - m0 + 1));
            out = base + std::min(m, m1) * P;
            return true;
        };
        std::vector<double> x(n());
        if (!pick(o, P1_, std::max(box.lo[0], 2 * h1_), box.hi[0], x[0])) continue;
        bool ok = true;
        for (int j = 1; j < n() && ok; ++j) ok = pick(pt[j - 1], Pt_, box.lo[j], box.hi[j], x[j]);
        if (!ok) continue;
        if (inside_slab) {
            x[0] += h1_ * unif(rng);
            for (int j = 1; j < n(); ++j) x[j] += ht_ * unif(rng);
        }
        return x;
    }
    throw PreconditionError("no slab centre inside the sampling box");
}

}  // namespace divergence::construction
