#include "divergence/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace divergence::evolution {

namespace {

constexpr double no_cutoff = std::numeric_limits<double>::infinity();

void check_fraction(const EvaluationPoint& pt) {
    const auto& f = pt.fraction;
    require(fractions::is_admissible(f.p, f.q), "evaluation point fraction is admissible");
    require(int(pt.eps.size()) + 1 == int(f.p.size()), "one tail offset per tail coordinate");
}

// U f1 with frequencies restricted to |R + sqrt(R) eta| <= cutoff
cplx f1_impl(const DatumSpec& d, const EvaluationPoint& pt, double cutoff) {
    check_fraction(pt);
    const auto& f = pt.fraction;
    const i64 Rd = d.R, Rp = pt.R, Dp = pt.D;
    // -t Rd^2/2 + x1 Rd = p1 Rd (2 Rp - Rd)/(q Dp^2) + delta1 Rd
    i128 num = i128(f.p[0]) * Rd * (2 * i128(Rp) - Rd);
    i128 den = i128(f.q) * Dp * Dp;
    require(den < (i128(1) << 62), "rational phase denominator fits");
    cplx phase = unit_rational(num, i64(den)) * unit(pt.delta1 * double(Rd));
    const double sr = std::sqrt(double(Rd));
    const double tau = pt.t() * double(Rd);
    const double y = sr * (2.0 * double(f.p[0]) * double(Rp - Rd) / (double(f.q) * double(Dp) * double(Dp)) + pt.delta1);
    if (std::isinf(cutoff)) return phase * d.bump->propagate_checked(y, tau);
    const auto& nodes = d.bump->nodes();
    const auto& w = d.bump->weights();
    const auto& v = d.bump->values();
    cplx s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        double e = nodes[i];
        if (std::abs(double(Rd) + sr * e) > cutoff) continue;
        s += w[i] * v[i] * unit(-0.5 * tau * e * e + y * e);
    }
    return phase * s;
}

TailFactor tail_impl(const DatumSpec& d, const EvaluationPoint& pt, int j, double cutoff, bool check_main) {
    check_fraction(pt);
    require(j >= 1 && j < d.n, "tail coordinate index in [1, n)");
    const auto& f = pt.fraction;
    const i64 q = f.q, Dp = pt.D, D = d.D;
    const i64 p1 = f.p[0], pj = f.p[j];
    const double eps = pt.eps[j - 1];
    const double t = pt.t();
    const double xj = double(pj) / (double(Dp) * double(q)) + eps;
    const i64 L = d.l_hi - d.l_lo + 1;
    require(L >= 1, "lattice nonempty");

    // lattice coefficients: rational part exact, then the eps drift
    const i128 den = i128(Dp) * Dp * q;
    require(den < (i128(1) << 62), "rational phase denominator fits");
    std::vector<cplx> A(L), Arat(L);
    for (i64 i = 0; i < L; ++i) {
        i128 l = d.l_lo + i;
        i128 num = -i128(p1) * D * D * l * l + i128(D) * l * pj * Dp;
        Arat[i] = unit_rational(num, i64(den));
        A[i] = Arat[i] * unit(double(D) * double(l) * eps);
    }
    const auto& nodes = d.bump->nodes();
    const auto& w = d.bump->weights();
    const auto& v = d.bump->values();
    cplx total = 0.0, coarse = 0.0, base = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (v[i] == 0.0) continue;
        const double e = nodes[i];
        cplx b = w[i] * v[i] * unit(-0.5 * t * e * e + xj * e);
        cplx z = unit(-double(D) * t * e);
        cplx zl = unit(-double(D) * double(d.l_lo) * t * e);
        cplx s = 0.0;
        for (i64 l = 0; l < L; ++l, zl *= z) {
            if (std::abs(double(D) * double(d.l_lo + l) + e) > cutoff) continue;
            s += A[l] * zl;
        }
        total += b * s;
        base += b;
        if (i % 2 == 0) coarse += 2.0 * b * s;
    }
    if (nodes.size() > 1 && std::abs(total - coarse) > 1e-6 * double(L))
        throw InvariantViolation("tail quadrature did not converge under grid doubling");

    TailFactor out;
    out.total = total;
    if (check_main) {
        // -pi t (D l)^2 = -2 pi (p1/q) l^2 mod 2 pi
        auto ws = expsum::weyl_sum({-p1, pj, q}, {d.l_lo, d.l_hi});
        out.main = base * ws.value;
        out.pert = total - out.main;
        const double lnq = std::log(double(q));
        if (double(d.R) / (double(D) * double(q)) >= 10.0 * std::sqrt(lnq)) {
            double expect = double(L) * expsum::gauss_magnitude(q) / double(q) * std::abs(base);
            double r = std::abs(out.main) / expect;
            if (r < 0.5 || r > 2.0)
                throw InvariantViolation("main term outside factor 2 of |I| c_q/sqrt(q) |U phi|");
        }
    }
    return out;
}

}  // namespace

EvaluationPoint EvaluationPoint::centre(const CounterexampleParams& p, const AdmissibleFraction& f) {
    EvaluationPoint pt;
    pt.fraction = f;
    pt.R = p.R;
    pt.D = p.D;
    pt.eps.assign(p.n - 1, 0.0);
    return pt;
}

double EvaluationPoint::t() const {
    return 2.0 * double(fraction.p[0]) / (double(D) * double(D) * double(fraction.q));
}

std::vector<double> EvaluationPoint::x() const {
    std::vector<double> out;
    out.push_back(t() * double(R) + delta1);
    for (std::size_t j = 1; j < fraction.p.size(); ++j)
        out.push_back(double(fraction.p[j]) / (double(D) * double(fraction.q)) + eps[j - 1]);
    return out;
}

bool EvaluationPoint::in_slab(double half_1, double half_tail) const {
    if (std::abs(delta1) > half_1) return false;
    for (double e : eps)
        if (std::abs(e) > half_tail) return false;
    return true;
}

cplx evolve_f1(double x1, double t, i64 R, const BumpProfile& bump) {
    const double r = double(R);
    cplx phase = unit(-0.5 * t * r * r + x1 * r);
    return phase * bump.propagate_checked(std::sqrt(r) * (x1 - t * r), t * r);
}

cplx evolve_f1_at(const DatumSpec& d, const EvaluationPoint& pt) { return f1_impl(d, pt, no_cutoff); }

TailFactor evolve_tail(const DatumSpec& d, const EvaluationPoint& pt, int j) {
    return tail_impl(d, pt, j, no_cutoff, d.R == pt.R && d.D == pt.D);
}

cplx evolve_datum(const DatumSpec& d, const EvaluationPoint& pt) {
    cplx v = evolve_f1_at(d, pt);
    for (int j = 1; j < d.n; ++j) v *= tail_impl(d, pt, j, no_cutoff, false).total;
    return v;
}

EvaluationSample evaluate_sample(const EvaluationPoint& pt, const CounterexampleParams& p,
                                 std::shared_ptr<const BumpProfile> bump, bool enforce_band) {
    require(pt.R == p.R && pt.D == p.D, "point belongs to this level");
    require(pt.fraction.q <= p.Q, "q <= Q");
    require(pt.fraction.p[0] >= 1, "t > 0");
    require(pt.in_slab(p.halfwidth_1(), p.halfwidth_tail()), "point lies in its slab");
    auto d = DatumSpec::from_params(p, std::move(bump));
    EvaluationSample s;
    s.point = pt;
    s.k = p.k;
    s.f1_factor = evolve_f1_at(d, pt);
    s.tail_factor = 1.0;
    double worst = -1;
    for (int j = 1; j < p.n; ++j) {
        auto tf = evolve_tail(d, pt, j);
        s.tail_factor *= tf.total;
        double r = std::abs(tf.pert) / std::max(std::abs(tf.main), 1e-300);
        if (r > worst) {
            worst = r;
            s.main_mag = std::abs(tf.main);
            s.pert_mag = std::abs(tf.pert);
        }
    }
    s.value = s.f1_factor * s.tail_factor;
    s.norm_f = construction::datum_l2_norm(d);
    s.predicted = std::pow(double(p.R), 0.25) *
                  std::pow(double(p.R) / (double(p.D) * double(pt.fraction.q)), (p.n - 1) / 2.0);
    s.ratio = std::abs(s.value) / s.norm_f / s.predicted;
    if (enforce_band && (s.ratio < 1.0 / ratio_band || s.ratio > ratio_band))
        throw InvariantViolation("normalised magnitude ratio " + std::to_string(s.ratio) + " outside [1/4, 4]");
    return s;
}

DecayResult packet_decay(double x, double t, int N, const BumpProfile& bump) {
    require(N >= 1, "N >= 1");
    require(std::abs(x) > 2 * t, "|x| > 2t");
    DecayResult r;
    r.measured = std::abs(bump.propagate(x, t));
    const double top = std::max(64.0, 2 * std::abs(x));
    double c = 0;
    for (double y = 2.5 * t; y <= top; y *= std::exp2(0.125))
        c = std::max(c, std::pow(y, N) * std::abs(bump.propagate(y, t)));
    r.constant = c;
    // one grid step of slack between calibration nodes
    r.bound = c * std::exp2(0.125 * N) / std::pow(std::abs(x), N);
    if (r.measured > r.bound) throw InvariantViolation("packet decay bound violated");
    return r;
}

InterferenceReport interference_audit(int k_star, const std::vector<int>& k_other,
                                      const std::vector<CounterexampleParams>& levels,
                                      const std::vector<EvaluationPoint>& points,
                                      std::shared_ptr<const BumpProfile> bump) {
    require(!k_other.empty(), "at least one other level");
    for (int k : k_other) require(k != k_star, "k_other differs from k_star");
    auto level = [&](int k) -> const CounterexampleParams& {
        for (const auto& p : levels)
            if (p.k == k) return p;
        throw PreconditionError("missing parameters for level k=" + std::to_string(k));
    };
    const auto& ps = level(k_star);
    const auto star = DatumSpec::from_params(ps, bump);
    std::vector<DatumSpec> others;
    for (int k : k_other) others.push_back(DatumSpec::from_params(level(k), bump));

    InterferenceReport rep;
    rep.k_star = k_star;
    rep.k_other = k_other;
    rep.measured_C.assign(k_other.size(), 0.0);
    rep.min_star_over_k = std::numeric_limits<double>::infinity();
    for (const auto& pt : points) {
        require(pt.R == ps.R && pt.D == ps.D, "sample point belongs to level k_star");
        if (std::abs(pt.delta1) > ps.halfwidth_1())
            throw PreconditionError("sample point violates x1 = tR + O(R^-1/2): delta1 = " + std::to_string(pt.delta1));
        double tau = pt.t() * double(ps.R);
        if (tau < ps.c0 || tau > ps.c1)
            throw PreconditionError("sample time outside (c0/R, c1/R)");
        InterferenceRow row;
        row.point = pt;
        row.star_mag = std::abs(star.weight * evolve_datum(star, pt));
        for (std::size_t i = 0; i < others.size(); ++i) {
            double m = std::abs(others[i].weight * evolve_datum(others[i], pt));
            row.other_mag.push_back(m);
            row.worst_fraction = std::max(row.worst_fraction, m / row.star_mag);
            rep.measured_C[i] = std::max(rep.measured_C[i], m * std::sqrt(double(others[i].R)));
        }
        rep.worst_fraction = std::max(rep.worst_fraction, row.worst_fraction);
        rep.min_star_over_k = std::min(rep.min_star_over_k, row.star_mag / k_star);
        rep.rows.push_back(std::move(row));
    }
    rep.passed = !rep.rows.empty() && rep.worst_fraction <= interference_tolerance &&
                 rep.min_star_over_k >= star_floor &&
                 *std::max_element(rep.measured_C.begin(), rep.measured_C.end()) <= interference_constant;
    return rep;
}

Truncated truncated_propagator(const DatumSpec& d, double N, const EvaluationPoint& pt) {
    require(N > 0, "N > 0");
    const double half = N / 2;
    Truncated out;
    out.truncated = half < double(d.R) + std::sqrt(double(d.R)) || half < double(d.D) * double(d.l_hi) + 1.0;
    cplx v = f1_impl(d, pt, half);
    for (int j = 1; j < d.n; ++j) v *= tail_impl(d, pt, j, half, false).total;
    out.value = v;
    return out;
}

Truncated truncated_series(const std::vector<DatumSpec>& series, double N, const EvaluationPoint& pt) {
    Truncated out;
    for (const auto& d : series) {
        auto t = truncated_propagator(d, N, pt);
        out.value += d.weight * t.value;
        out.truncated |= t.truncated;
    }
    return out;
}

double spatial_energy(const BumpProfile& bump, double tau, double L, int steps) {
    double h = 2 * L / steps, s = 0;
    for (int i = 0; i <= steps; ++i) {
        double v = std::norm(bump.propagate(-L + i * h, tau));
        double w = (i == 0 || i == steps) ? 1 : (i % 2 ? 4 : 2);
        s += w * v;
    }
    return s * h / 3.0;
}

std::vector<EvaluationPoint> sampling_plan(const CounterexampleParams& p, double c0, double c1,
                                           int offsets_per_centre, std::uint64_t seed,
                                           std::size_t max_centres) {
    require(c0 > 0 && c1 > c0 && c1 <= 1, "0 < c0 < c1 <= 1");
    construction::Box box;
    box.lo.push_back(c0);
    box.hi.push_back(c1);
    for (int j = 1; j < p.n; ++j) {
        box.lo.push_back(0.0);
        box.hi.push_back(c1);
    }
    auto grid = construction::build_slab_grid(p, box);
    std::map<i64, std::vector<AdmissibleFraction>> strata;
    for (const auto& s : grid.slabs) {
        bool inside = true;
        for (int j = 0; j < p.n; ++j) inside &= s.center[j] >= box.lo[j] && s.center[j] <= box.hi[j];
        if (inside) strata[s.fraction.q].push_back(s.fraction);
    }
    std::size_t total = 0;
    for (auto& [q, v] : strata) total += v.size();
    std::vector<AdmissibleFraction> centres;
    for (auto& [q, v] : strata) {
        // even thinning per stratum when over budget
        std::size_t keep = total <= max_centres ? v.size()
                                                : std::max<std::size_t>(1, v.size() * max_centres / total);
        for (std::size_t i = 0; i < keep; ++i) centres.push_back(v[i * v.size() / keep]);
    }
    std::mt19937_64 rng(seed ^ (std::uint64_t(p.k) << 32));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<EvaluationPoint> out;
    for (const auto& f : centres) {
        auto pt = EvaluationPoint::centre(p, f);
        out.push_back(pt);
        for (int i = 0; i < offsets_per_centre; ++i) {
            auto q = pt;
            q.delta1 = p.halfwidth_1() * u(rng);
            for (double& e : q.eps) e = p.halfwidth_tail() * u(rng);
            out.push_back(q);
        }
    }
    return out;
}

}  // namespace divergence::evolution
