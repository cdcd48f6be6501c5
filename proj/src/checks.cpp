#include "divergence/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace divergence::checks {

namespace {

using construction::derive_params;
using io::fmt;

std::string num(double v) {
    std::ostringstream o;
    o.precision(6);
    o << v;
    return o.str();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

CheckResult gauss_exactness() {
    CheckResult r;
    double worst = 0;
    long long count = 0;
    for (i64 q = 1; q <= 200; ++q) {
        const double expect = expsum::gauss_magnitude(q);
        for (i64 a = 1; a <= q; ++a) {
            if (std::gcd(a % q, q) != 1) continue;
            for (i64 b = 0; b < q; ++b) {
                expsum::QuadraticPhase ph{a, b, q};
                if (expsum::phase_violation(ph)) continue;
                double m = expsum::gauss_sum(ph).magnitude;
                worst = std::max(worst, std::abs(m - expect) / expect);
                ++count;
            }
        }
    }
    r.passed = worst <= 1e-9;
    r.measured = worst;
    r.detail = std::to_string(count) + " admissible phases, max relative error " + num(worst);
    return r;
}

CheckResult weyl_blocks(std::uint64_t seed) {
    CheckResult r;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<i64> qd(1, 2000), lod(-1'000'000, 1'000'000), lend(1, 100'000);
    double worst = 0, worst_rem = 0;
    int outside = 0, enveloped = 0;
    for (int i = 0; i < 1000; ++i) {
        i64 q = qd(rng);
        i64 a;
        do a = std::uniform_int_distribution<i64>(1, q)(rng);
        while (std::gcd(a % q, q) != 1);
        i64 b = std::uniform_int_distribution<i64>(0, 2 * q)(rng);
        if (q % 4 == 0 && b % 2) ++b;
        if (q % 4 == 2 && b % 2 == 0) ++b;
        i64 lo = lod(rng), len = lend(rng);
        expsum::QuadraticPhase ph{a, b, q};
        expsum::IntegerInterval I{lo, lo + len - 1};
        auto fast = expsum::weyl_sum(ph, I);
        auto slow = expsum::naive_sum(ph, I);
        worst = std::max(worst, std::abs(fast.value - slow.value));
        if (len >= q && q > 1) {
            ++enveloped;
            auto env = expsum::weyl_envelope(q, len);
            if (fast.magnitude < env.lower || fast.magnitude > env.upper) ++outside;
            i64 blocks = len / q;
            double rem = std::abs(std::abs(fast.value) - blocks * expsum::gauss_magnitude(q));
            worst_rem = std::max(worst_rem, rem / std::sqrt(q * std::log(double(q))));
        }
    }
    r.passed = worst <= 1e-9 && outside == 0;
    r.measured = worst;
    r.detail = "max |block - naive| " + num(worst) + "; " + std::to_string(outside) + "/" + std::to_string(enveloped) +
               " outside the C0=3 envelope; max remainder/sqrt(q ln q) " + num(worst_rem);
    return r;
}

std::map<int, std::vector<double>> ratios_by_k(const std::vector<evolution::EvaluationSample>& s) {
    std::map<int, std::vector<double>> m;
    for (const auto& e : s) m[e.k].push_back(e.ratio);
    return m;
}

CheckResult lower_bound_scaling(const std::vector<evolution::EvaluationSample>& s) {
    CheckResult r;
    auto by = ratios_by_k(s);
    bool ok = by.size() == 3;
    double lo = 1e300, hi = 0, spread = 1;
    std::vector<double> meds;
    std::string counts;
    for (auto& [k, v] : by) {
        ok &= v.size() >= 20;
        for (double x : v) lo = std::min(lo, x), hi = std::max(hi, x);
        meds.push_back(median(v));
        counts += " k=" + std::to_string(k) + ":" + std::to_string(v.size()) + " median " + num(meds.back());
    }
    for (double x : meds)
        for (double y : meds) spread = std::max(spread, x / y);
    ok &= lo >= 0.25 && hi <= 4.0 && spread <= 2.0;
    r.passed = ok;
    r.measured = spread;
    r.detail = "ratio range [" + num(lo) + ", " + num(hi) + "], median spread " + num(spread) + ";" + counts;
    return r;
}

CheckResult perturbation_control(const std::vector<evolution::EvaluationSample>& s) {
    CheckResult r;
    double worst = 0;
    for (const auto& e : s) worst = std::max(worst, e.pert_mag / e.main_mag);
    r.passed = !s.empty() && worst <= 0.5;
    r.measured = worst;
    r.detail = std::to_string(s.size()) + " samples, max |F_per|/|F_main| " + num(worst);
    return r;
}

CheckResult packet_decay_check() {
    CheckResult r;
    auto bump = construction::BumpProfile::smooth();
    auto d1 = evolution::packet_decay(1.0, 1e-3, 4, bump);
    auto d2 = evolution::packet_decay(2.0, 1e-3, 4, bump);
    double drop = d1.measured / d2.measured;
    r.passed = drop >= 8.0;
    r.measured = drop;
    r.detail = "|U phi(1)| = " + num(d1.measured) + ", |U phi(2)| = " + num(d2.measured) + ", drop " + num(drop) +
               ", C_4 = " + num(d1.constant);
    return r;
}

CheckResult non_interference(std::uint64_t seed, Artifacts* art) {
    CheckResult r;
    const double c = 0.01, c1 = 0.5;
    std::vector<construction::CounterexampleParams> levels;
    for (int k : {10, 12, 14}) levels.push_back(derive_params(2, 1.0, 0.5, k, c, c1));
    auto bump = std::make_shared<const construction::BumpProfile>(construction::BumpProfile::smooth());
    auto pts = evolution::sampling_plan(levels[1], levels[1].c0, c1, 4, seed, 12);
    auto rep = evolution::interference_audit(12, {10, 14}, levels, pts, bump);
    r.passed = rep.passed && rep.rows.size() >= 20;
    r.measured = rep.worst_fraction;
    r.detail = std::to_string(rep.rows.size()) + " points, max neighbour/k* " + num(rep.worst_fraction) +
               ", min |U h_12|/12 " + num(rep.min_star_over_k) + ", C (k=10) " + num(rep.measured_C[0]) +
               ", C (k=14) " + num(rep.measured_C[1]);
    if (art) {
        for (const auto& row : rep.rows) {
            auto s = evolution::evaluate_sample(row.point, levels[1], bump, false);
            art->samples.push_back(s);
            art->interference_flags.push_back(row.worst_fraction <= evolution::interference_tolerance ? 1 : 0);
        }
    }
    return r;
}

CheckResult dimension_fit(Artifacts* art) {
    CheckResult r;
    auto box = construction::Box::cube(2, 0.0, 1.0);
    auto p1 = derive_params(2, 0.7, 0.4, 14, 1.0, 1.0);
    auto p2 = derive_params(2, 1.0, 0.5, 14, 1.0, 1.0);
    auto c1 = dimension::box_count_curve(construction::SlabLattice::full(p1), box, 1.0 / double(p1.R));
    auto c2 = dimension::box_count_curve(construction::SlabLattice::full(p2), box, 1.0 / double(p2.R));
    r.passed = c1.fitted_dim >= 1.45 && c1.fitted_dim <= 1.75 && c2.fitted_dim >= 1.85 && c2.fitted_dim <= 2.0;
    r.measured = c1.fitted_dim;
    r.detail = "type I alpha=1.6 fit " + num(c1.fitted_dim) + " (residual " + num(c1.residual) +
               "); alpha=2 fit " + num(c2.fitted_dim) + " (residual " + num(c2.residual) + ")";
    if (art) art->curve = c1;
    return r;
}

CheckResult frostman(std::uint64_t seed, Artifacts* art) {
    CheckResult r;
    const int k = 34;
    auto p1 = derive_params(2, 0.7, 0.4, k, 1.0, 1.0);
    auto a1 = dimension::frostman_audit_type1(construction::SlabLattice::full(p1), 1.0, p1.alpha - 0.1, 500, seed);
    auto p2 = derive_params(3, 0.8, 0.5, k, 1.0, 1.0);
    auto sel = fractions::select_separated(fractions::enumerate_admissible(3, p2.Q), 0.1);
    fractions::FractionFamily fam{3, p2.Q, sel.kept};
    auto a2 = dimension::frostman_audit_type2(construction::SlabLattice(p2, fam), 1.0, p2.alpha - 0.1, 0.1, 500,
                                              seed + 1);
    bool ok = a1.regime_results.size() == 5 && a2.regime_results.size() == 4;
    for (const auto* a : {&a1, &a2})
        for (const auto& rr : a->regime_results) ok &= rr.balls.size() >= 500;
    ok &= a1.passed(dimension::frostman_constant) && a2.passed(dimension::frostman_constant);
    r.passed = ok;
    r.measured = std::max(a1.global_C, a2.global_C);
    std::string d = "type I C=" + num(a1.global_C) + " [";
    for (const auto& rr : a1.regime_results) d += " " + num(rr.max_ratio);
    d += " ] norm " + num(a1.normalization) + "; type II C=" + num(a2.global_C) + " [";
    for (const auto& rr : a2.regime_results) d += " " + num(rr.max_ratio);
    d += " ] norm " + num(a2.normalization);
    r.detail = d;
    if (art) {
        art->audits.emplace_back("type1", a1);
        art->audits.emplace_back("type2", a2);
    }
    return r;
}

CheckResult selection(Artifacts* art) {
    CheckResult r;
    const i64 Q = 32;
    auto fam = fractions::enumerate_admissible(3, Q);
    auto sel = fractions::select_separated(fam, 0.1);
    double need = std::pow(double(Q), -0.1) / 4.0 * double(fam.items.size());
    double sep_need = fractions::separation_constant(3) * std::pow(double(Q), -1.5);
    bool count_ok = double(sel.kept.size()) >= need;
    bool sep_ok = sel.separation >= sep_need;
    r.passed = count_ok && sep_ok;
    r.measured = double(sel.kept.size()) / double(fam.items.size());
    r.detail = "kept " + std::to_string(sel.kept.size()) + " of " + std::to_string(fam.items.size()) + " (need >= " +
               num(need) + "): " + (count_ok ? "ok" : "FAIL") + "; separation " + num(sel.separation) +
               " vs " + num(sep_need) + ": " + (sep_ok ? "ok" : "FAIL") + "; stage counts A1=" +
               std::to_string(sel.stages.restricted) + " tails=" + std::to_string(sel.stages.restricted_tails) +
               " desirable=" + std::to_string(sel.stages.desirable_tails) + " kept_tails=" +
               std::to_string(sel.stages.kept_tails) + "; |A1|/|A0|=" + num(sel.restricted_ratio) +
               (sel.failure ? "; " + *sel.failure : "");
    if (art) art->selection = sel;
    return r;
}

CheckResult sobolev() {
    CheckResult r;
    const double s = construction::s_from_ab(2, 1.0, 0.5);
    double worst = 0;
    for (double ds : {-0.3, -0.1, -0.05, 0.1}) {
        auto ser = construction::sobolev_partial_norm(10, 40, s, s + ds);
        worst = std::max(worst, std::abs(ser.corrected_ratio - ser.geometric_ratio));
    }
    double id_worst = 0;
    int pairs = 0;
    for (int n = 2; n <= 5; ++n) {
        for (int i = 1; i <= 25; ++i) {
            double alpha = n / 2.0 + (n / 2.0) * i / 25.0;
            auto bij = construction::alpha_s_bijection(n, alpha);
            id_worst = std::max(id_worst, std::abs(construction::s_from_ab(n, bij.a, bij.b) - bij.s));
            id_worst = std::max(id_worst, std::abs(construction::alpha_from_ab(n, bij.a, bij.b) - alpha));
            ++pairs;
        }
    }
    auto ref = construction::sobolev_partial_norm(10, 40, s, s - 0.1);
    r.passed = worst <= 1e-12 && id_worst <= 1e-12 && pairs == 100;
    r.measured = std::max(worst, id_worst);
    r.detail = "term-ratio error " + num(worst) + " (raw tail ratio at s'=s-0.1: " + num(ref.tail_ratio) +
               ", 2^-0.2 = " + num(ref.geometric_ratio) + "); identity error " + num(id_worst) + " over " +
               std::to_string(pairs) + " (n, alpha) pairs";
    return r;
}

}  // namespace

const std::vector<CheckSpec>& registry() {
    static const std::vector<CheckSpec> specs = {
        {1, "gauss_exactness", 5},        {2, "weyl_block_decomposition", 30}, {3, "lower_bound_scaling", 300},
        {4, "perturbation_control", 300}, {5, "packet_decay", 10},             {6, "non_interference", 300},
        {7, "dimension_fit", 120},        {8, "frostman_audits", 300},         {9, "selection_lemma", 60},
        {10, "sobolev_bookkeeping", 60}};
    return specs;
}

std::vector<evolution::EvaluationSample> lower_bound_sweep(int n, double a, double b, const std::vector<int>& ks,
                                                           double c, double c1, std::uint64_t seed,
                                                           std::size_t max_centres) {
    auto bump = std::make_shared<const construction::BumpProfile>(construction::BumpProfile::smooth());
    std::vector<evolution::EvaluationSample> out;
    for (int k : ks) {
        auto p = derive_params(n, a, b, k, c, c1);
        for (const auto& pt : evolution::sampling_plan(p, p.c0, c1, 4, seed, max_centres))
            out.push_back(evolution::evaluate_sample(pt, p, bump, false));
    }
    return out;
}

CheckResult run_check(int id, std::uint64_t seed, Artifacts* art) {
    auto it = std::find_if(registry().begin(), registry().end(), [&](const CheckSpec& s) { return s.id == id; });
    if (it == registry().end()) throw PreconditionError("unknown check id " + std::to_string(id));
    auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    switch (id) {
        case 1: r = gauss_exactness(); break;
        case 2: r = weyl_blocks(seed); break;
        case 3:
        case 4: {
            auto s = lower_bound_sweep(2, 1.0, 0.5, {8, 10, 12}, 0.01, 0.25, seed);
            r = id == 3 ? lower_bound_scaling(s) : perturbation_control(s);
            if (art && id == 3) {
                for (const auto& e : s) {
                    art->samples.push_back(e);
                    art->interference_flags.push_back(-1);
                }
            }
            break;
        }
        case 5: r = packet_decay_check(); break;
        case 6: r = non_interference(seed, art); break;
        case 7: r = dimension_fit(art); break;
        case 8: r = frostman(seed, art); break;
        case 9: r = selection(art); break;
        case 10: r = sobolev(); break;
    }
    r.id = id;
    r.name = it->name;
    r.time_limit = it->time_limit;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.seconds > r.time_limit) {
        r.passed = false;
        r.detail += "; runtime " + num(r.seconds) + " s over limit " + num(r.time_limit) + " s";
    }
    return r;
}

std::string samples_csv(const std::vector<evolution::EvaluationSample>& s, const std::vector<int>& flags, int n) {
    std::vector<std::string> h = {"k", "q"};
    for (int j = 1; j <= n; ++j) h.push_back("p" + std::to_string(j));
    h.push_back("t");
    for (int j = 1; j <= n; ++j) h.push_back("x" + std::to_string(j));
    for (const char* c : {"re", "im", "abs", "norm_f", "predicted", "ratio", "main_mag", "pert_mag", "interference_flag"})
        h.push_back(c);
    io::Csv csv(h);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& e = s[i];
        std::vector<std::string> row = {fmt((long long)e.k), fmt((long long)e.point.fraction.q)};
        for (i64 v : e.point.fraction.p) row.push_back(fmt((long long)v));
        row.push_back(fmt(e.point.t()));
        for (double x : e.point.x()) row.push_back(fmt(x));
        for (double v : {e.value.real(), e.value.imag(), std::abs(e.value), e.norm_f, e.predicted, e.ratio, e.main_mag,
                         e.pert_mag})
            row.push_back(fmt(v));
        row.push_back(fmt((long long)(i < flags.size() ? flags[i] : -1)));
        csv.row(row);
    }
    return csv.str();
}

std::string slabs_csv(const std::vector<construction::SlabGrid>& grids) {
    int n = grids.empty() ? 2 : grids.front().params.n;
    std::vector<std::string> h = {"k", "q"};
    for (int j = 1; j <= n; ++j) h.push_back("p" + std::to_string(j));
    h.push_back("t");
    for (int j = 1; j <= n; ++j) h.push_back("center_" + std::to_string(j));
    h.push_back("halfwidth_1");
    h.push_back("halfwidth_tail");
    io::Csv csv(h);
    for (const auto& g : grids) {
        for (const auto& s : g.slabs) {
            std::vector<std::string> row = {fmt((long long)g.params.k), fmt((long long)s.fraction.q)};
            for (i64 v : s.fraction.p) row.push_back(fmt((long long)v));
            row.push_back(fmt(s.t_value));
            for (double c : s.center) row.push_back(fmt(c));
            row.push_back(fmt(s.half_1));
            row.push_back(fmt(s.half_tail));
            csv.row(row);
        }
    }
    return csv.str();
}

std::string boxcount_csv(const dimension::BoxCountCurve& c) {
    io::Csv csv({"scale", "count"});
    for (std::size_t i = 0; i < c.scales.size(); ++i) csv.row({fmt(c.scales[i]), fmt((long long)c.counts[i])});
    return csv.str();
}

std::string frostman_csv(const std::vector<std::pair<std::string, dimension::FrostmanAudit>>& audits) {
    io::Csv csv({"regime", "r", "mu", "bound", "ratio"});
    for (const auto& [tag, a] : audits)
        for (const auto& rr : a.regime_results)
            for (const auto& b : rr.balls)
                csv.row({tag + ":" + rr.label, fmt(b.r), fmt(b.mu), fmt(b.bound), fmt(b.ratio)});
    return csv.str();
}

std::string fractions_csv(const std::vector<fractions::AdmissibleFraction>& f, int n) {
    std::vector<std::string> h = {"q"};
    for (int j = 1; j <= n; ++j) h.push_back("p" + std::to_string(j));
    io::Csv csv(h);
    for (const auto& x : f) {
        std::vector<std::string> row = {fmt((long long)x.q)};
        for (i64 v : x.p) row.push_back(fmt((long long)v));
        csv.row(row);
    }
    return csv.str();
}

}  // namespace divergence::checks
