#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>

#include "divergence/checks.hpp"

using namespace divergence;
using json = nlohmann::ordered_json;

namespace {

struct Flags {
    std::string config_path;
    std::map<std::string, std::string> overrides;
};

void add_config_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config_path, "config file (key = value lines)");
    for (const auto& key : io::known_keys()) {
        std::string flag = "--" + (key == "out_dir" ? std::string("out") : key);
        cmd->add_option_function<std::string>(flag, [&f, key](const std::string& v) { f.overrides[key] = v; },
                                              "config key " + key);
    }
}

io::RunConfig load(const Flags& f, bool need_params = true) {
    io::Config cfg;
    if (!f.config_path.empty()) cfg = io::load_config(f.config_path);
    io::Config ov;
    ov.values = f.overrides;
    io::merge(cfg, ov);
    return io::resolve(cfg, need_params);
}

// (a, b) from the config, via the bijection when alpha is given
std::pair<double, double> exponents(const io::RunConfig& rc) {
    if (rc.alpha) {
        auto bij = construction::alpha_s_bijection(rc.n, *rc.alpha);
        return {bij.a, bij.b};
    }
    return {rc.a, rc.b};
}

json params_json(const construction::CounterexampleParams& p) {
    return {{"k", p.k},
            {"n", p.n},
            {"a", p.a},
            {"b", p.b},
            {"R", p.R},
            {"D", p.D},
            {"Q", p.Q},
            {"D_nominal", p.D_nominal},
            {"Q_nominal", p.Q_nominal},
            {"D_rounding_delta", double(p.D) - p.D_nominal},
            {"Q_rounding_delta", double(p.Q) - p.Q_nominal},
            {"s", p.s},
            {"alpha", p.alpha},
            {"alpha_effective", p.alpha_effective()},
            {"c", p.c},
            {"c1", p.c1},
            {"c0", p.c0},
            {"lattice", {p.l_lo, p.l_hi}},
            {"conditions",
             {{"separation_R_over_DQ", p.separation_ok},
              {"restriction_a", p.restriction_a},
              {"restriction_b", p.restriction_b},
              {"n_minus_2s_below_alpha", p.exceptional_gap}}}};
}

json config_json(const io::RunConfig& rc) {
    json j = {{"n", rc.n}, {"k", rc.k}, {"k0", rc.k0}, {"k1", rc.k1}, {"c", rc.c}, {"c1", rc.c1},
              {"box", rc.box}, {"caps", rc.caps}, {"seed", rc.seed}, {"out_dir", rc.out_dir},
              {"epsilon", rc.epsilon}, {"delta", rc.delta}};
    if (rc.alpha) j["alpha"] = *rc.alpha;
    else j["a"] = rc.a, j["b"] = rc.b;
    return j;
}

struct Manifest {
    json doc;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    void stage(const std::string& name) {
        auto now = std::chrono::steady_clock::now();
        doc["timing"][name] = std::chrono::duration<double>(now - t0).count();
        t0 = now;
    }
};

void emit(const std::string& dir, const std::string& name, const std::string& content, Manifest& m) {
    auto path = (std::filesystem::path(dir) / name).string();
    io::write_atomic(path, content);
    m.outputs.push_back(name);
}

void finish(const std::string& dir, Manifest& m) {
    m.doc["outputs"] = m.outputs;
    io::write_atomic((std::filesystem::path(dir) / "manifest.json").string(), m.doc.dump(2) + "\n");
}

int cmd_params(const Flags& f) {
    auto rc = load(f);
    auto [a, b] = exponents(rc);
    Manifest m;
    m.doc["command"] = "params";
    m.doc["config"] = config_json(rc);
    for (int k : rc.k) m.doc["params"].push_back(params_json(construction::derive_params(rc.n, a, b, k, rc.c, rc.c1)));
    std::cout << m.doc["params"].dump(2) << "\n";
    finish(rc.out_dir, m);
    return 0;
}

int cmd_build(const Flags& f) {
    auto rc = load(f);
    auto [a, b] = exponents(rc);
    Manifest m;
    m.doc["command"] = "build";
    m.doc["config"] = config_json(rc);
    std::vector<construction::SlabGrid> grids;
    for (int k : rc.k) {
        auto p = construction::derive_params(rc.n, a, b, k, rc.c, rc.c1);
        auto g = construction::build_slab_grid(p, construction::Box::cube(rc.n, 0.0, rc.box), nullptr, rc.caps);
        auto pj = params_json(p);
        pj["slab_count"] = g.slabs.size();
        pj["covering_count_prediction"] = std::pow(double(p.R), (rc.n - 1) * a + b) * std::pow(rc.box, rc.n);
        m.doc["params"].push_back(pj);
        std::printf("k=%d slabs=%zu\n", k, g.slabs.size());
        grids.push_back(std::move(g));
    }
    m.stage("build");
    emit(rc.out_dir, "slabs.csv", checks::slabs_csv(grids), m);
    finish(rc.out_dir, m);
    return 0;
}

int cmd_select(const Flags& f) {
    auto rc = load(f, false);
    if (!rc.Q) throw PreconditionError("select needs Q");
    Manifest m;
    m.doc["command"] = "select";
    auto fam = fractions::enumerate_admissible(rc.n, *rc.Q, rc.caps);
    auto sel = fractions::select_separated(fam, rc.epsilon);
    m.doc["selection"] = {{"n", rc.n},
                          {"Q", *rc.Q},
                          {"epsilon", rc.epsilon},
                          {"family", fam.items.size()},
                          {"restricted", sel.stages.restricted},
                          {"restricted_ratio", sel.restricted_ratio},
                          {"restricted_tails", sel.stages.restricted_tails},
                          {"desirable_tails", sel.stages.desirable_tails},
                          {"kept_tails", sel.stages.kept_tails},
                          {"kept", sel.kept.size()},
                          {"cube_side", sel.cube_side},
                          {"separation", std::isinf(sel.separation) ? json("inf") : json(sel.separation)},
                          {"failure", sel.failure ? json(*sel.failure) : json(nullptr)}};
    std::printf("kept %zu of %zu\n", sel.kept.size(), fam.items.size());
    if (sel.failure) std::printf("%s\n", sel.failure->c_str());
    emit(rc.out_dir, "fractions.csv", checks::fractions_csv(sel.kept, rc.n), m);
    finish(rc.out_dir, m);
    return 0;
}

int cmd_verify(const Flags& f) {
    auto rc = load(f);
    auto [a, b] = exponents(rc);
    Manifest m;
    m.doc["command"] = "verify";
    m.doc["config"] = config_json(rc);
    auto samples = checks::lower_bound_sweep(rc.n, a, b, rc.k, rc.c, rc.c1, rc.seed);
    std::vector<int> flags(samples.size(), -1);
    double lo = 1e300, hi = 0, pert = 0;
    for (const auto& s : samples) {
        lo = std::min(lo, s.ratio);
        hi = std::max(hi, s.ratio);
        pert = std::max(pert, s.pert_mag / s.main_mag);
    }
    m.stage("lower_bound_sweep");
    bool ok = lo >= 0.25 && hi <= 4.0;
    m.doc["checks"]["ratio_band"] = {{"passed", ok}, {"min", lo}, {"max", hi}, {"samples", samples.size()}};
    m.doc["checks"]["perturbation"] = {{"passed", pert <= 0.5}, {"max_pert_over_main", pert}};
    ok &= pert <= 0.5;
    if (rc.k_star) {
        std::vector<construction::CounterexampleParams> levels;
        std::vector<int> others;
        for (int k : rc.k) {
            levels.push_back(construction::derive_params(rc.n, a, b, k, rc.c, rc.c1));
            if (k != *rc.k_star) others.push_back(k);
        }
        const auto& star = *std::find_if(levels.begin(), levels.end(), [&](auto& p) { return p.k == *rc.k_star; });
        auto bump = std::make_shared<const construction::BumpProfile>(construction::BumpProfile::smooth());
        auto pts = evolution::sampling_plan(star, star.c0, rc.c1, 4, rc.seed, 12);
        auto rep = evolution::interference_audit(*rc.k_star, others, levels, pts, bump);
        for (const auto& row : rep.rows) {
            samples.push_back(evolution::evaluate_sample(row.point, star, bump, false));
            flags.push_back(row.worst_fraction <= evolution::interference_tolerance ? 1 : 0);
        }
        m.doc["checks"]["interference"] = {{"passed", rep.passed},
                                           {"worst_fraction", rep.worst_fraction},
                                           {"min_star_over_k", rep.min_star_over_k},
                                           {"measured_C", rep.measured_C}};
        ok &= rep.passed;
        m.stage("interference");
    }
    std::printf("ratios in [%.4f, %.4f], max pert/main %.4f\n", lo, hi, pert);
    emit(rc.out_dir, "samples.csv", checks::samples_csv(samples, flags, rc.n), m);
    finish(rc.out_dir, m);
    return ok ? 0 : 1;
}

int cmd_dim(const Flags& f) {
    auto rc = load(f);
    auto [a, b] = exponents(rc);
    Manifest m;
    m.doc["command"] = "dim";
    m.doc["config"] = config_json(rc);
    std::vector<std::pair<std::string, dimension::FrostmanAudit>> audits;
    std::string box_csv;
    for (int k : rc.k) {
        auto p = construction::derive_params(rc.n, a, b, k, rc.c, rc.c1);
        fractions::FractionFamily fam = fractions::enumerate_admissible(rc.n, p.Q, rc.caps);
        bool type1 = std::abs(b - (2 * a - 1)) < 1e-9;
        if (!type1) {
            auto sel = fractions::select_separated(fam, rc.epsilon);
            fam.items = sel.kept;
        }
        construction::SlabLattice lat(p, fam);
        json entry = params_json(p);
        if (k <= 20) {
            auto curve = dimension::box_count_curve(lat, construction::Box::cube(rc.n, 0.0, rc.box), 1.0 / double(p.R));
            entry["fitted_dim"] = curve.fitted_dim;
            entry["fit_residual"] = curve.residual;
            if (box_csv.empty()) box_csv = checks::boxcount_csv(curve);
            std::printf("k=%d fitted dimension %.4f (alpha %.4f)\n", k, curve.fitted_dim, p.alpha);
        }
        try {
            double beta = p.alpha - 0.1;
            auto au = type1 ? dimension::frostman_audit_type1(lat, rc.delta, beta, 500, rc.seed)
                            : dimension::frostman_audit_type2(lat, rc.delta, beta, rc.epsilon, 500, rc.seed);
            entry["frostman"] = {{"global_C", au.global_C},
                                 {"normalization", au.normalization},
                                 {"density_lower_bound", au.density_lower_bound},
                                 {"passed", au.passed(dimension::frostman_constant)}};
            std::printf("k=%d Frostman C %.4f\n", k, au.global_C);
            audits.emplace_back("k" + std::to_string(k), au);
        } catch (const PreconditionError& e) {
            entry["frostman"] = {{"skipped", e.what()}};
        }
        m.doc["params"].push_back(entry);
    }
    m.stage("dimension");
    if (!box_csv.empty()) emit(rc.out_dir, "boxcount.csv", box_csv, m);
    emit(rc.out_dir, "frostman.csv", checks::frostman_csv(audits), m);
    finish(rc.out_dir, m);
    return 0;
}

int cmd_sobolev(const Flags& f) {
    auto rc = load(f, false);
    double a = rc.a, b = rc.b;
    if (rc.alpha) std::tie(a, b) = exponents(rc);
    if (!rc.alpha && a == 0) throw PreconditionError("sobolev needs (a, b) or alpha");
    double s = construction::s_from_ab(rc.n, a, b);
    double sp = rc.s_prime ? *rc.s_prime : s - 0.1;
    auto ser = construction::sobolev_partial_norm(rc.k0, rc.k1, s, sp);
    io::Csv csv({"k", "term", "partial"});
    for (std::size_t i = 0; i < ser.terms.size(); ++i)
        csv.row({io::fmt((long long)(rc.k0 + i)), io::fmt(ser.terms[i]), io::fmt(ser.partial[i])});
    std::cout << csv.str();
    std::printf("s=%.6f s'=%.6f ratio %.12f (k-corrected %.12f, 2^(2(s'-s)) %.12f): %s\n", s, sp, ser.tail_ratio,
                ser.corrected_ratio, ser.geometric_ratio, ser.converges ? "converges" : "diverges");
    Manifest m;
    m.doc["command"] = "sobolev";
    m.doc["sobolev"] = {{"s", s}, {"s_prime", sp}, {"sum", ser.sum}, {"converges", ser.converges}};
    emit(rc.out_dir, "sobolev.csv", csv.str(), m);
    finish(rc.out_dir, m);
    return 0;
}

int cmd_all(const Flags& f) {
    auto rc = load(f, false);
    Manifest m;
    m.doc["command"] = "all";
    m.doc["seed"] = rc.seed;
    checks::Artifacts art;
    bool ok = true;
    std::set<std::string> names;
    for (const auto& spec : checks::registry()) {
        checks::CheckResult r;
        try {
            r = checks::run_check(spec.id, rc.seed, &art);
        } catch (const std::exception& e) {
            r.id = spec.id;
            r.name = spec.name;
            r.detail = std::string("error: ") + e.what();
        }
        ok &= r.passed;
        names.insert(r.name);
        m.doc["checks"][r.name] = {{"criterion", r.id},
                                   {"passed", r.passed},
                                   {"measured", r.measured},
                                   {"detail", r.detail},
                                   {"seconds", r.seconds}};
        m.doc["timing"][r.name] = r.seconds;
        std::printf("[%s] %d %s: %s\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.detail.c_str());
        std::fflush(stdout);
    }
    if (names.size() != checks::registry().size()) throw InvariantViolation("manifest check set differs from registry");
    emit(rc.out_dir, "samples.csv", checks::samples_csv(art.samples, art.interference_flags, 2), m);
    if (art.curve) emit(rc.out_dir, "boxcount.csv", checks::boxcount_csv(*art.curve), m);
    emit(rc.out_dir, "frostman.csv", checks::frostman_csv(art.audits), m);
    if (art.selection) emit(rc.out_dir, "fractions.csv", checks::fractions_csv(art.selection->kept, 3), m);
    finish(rc.out_dir, m);
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"divergence-set laboratory"};
    app.require_subcommand(1);

    long long ga = 1, gb = 0, gq = 1, lo = 0, hi = 0;
    auto* gauss = app.add_subcommand("gauss", "complete quadratic Gauss sum");
    gauss->add_option("--a", ga)->required();
    gauss->add_option("--b", gb)->required();
    gauss->add_option("--q", gq)->required();
    auto* weyl = app.add_subcommand("weyl", "incomplete quadratic sum over [lo, hi]");
    weyl->add_option("--a", ga)->required();
    weyl->add_option("--b", gb)->required();
    weyl->add_option("--q", gq)->required();
    weyl->add_option("--lo", lo)->required();
    weyl->add_option("--hi", hi)->required();

    std::map<std::string, Flags> flags;
    std::map<std::string, CLI::App*> cmds;
    for (const char* name : {"params", "build", "select", "verify", "dim", "sobolev", "all"}) {
        cmds[name] = app.add_subcommand(name);
        add_config_flags(cmds[name], flags[name]);
    }
    CLI11_PARSE(app, argc, argv);

    try {
        if (gauss->parsed() || weyl->parsed()) {
            expsum::QuadraticPhase ph{ga, gb, gq};
            auto r = gauss->parsed() ? expsum::gauss_sum(ph) : expsum::weyl_sum(ph, {lo, hi});
            std::printf("value %.10f %+.10fi\nmagnitude %.7f\nterms %lld\n", r.value.real(), r.value.imag(), r.magnitude,
                        (long long)r.terms);
            return 0;
        }
        if (cmds["params"]->parsed()) return cmd_params(flags["params"]);
        if (cmds["build"]->parsed()) return cmd_build(flags["build"]);
        if (cmds["select"]->parsed()) return cmd_select(flags["select"]);
        if (cmds["verify"]->parsed()) return cmd_verify(flags["verify"]);
        if (cmds["dim"]->parsed()) return cmd_dim(flags["dim"]);
        if (cmds["sobolev"]->parsed()) return cmd_sobolev(flags["sobolev"]);
        if (cmds["all"]->parsed()) return cmd_all(flags["all"]);
    } catch (const PreconditionError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
