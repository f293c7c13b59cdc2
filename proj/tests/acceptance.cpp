// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned here, not read from configuration.
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "curvlab/cayley.hpp"
#include "curvlab/curvature.hpp"
#include "curvlab/geometry.hpp"
#include "curvlab/graph.hpp"
#include "curvlab/modified_heat.hpp"
#include "curvlab/operators.hpp"
#include "curvlab/semigroup.hpp"

using namespace curvlab;

namespace {

constexpr int kCorpusSeeds = 200;

VertexFunction random_f(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    VertexFunction f(n);
    for (auto& v : f) v = gauss(rng);
    return f;
}

WeightedGraph two_vertex() {
    return build_from_kernel({{"a", 1.0}, {"b", 1.0}}, {{"a", "b", 1.0, 1.0}});
}

VertexFunction scaled_indicator(const WeightedGraph& g, int v, double target) {
    VertexFunction f(g.vertex_count(), 0.0);
    f[v] = 1.0;
    double g0 = sup_norm(gamma_sq(g, f));
    for (auto& x : f) x *= std::sqrt(target / g0);
    return f;
}

// Shared solver runs for criteria 7 and 8: u0 scaled so
// ||Gamma u0||_inf = 0.9 * alpha / 2, horizon = 2 T_local, 32 grid nodes.
struct HeatRun {
    WeightedGraph g;
    SolveConfig cfg;
    SolveTrace trace;
};

HeatRun make_run(WeightedGraph g) {
    HeatRun run{std::move(g), {}, {}};
    double target = 0.9 * run.g.alpha() / 2.0;
    run.cfg.u0 = scaled_indicator(run.g, 0, target);
    double t_local = t_local_horizon(target);
    run.cfg.horizon = 2.0 * t_local;
    run.cfg.grid_step = run.cfg.horizon / 32.0;
    run.cfg.global_extension = true;
    run.cfg.method = SolveMethod::both;
    run.trace = solve_both(run.g, run.cfg);
    return run;
}

bool criterion1() {
    for (std::uint64_t seed = 0; seed < kCorpusSeeds; ++seed) {
        auto g = random_conductance_graph(seed);
        if (!check_cd(g, {-1.0, 2.0, {}}).satisfied) return false;
    }
    return true;
}

bool criterion2() {
    for (std::uint64_t seed = 0; seed < kCorpusSeeds; ++seed) {
        auto g = random_conductance_graph(seed);
        std::mt19937_64 rng(seed * 7919 + 1);
        for (int i = 0; i < 100; ++i) {
            auto f = random_f(g.vertex_count(), rng);
            double m = sup_norm(f);
            double scale = std::max(1.0, m * m);
            if (sup_norm(bochner_residual(g, f)) > 1e-10 * scale) return false;
        }
    }
    return true;
}

bool criterion3() {
    for (int d : {1, 2, 3}) {
        auto cg = generate_cayley(GroupSpec::torus(d, 7));
        if (!check_cd(cg.graph, {0.0, 2.0 * d, {}}).satisfied) return false;
    }
    auto s3 = generate_cayley(GroupSpec::symmetric(3), -1, LaplacianMode::unnormalized);
    if (!check_cd(s3.graph, {0.0, 6.0, {}}).satisfied) return false;
    auto s4 = generate_cayley(GroupSpec::symmetric(4), -1, LaplacianMode::unnormalized);
    if (!check_cd(s4.graph, {0.0, 12.0, {}}).satisfied) return false;
    // abelian groups have exactly vanishing ricci part
    auto t2 = generate_cayley(GroupSpec::torus(2, 7), -1, LaplacianMode::unnormalized);
    std::mt19937_64 rng(11);
    for (int i = 0; i < 20; ++i) {
        auto f = random_f(t2.graph.vertex_count(), rng);
        for (int x = 0; x < t2.graph.vertex_count(); x += 5)
            if (cayley_partials(t2, f, x).ricci_part != 0.0) return false;
    }
    return true;
}

bool criterion4() {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto g = random_conductance_graph(seed, 30);
        int x = static_cast<int>(seed) % g.vertex_count();
        double kopt = optimal_k(g, x, 2.0);
        double below = kopt - 0.01, above = kopt + 0.01;
        bool solver_below = check_cd_at(g, x, below, 2.0).satisfied;
        bool solver_above = check_cd_at(g, x, above, 2.0).satisfied;
        bool oracle_below = brute_force_cd(g, x, below, 2.0, 10000, seed).holds;
        bool oracle_above = brute_force_cd(g, x, above, 2.0, 10000, seed).holds;
        if (solver_below != oracle_below || solver_above != oracle_above)
            return false;
        if (!solver_below || solver_above) return false;
    }
    return true;
}

bool criterion5() {
    auto cg = generate_cayley(GroupSpec::torus(2, 7));
    const auto& g = cg.graph;
    std::mt19937_64 rng(5);
    auto f = random_f(g.vertex_count(), rng);
    VertexFunction one(g.vertex_count(), 1.0);
    for (double t : {0.1, 1.0, 5.0}) {
        auto p1 = apply_semigroup(g, t, one);
        for (double v : p1)
            if (std::abs(v - 1.0) > 1e-12) return false;
        auto a = apply_semigroup(g, 2.0 * t, f);
        auto b = apply_semigroup(g, t, apply_semigroup(g, t, f));
        for (std::size_t i = 0; i < a.size(); ++i)
            if (std::abs(a[i] - b[i]) > 2e-10) return false;
    }
    auto tv = two_vertex();
    auto p = apply_semigroup(tv, std::log(2.0) / 2.0, VertexFunction{0.0, 1.0});
    return std::abs(p[0] - 0.25) <= 1e-12 && std::abs(p[1] - 0.75) <= 1e-12;
}

bool criterion6() {
    auto cg = generate_cayley(GroupSpec::torus(2, 7));
    const auto& g = cg.graph;
    if (!check_cd(g, {0.0, 4.0, {}}).satisfied) return false;
    std::mt19937_64 rng(6);
    std::vector<VertexFunction> corpus;
    for (int i = 0; i < 50; ++i) corpus.push_back(random_f(g.vertex_count(), rng));
    auto rep = audit_gradient_estimates(g, corpus, {0.1, 0.5, 1.0, 2.0}, 0.0, 4.0,
                                        true, true);
    bool saw_bis = false, saw_ptf2 = false;
    for (const auto& r : rep.records) {
        if (r.name == "gammapt2bis") {
            saw_bis = true;
            if (r.vacuous || r.max_violation > 1e-8) return false;
        }
        if (r.name == "ptf2") {
            saw_ptf2 = true;
            if (r.vacuous || r.max_violation > 1e-8) return false;
        }
    }
    return saw_bis && saw_ptf2;
}

bool criterion7(const HeatRun& tv, const HeatRun& torus) {
    for (const HeatRun* run : {&tv, &torus}) {
        if (run->trace.oracle_deviation < 0.0 ||
            run->trace.oracle_deviation > 1e-6)
            return false;
        double m_bound = 2.0 * std::sqrt(sup_norm(gamma_sq(run->g, run->cfg.u0)));
        for (const auto& seg : run->trace.segments) {
            for (double mk : seg.m_k)
                if (mk > m_bound + 1e-12) return false;
            for (double ratio : seg.contraction)
                if (ratio > 0.6) return false;
        }
    }
    return true;
}

bool criterion8(const HeatRun& tv, const HeatRun& torus) {
    struct Audit {
        const HeatRun* run;
        double n;  // dimension for li-yau / harnack
    };
    for (Audit a : {Audit{&tv, 2.0}, Audit{&torus, 4.0}}) {
        const auto& g = a.run->g;
        const auto& tr = a.run->trace;
        double k = curvature_profile(g, kInfDim).k_inf_graph;
        if (&*a.run == &torus) k = 0.0;
        if (!verify_gradient_decay(tr, k).pass) return false;
        if (!verify_edge_oscillation(g, tr).pass) return false;
        if (!verify_li_yau(tr, a.n).pass) return false;
        double t1 = 0.25 * a.run->cfg.horizon, t2 = 0.75 * a.run->cfg.horizon;
        std::vector<HarnackPair> pairs;
        for (int x = 0; x < g.vertex_count(); ++x)
            for (int y = 0; y < g.vertex_count(); ++y)
                pairs.push_back({x, y, t1, t2});
        if (!verify_harnack(g, tr, a.n, pairs).pass) return false;
        if (!verify_comparison(g, tr, 0.5).pass) return false;
        if (!verify_comparison(g, tr, 8.0).pass) return false;
    }
    return true;
}

bool criterion9() {
    for (std::uint64_t seed = 0; seed < kCorpusSeeds; ++seed) {
        auto g = random_conductance_graph(seed);
        int x = static_cast<int>(seed) % g.vertex_count();
        if (!check_local_doubling(volume_profile(g, x, 8)).pass) return false;
    }
    auto c1 = generate_cayley(GroupSpec::integer_lattice(1), 20);
    auto p1 = volume_profile(c1.graph, c1.graph.index_of("0"), 10);
    for (int r = 0; r <= 10; ++r)
        if (p1.volumes[r] != 2.0 * (2 * r + 1)) return false;
    auto c2 = generate_cayley(GroupSpec::integer_lattice(2), 22);
    auto p2 = volume_profile(c2.graph, c2.graph.index_of("0,0"), 20);
    double sup_ratio = 0.0;
    for (int r = 1; r <= 10; ++r)
        sup_ratio = std::max(sup_ratio, p2.volumes[2 * r] / p2.volumes[r]);
    return sup_ratio >= 3.0 && sup_ratio <= 4.5;
}

bool criterion10() {
    auto r = bonnet_myers_check(two_vertex());
    if (std::abs(r.k_inf - 2.0) > 1e-9) return false;
    if (r.diameter != 1 || std::abs(r.bound - 1.0) > 1e-9 || !r.holds)
        return false;
    for (std::uint64_t seed = 0; seed < kCorpusSeeds; ++seed) {
        auto g = random_conductance_graph(seed);
        auto b = bonnet_myers_check(g);
        if (b.applicable && !b.holds) return false;
    }
    return true;
}

}  // namespace

int main() {
    HeatRun tv = make_run(two_vertex());
    HeatRun torus = make_run(generate_cayley(GroupSpec::torus(2, 7)).graph);

    struct Criterion {
        const char* name;
        std::function<bool()> check;
    };
    std::vector<Criterion> criteria = {
        {"1 universal CD(-1,2) on 200 conductance graphs", criterion1},
        {"2 bochner residual <= 1e-10*scale, 100 functions/graph", criterion2},
        {"3 cayley curvature: tori CD(0,2d), S3/S4, abelian ricci = 0", criterion3},
        {"4 solver/oracle agreement at K_opt -/+ 0.01, 1e4 trials", criterion4},
        {"5 semigroup: completeness, law, two-vertex closed form", criterion5},
        {"6 gradient estimates on torus(2,7), 50 functions", criterion6},
        {"7 picard vs rk4 <= 1e-6; M_k and contraction bounds", [&] { return criterion7(tv, torus); }},
        {"8 decay/oscillation/li-yau/harnack/comparison audits", [&] { return criterion8(tv, torus); }},
        {"9 doubling: corpus bound, lattice counting, sup ratio", criterion9},
        {"10 bonnet-myers diameter bounds", criterion10},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        bool ok = false;
        std::string note;
        try {
            ok = c.check();
        } catch (const std::exception& e) {
            note = std::string(" (") + e.what() + ")";
        }
        std::printf("[%s] %s%s\n", ok ? "PASS" : "FAIL", c.name, note.c_str());
        if (!ok) ++failures;
    }
    return failures;
}
