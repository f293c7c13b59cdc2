// curvlab: geometric analysis on weighted graphs from the command line.
//
// Subcommands: validate, gen, curvature, heat, modified-heat. JSON reports
// go to stdout and embed their run manifest; CSV traces go to --csv.
// Exit codes: 0 ok, 2 input/validation error, 3 check or verifier failure,
// 4 oracle disagreement, 5 vacuous audit refused.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "curvlab/cayley.hpp"
#include "curvlab/curvature.hpp"
#include "curvlab/geometry.hpp"
#include "curvlab/graph.hpp"
#include "curvlab/modified_heat.hpp"
#include "curvlab/operators.hpp"
#include "curvlab/semigroup.hpp"

using json = nlohmann::ordered_json;
using namespace curvlab;

namespace {

constexpr const char* kVersion = "curvlab 1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitCheckFailed = 3;
constexpr int kExitOracleDisagreement = 4;
constexpr int kExitVacuousRefused = 5;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct RunContext {
    std::string command;
    std::vector<std::string> inputs;
    std::uint64_t seed = 0;
    bool deterministic = false;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
};

json make_manifest(const RunContext& ctx, json tolerances) {
    json m;
    m["command"] = ctx.command;
    m["inputs"] = ctx.inputs;
    m["seed"] = ctx.seed;
    m["tolerances"] = std::move(tolerances);
    m["version"] = kVersion;
    m["wall_ms"] = 0.0;
    m["output_digest"] = "";
    return m;
}

/// Stamp wall clock (zeroed in deterministic mode) and the FNV-1a digest
/// of the report with the digest field blanked, then print.
void emit_report(json& report, const RunContext& ctx) {
    double wall = 0.0;
    if (!ctx.deterministic) {
        wall = std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - ctx.t0)
                   .count();
    }
    report["manifest"]["wall_ms"] = wall;
    report["manifest"]["output_digest"] = "";
    char digest[20];
    std::snprintf(digest, sizeof digest, "%016llx",
                  static_cast<unsigned long long>(fnv1a(report.dump())));
    report["manifest"]["output_digest"] = digest;
    std::cout << report.dump(2) << "\n";
}

[[noreturn]] void fail(int code, const std::string& kind, const std::string& detail) {
    json err;
    err["error"] = kind;
    err["detail"] = detail;
    std::cout << err.dump(2) << "\n";
    std::exit(code);
}

WeightedGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(kExitValidation, "io", "cannot open graph file " + path);
    try {
        return read_graph(in);
    } catch (const ValidationError& e) {
        fail(kExitValidation, e.kind(), e.detail());
    }
}

VertexFunction load_function(const std::string& path, const WeightedGraph& g) {
    std::ifstream in(path);
    if (!in) fail(kExitValidation, "io", "cannot open function file " + path);
    try {
        return read_vertex_function(in, g);
    } catch (const ValidationError& e) {
        fail(kExitValidation, e.kind(), e.detail());
    }
}

void write_trace_csv(const std::string& path, const WeightedGraph& g,
                     const SolveTrace& tr) {
    std::ofstream out(path);
    if (!out) fail(kExitValidation, "io", "cannot open csv output " + path);
    out.precision(17);
    out << "t,vertex,u,gamma_u,delta_u\n";
    for (std::size_t i = 0; i < tr.times.size(); ++i)
        for (int v = 0; v < g.vertex_count(); ++v)
            out << tr.times[i] << "," << g.label(v) << "," << tr.u[i][v] << ","
                << tr.gu[i][v] << "," << tr.du[i][v] << "\n";
}

double parse_dim(const std::string& s) {
    if (s == "inf" || s == "infinity") return kInfDim;
    return std::stod(s);
}

json report_json(const GraphValidationReport& r, bool markov) {
    json j;
    j["alpha_observed"] = r.alpha_observed;
    j["markov_residual_max"] = r.markov_residual_max;
    j["reversibility_residual_max"] = r.reversibility_residual_max;
    j["connected"] = r.connected;
    j["max_valence"] = r.max_valence;
    j["valence_bound_ok"] = r.valence_bound_ok;
    j["measure_ratio_ok"] = r.measure_ratio_ok;
    j["d_mu_sup"] = r.d_mu_sup;
    j["markov"] = markov;
    return j;
}

// --- subcommands -----------------------------------------------------------------

int cmd_validate(const std::string& path, RunContext& ctx) {
    auto g = load_graph(path);  // exits 2 on violations
    json rep;
    rep["report"] = report_json(g.validation_report(), g.is_markov());
    rep["manifest"] = make_manifest(
        ctx, {{"tol_markov", kTolMarkov}, {"tol_rev", kTolRev}});
    emit_report(rep, ctx);
    return kExitOk;
}

struct GenOptions {
    std::string cayley;  // zd | torus | cyclic | sym
    int dims = 1;
    int mod = 0;
    int n = 0;
    int radius = -1;
    std::string mode = "markov";
    bool conductance_random = false;
    bool example_z_nonh2 = false;
    int max_vertices = 60;
    std::string out;
};

int cmd_gen(const GenOptions& o, RunContext& ctx) {
    LaplacianMode mode =
        o.mode == "unnormalized" ? LaplacianMode::unnormalized : LaplacianMode::markov;
    WeightedGraph g;
    try {
        if (o.example_z_nonh2) {
            g = z_line_nonh2(o.radius < 0 ? 20 : o.radius);
        } else if (o.conductance_random) {
            g = random_conductance_graph(ctx.seed, o.max_vertices);
        } else if (o.cayley == "zd") {
            g = generate_cayley(GroupSpec::integer_lattice(o.dims), o.radius, mode).graph;
        } else if (o.cayley == "torus") {
            g = generate_cayley(GroupSpec::torus(o.dims, o.mod), o.radius, mode).graph;
        } else if (o.cayley == "cyclic") {
            g = generate_cayley(GroupSpec::cyclic(o.mod), o.radius, mode).graph;
        } else if (o.cayley == "sym") {
            g = generate_cayley(GroupSpec::symmetric(o.n), o.radius, mode).graph;
        } else {
            fail(kExitValidation, "usage",
                 "choose --cayley, --conductance-random or --example-z-nonh2");
        }
    } catch (const ValidationError& e) {
        fail(kExitValidation, e.kind(), e.detail());
    }
    if (o.out.empty()) {
        write_graph(std::cout, g);
    } else {
        std::ofstream out(o.out);
        if (!out) fail(kExitValidation, "io", "cannot open output " + o.out);
        write_graph(out, g);
    }
    return kExitOk;
}

struct CurvatureOptions {
    std::string graph;
    std::string n = "inf";
    std::optional<double> k;
    bool profile = false;
    int oracle_trials = 2000;
};

int cmd_curvature(const CurvatureOptions& o, RunContext& ctx) {
    auto g = load_graph(o.graph);
    double n = parse_dim(o.n);
    if (!(n >= 1.0)) fail(kExitValidation, "usage", "--n must be >= 1 or inf");

    json rep;
    json tol = {{"psd_tol_base", 1e-9},
                {"null_threshold", 1e-12},
                {"oracle_trials", o.oracle_trials}};
    rep["manifest"] = make_manifest(ctx, tol);
    rep["n"] = std::isfinite(n) ? json(n) : json("inf");
    if (std::isfinite(n) && n != std::floor(n))
        rep["note"] = "non-integer n accepted by monotonicity (extension)";

    bool pass = true, oracle_ok = true;
    if (o.profile || !o.k.has_value()) {
        auto p = curvature_profile(g, n);
        json per = json::array();
        for (std::size_t i = 0; i < p.scope.size(); ++i)
            per.push_back({{"label", g.label(p.scope[i])}, {"k_opt", p.k_opt[i]}});
        rep["profile"] = per;
        rep["k_inf_graph"] = p.k_inf_graph;
        // oracle cross-check at K_opt - 0.01 on a few vertices
        for (std::size_t i = 0; i < p.scope.size(); i += std::max<std::size_t>(1, p.scope.size() / 8)) {
            auto b = brute_force_cd(g, p.scope[i], p.k_opt[i] - 0.01, n,
                                    o.oracle_trials, ctx.seed + i);
            if (!b.holds) oracle_ok = false;
        }
    }
    if (o.k.has_value()) {
        auto v = check_cd(g, {*o.k, n, {}});
        json per = json::array();
        for (auto& pv : v.per_vertex)
            per.push_back({{"label", g.label(pv.vertex)},
                           {"satisfied", pv.satisfied},
                           {"min_eig", pv.min_eigenvalue}});
        rep["k"] = *o.k;
        rep["verdict"] = per;
        rep["satisfied"] = v.satisfied;
        pass = v.satisfied;
        // independent oracle on every vertex the solver accepted
        for (auto& pv : v.per_vertex) {
            auto b = brute_force_cd(g, pv.vertex, *o.k, n, o.oracle_trials,
                                    ctx.seed + pv.vertex);
            if (pv.satisfied && !b.holds) oracle_ok = false;
        }
    }
    rep["oracle_agreement"] = oracle_ok;
    emit_report(rep, ctx);
    if (!oracle_ok) return kExitOracleDisagreement;
    return pass ? kExitOk : kExitCheckFailed;
}

struct HeatOptions {
    std::string graph;
    std::vector<double> times;
    std::string f_path;
    std::string audit;  // "K,n"
    int corpus = 0;
    std::string csv;
};

int cmd_heat(const HeatOptions& o, RunContext& ctx) {
    auto g = load_graph(o.graph);
    VertexFunction f = o.f_path.empty() ? VertexFunction(g.vertex_count(), 1.0)
                                        : load_function(o.f_path, g);
    json rep;
    rep["manifest"] = make_manifest(
        ctx, {{"semigroup_tol", kSemigroupTol}, {"audit_tol", 1e-8}});
    json values = json::array();
    for (double t : o.times) {
        auto p = apply_semigroup(g, t, f);
        json row;
        row["t"] = t;
        json uv;
        for (int v = 0; v < g.vertex_count(); ++v) uv[g.label(v)] = p[v];
        row["ptf"] = uv;
        values.push_back(row);
    }
    rep["semigroup"] = values;

    bool pass = true;
    if (!o.audit.empty()) {
        auto comma = o.audit.find(',');
        if (comma == std::string::npos)
            fail(kExitValidation, "usage", "--audit expects K,n");
        double k = std::stod(o.audit.substr(0, comma));
        double n = parse_dim(o.audit.substr(comma + 1));
        bool kn_holds = std::isfinite(n) && check_cd(g, {k, n, {}}).satisfied;
        bool kinf_holds = check_cd(g, {k, kInfDim, {}}).satisfied;
        if (!kn_holds && !kinf_holds)
            fail(kExitVacuousRefused, "vacuous-audit",
                 "graph does not satisfy the requested curvature condition");
        std::vector<VertexFunction> corpus{f};
        std::mt19937_64 rng(ctx.seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int i = 0; i < o.corpus; ++i) {
            VertexFunction r(g.vertex_count());
            for (auto& x : r) x = gauss(rng);
            corpus.push_back(r);
        }
        auto audit = audit_gradient_estimates(g, corpus, o.times, k, n, kn_holds,
                                              kinf_holds);
        json arecs = json::array();
        for (auto& r : audit.records)
            arecs.push_back({{"inequality", r.name},
                             {"max_violation", r.max_violation},
                             {"tolerance", r.tolerance},
                             {"vacuous", r.vacuous},
                             {"pass", r.pass}});
        rep["audit"] = {{"k", k},
                        {"n", std::isfinite(n) ? json(n) : json("inf")},
                        {"cd_kn_established", kn_holds},
                        {"cd_kinf_established", kinf_holds},
                        {"corpus_size", audit.corpus_size},
                        {"records", arecs}};
        pass = audit.all_pass();
    }
    emit_report(rep, ctx);
    return pass ? kExitOk : kExitCheckFailed;
}

struct ModifiedHeatOptions {
    std::string graph;
    std::string u0_path;
    double horizon = 0.0;
    double step = 0.0;
    std::string method = "picard";
    std::vector<std::string> verify;
    std::string pairs_path;
    std::vector<double> gammas{0.5, 8.0};
    std::string n = "inf";
    std::string csv;
};

int cmd_modified_heat(const ModifiedHeatOptions& o, RunContext& ctx) {
    auto g = load_graph(o.graph);
    VertexFunction u0 = load_function(o.u0_path, g);
    const double g0 = sup_norm(gamma_sq(g, u0));
    const bool admissible = g0 < g.alpha() / 2.0;

    SolveConfig cfg;
    cfg.u0 = u0;
    cfg.horizon = o.horizon;
    cfg.grid_step = o.step;
    cfg.global_extension = admissible;
    cfg.method = o.method == "rk4"    ? SolveMethod::rk4
                 : o.method == "both" ? SolveMethod::both
                                      : SolveMethod::picard;

    SolveTrace tr;
    try {
        if (cfg.method == SolveMethod::rk4)
            tr = solve_rk4(g, u0, o.horizon, o.step);
        else if (cfg.method == SolveMethod::both)
            tr = solve_both(g, cfg);
        else
            tr = solve_picard(g, cfg);
    } catch (const ValidationError& e) {
        fail(kExitValidation, e.kind(), e.detail());
    }

    json rep;
    rep["manifest"] = make_manifest(ctx, {{"picard_tol", cfg.picard_tol},
                                          {"picard_max_iter", cfg.picard_max_iter},
                                          {"verify_tol", 1e-7}});
    rep["gamma_u0_sup"] = g0;
    rep["admissible"] = admissible;
    rep["t_local"] = g0 > 0.0 ? json(t_local_horizon(g0)) : json("inf");
    json segs = json::array();
    for (auto& s : tr.segments)
        segs.push_back({{"t_start", s.t_start},
                        {"t_end", s.t_end},
                        {"t_local", std::isfinite(s.t_local) ? json(s.t_local) : json("inf")},
                        {"iterations", s.iterations},
                        {"m_k", s.m_k},
                        {"n_k", s.n_k},
                        {"contraction", s.contraction}});
    rep["picard_segments"] = segs;
    if (tr.oracle_deviation >= 0.0) rep["oracle_deviation"] = tr.oracle_deviation;

    bool pass = true;
    if (!o.verify.empty()) {
        // hypotheses established in-run
        double n = parse_dim(o.n);
        json hyp;
        json checks = json::array();
        auto want = [&](const std::string& name) {
            for (auto& v : o.verify)
                if (v == name) return true;
            return false;
        };
        auto push = [&](const InequalityReport& r) {
            checks.push_back({{"name", r.name},
                              {"max_violation", r.max_violation},
                              {"tolerance", r.tolerance},
                              {"pass", r.pass},
                              {"detail", r.detail}});
            pass = pass && r.pass;
        };
        if (want("decay")) {
            auto prof = curvature_profile(g, kInfDim);
            hyp["k_infinity"] = prof.k_inf_graph;
            push(verify_gradient_decay(tr, prof.k_inf_graph));
        }
        if (want("oscillation")) {
            if (!admissible)
                fail(kExitVacuousRefused, "vacuous-audit",
                     "edge oscillation needs ||Gamma u0||_inf < alpha/2");
            push(verify_edge_oscillation(g, tr));
        }
        if (want("liyau") || want("harnack")) {
            if (!std::isfinite(n))
                fail(kExitValidation, "usage", "--n must be finite for li-yau/harnack");
            bool cd0n = check_cd(g, {0.0, n, {}}).satisfied;
            hyp["cd_0_n_established"] = cd0n;
            if (!cd0n)
                fail(kExitVacuousRefused, "vacuous-audit",
                     "graph does not satisfy CD(0,n)");
            if (want("liyau")) push(verify_li_yau(tr, n));
            if (want("harnack")) {
                std::vector<HarnackPair> pairs;
                if (!o.pairs_path.empty()) {
                    std::ifstream in(o.pairs_path);
                    if (!in) fail(kExitValidation, "io", "cannot open " + o.pairs_path);
                    std::string lx, ly;
                    double t1, t2;
                    while (in >> lx >> ly >> t1 >> t2)
                        pairs.push_back({g.index_of(lx), g.index_of(ly), t1, t2});
                } else {
                    double t1 = 0.25 * o.horizon, t2 = 0.75 * o.horizon;
                    for (int x = 0; x < g.vertex_count(); ++x)
                        for (int y = 0; y < g.vertex_count(); ++y)
                            pairs.push_back({x, y, t1, t2});
                }
                try {
                    push(verify_harnack(g, tr, n, pairs));
                } catch (const ValidationError& e) {
                    fail(kExitValidation, e.kind(), e.detail());
                }
            }
        }
        if (want("comparison")) {
            if (!admissible)
                fail(kExitVacuousRefused, "vacuous-audit",
                     "comparison needs ||Gamma u0||_inf < alpha/2");
            for (double gv : o.gammas) {
                try {
                    push(verify_comparison(g, tr, gv));
                } catch (const ValidationError& e) {
                    fail(kExitValidation, e.kind(), e.detail());
                }
            }
        }
        rep["hypotheses"] = hyp;
        rep["verifications"] = checks;
    }
    if (!o.csv.empty()) write_trace_csv(o.csv, g, tr);
    emit_report(rep, ctx);
    return pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geometric analysis on weighted graphs"};
    app.require_subcommand(1);

    RunContext ctx;
    app.add_flag("--deterministic", ctx.deterministic,
                 "zero wall-clock in manifests for byte-identical reports");
    app.add_option("--seed", ctx.seed, "random seed");

    std::string graph_path;
    auto* validate = app.add_subcommand("validate", "validate a graph file");
    validate->add_option("graph", graph_path, "graph file")->required();

    GenOptions gen;
    auto* gensub = app.add_subcommand("gen", "generate a graph file");
    gensub->add_option("--cayley", gen.cayley, "zd|torus|cyclic|sym");
    gensub->add_option("--dims", gen.dims, "lattice/torus dimension");
    gensub->add_option("--mod", gen.mod, "torus/cyclic modulus");
    gensub->add_option("--n", gen.n, "symmetric group order");
    gensub->add_option("--radius", gen.radius, "truncation radius");
    gensub->add_option("--mode", gen.mode, "markov|unnormalized");
    gensub->add_flag("--conductance-random", gen.conductance_random,
                     "random conductance graph from --seed");
    gensub->add_option("--max-vertices", gen.max_vertices, "random graph size cap");
    gensub->add_flag("--example-z-nonh2", gen.example_z_nonh2,
                     "integer-line example with divergent d_mu_sup");
    gensub->add_option("-o,--out", gen.out, "output file (default stdout)");

    CurvatureOptions curv;
    auto* curvsub = app.add_subcommand("curvature", "CD(K,n) verdicts and profiles");
    curvsub->add_option("graph", curv.graph, "graph file")->required();
    curvsub->add_option("--n", curv.n, "dimension parameter (>= 1 or inf)");
    double k_value = 0.0;
    auto* kopt = curvsub->add_option("--k", k_value, "curvature constant to check");
    curvsub->add_flag("--profile", curv.profile, "compute per-vertex optimal K");
    curvsub->add_option("--oracle-trials", curv.oracle_trials,
                        "Monte-Carlo trials for the cross-check");

    HeatOptions heat;
    auto* heatsub = app.add_subcommand("heat", "apply P_t and audit estimates");
    heatsub->add_option("graph", heat.graph, "graph file")->required();
    heatsub->add_option("--t", heat.times, "time points")->required();
    heatsub->add_option("--f", heat.f_path, "vertex function file (default 1)");
    heatsub->add_option("--audit", heat.audit, "audit gradient estimates at K,n");
    heatsub->add_option("--corpus", heat.corpus, "extra random audit functions");
    heatsub->add_option("--csv", heat.csv, "trace csv path");

    ModifiedHeatOptions mh;
    auto* mhsub = app.add_subcommand("modified-heat",
                                     "solve du/dt = Delta u + Gamma u and verify");
    mhsub->add_option("graph", mh.graph, "graph file")->required();
    mhsub->add_option("--u0", mh.u0_path, "initial datum file")->required();
    mhsub->add_option("--horizon", mh.horizon, "final time")->required();
    mhsub->add_option("--step", mh.step, "grid step")->required();
    mhsub->add_option("--method", mh.method, "picard|rk4|both");
    mhsub->add_option("--verify", mh.verify,
                      "decay,oscillation,liyau,harnack,comparison")
        ->delimiter(',');
    mhsub->add_option("--pairs", mh.pairs_path, "harnack pairs file");
    mhsub->add_option("--gamma", mh.gammas, "comparison exponents")->delimiter(',');
    mhsub->add_option("--n", mh.n, "dimension for li-yau/harnack");
    mhsub->add_option("--csv", mh.csv, "trace csv path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            ctx.command = "validate";
            ctx.inputs = {graph_path};
            return cmd_validate(graph_path, ctx);
        }
        if (gensub->parsed()) {
            ctx.command = "gen";
            return cmd_gen(gen, ctx);
        }
        if (curvsub->parsed()) {
            ctx.command = "curvature";
            ctx.inputs = {curv.graph};
            if (kopt->count() > 0) curv.k = k_value;
            return cmd_curvature(curv, ctx);
        }
        if (heatsub->parsed()) {
            ctx.command = "heat";
            ctx.inputs = {heat.graph};
            if (!heat.f_path.empty()) ctx.inputs.push_back(heat.f_path);
            return cmd_heat(heat, ctx);
        }
        if (mhsub->parsed()) {
            ctx.command = "modified-heat";
            ctx.inputs = {mh.graph, mh.u0_path};
            if (!mh.pairs_path.empty()) ctx.inputs.push_back(mh.pairs_path);
            return cmd_modified_heat(mh, ctx);
        }
    } catch (const ValidationError& e) {
        fail(kExitValidation, e.kind(), e.detail());
    } catch (const std::exception& e) {
        fail(kExitValidation, "internal", e.what());
    }
    return kExitOk;
}
