#ifndef CURVLAB_MODIFIED_HEAT_HPP
#define CURVLAB_MODIFIED_HEAT_HPP

// The modified heat equation du/dt = Delta u + Gamma u: Picard iteration
// on the Duhamel fixed point, a Runge-Kutta oracle, and the inequality
// verifiers (gradient decay, edge oscillation, Li-Yau, Harnack, exponential
// comparison).

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "curvlab/graph.hpp"
#include "curvlab/operators.hpp"
#include "curvlab/semigroup.hpp"

namespace curvlab {

inline constexpr double kPicardTol = 1e-10;
inline constexpr int kPicardMaxIter = 60;

/// Unique solution of x e^x = 1, the lower-regime comparison exponent.
inline double omega_constant() {
    double x = 0.5;
    for (int i = 0; i < 64; ++i) {
        double ex = std::exp(x);
        double step = (x * ex - 1.0) / (ex * (1.0 + x));
        x -= step;
        if (std::abs(step) < 1e-16) break;
    }
    return x;
}

enum class SolveMethod { picard, rk4, both };

struct SolveConfig {
    VertexFunction u0;
    double horizon = 0.0;
    double grid_step = 0.0;
    SolveMethod method = SolveMethod::picard;
    double picard_tol = kPicardTol;
    int picard_max_iter = kPicardMaxIter;
    bool global_extension = false;
};

struct PicardSegmentDiagnostics {
    double t_start = 0.0;
    double t_end = 0.0;
    double t_local = 0.0;  // (1/256) / ||Gamma u(t_start)||_inf
    int iterations = 0;
    std::vector<double> m_k;          // sup_t ||sqrt(Gamma u^k)||_inf
    std::vector<double> n_k;          // sup_t ||Gamma u^{k+1} - Gamma u^k||_inf
    std::vector<double> contraction;  // n_k / n_{k-1}
};

struct SolveTrace {
    std::vector<double> times;
    std::vector<VertexFunction> u;
    std::vector<VertexFunction> gu;  // Gamma u
    std::vector<VertexFunction> du;  // Delta u
    std::vector<PicardSegmentDiagnostics> segments;
    double oracle_deviation = -1.0;  // sup |picard - rk4|; -1 when not computed
};

inline double t_local_horizon(double gamma_sup) {
    return 1.0 / (256.0 * gamma_sup);
}

namespace detail {

inline void fill_derived(const WeightedGraph& g, SolveTrace& tr) {
    tr.gu.resize(tr.u.size());
    tr.du.resize(tr.u.size());
    for (std::size_t i = 0; i < tr.u.size(); ++i) {
        tr.gu[i] = gamma_sq(g, tr.u[i]);
        tr.du[i] = laplacian(g, tr.u[i]);
    }
}

/// One Picard solve on [0, T] with T = nsteps * h, from initial datum w0.
inline std::vector<VertexFunction> picard_segment(const WeightedGraph& g,
                                                  const VertexFunction& w0,
                                                  int nsteps, double h,
                                                  const SolveConfig& cfg,
                                                  PicardSegmentDiagnostics& diag) {
    std::vector<VertexFunction> u(nsteps + 1, w0);
    // u^0 = homogeneous solution (forcing of u^{-1} = 0 is Gamma 0 = 0)
    {
        std::vector<VertexFunction> zero_forcing(nsteps + 1,
                                                 VertexFunction(w0.size(), 0.0));
        u = duhamel_solve(g, w0, zero_forcing, h);
    }
    std::vector<VertexFunction> prev_gamma(nsteps + 1);
    for (int i = 0; i <= nsteps; ++i) prev_gamma[i] = gamma_sq(g, u[i]);

    double prev_nk = -1.0;
    int bad_streak = 0;
    for (int k = 1; k <= cfg.picard_max_iter; ++k) {
        u = duhamel_solve(g, w0, prev_gamma, h);
        double mk = 0.0, nk = 0.0;
        std::vector<VertexFunction> cur_gamma(nsteps + 1);
        for (int i = 0; i <= nsteps; ++i) {
            cur_gamma[i] = gamma_sq(g, u[i]);
            mk = std::max(mk, sup_norm(cur_gamma[i]));
            VertexFunction d(cur_gamma[i].size());
            for (std::size_t v = 0; v < d.size(); ++v)
                d[v] = cur_gamma[i][v] - prev_gamma[i][v];
            nk = std::max(nk, sup_norm(d));
        }
        diag.m_k.push_back(std::sqrt(mk));
        diag.n_k.push_back(nk);
        if (prev_nk > 0.0) {
            double ratio = nk / prev_nk;
            diag.contraction.push_back(ratio);
            if (ratio > 0.9) {
                if (++bad_streak >= 3)
                    throw std::runtime_error("picard iteration diverging");
            } else {
                bad_streak = 0;
            }
        }
        diag.iterations = k;
        prev_gamma = std::move(cur_gamma);
        if (nk <= cfg.picard_tol) break;
        prev_nk = nk;
    }
    return u;
}

}  // namespace detail

inline SolveTrace solve_picard(const WeightedGraph& g, const SolveConfig& cfg) {
    if (!g.is_markov())
        throw ValidationError("markov", "picard solver needs a markov graph");
    if (cfg.horizon <= 0.0 || cfg.grid_step <= 0.0)
        throw ValidationError("grid", "horizon and grid_step must be positive");
    const double h = cfg.grid_step;
    const int nsteps = static_cast<int>(std::llround(cfg.horizon / h));
    if (std::abs(nsteps * h - cfg.horizon) > 1e-9 * cfg.horizon)
        throw ValidationError("grid", "grid_step must divide horizon");

    SolveTrace tr;
    tr.times.resize(nsteps + 1);
    for (int i = 0; i <= nsteps; ++i) tr.times[i] = i * h;

    const double g0 = sup_norm(gamma_sq(g, cfg.u0));
    if (g0 == 0.0) {  // constant u0 stays put
        tr.u.assign(nsteps + 1, cfg.u0);
        detail::fill_derived(g, tr);
        return tr;
    }
    if (cfg.global_extension && g0 >= g.alpha() / 2.0)
        throw ValidationError("admissibility",
                              "global extension requires ||Gamma u0||_inf < alpha/2");
    if (!cfg.global_extension && cfg.horizon > t_local_horizon(g0) * (1.0 + 1e-12))
        throw ValidationError("horizon",
                              "horizon exceeds the local existence time; "
                              "enable global extension");

    tr.u.resize(nsteps + 1);
    tr.u[0] = cfg.u0;
    int start = 0;  // grid index where the current segment begins
    while (start < nsteps) {
        double seg_gamma = sup_norm(gamma_sq(g, tr.u[start]));
        PicardSegmentDiagnostics diag;
        diag.t_start = start * h;
        int seg_steps;
        if (seg_gamma == 0.0) {
            seg_steps = nsteps - start;  // flat: nothing evolves
            diag.t_local = std::numeric_limits<double>::infinity();
        } else {
            diag.t_local = t_local_horizon(seg_gamma);
            // restart at T_local / 2 per the extension argument, rounded
            // down to the grid
            double tseg = diag.t_local / 2.0;
            seg_steps = static_cast<int>(std::floor(tseg / h + 1e-12));
            seg_steps = std::min(seg_steps, nsteps - start);
            if (seg_steps < 1)
                throw ValidationError("grid",
                                      "grid_step exceeds half the local "
                                      "existence time; refine the grid");
        }
        diag.t_end = (start + seg_steps) * h;
        auto seg = detail::picard_segment(g, tr.u[start], seg_steps, h, cfg, diag);
        for (int i = 0; i <= seg_steps; ++i) tr.u[start + i] = seg[i];
        tr.segments.push_back(std::move(diag));
        start += seg_steps;
    }
    detail::fill_derived(g, tr);
    return tr;
}

inline SolveTrace solve_rk4(const WeightedGraph& g, const VertexFunction& u0,
                            double horizon, double step) {
    if (step > std::min(0.01, horizon / 100.0) * (1.0 + 1e-12))
        throw ValidationError("step", "rk4 step too large for the oracle role");
    const int nv = static_cast<int>(u0.size());
    auto rhs = [&](const VertexFunction& u) {
        VertexFunction r = laplacian(g, u);
        VertexFunction gu = gamma_sq(g, u);
        for (int v = 0; v < nv; ++v) r[v] += gu[v];
        return r;
    };
    SolveTrace tr;
    const int nsteps = static_cast<int>(std::llround(horizon / step));
    if (std::abs(nsteps * step - horizon) > 1e-9 * std::max(horizon, 1.0))
        throw ValidationError("grid", "step must divide horizon");
    tr.times.resize(nsteps + 1);
    tr.u.resize(nsteps + 1);
    tr.u[0] = u0;
    for (int i = 0; i < nsteps; ++i) {
        tr.times[i] = i * step;
        const VertexFunction& u = tr.u[i];
        VertexFunction k1 = rhs(u), tmp(nv);
        for (int v = 0; v < nv; ++v) tmp[v] = u[v] + 0.5 * step * k1[v];
        VertexFunction k2 = rhs(tmp);
        for (int v = 0; v < nv; ++v) tmp[v] = u[v] + 0.5 * step * k2[v];
        VertexFunction k3 = rhs(tmp);
        for (int v = 0; v < nv; ++v) tmp[v] = u[v] + step * k3[v];
        VertexFunction k4 = rhs(tmp);
        VertexFunction next(nv);
        for (int v = 0; v < nv; ++v)
            next[v] = u[v] + step / 6.0 * (k1[v] + 2.0 * k2[v] + 2.0 * k3[v] + k4[v]);
        if (sup_norm(next) > 1e6) throw std::runtime_error("rk4 blow-up guard");
        tr.u[i + 1] = std::move(next);
    }
    tr.times[nsteps] = horizon;
    detail::fill_derived(g, tr);
    return tr;
}

/// Run both methods on the same grid and record the sup deviation.
inline SolveTrace solve_both(const WeightedGraph& g, const SolveConfig& cfg) {
    SolveTrace pic = solve_picard(g, cfg);
    // oracle on a finer step aligned with the trace grid
    int refine = 1;
    double step = cfg.grid_step;
    while (step > std::min(0.01, cfg.horizon / 100.0)) {
        step /= 2.0;
        refine *= 2;
    }
    SolveTrace ork = solve_rk4(g, cfg.u0, cfg.horizon, step);
    double dev = 0.0;
    for (std::size_t i = 0; i < pic.u.size(); ++i) {
        const VertexFunction& a = pic.u[i];
        const VertexFunction& b = ork.u[i * refine];
        for (std::size_t v = 0; v < a.size(); ++v)
            dev = std::max(dev, std::abs(a[v] - b[v]));
    }
    pic.oracle_deviation = dev;
    return pic;
}

// --- inequality verifiers ---------------------------------------------------------

struct InequalityReport {
    std::string name;
    double max_violation = 0.0;  // max(0, lhs - rhs) / scale
    double tolerance = 0.0;
    bool pass = true;
    std::string detail;
};

namespace detail {

inline double verify_scale(const VertexFunction& u0) {
    double m = sup_norm(u0);
    return std::max({1.0, m, m * m});
}

inline InequalityReport make_report(const std::string& name, double violation,
                                    double scale) {
    InequalityReport r;
    r.name = name;
    r.max_violation = violation / scale;
    r.tolerance = 1e-7;
    r.pass = r.max_violation <= r.tolerance;
    return r;
}

}  // namespace detail

/// ||Gamma u(t)||_inf <= e^{-2Kt} ||Gamma u0||_inf at every grid node.
inline InequalityReport verify_gradient_decay(const SolveTrace& tr, double k) {
    double g0 = sup_norm(tr.gu[0]);
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        double envelope = std::exp(-2.0 * k * tr.times[i]) * g0;
        worst = std::max(worst, sup_norm(tr.gu[i]) - envelope);
    }
    return detail::make_report("gradient_decay", worst,
                               detail::verify_scale(tr.u[0]));
}

/// |u(t)(x) - u(t)(y)| <= 1 across edges and nodes.
inline InequalityReport verify_edge_oscillation(const WeightedGraph& g,
                                                const SolveTrace& tr) {
    double worst = 0.0;
    for (const auto& u : tr.u)
        for (int x = 0; x < g.vertex_count(); ++x) {
            auto nb = g.neighbors(x);
            for (int kk = 0; kk < nb.n; ++kk)
                worst = std::max(worst, std::abs(u[x] - u[nb.idx[kk]]) - 1.0);
        }
    return detail::make_report("edge_oscillation", worst, 1.0);
}

/// -Delta u(t) <= n / (2t) at positive grid nodes.
inline InequalityReport verify_li_yau(const SolveTrace& tr, double n) {
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        if (tr.times[i] <= 0.0) continue;
        double bound = n / (2.0 * tr.times[i]);
        for (double d : tr.du[i]) worst = std::max(worst, -d - bound);
    }
    return detail::make_report("li_yau", worst, detail::verify_scale(tr.u[0]));
}

struct HarnackPair {
    int x, y;
    double t1, t2;
};

/// u_{T1}(x) - u_{T2}(y) <= (n/2) log(T2/T1) + 2 d(x,y)^2 / (alpha (T2-T1)).
inline InequalityReport verify_harnack(const WeightedGraph& g, const SolveTrace& tr,
                                       double n, const std::vector<HarnackPair>& pairs) {
    auto node = [&](double t) {
        for (std::size_t i = 0; i < tr.times.size(); ++i)
            if (std::abs(tr.times[i] - t) <= 1e-12 * std::max(1.0, t))
                return static_cast<int>(i);
        throw ValidationError("grid", "requested time is not a grid node");
    };
    double worst = 0.0;
    for (const auto& p : pairs) {
        if (!(0.0 < p.t1 && p.t1 < p.t2))
            throw ValidationError("pairs", "need 0 < T1 < T2");
        int i1 = node(p.t1), i2 = node(p.t2);
        double d = distance(g, p.x, p.y);
        double rhs = 0.5 * n * std::log(p.t2 / p.t1) +
                     2.0 * d * d / (g.alpha() * (p.t2 - p.t1));
        worst = std::max(worst, tr.u[i1][p.x] - tr.u[i2][p.y] - rhs);
    }
    return detail::make_report("harnack", worst, detail::verify_scale(tr.u[0]));
}

/// Exponential comparison: P_t e^{gamma u0} <= e^{gamma u(t)} for
/// gamma <= Omega, and >= for gamma >= e^2; gammas strictly between are
/// rejected (nothing is proved there).
inline InequalityReport verify_comparison(const WeightedGraph& g, const SolveTrace& tr,
                                          double gamma_value) {
    static const double omega = omega_constant();
    const double e2 = std::exp(2.0);
    bool lower = gamma_value <= omega + 1e-15;
    bool upper = gamma_value >= e2 - 1e-15;
    if (!lower && !upper)
        throw ValidationError("gamma", "gamma in (Omega, e^2) is not covered");
    const int nv = g.vertex_count();
    VertexFunction ef(nv);
    for (int v = 0; v < nv; ++v) ef[v] = std::exp(gamma_value * tr.u[0][v]);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        VertexFunction pt_ef = apply_semigroup(g, tr.times[i], ef);
        for (int v = 0; v < nv; ++v) {
            double rhs = std::exp(gamma_value * tr.u[i][v]);
            scale = std::max({scale, std::abs(rhs), std::abs(pt_ef[v])});
            double viol = lower ? pt_ef[v] - rhs : rhs - pt_ef[v];
            worst = std::max(worst, viol);
        }
    }
    auto r = detail::make_report(lower ? "comparison_lower" : "comparison_upper",
                                 worst, std::max(1.0, scale));
    r.detail = "gamma=" + std::to_string(gamma_value);
    return r;
}

}  // namespace curvlab

#endif
