#ifndef CURVLAB_OPERATORS_HPP
#define CURVLAB_OPERATORS_HPP

// The difference operators of the Gamma calculus: Delta, Gamma, Gamma_2,
// the discrete Hessian norm, Cayley partial differences, and the local
// quadratic forms that turn CD(K,n) into a finite eigenvalue problem.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curvlab/cayley.hpp"
#include "curvlab/graph.hpp"

namespace curvlab {

using VertexFunction = std::vector<double>;

inline double sup_norm(const VertexFunction& f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
}

// --- pointwise operators -----------------------------------------------------

inline double laplacian_at(const WeightedGraph& g, const VertexFunction& f, int x) {
    double s = 0.0;
    auto nb = g.neighbors(x);
    for (int k = 0; k < nb.n; ++k) s += nb.w[k] * (f[nb.idx[k]] - f[x]);
    return s;
}

inline double gamma_at(const WeightedGraph& g, const VertexFunction& f,
                       const VertexFunction& h, int x) {
    double s = 0.0;
    auto nb = g.neighbors(x);
    for (int k = 0; k < nb.n; ++k)
        s += nb.w[k] * (f[x] - f[nb.idx[k]]) * (h[x] - h[nb.idx[k]]);
    return 0.5 * s;
}

inline double gamma_sq_at(const WeightedGraph& g, const VertexFunction& f, int x) {
    return gamma_at(g, f, f, x);
}

inline VertexFunction laplacian(const WeightedGraph& g, const VertexFunction& f) {
    VertexFunction out(g.vertex_count());
    for (int x = 0; x < g.vertex_count(); ++x) out[x] = laplacian_at(g, f, x);
    return out;
}

inline VertexFunction gamma(const WeightedGraph& g, const VertexFunction& f,
                            const VertexFunction& h) {
    VertexFunction out(g.vertex_count());
    for (int x = 0; x < g.vertex_count(); ++x) out[x] = gamma_at(g, f, h, x);
    return out;
}

inline VertexFunction gamma_sq(const WeightedGraph& g, const VertexFunction& f) {
    return gamma(g, f, f);
}

/// Gamma_2 f = 1/2 Delta(Gamma f) - Gamma(f, Delta f); reads f on B(x,2).
inline double gamma2_at(const WeightedGraph& g, const VertexFunction& f, int x,
                        const VertexFunction& gf, const VertexFunction& df) {
    return 0.5 * laplacian_at(g, gf, x) - gamma_at(g, f, df, x);
}

inline VertexFunction gamma2(const WeightedGraph& g, const VertexFunction& f) {
    VertexFunction gf = gamma_sq(g, f), df = laplacian(g, f);
    VertexFunction out(g.vertex_count());
    for (int x = 0; x < g.vertex_count(); ++x) out[x] = gamma2_at(g, f, x, gf, df);
    return out;
}

/// |D^2 f|^2(x) = sum_y p(x,y) sum_z p(y,z) (f(x) - 2f(y) + f(z))^2
inline VertexFunction hessian_norm_sq(const WeightedGraph& g, const VertexFunction& f) {
    VertexFunction out(g.vertex_count(), 0.0);
    for (int x = 0; x < g.vertex_count(); ++x) {
        double s = 0.0;
        auto nb = g.neighbors(x);
        for (int k = 0; k < nb.n; ++k) {
            int y = nb.idx[k];
            double inner = 0.0;
            auto nb2 = g.neighbors(y);
            for (int l = 0; l < nb2.n; ++l) {
                double d = f[x] - 2.0 * f[y] + f[nb2.idx[l]];
                inner += nb2.w[l] * d * d;
            }
            s += nb.w[k] * inner;
        }
        out[x] = s;
    }
    return out;
}

/// Gamma_2 f - (1/4 |D^2 f|^2 - Gamma f + 1/2 (Delta f)^2).
/// Vanishes identically when the kernel rows sum to 1.
inline VertexFunction bochner_residual(const WeightedGraph& g, const VertexFunction& f) {
    VertexFunction g2 = gamma2(g, f), hn = hessian_norm_sq(g, f);
    VertexFunction gf = gamma_sq(g, f), df = laplacian(g, f);
    VertexFunction out(g.vertex_count());
    for (int x = 0; x < g.vertex_count(); ++x)
        out[x] = g2[x] - (0.25 * hn[x] - gf[x] + 0.5 * df[x] * df[x]);
    return out;
}

// --- local forms ---------------------------------------------------------------

/// Quadratic forms of Gamma and Gamma_2 and the linear functional of Delta
/// at a center x, over B(x,2)\{x} in the gauge f(x) = 0.
struct LocalFormBundle {
    int center = 0;
    std::vector<int> support;  // global vertex indices, x excluded
    Eigen::MatrixXd Q_gamma;
    Eigen::MatrixXd Q_gamma2;
    Eigen::VectorXd d_vec;

    int dim() const { return static_cast<int>(support.size()); }
    /// Lift a gauge-fixed local vector to a global VertexFunction.
    VertexFunction lift(const Eigen::VectorXd& v, int nvertices) const {
        VertexFunction f(nvertices, 0.0);
        for (int i = 0; i < dim(); ++i) f[support[i]] = v[i];
        return f;
    }
};

inline LocalFormBundle local_forms(const WeightedGraph& g, int x) {
    LocalFormBundle b;
    b.center = x;
    // support = B(x,2) \ {x}, in BFS order
    std::vector<int> loc(g.vertex_count(), -1);  // -1 = outside; -2 = center
    loc[x] = -2;
    {
        std::deque<int> q{x};
        std::vector<int> d(g.vertex_count(), -1);
        d[x] = 0;
        while (!q.empty()) {
            int v = q.front();
            q.pop_front();
            if (d[v] == 2) continue;
            auto nb = g.neighbors(v);
            for (int k = 0; k < nb.n; ++k) {
                int y = nb.idx[k];
                if (d[y] < 0) {
                    d[y] = d[v] + 1;
                    if (y != x) {
                        loc[y] = static_cast<int>(b.support.size());
                        b.support.push_back(y);
                    }
                    q.push_back(y);
                }
            }
        }
    }
    const int m = b.dim();
    b.Q_gamma = Eigen::MatrixXd::Zero(m, m);
    b.Q_gamma2 = Eigen::MatrixXd::Zero(m, m);
    b.d_vec = Eigen::VectorXd::Zero(m);

    // local linear functionals; index -2 (the center) carries coefficient 0
    auto add_coeff = [&](Eigen::VectorXd& v, int global, double c) {
        int i = loc[global];
        if (i >= 0) v[i] += c;
    };
    auto rank1 = [&](Eigen::MatrixXd& Q, const Eigen::VectorXd& a, double c) {
        Q.noalias() += c * a * a.transpose();
    };
    auto sym_outer = [&](Eigen::MatrixXd& Q, const Eigen::VectorXd& a,
                         const Eigen::VectorXd& bb, double c) {
        Q.noalias() += (0.5 * c) * (a * bb.transpose() + bb * a.transpose());
    };

    auto nbx = g.neighbors(x);
    double psum_x = 0.0;  // self-loops excluded: the y = x term of Delta(Gamma f) is 0
    for (int k = 0; k < nbx.n; ++k)
        if (nbx.idx[k] != x) psum_x += nbx.w[k];

    // Delta f(x) and Gamma f(x): f(x) = 0 kills the center terms
    for (int k = 0; k < nbx.n; ++k) {
        int y = nbx.idx[k];
        if (y == x) continue;
        double p = nbx.w[k];
        b.d_vec[loc[y]] += p;
        b.Q_gamma(loc[y], loc[y]) += 0.5 * p;
    }

    // Gamma_2 f(x) = 1/2 sum_y p(x,y)(Gamma f(y) - Gamma f(x)) - Gamma(f, Delta f)(x)
    // functional of Delta f(x) over the support
    Eigen::VectorXd Dx = b.d_vec;
    for (int k = 0; k < nbx.n; ++k) {
        int y = nbx.idx[k];
        if (y == x) continue;
        double pxy = nbx.w[k];

        // + 1/2 pxy Gamma f(y) = 1/4 pxy sum_z p(y,z)(f(y)-f(z))^2
        auto nby = g.neighbors(y);
        for (int l = 0; l < nby.n; ++l) {
            int z = nby.idx[l];
            if (z == y) continue;
            Eigen::VectorXd L = Eigen::VectorXd::Zero(m);
            add_coeff(L, y, 1.0);
            add_coeff(L, z, -1.0);
            rank1(b.Q_gamma2, L, 0.25 * pxy * nby.w[l]);
        }

        // - 1/2 pxy Gamma f(x): diagonal -1/4 rowsum_x p(x,w) f(w)^2 handled below

        // - Gamma(f, Delta f)(x) term: + 1/2 pxy f(y) (Delta f(x) - Delta f(y))
        Eigen::VectorXd Dy = Eigen::VectorXd::Zero(m);
        for (int l = 0; l < nby.n; ++l) {
            int z = nby.idx[l];
            add_coeff(Dy, z, nby.w[l]);
            add_coeff(Dy, y, -nby.w[l]);
        }
        Eigen::VectorXd ey = Eigen::VectorXd::Zero(m);
        ey[loc[y]] = 1.0;
        sym_outer(b.Q_gamma2, ey, Dx - Dy, 0.5 * pxy);
    }
    // the -1/2 psum_x Gamma f(x) piece
    for (int k = 0; k < nbx.n; ++k) {
        int w = nbx.idx[k];
        if (w == x) continue;
        b.Q_gamma2(loc[w], loc[w]) -= 0.25 * psum_x * nbx.w[k];
    }
    return b;
}

// --- Cayley partial differences ---------------------------------------------------

/// The Gamma_2 decomposition on a Cayley graph at a single vertex:
/// first and mixed second partial differences, the Hessian L^2 term and
/// the commutator ("Ricci") term. Requires all two-step translates of x
/// to be present (complete_vertices of the second power).
struct CayleyPartials {
    std::vector<double> partial;                 // d_i f(x)
    std::vector<std::vector<double>> partial2;   // d_i d_j f(x)
    double hessian_part = 0.0;
    double ricci_part = 0.0;
};

inline bool cayley_two_ball_complete(const CayleyGraph& cg, int x) {
    const int nS = cg.generator_count();
    for (int i = 0; i < nS; ++i) {
        int xi = cg.targets[x][i];
        if (xi < 0) return false;
        for (int j = 0; j < nS; ++j)
            if (cg.targets[xi][j] < 0) return false;
    }
    return true;
}

inline CayleyPartials cayley_partials(const CayleyGraph& cg, const VertexFunction& f,
                                      int x) {
    if (cg.graph.mode() != LaplacianMode::unnormalized)
        throw ValidationError("cayley-mode",
                              "partial differences use the unnormalized convention");
    if (!cayley_two_ball_complete(cg, x))
        throw ValidationError("truncation",
                              "generator translates of " + cg.graph.label(x) +
                                  " leave the truncation");
    const int nS = cg.generator_count();
    CayleyPartials out;
    out.partial.resize(nS);
    out.partial2.assign(nS, std::vector<double>(nS, 0.0));
    for (int i = 0; i < nS; ++i) out.partial[i] = f[cg.targets[x][i]] - f[x];
    for (int i = 0; i < nS; ++i) {
        int xi = cg.targets[x][i];
        for (int j = 0; j < nS; ++j) {
            // d_i d_j f(x) = f(x s_i s_j) - f(x s_i) - f(x s_j) + f(x)
            out.partial2[i][j] =
                f[cg.targets[xi][j]] - f[xi] - f[cg.targets[x][j]] + f[x];
        }
    }
    for (int i = 0; i < nS; ++i)
        for (int j = 0; j < nS; ++j) {
            double dij = out.partial2[i][j];
            out.hessian_part += 0.25 * dij * dij;
            // d_i d_j f - d_j d_i f = f(x s_i s_j) - f(x s_j s_i): evaluated
            // directly so commuting generators give an exact zero
            double comm = f[cg.targets[cg.targets[x][i]][j]] -
                          f[cg.targets[cg.targets[x][j]][i]];
            out.ricci_part += 0.5 * out.partial[j] * comm;
        }
    return out;
}

// --- vertex-function file format -----------------------------------------------------
//
//   <vertex-label> <value>     (absent vertices default to 0)

inline VertexFunction read_vertex_function(std::istream& is, const WeightedGraph& g) {
    VertexFunction f(g.vertex_count(), 0.0);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string label;
        double value;
        if (!(ss >> label)) continue;
        if (!(ss >> value))
            throw ValidationError("parse",
                                  "line " + std::to_string(lineno) + ": bad value");
        f[g.index_of(label)] = value;
    }
    return f;
}

inline void write_vertex_function(std::ostream& os, const WeightedGraph& g,
                                  const VertexFunction& f) {
    os.precision(17);
    for (int v = 0; v < g.vertex_count(); ++v)
        os << g.label(v) << " " << f[v] << "\n";
}

}  // namespace curvlab

#endif
