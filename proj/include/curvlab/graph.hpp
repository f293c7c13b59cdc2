#ifndef CURVLAB_GRAPH_HPP
#define CURVLAB_GRAPH_HPP

// Weighted graphs (V, p, mu) with bounded geometry: construction,
// validation, metric queries and finite ball truncations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace curvlab {

enum class LaplacianMode { markov, unnormalized };

inline constexpr double kTolMarkov = 1e-12;   // relative row-sum tolerance
inline constexpr double kTolRev = 1e-12;      // relative reversibility tolerance

/// Thrown by builders when the input data violates a graph invariant.
/// `kind` is a stable machine-readable tag, `detail` cites the first
/// offending record.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string kind, std::string detail)
        : std::runtime_error(kind + ": " + detail),
          kind_(std::move(kind)), detail_(std::move(detail)) {}
    const std::string& kind() const { return kind_; }
    const std::string& detail() const { return detail_; }
private:
    std::string kind_;
    std::string detail_;
};

struct GraphValidationReport {
    double alpha_observed = 0.0;
    double markov_residual_max = 0.0;
    double reversibility_residual_max = 0.0;
    bool connected = false;
    int max_valence = 0;
    bool valence_bound_ok = false;    // N(x) <= 1/alpha
    bool measure_ratio_ok = false;    // alpha mu(x) <= mu(y) <= mu(x)/alpha on edges
    double d_mu_sup = 0.0;            // sup_x m(x)/mu(x) == max row sum of p
};

/// Immutable weighted graph over dense vertex indices with CSR adjacency.
/// Self-loops are permitted; they carry row-sum mass but contribute
/// nothing to the difference operators.
class WeightedGraph {
public:
    WeightedGraph() = default;

    int vertex_count() const { return static_cast<int>(mu_.size()); }
    const std::string& label(int v) const { return labels_[v]; }
    const std::vector<std::string>& labels() const { return labels_; }
    double mu(int v) const { return mu_[v]; }
    const std::vector<double>& measures() const { return mu_; }
    double alpha() const { return alpha_; }
    LaplacianMode mode() const { return mode_; }
    /// True when every row of p sums to 1 (reflecting truncations keep it,
    /// absorbing ones lose it).
    bool is_markov() const { return markov_rows_; }
    double max_row_sum() const { return max_row_sum_; }
    double total_measure() const {
        double s = 0.0;
        for (double m : mu_) s += m;
        return s;
    }

    int degree(int v) const { return row_ptr_[v + 1] - row_ptr_[v]; }
    /// Neighbors of v as parallel (index, weight) ranges.
    struct EdgeRange {
        const int* idx;
        const double* w;
        int n;
    };
    EdgeRange neighbors(int v) const {
        return {col_.data() + row_ptr_[v], w_.data() + row_ptr_[v],
                row_ptr_[v + 1] - row_ptr_[v]};
    }
    double row_sum(int v) const {
        double s = 0.0;
        auto nb = neighbors(v);
        for (int k = 0; k < nb.n; ++k) s += nb.w[k];
        return s;
    }

    int index_of(const std::string& label) const {
        auto it = index_.find(label);
        if (it == index_.end())
            throw ValidationError("unknown-vertex", "no vertex labelled '" + label + "'");
        return it->second;
    }
    bool has_vertex(const std::string& label) const { return index_.count(label) > 0; }

    /// Kernel weight p(x,y), 0 when not adjacent.
    double kernel(int x, int y) const {
        auto nb = neighbors(x);
        for (int k = 0; k < nb.n; ++k)
            if (nb.idx[k] == y) return nb.w[k];
        return 0.0;
    }

    GraphValidationReport validation_report() const;

    // --- construction -----------------------------------------------------

    struct Builder {
        LaplacianMode mode = LaplacianMode::markov;
        bool require_markov_rows = true;  // absorbing truncations switch this off
        std::vector<std::string> labels;
        std::vector<double> mu;
        // directed entries (x, y, p_xy); the reverse direction must also be added
        std::vector<std::tuple<int, int, double>> entries;

        int add_vertex(const std::string& label, double measure) {
            labels.push_back(label);
            mu.push_back(measure);
            return static_cast<int>(labels.size()) - 1;
        }
        void add_directed(int x, int y, double p) { entries.emplace_back(x, y, p); }
        WeightedGraph build() const;
    };

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, int> index_;
    std::vector<int> row_ptr_;
    std::vector<int> col_;
    std::vector<double> w_;
    std::vector<double> mu_;
    double alpha_ = 0.0;
    double max_row_sum_ = 0.0;
    LaplacianMode mode_ = LaplacianMode::markov;
    bool markov_rows_ = false;

    friend WeightedGraph Builder_build_impl(const Builder& b);
};

inline WeightedGraph WeightedGraph::Builder::build() const {
    const int n = static_cast<int>(labels.size());
    if (n == 0) throw ValidationError("empty-graph", "no vertices");
    WeightedGraph g;
    g.labels_ = labels;
    g.mu_ = mu;
    g.mode_ = mode;
    for (int v = 0; v < n; ++v) {
        if (!(mu[v] > 0.0))
            throw ValidationError("nonpositive-measure", "vertex " + labels[v]);
        if (!g.index_.emplace(labels[v], v).second)
            throw ValidationError("duplicate-label", labels[v]);
    }

    // bucket entries per row, preserving first-appearance order and
    // coalescing parallel entries by summing their weights
    std::vector<std::vector<std::pair<int, double>>> rows(n);
    for (auto& [x, y, p] : entries) {
        if (!(p > 0.0))
            throw ValidationError("nonpositive-weight",
                                  "edge " + labels[x] + " -> " + labels[y]);
        auto& row = rows[x];
        auto it = std::find_if(row.begin(), row.end(),
                               [y = y](auto& e) { return e.first == y; });
        if (it != row.end()) it->second += p;
        else row.emplace_back(y, p);
    }
    g.row_ptr_.assign(n + 1, 0);
    for (int v = 0; v < n; ++v) {
        if (rows[v].empty())
            throw ValidationError("isolated-vertex",
                                  "vertex " + labels[v] + " has no neighbors");
        g.row_ptr_[v + 1] = g.row_ptr_[v] + static_cast<int>(rows[v].size());
    }
    g.col_.reserve(g.row_ptr_[n]);
    g.w_.reserve(g.row_ptr_[n]);
    for (int v = 0; v < n; ++v)
        for (auto& [y, p] : rows[v]) {
            g.col_.push_back(y);
            g.w_.push_back(p);
        }

    // adjacency symmetry and reversibility
    double rev_max = 0.0;
    for (int x = 0; x < n; ++x) {
        auto nb = g.neighbors(x);
        for (int k = 0; k < nb.n; ++k) {
            int y = nb.idx[k];
            double pxy = nb.w[k];
            double pyx = g.kernel(y, x);
            if (pyx == 0.0)
                throw ValidationError("asymmetric-adjacency",
                                      "p(" + labels[x] + "," + labels[y] +
                                          ") > 0 but p(" + labels[y] + "," +
                                          labels[x] + ") = 0");
            double a = pxy * mu[x], b = pyx * mu[y];
            double res = std::abs(a - b) / std::max(a, b);
            rev_max = std::max(rev_max, res);
            if (res > kTolRev)
                throw ValidationError("reversibility",
                                      "edge (" + labels[x] + "," + labels[y] +
                                          "): p(x,y)mu(x)=" + std::to_string(a) +
                                          " vs p(y,x)mu(y)=" + std::to_string(b));
        }
    }

    // row sums
    bool markov_ok = true;
    double max_rs = 0.0;
    for (int v = 0; v < n; ++v) {
        double s = g.row_sum(v);
        max_rs = std::max(max_rs, s);
        if (std::abs(s - 1.0) > kTolMarkov) markov_ok = false;
    }
    if (mode == LaplacianMode::markov && require_markov_rows && !markov_ok) {
        for (int v = 0; v < n; ++v) {
            double s = g.row_sum(v);
            if (std::abs(s - 1.0) > kTolMarkov)
                throw ValidationError("markov-row-sum",
                                      "row of " + labels[v] + " sums to " +
                                          std::to_string(s));
        }
    }
    g.markov_rows_ = markov_ok;
    g.max_row_sum_ = max_rs;

    // connectivity (undirected by symmetry)
    std::vector<char> seen(n, 0);
    std::deque<int> q{0};
    seen[0] = 1;
    int reached = 1;
    while (!q.empty()) {
        int x = q.front();
        q.pop_front();
        auto nb = g.neighbors(x);
        for (int k = 0; k < nb.n; ++k)
            if (!seen[nb.idx[k]]) {
                seen[nb.idx[k]] = 1;
                ++reached;
                q.push_back(nb.idx[k]);
            }
    }
    if (reached != n)
        throw ValidationError("disconnected",
                              std::to_string(n - reached) + " vertices unreachable");

    // alpha = min edge weight, self-loops excluded (they are not edges of
    // the underlying graph in the (A1) sense)
    double alpha = std::numeric_limits<double>::infinity();
    bool any_edge = false;
    for (int x = 0; x < n; ++x) {
        auto nb = g.neighbors(x);
        for (int k = 0; k < nb.n; ++k)
            if (nb.idx[k] != x) {
                alpha = std::min(alpha, nb.w[k]);
                any_edge = true;
            }
    }
    if (!any_edge) alpha = max_rs;  // single vertex with self-loop
    g.alpha_ = alpha;
    return g;
}

inline GraphValidationReport WeightedGraph::validation_report() const {
    GraphValidationReport r;
    const int n = vertex_count();
    r.connected = true;  // construction guarantees it
    r.alpha_observed = alpha_;
    double rev = 0.0, mark = 0.0, dmu = 0.0;
    int maxval = 0;
    bool ratio_ok = true;
    for (int x = 0; x < n; ++x) {
        auto nb = neighbors(x);
        double s = 0.0;
        int val = 0;
        for (int k = 0; k < nb.n; ++k) {
            s += nb.w[k];
            int y = nb.idx[k];
            if (y == x) continue;
            ++val;
            double a = nb.w[k] * mu_[x], b = kernel(y, x) * mu_[y];
            rev = std::max(rev, std::abs(a - b) / std::max(a, b));
            double lo = alpha_ * mu_[x] * (1.0 - 1e-12);
            double hi = mu_[x] / alpha_ * (1.0 + 1e-12);
            if (mu_[y] < lo || mu_[y] > hi) ratio_ok = false;
        }
        maxval = std::max(maxval, val);
        mark = std::max(mark, std::abs(s - 1.0));
        dmu = std::max(dmu, s);
    }
    r.markov_residual_max = mark;
    r.reversibility_residual_max = rev;
    r.max_valence = maxval;
    r.valence_bound_ok = (alpha_ > 0.0) && (maxval <= static_cast<int>(std::floor(1.0 / alpha_ + 1e-9)));
    r.measure_ratio_ok = ratio_ok;
    r.d_mu_sup = dmu;
    return r;
}

// --- builders --------------------------------------------------------------

struct KernelEdge {
    std::string x, y;
    double p_xy, p_yx;
};

inline WeightedGraph build_from_kernel(
    const std::vector<std::pair<std::string, double>>& vertices,
    const std::vector<KernelEdge>& edges,
    LaplacianMode mode = LaplacianMode::markov) {
    WeightedGraph::Builder b;
    b.mode = mode;
    std::unordered_map<std::string, int> idx;
    for (auto& [label, m] : vertices) idx[label] = b.add_vertex(label, m);
    auto at = [&](const std::string& l) {
        auto it = idx.find(l);
        if (it == idx.end()) throw ValidationError("unknown-vertex", l);
        return it->second;
    };
    for (auto& e : edges) {
        int x = at(e.x), y = at(e.y);
        b.add_directed(x, y, e.p_xy);
        if (x != y) b.add_directed(y, x, e.p_yx);
    }
    return b.build();
}

struct Conductance {
    std::string x, y;
    double omega;
};

/// Random conductance construction: p(x,y) = omega_xy / m(x), mu = m.
/// Reversible by construction.
inline WeightedGraph build_from_conductance(
    const std::vector<Conductance>& conductances) {
    std::vector<std::string> order;
    std::unordered_map<std::string, double> m;
    std::unordered_map<std::string, std::vector<std::pair<std::string, double>>> adj;
    auto touch = [&](const std::string& l) {
        if (!m.count(l)) {
            m[l] = 0.0;
            order.push_back(l);
        }
    };
    for (auto& c : conductances) {
        if (!(c.omega > 0.0))
            throw ValidationError("nonpositive-weight",
                                  "cond " + c.x + " " + c.y);
        touch(c.x);
        touch(c.y);
        m[c.x] += c.omega;
        adj[c.x].emplace_back(c.y, c.omega);
        if (c.x != c.y) {
            m[c.y] += c.omega;
            adj[c.y].emplace_back(c.x, c.omega);
        }
    }
    WeightedGraph::Builder b;
    std::unordered_map<std::string, int> idx;
    for (auto& l : order) {
        if (!(m[l] > 0.0)) throw ValidationError("isolated-vertex", l);
        idx[l] = b.add_vertex(l, m[l]);
    }
    for (auto& l : order)
        for (auto& [to, w] : adj[l]) b.add_directed(idx[l], idx[to], w / m[l]);
    return b.build();
}

// --- metric queries ---------------------------------------------------------

/// Breadth-first distances from x; entries are -1 only on disconnected
/// graphs, which validated graphs exclude.
inline std::vector<int> distances_from(const WeightedGraph& g, int x) {
    std::vector<int> d(g.vertex_count(), -1);
    std::deque<int> q{x};
    d[x] = 0;
    while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        auto nb = g.neighbors(v);
        for (int k = 0; k < nb.n; ++k)
            if (d[nb.idx[k]] < 0) {
                d[nb.idx[k]] = d[v] + 1;
                q.push_back(nb.idx[k]);
            }
    }
    return d;
}

inline int distance(const WeightedGraph& g, int x, int y) {
    if (x == y) return 0;
    return distances_from(g, x)[y];
}

inline std::vector<int> ball(const WeightedGraph& g, int x, int r) {
    auto d = distances_from(g, x);
    std::vector<int> out;
    for (int v = 0; v < g.vertex_count(); ++v)
        if (d[v] >= 0 && d[v] <= r) out.push_back(v);
    return out;
}

inline double volume(const WeightedGraph& g, int x, int r) {
    double s = 0.0;
    for (int v : ball(g, x, r)) s += g.mu(v);
    return s;
}

inline int diameter(const WeightedGraph& g) {
    int diam = 0;
    for (int x = 0; x < g.vertex_count(); ++x) {
        auto d = distances_from(g, x);
        for (int v : d) diam = std::max(diam, v);
    }
    return diam;
}

// --- truncation --------------------------------------------------------------

enum class BoundaryMode { reflecting, absorbing_flagged };

/// A finite window B(x0, R) onto a (possibly lazily given) graph.
/// Vertices at distance <= R - margin form the trusted interior, where
/// local operators coincide with the untruncated graph.
struct BallTruncation {
    WeightedGraph graph;
    int center = 0;
    int radius = 0;
    int margin = 0;
    BoundaryMode boundary = BoundaryMode::reflecting;
    std::vector<int> dist;       // distance from center per vertex
    std::vector<int> trusted;    // indices with dist <= radius - margin

    bool is_trusted(int v) const { return dist[v] <= radius - margin; }
};

/// Lazy neighbor oracle for infinite graphs. Labels are canonical element
/// encodings; the oracle reports (neighbor label, p, mu of neighbor).
struct NeighborOracle {
    struct Link {
        std::string label;
        double p;
    };
    std::string root;
    double root_mu = 1.0;
    std::function<double(const std::string&)> measure;
    std::function<std::vector<Link>(const std::string&)> neighbors;
    LaplacianMode mode = LaplacianMode::markov;
};

inline BallTruncation truncate(const NeighborOracle& oracle, int radius,
                               BoundaryMode mode = BoundaryMode::reflecting,
                               int margin = 0) {
    if (margin > radius) throw ValidationError("margin", "margin exceeds radius");
    // breadth-first enumeration of B(root, radius), ties broken by label
    std::unordered_map<std::string, int> idx;
    std::vector<std::string> labels;
    std::vector<int> dist;
    labels.push_back(oracle.root);
    idx[oracle.root] = 0;
    dist.push_back(0);
    std::vector<std::vector<NeighborOracle::Link>> links;
    for (std::size_t head = 0; head < labels.size(); ++head) {
        links.push_back(oracle.neighbors(labels[head]));
        if (dist[head] == radius) continue;
        auto sorted = links.back();
        std::sort(sorted.begin(), sorted.end(),
                  [](auto& a, auto& b) { return a.label < b.label; });
        for (auto& l : sorted)
            if (!idx.count(l.label)) {
                idx[l.label] = static_cast<int>(labels.size());
                labels.push_back(l.label);
                dist.push_back(dist[head] + 1);
            }
    }

    WeightedGraph::Builder b;
    b.mode = oracle.mode;
    b.require_markov_rows = (mode == BoundaryMode::reflecting);
    for (std::size_t v = 0; v < labels.size(); ++v)
        b.add_vertex(labels[v], oracle.measure(labels[v]));
    for (std::size_t v = 0; v < labels.size(); ++v) {
        double kept = 0.0, total = 0.0;
        for (auto& l : links[v]) {
            total += l.p;
            auto it = idx.find(l.label);
            if (it != idx.end()) {
                b.add_directed(static_cast<int>(v), it->second, l.p);
                kept += l.p;
            }
        }
        double deficit = total - kept;
        if (mode == BoundaryMode::reflecting && deficit > 0.0)
            b.add_directed(static_cast<int>(v), static_cast<int>(v), deficit);
    }
    BallTruncation t;
    t.graph = b.build();
    t.center = 0;
    t.radius = radius;
    t.margin = margin;
    t.boundary = mode;
    t.dist = dist;
    for (std::size_t v = 0; v < labels.size(); ++v)
        if (dist[v] <= radius - margin) t.trusted.push_back(static_cast<int>(v));
    return t;
}

inline BallTruncation truncate(const WeightedGraph& g, int x0, int radius,
                               BoundaryMode mode = BoundaryMode::reflecting,
                               int margin = 0) {
    NeighborOracle o;
    o.root = g.label(x0);
    o.mode = g.mode();
    o.measure = [&g](const std::string& l) { return g.mu(g.index_of(l)); };
    o.neighbors = [&g](const std::string& l) {
        std::vector<NeighborOracle::Link> out;
        int v = g.index_of(l);
        auto nb = g.neighbors(v);
        for (int k = 0; k < nb.n; ++k)
            out.push_back({g.label(nb.idx[k]), nb.w[k]});
        return out;
    };
    return truncate(o, radius, mode, margin);
}

// --- concrete families --------------------------------------------------------

/// Connected random conductance graph (spanning tree plus extra edges),
/// deterministic in the seed. Used as the property-test corpus.
inline WeightedGraph random_conductance_graph(std::uint64_t seed,
                                              int max_vertices = 60) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
    std::uniform_int_distribution<int> nv(5, max_vertices);
    const int n = nv(rng);
    std::uniform_real_distribution<double> wdist(0.5, 2.0);
    std::vector<Conductance> conds;
    auto name = [](int i) { return "v" + std::to_string(i); };
    for (int v = 1; v < n; ++v) {
        std::uniform_int_distribution<int> pick(0, v - 1);
        conds.push_back({name(pick(rng)), name(v), wdist(rng)});
    }
    std::uniform_int_distribution<int> extra(n / 4, n);
    int m = extra(rng);
    std::uniform_int_distribution<int> anyv(0, n - 1);
    for (int e = 0; e < m; ++e) {
        int a = anyv(rng), bq = anyv(rng);
        if (a == bq) continue;
        conds.push_back({name(a), name(bq), wdist(rng)});
    }
    return build_from_conductance(conds);
}

/// The integer-line example with omega_{i,i+1} = 1/(i(i+1)) for i >= 1,
/// omega_{0,+-1} = 1 and mu(i) = i^-4: (A1)+(A2) hold while the row sums
/// m(i)/mu(i) diverge with the truncation radius.
inline WeightedGraph z_line_nonh2(int radius) {
    if (radius < 1) throw ValidationError("radius", "radius must be >= 1");
    auto omega = [](int i, int j) {  // |i - j| == 1
        int lo = std::min(std::abs(i), std::abs(j));
        int hi = std::max(std::abs(i), std::abs(j));
        if (lo == 0) return 1.0;
        return 1.0 / (static_cast<double>(lo) * hi);
    };
    auto mu = [](int i) {
        if (i == 0) return 1.0;
        double a = std::abs(i);
        return 1.0 / (a * a * a * a);
    };
    WeightedGraph::Builder b;
    b.mode = LaplacianMode::unnormalized;
    std::unordered_map<int, int> idx;
    for (int i = -radius; i <= radius; ++i)
        idx[i] = b.add_vertex(std::to_string(i), mu(i));
    for (int i = -radius; i < radius; ++i) {
        double w = omega(i, i + 1);
        b.add_directed(idx[i], idx[i + 1], w / mu(i));
        b.add_directed(idx[i + 1], idx[i], w / mu(i + 1));
    }
    return b.build();
}

// --- text format ---------------------------------------------------------------
//
//   format kernel|conductance
//   mode markov|unnormalized
//   vertex <label> <mu>
//   edge <l1> <l2> <p12> <p21>       (kernel format)
//   cond <l1> <l2> <omega>           (conductance format)
//   # comment

inline void write_graph(std::ostream& os, const WeightedGraph& g) {
    os.precision(17);
    os << "format kernel\n";
    os << "mode " << (g.mode() == LaplacianMode::markov ? "markov" : "unnormalized")
       << "\n";
    for (int v = 0; v < g.vertex_count(); ++v)
        os << "vertex " << g.label(v) << " " << g.mu(v) << "\n";
    for (int x = 0; x < g.vertex_count(); ++x) {
        auto nb = g.neighbors(x);
        for (int k = 0; k < nb.n; ++k) {
            int y = nb.idx[k];
            if (y < x) continue;  // one record per unordered pair
            os << "edge " << g.label(x) << " " << g.label(y) << " " << nb.w[k]
               << " " << g.kernel(y, x) << "\n";
        }
    }
}

inline WeightedGraph read_graph(std::istream& is) {
    std::string line, format = "kernel";
    LaplacianMode mode = LaplacianMode::markov;
    std::vector<std::pair<std::string, double>> vertices;
    std::vector<KernelEdge> edges;
    std::vector<Conductance> conds;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string tok;
        if (!(ss >> tok)) continue;
        auto fail = [&](const std::string& why) {
            throw ValidationError("parse", "line " + std::to_string(lineno) + ": " + why);
        };
        if (tok == "format") {
            if (!(ss >> format) || (format != "kernel" && format != "conductance"))
                fail("expected 'format kernel|conductance'");
        } else if (tok == "mode") {
            std::string m;
            if (!(ss >> m)) fail("expected mode value");
            if (m == "markov") mode = LaplacianMode::markov;
            else if (m == "unnormalized") mode = LaplacianMode::unnormalized;
            else fail("unknown mode '" + m + "'");
        } else if (tok == "vertex") {
            std::string l;
            double m;
            if (!(ss >> l >> m)) fail("expected 'vertex <label> <mu>'");
            vertices.emplace_back(l, m);
        } else if (tok == "edge") {
            KernelEdge e;
            if (!(ss >> e.x >> e.y >> e.p_xy >> e.p_yx)) fail("bad edge record");
            edges.push_back(e);
        } else if (tok == "cond") {
            Conductance c;
            if (!(ss >> c.x >> c.y >> c.omega)) fail("bad cond record");
            conds.push_back(c);
        } else {
            fail("unknown record '" + tok + "'");
        }
    }
    if (format == "conductance") return build_from_conductance(conds);
    return build_from_kernel(vertices, edges, mode);
}

}  // namespace curvlab

#endif
