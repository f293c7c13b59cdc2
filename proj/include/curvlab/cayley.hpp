#ifndef CURVLAB_CAYLEY_HPP
#define CURVLAB_CAYLEY_HPP

// Cayley graphs of finitely generated groups: integer lattices, discrete
// tori, cyclic and symmetric groups, and arbitrary abelian generator sets.
// Vertices are canonical element encodings; generator metadata is kept so
// partial-difference operators can act per generator.

#include <algorithm>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "curvlab/graph.hpp"

namespace curvlab {

struct GroupSpec {
    enum class Kind { integer_lattice, torus, cyclic, symmetric, custom_abelian };
    Kind kind = Kind::cyclic;
    int dims = 1;      // integer_lattice, torus
    int modulus = 0;   // torus, cyclic
    int n = 0;         // symmetric(n)
    // custom_abelian: generator vectors (inverses are added automatically)
    std::vector<std::vector<int>> custom_generators;

    static GroupSpec integer_lattice(int d) {
        GroupSpec s;
        s.kind = Kind::integer_lattice;
        s.dims = d;
        return s;
    }
    static GroupSpec torus(int d, int m) {
        GroupSpec s;
        s.kind = Kind::torus;
        s.dims = d;
        s.modulus = m;
        return s;
    }
    static GroupSpec cyclic(int m) {
        GroupSpec s;
        s.kind = Kind::cyclic;
        s.modulus = m;
        return s;
    }
    static GroupSpec symmetric(int n) {
        GroupSpec s;
        s.kind = Kind::symmetric;
        s.n = n;
        return s;
    }
    static GroupSpec custom_abelian(std::vector<std::vector<int>> gens) {
        GroupSpec s;
        s.kind = Kind::custom_abelian;
        s.custom_generators = std::move(gens);
        if (!gens.empty()) s.dims = static_cast<int>(gens[0].size());
        return s;
    }
};

/// A generated Cayley graph plus the generator action table.
/// targets[v][i] is the index of v * s_i, or -1 when the translate fell
/// outside a lattice truncation.
struct CayleyGraph {
    WeightedGraph graph;
    std::vector<std::string> gen_names;
    std::vector<std::vector<int>> targets;
    bool abelian = false;
    std::vector<int> dist_from_root;
    int radius = -1;  // -1 for full finite groups

    int generator_count() const { return static_cast<int>(gen_names.size()); }
    /// Vertices all of whose generator translates are present.
    std::vector<int> complete_vertices() const {
        std::vector<int> out;
        for (std::size_t v = 0; v < targets.size(); ++v)
            if (std::all_of(targets[v].begin(), targets[v].end(),
                            [](int t) { return t >= 0; }))
                out.push_back(static_cast<int>(v));
        return out;
    }
};

namespace detail {

inline std::string encode_tuple(const std::vector<int>& x) {
    std::ostringstream os;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) os << ",";
        os << x[i];
    }
    return os.str();
}

struct AbelianGroup {
    int dims;
    int modulus;  // 0 for free lattice
    std::vector<std::vector<int>> generators;

    std::vector<int> apply(std::vector<int> x, const std::vector<int>& g) const {
        for (int i = 0; i < dims; ++i) {
            x[i] += g[i];
            if (modulus > 0) x[i] = ((x[i] % modulus) + modulus) % modulus;
        }
        return x;
    }
};

inline std::string encode_perm(const std::vector<int>& p) {
    return encode_tuple(p);
}

}  // namespace detail

/// Build the Cayley graph of `spec` with the symmetric generating family S.
/// For integer lattices `radius` bounds a breadth-first word-metric ball
/// with reflecting boundary, so markov normalization stays row-stochastic;
/// finite groups are enumerated fully when radius < 0.
inline CayleyGraph generate_cayley(const GroupSpec& spec, int radius = -1,
                                   LaplacianMode normalization = LaplacianMode::markov) {
    using Kind = GroupSpec::Kind;
    CayleyGraph out;

    // resolve generators and the element encoding
    std::vector<std::vector<int>> gens;  // abelian kinds: displacement vectors
    std::vector<std::vector<int>> perm_gens;  // symmetric kind: transpositions as (i,j)
    int dims = 0, modulus = 0;
    switch (spec.kind) {
        case Kind::integer_lattice:
            dims = spec.dims;
            if (dims < 1) throw ValidationError("group-spec", "lattice dims must be >= 1");
            if (radius < 1)
                throw ValidationError("group-spec",
                                      "integer lattice requires a truncation radius");
            break;
        case Kind::torus:
            dims = spec.dims;
            modulus = spec.modulus;
            if (dims < 1 || modulus < 3)
                throw ValidationError("group-spec", "torus needs dims >= 1, modulus >= 3");
            break;
        case Kind::cyclic:
            dims = 1;
            modulus = spec.modulus;
            if (modulus < 3) throw ValidationError("group-spec", "cyclic modulus must be >= 3");
            break;
        case Kind::symmetric:
            if (spec.n < 2) throw ValidationError("group-spec", "symmetric n must be >= 2");
            break;
        case Kind::custom_abelian:
            if (spec.custom_generators.empty())
                throw ValidationError("group-spec", "custom_abelian needs generators");
            dims = static_cast<int>(spec.custom_generators[0].size());
            break;
    }

    if (spec.kind == Kind::symmetric) {
        for (int i = 0; i < spec.n; ++i)
            for (int j = i + 1; j < spec.n; ++j)
                perm_gens.push_back({i, j});
        for (auto& t : perm_gens)
            out.gen_names.push_back("(" + std::to_string(t[0]) + " " +
                                    std::to_string(t[1]) + ")");
    } else {
        std::vector<std::vector<int>> base;
        if (spec.kind == Kind::custom_abelian) {
            base = spec.custom_generators;
            for (auto& g : base) {
                if (static_cast<int>(g.size()) != dims)
                    throw ValidationError("group-spec", "generator dimension mismatch");
                bool zero = std::all_of(g.begin(), g.end(), [](int v) { return v == 0; });
                if (zero) throw ValidationError("group-spec", "identity in generating family");
            }
        } else {
            for (int i = 0; i < dims; ++i) {
                std::vector<int> e(dims, 0);
                e[i] = 1;
                base.push_back(e);
            }
        }
        // close under inversion, skipping involutive duplicates
        for (auto& g : base) {
            gens.push_back(g);
            std::vector<int> inv(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
                inv[i] = -g[i];
                if (modulus > 0) inv[i] = ((inv[i] % modulus) + modulus) % modulus;
            }
            bool same = true;
            if (modulus > 0) {
                std::vector<int> gm(g.size());
                for (std::size_t i = 0; i < g.size(); ++i)
                    gm[i] = ((g[i] % modulus) + modulus) % modulus;
                same = (gm == inv);
            } else {
                same = (g == inv);
            }
            if (!same) gens.push_back(inv);
        }
        for (auto& g : gens) out.gen_names.push_back(detail::encode_tuple(g));
        out.abelian = true;
    }

    const int nS = spec.kind == Kind::symmetric ? static_cast<int>(perm_gens.size())
                                                : static_cast<int>(gens.size());

    // breadth-first enumeration from the identity, ties broken by label
    std::vector<std::string> labels;
    std::unordered_map<std::string, int> idx;
    std::vector<int> dist;
    std::vector<std::vector<int>> elems;  // tuple or permutation per vertex

    std::vector<int> identity;
    if (spec.kind == Kind::symmetric) {
        identity.resize(spec.n);
        std::iota(identity.begin(), identity.end(), 0);
    } else {
        identity.assign(dims, 0);
    }
    auto encode = [&](const std::vector<int>& e) { return detail::encode_tuple(e); };
    auto apply_gen = [&](const std::vector<int>& e, int gi) {
        if (spec.kind == Kind::symmetric) {
            // right multiplication by the transposition (i j): x -> x.(i j)
            std::vector<int> r = e;
            std::swap(r[perm_gens[gi][0]], r[perm_gens[gi][1]]);
            return r;
        }
        std::vector<int> r = e;
        for (int d = 0; d < dims; ++d) {
            r[d] += gens[gi][d];
            if (modulus > 0) r[d] = ((r[d] % modulus) + modulus) % modulus;
        }
        return r;
    };

    labels.push_back(encode(identity));
    idx[labels[0]] = 0;
    elems.push_back(identity);
    dist.push_back(0);
    for (std::size_t head = 0; head < labels.size(); ++head) {
        if (radius >= 0 && dist[head] == radius) continue;
        std::vector<std::pair<std::string, std::vector<int>>> nexts;
        for (int gi = 0; gi < nS; ++gi) {
            auto e = apply_gen(elems[head], gi);
            nexts.emplace_back(encode(e), std::move(e));
        }
        std::sort(nexts.begin(), nexts.end(),
                  [](auto& a, auto& b) { return a.first < b.first; });
        for (auto& [l, e] : nexts)
            if (!idx.count(l)) {
                idx[l] = static_cast<int>(labels.size());
                labels.push_back(l);
                elems.push_back(e);
                dist.push_back(dist[head] + 1);
            }
    }

    // generator action table and edges
    const int nV = static_cast<int>(labels.size());
    out.targets.assign(nV, std::vector<int>(nS, -1));
    WeightedGraph::Builder b;
    b.mode = normalization;
    const double mu = normalization == LaplacianMode::markov ? static_cast<double>(nS) : 1.0;
    const double w = normalization == LaplacianMode::markov ? 1.0 / nS : 1.0;
    for (int v = 0; v < nV; ++v) b.add_vertex(labels[v], mu);
    for (int v = 0; v < nV; ++v) {
        double deficit = 0.0;
        for (int gi = 0; gi < nS; ++gi) {
            auto l = encode(apply_gen(elems[v], gi));
            auto it = idx.find(l);
            if (it == idx.end()) {
                deficit += w;
                continue;
            }
            out.targets[v][gi] = it->second;
            b.add_directed(v, it->second, w);
        }
        if (deficit > 0.0 && normalization == LaplacianMode::markov)
            b.add_directed(v, v, deficit);  // reflecting boundary
    }
    out.graph = b.build();
    out.dist_from_root = std::move(dist);
    out.radius = radius;
    return out;
}

}  // namespace curvlab

#endif
