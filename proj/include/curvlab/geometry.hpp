#ifndef CURVLAB_GEOMETRY_HPP
#define CURVLAB_GEOMETRY_HPP

// Volume growth: ball-volume profiles, the local doubling bound
// V(x,2r) <= (1 + alpha^-2)^r V(x,r), and empirical doubling constants.

#include <cmath>
#include <limits>
#include <vector>

#include "curvlab/graph.hpp"

namespace curvlab {

struct VolumeProfile {
    int center = 0;
    std::vector<double> volumes;      // V(x, r) for r = 0..r_max
    std::vector<double> ratios;       // V(x, 2r)/V(x, r) for 2r <= r_max, r >= 1
    std::vector<double> local_bound;  // (1 + alpha^-2)^r aligned with ratios
};

inline VolumeProfile volume_profile(const WeightedGraph& g, int x, int r_max) {
    if (r_max < 0) throw ValidationError("radius", "r_max must be >= 0");
    VolumeProfile p;
    p.center = x;
    auto d = distances_from(g, x);
    p.volumes.assign(r_max + 1, 0.0);
    for (int v = 0; v < g.vertex_count(); ++v)
        if (d[v] <= r_max)
            for (int r = d[v]; r <= r_max; ++r) p.volumes[r] += g.mu(v);
    const double base = 1.0 + 1.0 / (g.alpha() * g.alpha());
    for (int r = 1; 2 * r <= r_max; ++r) {
        p.ratios.push_back(p.volumes[2 * r] / p.volumes[r]);
        p.local_bound.push_back(std::pow(base, r));
    }
    return p;
}

struct DoublingCheck {
    bool pass = true;
    double min_slack = std::numeric_limits<double>::infinity();  // bound - ratio
    double max_ratio = 0.0;
};

inline DoublingCheck check_local_doubling(const VolumeProfile& p) {
    DoublingCheck c;
    for (std::size_t i = 0; i < p.ratios.size(); ++i) {
        c.max_ratio = std::max(c.max_ratio, p.ratios[i]);
        double slack = p.local_bound[i] - p.ratios[i];
        c.min_slack = std::min(c.min_slack, slack);
        if (p.ratios[i] > p.local_bound[i] * (1.0 + 1e-12)) c.pass = false;
    }
    return c;
}

struct DoublingReport {
    double empirical_cdv = 0.0;  // max V(x,2r)/V(x,r) over centers and radii
    int worst_center = -1;
    int worst_radius = 0;
    bool local_bound_ok = true;
};

inline DoublingReport doubling_report(const WeightedGraph& g,
                                      const std::vector<int>& centers, int r_max) {
    DoublingReport rep;
    for (int x : centers) {
        VolumeProfile p = volume_profile(g, x, r_max);
        for (std::size_t i = 0; i < p.ratios.size(); ++i) {
            if (p.ratios[i] > rep.empirical_cdv) {
                rep.empirical_cdv = p.ratios[i];
                rep.worst_center = x;
                rep.worst_radius = static_cast<int>(i) + 1;
            }
        }
        if (!check_local_doubling(p).pass) rep.local_bound_ok = false;
    }
    return rep;
}

}  // namespace curvlab

#endif
