#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rrbto/errors.hpp"
#include "rrbto/fem.hpp"

namespace rrbto {

/// Grid coordinates of a node, (ix, iy) with iy = 0 on the bottom edge.
struct NodeRef {
    int ix = 0;
    int iy = 0;
};

/// Optional overrides for the two load application points of the named
/// benchmarks.  Point B is always the monitored point.
struct BenchmarkOptions {
    std::optional<NodeRef> point_a;
    std::optional<NodeRef> point_b;
    std::optional<double> u0;
    std::optional<double> gamma;
};

/// Cantilever beam: 60x20 mesh, left edge clamped, unit downward loads at
/// the bottom-edge midpoint A and the bottom-right corner B; the vertical
/// displacement of B is monitored against u0 = 220.
inline ProblemDef cantilever_benchmark(const BenchmarkOptions& opt = {}) {
    ProblemDef p;
    p.nelx = 60;
    p.nely = 20;
    p.u0 = opt.u0.value_or(220.0);
    if (opt.gamma) p.gamma = *opt.gamma;
    for (int iy = 0; iy <= p.nely; ++iy) {
        const int n = p.node_id(0, iy);
        p.fixed_dofs.push_back(2 * n);
        p.fixed_dofs.push_back(2 * n + 1);
    }
    const NodeRef a = opt.point_a.value_or(NodeRef{p.nelx / 2, 0});
    const NodeRef b = opt.point_b.value_or(NodeRef{p.nelx, 0});
    for (const NodeRef& n : {a, b}) {
        if (n.ix < 0 || n.ix > p.nelx || n.iy < 0 || n.iy > p.nely)
            throw InvalidArgument("benchmark load point outside the mesh");
        p.loads.push_back({2 * p.node_id(n.ix, n.iy) + 1, -1.0});
    }
    p.monitored_dof = 2 * p.node_id(b.ix, b.iy) + 1;
    p.validate();
    return p;
}

/// L-shaped beam: 60x60 mesh with the top-right 30x30 quadrant held passive
/// at the minimum density, the top edge of the vertical leg clamped, unit
/// downward loads at the bottom-right endpoint B and at A one quarter of the
/// bottom edge from B; the vertical displacement of B is monitored against
/// u0 = 130.
inline ProblemDef lbeam_benchmark(const BenchmarkOptions& opt = {}) {
    ProblemDef p;
    p.nelx = 60;
    p.nely = 60;
    p.u0 = opt.u0.value_or(130.0);
    if (opt.gamma) p.gamma = *opt.gamma;
    const int half_x = p.nelx / 2;
    const int half_y = p.nely / 2;
    for (int ix = 0; ix <= half_x; ++ix) {
        const int n = p.node_id(ix, p.nely);
        p.fixed_dofs.push_back(2 * n);
        p.fixed_dofs.push_back(2 * n + 1);
    }
    p.passive.assign(static_cast<size_t>(p.n_elems()), 0);
    for (int ex = half_x; ex < p.nelx; ++ex)
        for (int ey = half_y; ey < p.nely; ++ey)
            p.passive[static_cast<size_t>(p.elem_id(ex, ey))] = 1;
    const NodeRef b = opt.point_b.value_or(NodeRef{p.nelx, 0});
    const NodeRef a = opt.point_a.value_or(NodeRef{p.nelx - p.nelx / 4, 0});
    for (const NodeRef& n : {b, a}) {
        if (n.ix < 0 || n.ix > p.nelx || n.iy < 0 || n.iy > p.nely)
            throw InvalidArgument("benchmark load point outside the mesh");
        p.loads.push_back({2 * p.node_id(n.ix, n.iy) + 1, -1.0});
    }
    p.monitored_dof = 2 * p.node_id(b.ix, b.iy) + 1;
    p.validate();
    return p;
}

/// Resolve a benchmark by name ("cantilever" or "lbeam"); "custom" problems
/// are assembled directly from configuration (see config.hpp).
inline ProblemDef build_benchmark(const std::string& name, const BenchmarkOptions& opt = {}) {
    if (name == "cantilever") return cantilever_benchmark(opt);
    if (name == "lbeam") return lbeam_benchmark(opt);
    throw InvalidArgument("unknown benchmark '" + name + "' (expected cantilever or lbeam)");
}

}  // namespace rrbto
