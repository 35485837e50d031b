#ifndef HDGDD_SYSTEM_HPP
#define HDGDD_SYSTEM_HPP

#include "hdgdd/errors.hpp"
#include "hdgdd/fem_space.hpp"
#include "hdgdd/local_assembly.hpp"
#include "hdgdd/mesh.hpp"
#include "hdgdd/quadrature.hpp"
#include "hdgdd/sparse.hpp"

#include <span>
#include <vector>

namespace hdgdd {

/// Right-hand side data. `essential`, when set, prescribes the velocity whose traces fill
/// the constrained dofs; otherwise they are zero.
struct ProblemData {
    VectorField f;
    BoundaryDatum g;
    VectorField essential;
};

struct AssembledSystem {
    SparseMatrix A;
    std::vector<double> rhs;
    DofMap dofmap;
    StokesParams params;
};

/// v(x_m) . n_E at the m-th BDM node of edge e.
inline double bdm_functional(const Triangulation& mesh, int e, int m, const VectorField& v)
{
    return v(mesh.edge_point(e, bdm_node_params()[m])).dot(mesh.edge_normal(e));
}

/// Edge average of v . t_E.
inline double multiplier_functional(const Triangulation& mesh, int e, const VectorField& v)
{
    const LineRule& q = gauss_rule(4);
    const Point t = mesh.edge_tangent(e);
    double s = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * v(mesh.edge_point(e, q.nodes[i])).dot(t);
    return s;
}

/// Unconstrained a- and b-form contributions of one element, in global numbering.
inline void element_triplets(const Triangulation& mesh, const DofMap& dofs, const StokesParams& p, int tri,
                             std::vector<Triplet>& out)
{
    const ElementKernel k = bdm1_basis(mesh, tri);
    const LocalMatrix A = local_a(k, p.nu, p.tau, p.eps);
    const LocalRow B = local_b(k);
    const auto g = k.global_dofs(dofs);
    for (int i = 0; i < kLocalDofs; ++i)
        for (int j = 0; j < kLocalDofs; ++j) out.push_back({g[i], g[j], A(i, j)});
    const int q = dofs.pressure(tri);
    for (int a = 0; a < kLocalBdm; ++a) {
        out.push_back({q, g[a], B(a)});
        out.push_back({g[a], q, B(a)});
    }
}

/// Bordered zero-mean pressure row/column over the given triangles.
inline void mean_constraint_triplets(const Triangulation& mesh, const DofMap& dofs, std::span<const int> tris,
                                     int constraint_dof, std::vector<Triplet>& out)
{
    for (int t : tris) {
        out.push_back({constraint_dof, dofs.pressure(t), mesh.area(t)});
        out.push_back({dofs.pressure(t), constraint_dof, mesh.area(t)});
    }
}

/**
 * Symmetric elimination of essential dofs: rows and columns of masked dofs are replaced by
 * the identity, rhs[c] = value[c], and the eliminated columns are moved to the rhs.
 */
inline SparseMatrix apply_constraints(int n, std::vector<Triplet> entries, std::span<double> rhs,
                                      const std::vector<char>& constrained, std::span<const double> values)
{
    std::vector<Triplet> kept;
    kept.reserve(entries.size());
    for (const auto& t : entries) {
        if (constrained[t.row]) continue;
        if (constrained[t.col]) {
            rhs[t.row] -= t.value * values[t.col];
            continue;
        }
        kept.push_back(t);
    }
    for (int i = 0; i < n; ++i) {
        if (!constrained[i]) continue;
        kept.push_back({i, i, 1.0});
        rhs[i] = values[i];
    }
    return SparseMatrix::from_triplets(n, std::move(kept));
}

/**
 * Global saddle-point system
 *
 *   [ A_a  B^T  (0) ] [u, u~]   [F]
 *   [ B    0    r   ] [p    ] = [0]
 *   [ (0)  r^T  0   ] [lambda]  [0]     (NVTF only: r_j = |K_j|)
 *
 * with B = -int q div v in both off-diagonal blocks.
 */
inline AssembledSystem assemble(const Triangulation& mesh, const DofMap& dofs, const StokesParams& params,
                                const ProblemData& data)
{
    if (dofs.n_edges() != mesh.n_edges() || dofs.n_triangles() != mesh.n_triangles())
        throw InternalError("assemble: dof map does not belong to this mesh");
    if (dofs.bc() != params.bc) throw InternalError("assemble: dof map and parameters disagree on the boundary kind");

    const int n = dofs.size();
    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(mesh.n_triangles()) * 93);
    std::vector<double> rhs(n, 0.0);
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        element_triplets(mesh, dofs, params, t, entries);
        if (data.f) {
            const ElementKernel k = bdm1_basis(mesh, t);
            const auto F = local_load(k, data.f);
            const auto g = k.global_dofs(dofs);
            for (int a = 0; a < kLocalBdm; ++a) rhs[g[a]] += F(a);
        }
    }
    if (auto c = dofs.mean_constraint()) {
        std::vector<int> all(mesh.n_triangles());
        for (int t = 0; t < mesh.n_triangles(); ++t) all[t] = t;
        mean_constraint_triplets(mesh, dofs, all, *c, entries);
    }
    for (int e = 0; e < mesh.n_edges(); ++e) {
        if (!mesh.is_boundary(e)) continue;
        for (const auto& [dof, v] : edge_load(mesh, dofs, e, data.g)) rhs[dof] += v;
    }

    std::vector<char> mask(n, 0);
    std::vector<double> values(n, 0.0);
    for (int d : dofs.constrained()) {
        mask[d] = 1;
        if (!data.essential) continue;
        const int e = dofs.edge_of(d);
        values[d] = dofs.is_bdm(d) ? bdm_functional(mesh, e, d % 2, data.essential)
                                   : multiplier_functional(mesh, e, data.essential);
    }

    AssembledSystem sys;
    sys.A = apply_constraints(n, std::move(entries), rhs, mask, values);
    sys.rhs = std::move(rhs);
    sys.dofmap = dofs;
    sys.params = params;
    return sys;
}

} // namespace hdgdd

#endif // HDGDD_SYSTEM_HPP
