#ifndef HDGDD_LOCAL_ASSEMBLY_HPP
#define HDGDD_LOCAL_ASSEMBLY_HPP

#include "hdgdd/errors.hpp"
#include "hdgdd/fem_space.hpp"
#include "hdgdd/mesh.hpp"
#include "hdgdd/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <utility>
#include <vector>

namespace hdgdd {

using Mat2 = Eigen::Matrix2d;
using VectorField = std::function<Point(const Point&)>;

/// g(x, n, t): boundary datum evaluated with the outward normal n and the edge tangent t.
using BoundaryDatum = std::function<double(const Point& x, const Point& n, const Point& t)>;

/// Degree-1 vector field v(x) = value + grad (x - origin), grad(i,j) = d v_i / d x_j.
struct LinearField {
    Point origin = Point::Zero();
    Point value = Point::Zero();
    Mat2 grad = Mat2::Zero();

    Point operator()(const Point& x) const { return value + grad * (x - origin); }
    double div() const { return grad.trace(); }
};

struct EdgeGeometry {
    int edge = -1;
    int sign = 1;
    double length = 0.0;
    Point lower;   // lower-id vertex; edge points are lower + s (upper - lower)
    Point upper;
    Point normal;  // outward normal of the element
    Point tangent; // global edge tangent (lower -> upper); the multiplier carries v . tangent

    Point at(double s) const { return (1.0 - s) * lower + s * upper; }
};

/// Local dof order of the element kernels: 6 BDM (2 j + m for local edge j, node m), then
/// 3 multipliers (local edge j).
inline constexpr int kLocalBdm = 6;
inline constexpr int kLocalDofs = 9;

/**
 * BDM1 nodal basis of one triangle, built in physical coordinates.
 *
 * Basis function 2j+m is dual to the functional v -> v(x_{j,m}) . n_E, where x_{j,m} is the
 * m-th Gauss node of local edge j (counted from the lower global vertex) and n_E the global
 * edge normal. Sharing the global normal makes neighbouring elements agree on the dof.
 */
struct ElementKernel {
    int tri = -1;
    double area = 0.0;
    double diameter = 0.0;
    Point centre;
    std::array<Point, 3> vertices;
    std::array<LinearField, kLocalBdm> basis;
    std::array<EdgeGeometry, 3> edges;

    /// Global indices of the 9 local dofs.
    std::array<int, kLocalDofs> global_dofs(const DofMap& dofs) const
    {
        std::array<int, kLocalDofs> g{};
        for (int j = 0; j < 3; ++j) {
            g[2 * j] = dofs.bdm(edges[j].edge, 0);
            g[2 * j + 1] = dofs.bdm(edges[j].edge, 1);
            g[kLocalBdm + j] = dofs.multiplier(edges[j].edge);
        }
        return g;
    }

    /// Evaluates sum_a coeffs[a] * basis[a] as one linear field.
    LinearField combine(const std::array<double, kLocalBdm>& coeffs) const
    {
        LinearField v;
        v.origin = centre;
        for (int a = 0; a < kLocalBdm; ++a) {
            v.value += coeffs[a] * basis[a].value;
            v.grad += coeffs[a] * basis[a].grad;
        }
        return v;
    }

    Point map(const std::array<double, 3>& bary) const
    {
        return bary[0] * vertices[0] + bary[1] * vertices[1] + bary[2] * vertices[2];
    }
};

inline ElementKernel bdm1_basis(const Triangulation& mesh, int tri)
{
    ElementKernel k;
    k.tri = tri;
    k.area = mesh.area(tri);
    k.diameter = mesh.diameter(tri);
    k.centre = mesh.barycentre(tri);
    for (int i = 0; i < 3; ++i) k.vertices[i] = mesh.vertex(mesh.triangle(tri)[i]);
    for (int j = 0; j < 3; ++j) {
        const auto& r = mesh.tri_edges(tri)[j];
        auto& eg = k.edges[j];
        eg.edge = r.edge;
        eg.sign = r.sign;
        eg.length = mesh.edge_length(r.edge);
        eg.lower = mesh.vertex(mesh.edge(r.edge)[0]);
        eg.upper = mesh.vertex(mesh.edge(r.edge)[1]);
        eg.tangent = mesh.edge_tangent(r.edge);
        eg.normal = static_cast<double>(r.sign) * mesh.edge_normal(r.edge);
    }

    // Functional matrix against the scaled monomials
    // (1,0), (xi1,0), (xi2,0), (0,1), (0,xi1), (0,xi2) with xi = (x - centre) / h.
    const double h = k.diameter;
    Eigen::Matrix<double, 6, 6> F;
    const auto s = bdm_node_params();
    for (int j = 0; j < 3; ++j) {
        const Point n = static_cast<double>(k.edges[j].sign) * k.edges[j].normal; // global normal
        for (int m = 0; m < 2; ++m) {
            const Point xi = (k.edges[j].at(s[m]) - k.centre) / h;
            const int row = 2 * j + m;
            F(row, 0) = n.x();
            F(row, 1) = n.x() * xi.x();
            F(row, 2) = n.x() * xi.y();
            F(row, 3) = n.y();
            F(row, 4) = n.y() * xi.x();
            F(row, 5) = n.y() * xi.y();
        }
    }
    Eigen::PartialPivLU<Eigen::Matrix<double, 6, 6>> lu(F);
    if (!(lu.rcond() > 1e-12))
        throw GeometryError("bdm1_basis: singular functional matrix on triangle " + std::to_string(tri));
    const Eigen::Matrix<double, 6, 6> C = lu.inverse();
    for (int a = 0; a < kLocalBdm; ++a) {
        auto& phi = k.basis[a];
        phi.origin = k.centre;
        phi.value = Point(C(0, a), C(3, a));
        phi.grad << C(1, a) / h, C(2, a) / h, C(4, a) / h, C(5, a) / h;
    }
    return k;
}

struct StokesParams {
    double nu = 1.0;
    double tau = 6.0;
    int eps = -1; ///< -1 symmetric, +1 non-symmetric
    BoundaryKind bc = BoundaryKind::TVNF;
};

using LocalMatrix = Eigen::Matrix<double, kLocalDofs, kLocalDofs>;
using LocalRow = Eigen::Matrix<double, 1, kLocalDofs>;

/**
 * Velocity form on one element. Row = test function, column = trial function:
 *
 *   a(w, v) = nu (grad w, grad v)_K - nu <(d_n w)_t, v_t - v~>_dK + eps nu <w_t - w~, (d_n v)_t>_dK
 *           + nu tau / h_K <P0(w_t - w~), P0(v_t - v~)>_dK
 *
 * P0 is the edge average. For BDM1, (d_n w)_t is constant per edge.
 */
inline LocalMatrix local_a(const ElementKernel& k, double nu, double tau, int eps)
{
    if (!(tau > 0.0)) throw InvalidArgument("local_a: stabilisation parameter tau must be positive");
    if (eps != -1 && eps != 1) throw InvalidArgument("local_a: eps must be -1 or +1");

    LocalMatrix A = LocalMatrix::Zero();
    for (int a = 0; a < kLocalBdm; ++a)
        for (int b = 0; b < kLocalBdm; ++b)
            A(b, a) = nu * k.area * (k.basis[a].grad.array() * k.basis[b].grad.array()).sum();

    const LineRule& q = gauss_rule(3);
    for (int j = 0; j < 3; ++j) {
        const EdgeGeometry& eg = k.edges[j];
        // Per local dof: (d_n phi)_t, and the edge average of the jump phi_t - phi~.
        std::array<double, kLocalDofs> dnt{};
        std::array<double, kLocalDofs> jump_avg{};
        std::array<std::array<double, 3>, kLocalDofs> jump{};
        for (int a = 0; a < kLocalBdm; ++a) {
            dnt[a] = eg.tangent.dot(k.basis[a].grad * eg.normal);
            for (std::size_t i = 0; i < q.nodes.size(); ++i) {
                jump[a][i] = eg.tangent.dot(k.basis[a](eg.at(q.nodes[i])));
                jump_avg[a] += q.weights[i] * jump[a][i];
            }
        }
        for (std::size_t i = 0; i < q.nodes.size(); ++i) jump[kLocalBdm + j][i] = -1.0;
        jump_avg[kLocalBdm + j] = -1.0;

        const double L = eg.length;
        const double pen = nu * tau / k.diameter * L;
        for (int w = 0; w < kLocalDofs; ++w) {
            for (int v = 0; v < kLocalDofs; ++v) {
                double cons = 0.0; // -<(d_n w)_t, J(v)> + eps <J(w), (d_n v)_t>
                for (std::size_t i = 0; i < q.nodes.size(); ++i)
                    cons += q.weights[i] * (-dnt[w] * jump[v][i] + eps * jump[w][i] * dnt[v]);
                A(v, w) += nu * L * cons + pen * jump_avg[w] * jump_avg[v];
            }
        }
    }
    return A;
}

/// Pressure row: entry a = -int_K div(phi_a) dx for the constant pressure test function.
inline LocalRow local_b(const ElementKernel& k)
{
    LocalRow B = LocalRow::Zero();
    for (int a = 0; a < kLocalBdm; ++a) B(a) = -k.area * k.basis[a].div();
    return B;
}

/// int_K f . phi_a dx with the degree-5 rule.
inline Eigen::Matrix<double, kLocalBdm, 1> local_load(const ElementKernel& k, const VectorField& f)
{
    Eigen::Matrix<double, kLocalBdm, 1> F = Eigen::Matrix<double, kLocalBdm, 1>::Zero();
    if (!f) return F;
    const TriangleRule& rule = triangle_rule_degree5();
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
        const Point x = k.map(rule.bary[q]);
        const Point fx = f(x);
        for (int a = 0; a < kLocalBdm; ++a) F(a) += k.area * rule.weights[q] * fx.dot(k.basis[a](x));
    }
    return F;
}

/**
 * Natural boundary load on a boundary edge, as (global dof, value) pairs.
 *
 * TVNF: int_E g (v)_n ds on the two BDM dofs of the edge (other basis functions have zero
 * normal trace there). NVTF: int_E g v~ ds on the edge multiplier.
 */
inline std::vector<std::pair<int, double>> edge_load(const Triangulation& mesh, const DofMap& dofs, int edge,
                                                     const BoundaryDatum& g)
{
    if (!mesh.is_boundary(edge)) throw InvalidArgument("edge_load: edge " + std::to_string(edge) + " is interior");
    std::vector<std::pair<int, double>> out;
    if (!g) return out;

    const int tri = mesh.edge_tris(edge)[0];
    int local = 0;
    while (mesh.tri_edges(tri)[local].edge != edge) ++local;
    const double sign = mesh.tri_edges(tri)[local].sign;
    const Point n_out = sign * mesh.edge_normal(edge);
    const Point t = mesh.edge_tangent(edge);
    const double L = mesh.edge_length(edge);
    const LineRule& q = gauss_rule(4);

    if (dofs.bc() == BoundaryKind::TVNF) {
        // The edge trace of the nodal basis is the linear Lagrange basis through the two
        // Gauss nodes; its outward-normal component carries the orientation sign.
        const auto s = bdm_node_params();
        std::array<double, 2> load{};
        for (std::size_t i = 0; i < q.nodes.size(); ++i) {
            const double gx = g(mesh.edge_point(edge, q.nodes[i]), n_out, t);
            const double l0 = (s[1] - q.nodes[i]) / (s[1] - s[0]);
            load[0] += q.weights[i] * gx * l0;
            load[1] += q.weights[i] * gx * (1.0 - l0);
        }
        out.emplace_back(dofs.bdm(edge, 0), sign * L * load[0]);
        out.emplace_back(dofs.bdm(edge, 1), sign * L * load[1]);
    } else {
        double load = 0.0;
        for (std::size_t i = 0; i < q.nodes.size(); ++i)
            load += q.weights[i] * g(mesh.edge_point(edge, q.nodes[i]), n_out, t);
        out.emplace_back(dofs.multiplier(edge), L * load);
    }
    return out;
}

} // namespace hdgdd

#endif // HDGDD_LOCAL_ASSEMBLY_HPP
