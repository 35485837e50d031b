#ifndef HDGDD_FEM_SPACE_HPP
#define HDGDD_FEM_SPACE_HPP

#include "hdgdd/errors.hpp"
#include "hdgdd/mesh.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace hdgdd {

/// TVNF: u_t = 0, sigma_nn = g.  NVTF: u_n = 0, sigma_nt = g.
enum class BoundaryKind { TVNF, NVTF };

inline const char* to_string(BoundaryKind bc) { return bc == BoundaryKind::TVNF ? "tvnf" : "nvtf"; }

inline BoundaryKind parse_boundary_kind(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "tvnf") return BoundaryKind::TVNF;
    if (s == "nvtf") return BoundaryKind::NVTF;
    throw InvalidArgument("unknown boundary condition '" + s + "' (expected tvnf or nvtf)");
}

/// Parameters along an edge (from its lower vertex) of the two BDM1 nodal functionals.
inline constexpr std::array<double, 2> bdm_node_params()
{
    // 2-point Gauss-Legendre nodes on [0,1]: (1 -+ 1/sqrt(3)) / 2
    constexpr double d = 0.28867513459481288225; // 1 / (2 sqrt 3)
    return {0.5 - d, 0.5 + d};
}

/**
 * Global numbering of the k = 1 hybrid triple.
 *
 *   [0, 2E)        BDM1 velocity: v . n_E at the two Gauss nodes of edge E
 *   [2E, 3E)       edge multiplier (tangential velocity trace), one per edge
 *   [3E, 3E + T)   piecewise-constant pressure
 *   3E + T         NVTF only: Lagrange multiplier of the zero-mean pressure constraint
 *
 * Constrained (essential) dofs: TVNF fixes boundary multipliers, NVTF fixes boundary BDM dofs.
 */
class DofMap {
public:
    DofMap() = default;

    DofMap(const Triangulation& mesh, BoundaryKind bc)
        : n_edges_(mesh.n_edges()), n_tris_(mesh.n_triangles()), bc_(bc)
    {
        is_constrained_.assign(size(), 0);
        for (int e = 0; e < n_edges_; ++e) {
            if (!mesh.is_boundary(e)) continue;
            if (bc == BoundaryKind::TVNF) {
                constrained_.push_back(multiplier(e));
            } else {
                constrained_.push_back(bdm(e, 0));
                constrained_.push_back(bdm(e, 1));
            }
        }
        std::sort(constrained_.begin(), constrained_.end());
        for (int d : constrained_) is_constrained_[d] = 1;
    }

    int n_edges() const { return n_edges_; }
    int n_triangles() const { return n_tris_; }
    BoundaryKind bc() const { return bc_; }

    int bdm(int edge, int m) const { return 2 * edge + m; }
    int multiplier(int edge) const { return 2 * n_edges_ + edge; }
    int pressure(int tri) const { return 3 * n_edges_ + tri; }

    bool has_mean_constraint() const { return bc_ == BoundaryKind::NVTF; }
    std::optional<int> mean_constraint() const
    {
        if (!has_mean_constraint()) return std::nullopt;
        return 3 * n_edges_ + n_tris_;
    }

    /// Number of dofs that carry a geometric location (everything except the constraint row).
    int n_geometric() const { return 3 * n_edges_ + n_tris_; }
    int size() const { return n_geometric() + (has_mean_constraint() ? 1 : 0); }

    const std::vector<int>& constrained() const { return constrained_; }
    bool is_constrained(int dof) const { return is_constrained_[dof] != 0; }

    bool is_bdm(int dof) const { return dof < 2 * n_edges_; }
    bool is_multiplier(int dof) const { return dof >= 2 * n_edges_ && dof < 3 * n_edges_; }
    bool is_pressure(int dof) const { return dof >= 3 * n_edges_ && dof < n_geometric(); }

    /// Edge carrying a BDM or multiplier dof.
    int edge_of(int dof) const { return is_bdm(dof) ? dof / 2 : dof - 2 * n_edges_; }

private:
    int n_edges_ = 0;
    int n_tris_ = 0;
    BoundaryKind bc_ = BoundaryKind::TVNF;
    std::vector<int> constrained_;
    std::vector<char> is_constrained_;
};

/// Interpolation point of every geometric dof (size DofMap::n_geometric()).
inline std::vector<Point> dof_locations(const Triangulation& mesh, const DofMap& dofs)
{
    std::vector<Point> loc(dofs.n_geometric());
    const auto s = bdm_node_params();
    for (int e = 0; e < mesh.n_edges(); ++e) {
        loc[dofs.bdm(e, 0)] = mesh.edge_point(e, s[0]);
        loc[dofs.bdm(e, 1)] = mesh.edge_point(e, s[1]);
        loc[dofs.multiplier(e)] = mesh.edge_midpoint(e);
    }
    for (int t = 0; t < mesh.n_triangles(); ++t) loc[dofs.pressure(t)] = mesh.barycentre(t);
    return loc;
}

} // namespace hdgdd

#endif // HDGDD_FEM_SPACE_HPP
