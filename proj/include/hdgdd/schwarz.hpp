#ifndef HDGDD_SCHWARZ_HPP
#define HDGDD_SCHWARZ_HPP

#include "hdgdd/errors.hpp"
#include "hdgdd/fem_space.hpp"
#include "hdgdd/gmres.hpp"
#include "hdgdd/local_assembly.hpp"
#include "hdgdd/lu.hpp"
#include "hdgdd/mesh.hpp"
#include "hdgdd/sparse.hpp"
#include "hdgdd/system.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hdgdd {

/// Non-overlapping element partition: part[t] in [0, n_parts).
struct Partition {
    int n_parts = 0;
    std::vector<int> part;
};

inline void validate_partition(const Triangulation& mesh, const Partition& p)
{
    if (static_cast<int>(p.part.size()) != mesh.n_triangles())
        throw ValidationError("partition has " + std::to_string(p.part.size()) + " entries for " +
                              std::to_string(mesh.n_triangles()) + " triangles");
    std::vector<int> count(p.n_parts, 0);
    for (int id : p.part) {
        if (id < 0 || id >= p.n_parts) throw ValidationError("partition id " + std::to_string(id) + " out of range");
        ++count[id];
    }
    for (int i = 0; i < p.n_parts; ++i)
        if (count[i] == 0) throw ValidationError("partition part " + std::to_string(i) + " is empty");
}

/// px x py box cells over the unit square, assigned by barycentre.
inline Partition partition_uniform(const Triangulation& mesh, int px, int py)
{
    if (px < 1 || py < 1) throw InvalidArgument("uniform partition needs px, py >= 1");
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const Point& v : mesh.vertices()) {
        xmin = std::min(xmin, v.x());
        xmax = std::max(xmax, v.x());
        ymin = std::min(ymin, v.y());
        ymax = std::max(ymax, v.y());
    }
    if (std::abs(xmin) > 1e-12 || std::abs(ymin) > 1e-12 || std::abs(xmax - 1) > 1e-12 || std::abs(ymax - 1) > 1e-12 ||
        std::abs(mesh.total_area() - 1.0) > 1e-12)
        throw InvalidArgument("uniform partition is defined on the unit square only");
    Partition p;
    p.n_parts = px * py;
    p.part.resize(mesh.n_triangles());
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const Point c = mesh.barycentre(t);
        const int ix = std::min(static_cast<int>(c.x() * px), px - 1);
        const int iy = std::min(static_cast<int>(c.y() * py), py - 1);
        p.part[t] = ix + px * iy;
    }
    validate_partition(mesh, p);
    return p;
}

namespace detail {

inline void bisect(const Triangulation& mesh, std::vector<int>& tris, std::size_t begin, std::size_t end, int parts,
                   int first_id, std::vector<int>& out)
{
    if (parts == 1) {
        for (std::size_t i = begin; i < end; ++i) out[tris[i]] = first_id;
        return;
    }
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (std::size_t i = begin; i < end; ++i) {
        const Point c = mesh.barycentre(tris[i]);
        xmin = std::min(xmin, c.x());
        xmax = std::max(xmax, c.x());
        ymin = std::min(ymin, c.y());
        ymax = std::max(ymax, c.y());
    }
    const int axis = (xmax - xmin) >= (ymax - ymin) ? 0 : 1;
    const int left = parts / 2;
    const std::size_t mid = begin + (end - begin) * static_cast<std::size_t>(left) / static_cast<std::size_t>(parts);
    std::stable_sort(tris.begin() + static_cast<std::ptrdiff_t>(begin), tris.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](int a, int b) {
                         const Point ca = mesh.barycentre(a), cb = mesh.barycentre(b);
                         if (ca[axis] != cb[axis]) return ca[axis] < cb[axis];
                         return ca[1 - axis] < cb[1 - axis];
                     });
    bisect(mesh, tris, begin, mid, left, first_id, out);
    bisect(mesh, tris, mid, end, parts - left, first_id + left, out);
}

} // namespace detail

/// Recursive coordinate bisection of the triangle barycentres into n parts.
inline Partition partition_bisect(const Triangulation& mesh, int n)
{
    if (n < 1) throw InvalidArgument("bisection needs at least one part");
    if (n > mesh.n_triangles()) throw InvalidArgument("more parts than triangles");
    Partition p;
    p.n_parts = n;
    p.part.assign(mesh.n_triangles(), 0);
    std::vector<int> tris(mesh.n_triangles());
    std::iota(tris.begin(), tris.end(), 0);
    detail::bisect(mesh, tris, 0, tris.size(), n, 0, p.part);
    validate_partition(mesh, p);
    return p;
}

/// One part id per line (METIS element partition format).
inline Partition read_partition(std::istream& in, const Triangulation& mesh)
{
    Partition p;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        int id;
        if (!(ls >> id)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw ParseError("partition: expected an integer part id", lineno);
        }
        std::string rest;
        if (ls >> rest) throw ParseError("partition: trailing characters", lineno);
        p.part.push_back(id);
    }
    p.n_parts = p.part.empty() ? 0 : *std::max_element(p.part.begin(), p.part.end()) + 1;
    validate_partition(mesh, p);
    return p;
}

inline Partition read_partition(const std::string& path, const Triangulation& mesh)
{
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open partition file '" + path + "'");
    return read_partition(in, mesh);
}

/**
 * Overlapping decomposition. elems[i] grows elems0[i] by `overlap` rounds of vertex
 * adjacency; dofs[i] are all dofs attached to elems[i] (plus the global constraint dof,
 * if any), weights[i] the partition-of-unity values on dofs[i].
 */
struct Decomposition {
    int n_parts = 0;
    int overlap = 0;
    std::vector<std::vector<int>> elems0;
    std::vector<std::vector<int>> elems;
    std::vector<std::vector<int>> dofs;
    std::vector<std::vector<double>> weights;
};

/// Adds every triangle sharing at least one vertex with the current set, `layers` times.
inline std::vector<int> grow_by_vertices(const Triangulation& mesh, const std::vector<std::vector<int>>& vtris,
                                         std::vector<int> set, int layers)
{
    std::vector<char> in(mesh.n_triangles(), 0), vmark(mesh.n_vertices(), 0);
    for (int t : set) in[t] = 1;
    for (int round = 0; round < layers; ++round) {
        std::fill(vmark.begin(), vmark.end(), 0);
        for (int t = 0; t < mesh.n_triangles(); ++t)
            if (in[t])
                for (int v : mesh.triangle(t)) vmark[v] = 1;
        for (int v = 0; v < mesh.n_vertices(); ++v)
            if (vmark[v])
                for (int t : vtris[v]) in[t] = 1;
    }
    set.clear();
    for (int t = 0; t < mesh.n_triangles(); ++t)
        if (in[t]) set.push_back(t);
    return set;
}

inline Decomposition add_overlap(const Triangulation& mesh, const Partition& p, int layers)
{
    if (layers < 1) throw InvalidArgument("overlap must be at least one layer");
    validate_partition(mesh, p);
    Decomposition dec;
    dec.n_parts = p.n_parts;
    dec.overlap = layers;
    dec.elems0.resize(p.n_parts);
    for (int t = 0; t < mesh.n_triangles(); ++t) dec.elems0[p.part[t]].push_back(t);
    const auto vtris = vertex_triangles(mesh);
    dec.elems.resize(p.n_parts);
    for (int i = 0; i < p.n_parts; ++i) dec.elems[i] = grow_by_vertices(mesh, vtris, dec.elems0[i], layers);
    return dec;
}

/// Sorted dofs attached to a set of triangles (edge dofs, pressures, and the constraint dof).
inline std::vector<int> subdomain_dofs(const Triangulation& mesh, const DofMap& dofs, const std::vector<int>& tris)
{
    std::vector<char> edge(mesh.n_edges(), 0);
    std::vector<int> out;
    for (int t : tris) {
        for (const auto& r : mesh.tri_edges(t)) edge[r.edge] = 1;
        out.push_back(dofs.pressure(t));
    }
    for (int e = 0; e < mesh.n_edges(); ++e) {
        if (!edge[e]) continue;
        out.push_back(dofs.bdm(e, 0));
        out.push_back(dofs.bdm(e, 1));
        out.push_back(dofs.multiplier(e));
    }
    if (auto c = dofs.mean_constraint()) out.push_back(*c);
    std::sort(out.begin(), out.end());
    return out;
}

/**
 * chi~_i = 1 on the vertices of elems0[i], 0 elsewhere, extended piecewise linearly and
 * normalised vertexwise; D_i samples chi_i at the dof locations. The constraint dof gets 1/N
 * in every subdomain. Verifies sum_i R_i^T D_i R_i = I.
 */
inline void partition_of_unity(const Triangulation& mesh, const DofMap& dofs, Decomposition& dec)
{
    if (dec.overlap < 1) throw InvalidArgument("partition of unity needs overlap >= 1");
    const int N = dec.n_parts;
    const int nv = mesh.n_vertices();
    std::vector<std::vector<char>> mark(N, std::vector<char>(nv, 0));
    std::vector<int> count(nv, 0);
    for (int i = 0; i < N; ++i) {
        for (int t : dec.elems0[i])
            for (int v : mesh.triangle(t)) mark[i][v] = 1;
        for (int v = 0; v < nv; ++v) count[v] += mark[i][v];
    }
    for (int v = 0; v < nv; ++v)
        if (count[v] == 0) throw InternalError("partition of unity: vertex " + std::to_string(v) + " is uncovered");

    const auto s = bdm_node_params();
    std::vector<double> total(dofs.size(), 0.0);
    dec.dofs.assign(N, {});
    dec.weights.assign(N, {});
    for (int i = 0; i < N; ++i) {
        auto chi = [&](int v) { return mark[i][v] ? 1.0 / count[v] : 0.0; };
        dec.dofs[i] = subdomain_dofs(mesh, dofs, dec.elems[i]);
        auto& w = dec.weights[i];
        w.resize(dec.dofs[i].size());
        for (std::size_t k = 0; k < dec.dofs[i].size(); ++k) {
            const int d = dec.dofs[i][k];
            if (dofs.is_pressure(d)) {
                const auto& tv = mesh.triangle(d - dofs.pressure(0));
                w[k] = (chi(tv[0]) + chi(tv[1]) + chi(tv[2])) / 3.0;
            } else if (dofs.is_bdm(d) || dofs.is_multiplier(d)) {
                const int e = dofs.edge_of(d);
                const double sp = dofs.is_multiplier(d) ? 0.5 : s[d % 2];
                w[k] = (1.0 - sp) * chi(mesh.edge(e)[0]) + sp * chi(mesh.edge(e)[1]);
            } else {
                w[k] = 1.0 / N;
            }
            total[d] += w[k];
        }
    }
    for (int d = 0; d < dofs.size(); ++d)
        if (std::abs(total[d] - 1.0) > 1e-12)
            throw InternalError("partition of unity: weights of dof " + std::to_string(d) + " sum to " +
                                std::to_string(total[d]));
}

inline Decomposition decompose(const Triangulation& mesh, const DofMap& dofs, const Partition& p, int overlap)
{
    Decomposition dec = add_overlap(mesh, p, overlap);
    partition_of_unity(mesh, dofs, dec);
    return dec;
}

enum class PrecondKind { none, ras, mras_tvnf, mras_nvtf };

inline const char* to_string(PrecondKind k)
{
    switch (k) {
    case PrecondKind::none: return "none";
    case PrecondKind::ras: return "ras";
    case PrecondKind::mras_tvnf: return "mras-tvnf";
    case PrecondKind::mras_nvtf: return "mras-nvtf";
    }
    return "?";
}

inline PrecondKind parse_precond_kind(const std::string& s)
{
    if (s == "none") return PrecondKind::none;
    if (s == "ras") return PrecondKind::ras;
    if (s == "mras-tvnf") return PrecondKind::mras_tvnf;
    if (s == "mras-nvtf") return PrecondKind::mras_nvtf;
    throw InvalidArgument("unknown preconditioner '" + s + "' (expected none, ras, mras-tvnf or mras-nvtf)");
}

/// Local operator of one subdomain, in the numbering of Decomposition::dofs[i] (plus an
/// optional trailing auxiliary mean-pressure row).
struct LocalProblem {
    SparseMatrix matrix;
    std::vector<int> zeroed;      ///< local indices whose input is replaced by 0 (interface conditions)
    std::vector<int> interface_edges;
    bool floating = false;
    bool auxiliary_row = false;
};

/// How B_i is built: by restricting the global matrix (default) or by assembling on elems[i].
enum class MrasAssembly { restricted, local };

inline std::string to_string(MrasAssembly a) { return a == MrasAssembly::restricted ? "restricted" : "local"; }

inline MrasAssembly parse_mras_assembly(const std::string& s)
{
    if (s == "restricted") return MrasAssembly::restricted;
    if (s == "local") return MrasAssembly::local;
    throw InvalidArgument("unknown MRAS assembly '" + s + "' (expected restricted or local)");
}

/**
 * Local matrix B_i for MRAS. Interface edges are those with one adjacent triangle in
 * elems[i] that are interior to the mesh; they get the homogeneous interface condition
 * `ic`: TVNF eliminates their multiplier, NVTF both BDM dofs. Edges on the physical
 * boundary keep the global treatment.
 *
 * restricted: start from R_i A R_i^T, so B_i differs from it only on the eliminated rows
 * and columns. local: assemble the hdG forms over elems[i] only, which also drops the
 * outside triangles' contributions to interface-edge dofs.
 *
 * A subdomain whose whole boundary fixes the normal velocity is floating; without a
 * global constraint dof it gets an auxiliary local mean-pressure row.
 */
inline LocalProblem mras_local_problem(const SparseMatrix& A, const Triangulation& mesh, const DofMap& dofs,
                                       const StokesParams& params, const Decomposition& dec, int i, BoundaryKind ic,
                                       MrasAssembly assembly = MrasAssembly::restricted)
{
    const auto& ldofs = dec.dofs.at(i);
    const auto& tris = dec.elems.at(i);
    std::vector<int> local(dofs.size(), -1);
    for (std::size_t k = 0; k < ldofs.size(); ++k) local[ldofs[k]] = static_cast<int>(k);

    std::vector<int> adj(mesh.n_edges(), 0);
    for (int t : tris)
        for (const auto& r : mesh.tri_edges(t)) ++adj[r.edge];

    LocalProblem lp;
    bool all_normal_fixed = true;
    for (int e = 0; e < mesh.n_edges(); ++e) {
        if (adj[e] != 1) continue;
        if (mesh.is_boundary(e)) {
            if (dofs.bc() != BoundaryKind::NVTF) all_normal_fixed = false;
        } else {
            lp.interface_edges.push_back(e);
            if (ic != BoundaryKind::NVTF) all_normal_fixed = false;
        }
    }
    lp.floating = all_normal_fixed;
    lp.auxiliary_row = lp.floating && !dofs.has_mean_constraint();

    const int n = static_cast<int>(ldofs.size()) + (lp.auxiliary_row ? 1 : 0);
    std::vector<Triplet> entries;
    if (assembly == MrasAssembly::restricted) {
        entries = A.submatrix(ldofs).triplets();
    } else {
        std::vector<Triplet> global;
        global.reserve(tris.size() * 93);
        for (int t : tris) element_triplets(mesh, dofs, params, t, global);
        if (auto c = dofs.mean_constraint()) mean_constraint_triplets(mesh, dofs, tris, *c, global);
        entries.reserve(global.size() + 2 * tris.size());
        for (const auto& t : global) entries.push_back({local[t.row], local[t.col], t.value});
    }
    if (lp.auxiliary_row) {
        for (int t : tris) {
            entries.push_back({n - 1, local[dofs.pressure(t)], mesh.area(t)});
            entries.push_back({local[dofs.pressure(t)], n - 1, mesh.area(t)});
        }
    }

    std::vector<char> mask(n, 0);
    if (assembly == MrasAssembly::local)
        for (std::size_t k = 0; k < ldofs.size(); ++k)
            if (dofs.is_constrained(ldofs[k])) mask[k] = 1;
    for (int e : lp.interface_edges) {
        if (ic == BoundaryKind::TVNF) {
            lp.zeroed.push_back(local[dofs.multiplier(e)]);
        } else {
            lp.zeroed.push_back(local[dofs.bdm(e, 0)]);
            lp.zeroed.push_back(local[dofs.bdm(e, 1)]);
        }
    }
    for (int k : lp.zeroed) mask[k] = 1;
    std::sort(lp.zeroed.begin(), lp.zeroed.end());

    std::vector<double> rhs(n, 0.0), values(n, 0.0);
    lp.matrix = apply_constraints(n, std::move(entries), rhs, mask, values);
    return lp;
}

/**
 * M^{-1} v = sum_i R_i^T D_i A_i^{-1} R_i v with A_i = R_i A R_i^T (RAS) or the local
 * interface-condition discretisation B_i (MRAS). Subdomains are applied in index order.
 */
class SchwarzPreconditioner {
public:
    PrecondKind kind() const { return kind_; }
    int n_subdomains() const { return static_cast<int>(subs_.size()); }
    int size() const { return n_; }
    int floating_subdomains() const
    {
        return static_cast<int>(std::count_if(subs_.begin(), subs_.end(), [](const Sub& s) { return s.floating; }));
    }

    void apply(std::span<const double> in, std::span<double> out) const
    {
        std::fill(out.begin(), out.end(), 0.0);
        for (const Sub& s : subs_) {
            const std::size_t m = s.dofs.size();
            std::vector<double> r(s.lu.size(), 0.0), z(s.lu.size());
            for (std::size_t k = 0; k < m; ++k) r[k] = in[s.dofs[k]];
            for (int k : s.zeroed) r[k] = 0.0;
            s.lu.solve(r, z);
            for (std::size_t k = 0; k < m; ++k) out[s.dofs[k]] += s.weights[k] * z[k];
        }
    }

    LinearOperator as_operator() const
    {
        return [this](std::span<const double> in, std::span<double> out) { apply(in, out); };
    }

    friend SchwarzPreconditioner build_ras(const SparseMatrix& A, const Decomposition& dec);
    friend SchwarzPreconditioner build_mras(const SparseMatrix& A, const Triangulation& mesh, const DofMap& dofs,
                                            const StokesParams& params, const Decomposition& dec, BoundaryKind ic,
                                            MrasAssembly assembly);

private:
    struct Sub {
        std::vector<int> dofs;
        std::vector<double> weights;
        std::vector<int> zeroed;
        bool floating = false;
        Factorization lu;
    };

    static Factorization factor(const SparseMatrix& M, int i)
    {
        try {
            return Factorization(M);
        } catch (const FactorizationError& e) {
            throw FactorizationError("subdomain " + std::to_string(i) + ": " + e.what());
        }
    }

    PrecondKind kind_ = PrecondKind::none;
    int n_ = 0;
    std::vector<Sub> subs_;
};

inline void check_decomposition(const Decomposition& dec, int n)
{
    if (dec.dofs.size() != static_cast<std::size_t>(dec.n_parts) || dec.weights.size() != dec.dofs.size())
        throw InvalidArgument("decomposition has no partition of unity");
    for (const auto& d : dec.dofs)
        if (!d.empty() && d.back() >= n) throw InvalidArgument("decomposition does not match the matrix");
}

inline SchwarzPreconditioner build_ras(const SparseMatrix& A, const Decomposition& dec)
{
    check_decomposition(dec, A.size());
    SchwarzPreconditioner P;
    P.kind_ = PrecondKind::ras;
    P.n_ = A.size();
    P.subs_.reserve(dec.n_parts);
    for (int i = 0; i < dec.n_parts; ++i) {
        SchwarzPreconditioner::Sub s;
        s.dofs = dec.dofs[i];
        s.weights = dec.weights[i];
        s.lu = SchwarzPreconditioner::factor(A.submatrix(s.dofs), i);
        P.subs_.push_back(std::move(s));
    }
    return P;
}

inline SchwarzPreconditioner build_mras(const SparseMatrix& A, const Triangulation& mesh, const DofMap& dofs,
                                        const StokesParams& params, const Decomposition& dec, BoundaryKind ic,
                                        MrasAssembly assembly = MrasAssembly::restricted)
{
    if (A.size() != dofs.size()) throw InvalidArgument("build_mras: matrix does not match the dof map");
    check_decomposition(dec, dofs.size());
    SchwarzPreconditioner P;
    P.kind_ = ic == BoundaryKind::TVNF ? PrecondKind::mras_tvnf : PrecondKind::mras_nvtf;
    P.n_ = dofs.size();
    P.subs_.reserve(dec.n_parts);
    for (int i = 0; i < dec.n_parts; ++i) {
        LocalProblem lp = mras_local_problem(A, mesh, dofs, params, dec, i, ic, assembly);
        SchwarzPreconditioner::Sub s;
        s.dofs = dec.dofs[i];
        s.weights = dec.weights[i];
        s.zeroed = std::move(lp.zeroed);
        s.floating = lp.floating;
        s.lu = SchwarzPreconditioner::factor(lp.matrix, i);
        P.subs_.push_back(std::move(s));
    }
    return P;
}

} // namespace hdgdd

#endif // HDGDD_SCHWARZ_HPP
