#ifndef HDGDD_MESH_HPP
#define HDGDD_MESH_HPP

#include "hdgdd/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace hdgdd {

using Point = Eigen::Vector2d;

inline double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

/// +90 degree rotation.
inline Point rotate_ccw(const Point& v) { return {-v.y(), v.x()}; }

/// Edge of a triangle seen from the triangle: global edge id and whether the
/// triangle's outward normal agrees (+1) or disagrees (-1) with the global edge normal.
struct EdgeRef {
    int edge;
    int sign;
};

/**
 * Conforming triangulation with derived edge topology.
 *
 * Edges are stored as (lower vertex, higher vertex). The global edge tangent runs
 * lower -> higher and the global edge normal is that tangent rotated by +90 degrees.
 * Local edge j of a triangle (a, b, c) joins its vertices j and (j+1) mod 3.
 *
 * Immutable after construction.
 */
class Triangulation {
public:
    Triangulation() = default;

    /// Validates the input (index ranges, positive areas, manifold edges) and builds topology.
    Triangulation(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles)
        : vertices_(std::move(vertices)), triangles_(std::move(triangles))
    {
        build();
    }

    int n_vertices() const { return static_cast<int>(vertices_.size()); }
    int n_triangles() const { return static_cast<int>(triangles_.size()); }
    int n_edges() const { return static_cast<int>(edges_.size()); }
    int n_boundary_edges() const { return n_boundary_edges_; }

    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    const std::vector<std::array<int, 2>>& edges() const { return edges_; }

    const Point& vertex(int v) const { return vertices_[v]; }
    const std::array<int, 3>& triangle(int t) const { return triangles_[t]; }
    const std::array<int, 2>& edge(int e) const { return edges_[e]; }
    const std::array<EdgeRef, 3>& tri_edges(int t) const { return tri_edges_[t]; }

    /// Adjacent triangles; the second entry is -1 on boundary edges.
    const std::array<int, 2>& edge_tris(int e) const { return edge_tris_[e]; }
    bool is_boundary(int e) const { return edge_tris_[e][1] < 0; }

    double area(int t) const
    {
        const auto& tr = triangles_[t];
        return 0.5 * cross(vertices_[tr[1]] - vertices_[tr[0]], vertices_[tr[2]] - vertices_[tr[0]]);
    }

    /// h_K = diam(K), the longest edge.
    double diameter(int t) const { return diameter_[t]; }
    double h_max() const { return diameter_.empty() ? 0.0 : *std::max_element(diameter_.begin(), diameter_.end()); }

    Point barycentre(int t) const
    {
        const auto& tr = triangles_[t];
        return (vertices_[tr[0]] + vertices_[tr[1]] + vertices_[tr[2]]) / 3.0;
    }

    double edge_length(int e) const { return (vertices_[edges_[e][1]] - vertices_[edges_[e][0]]).norm(); }
    Point edge_tangent(int e) const { return (vertices_[edges_[e][1]] - vertices_[edges_[e][0]]).normalized(); }
    Point edge_normal(int e) const { return rotate_ccw(edge_tangent(e)); }
    Point edge_midpoint(int e) const { return 0.5 * (vertices_[edges_[e][0]] + vertices_[edges_[e][1]]); }

    /// Point at parameter s in [0,1] along the edge, measured from the lower vertex.
    Point edge_point(int e, double s) const
    {
        return (1.0 - s) * vertices_[edges_[e][0]] + s * vertices_[edges_[e][1]];
    }

    /// Outward unit normal of triangle t on its local edge j.
    Point outward_normal(int t, int j) const
    {
        const auto& r = tri_edges_[t][j];
        return static_cast<double>(r.sign) * edge_normal(r.edge);
    }

    double total_area() const
    {
        double a = 0.0;
        for (int t = 0; t < n_triangles(); ++t) a += area(t);
        return a;
    }

private:
    void build()
    {
        const int nv = n_vertices();
        const int nt = n_triangles();
        for (int t = 0; t < nt; ++t) {
            for (int v : triangles_[t]) {
                if (v < 0 || v >= nv)
                    throw ValidationError("triangle " + std::to_string(t) + " references vertex " +
                                          std::to_string(v) + " out of range [0," + std::to_string(nv) + ")");
            }
            if (!(area(t) > 0.0))
                throw ValidationError("triangle " + std::to_string(t) + " has non-positive area (not CCW or degenerate)");
        }

        struct Half {
            std::int64_t key;
            int tri;
            int local;
        };
        std::vector<Half> halves;
        halves.reserve(3 * static_cast<std::size_t>(nt));
        for (int t = 0; t < nt; ++t) {
            for (int j = 0; j < 3; ++j) {
                const int a = triangles_[t][j];
                const int b = triangles_[t][(j + 1) % 3];
                const std::int64_t lo = std::min(a, b);
                const std::int64_t hi = std::max(a, b);
                halves.push_back({lo * nv + hi, t, j});
            }
        }
        std::sort(halves.begin(), halves.end(), [](const Half& x, const Half& y) {
            return x.key != y.key ? x.key < y.key : x.tri < y.tri;
        });

        edges_.clear();
        edge_tris_.clear();
        tri_edges_.assign(nt, {});
        n_boundary_edges_ = 0;
        for (std::size_t i = 0; i < halves.size();) {
            std::size_t k = i;
            while (k < halves.size() && halves[k].key == halves[i].key) ++k;
            const std::size_t count = k - i;
            const int lo = static_cast<int>(halves[i].key / nv);
            const int hi = static_cast<int>(halves[i].key % nv);
            if (count > 2)
                throw ValidationError("edge (" + std::to_string(lo) + "," + std::to_string(hi) + ") is shared by " +
                                      std::to_string(count) + " triangles");
            const int e = static_cast<int>(edges_.size());
            edges_.push_back({lo, hi});
            edge_tris_.push_back({halves[i].tri, count == 2 ? halves[i + 1].tri : -1});
            if (count == 1) ++n_boundary_edges_;
            const Point n = rotate_ccw((vertices_[hi] - vertices_[lo]).normalized());
            for (std::size_t q = i; q < k; ++q) {
                const int t = halves[q].tri;
                const int j = halves[q].local;
                const Point& a = vertices_[triangles_[t][j]];
                const Point& b = vertices_[triangles_[t][(j + 1) % 3]];
                // CCW traversal a -> b: outward normal is the -90 degree rotation of (b - a).
                const Point outward(b.y() - a.y(), a.x() - b.x());
                tri_edges_[t][j] = {e, outward.dot(n) > 0.0 ? 1 : -1};
            }
            if (count == 2 && tri_edges_[halves[i].tri][halves[i].local].sign ==
                                  tri_edges_[halves[i + 1].tri][halves[i + 1].local].sign)
                throw ValidationError("triangles " + std::to_string(halves[i].tri) + " and " +
                                      std::to_string(halves[i + 1].tri) + " overlap across an edge");
            i = k;
        }

        diameter_.resize(nt);
        for (int t = 0; t < nt; ++t) {
            double d = 0.0;
            for (const auto& r : tri_edges_[t]) d = std::max(d, edge_length(r.edge));
            diameter_[t] = d;
        }
    }

    std::vector<Point> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<std::array<int, 2>> edges_;
    std::vector<std::array<EdgeRef, 3>> tri_edges_;
    std::vector<std::array<int, 2>> edge_tris_;
    std::vector<double> diameter_;
    int n_boundary_edges_ = 0;
};

enum class Domain { unit_square, t_shape };

namespace detail {

/// Builds a mesh from axis-aligned unit-spaced lattice rectangles (in units of 1/n),
/// merging coincident lattice vertices.
inline Triangulation lattice_mesh(int n, const std::vector<std::array<int, 4>>& rects)
{
    std::map<std::pair<int, int>, int> index;
    std::vector<Point> vertices;
    std::vector<std::array<int, 3>> triangles;
    auto vid = [&](int i, int j) {
        auto [it, inserted] = index.try_emplace({i, j}, static_cast<int>(vertices.size()));
        if (inserted) vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
        return it->second;
    };
    for (const auto& [i0, j0, i1, j1] : rects) {
        for (int j = j0; j < j1; ++j) {
            for (int i = i0; i < i1; ++i) {
                const int sw = vid(i, j), se = vid(i + 1, j), ne = vid(i + 1, j + 1), nw = vid(i, j + 1);
                triangles.push_back({sw, se, ne});
                triangles.push_back({sw, ne, nw});
            }
        }
    }
    return Triangulation(std::move(vertices), std::move(triangles));
}

} // namespace detail

/**
 * Structured mesh with n cells per unit length, each cell split along its SW-NE diagonal.
 *
 * unit_square: (0,1)^2.  t_shape: [0,1.5]x[0,1] union [0.5,1]x[-1,0]; requires even n so
 * that the stem boundaries x = 0.5 and x = 1.5 are lattice lines.
 */
inline Triangulation generate(Domain domain, int n)
{
    if (n < 1) throw InvalidArgument("generate: n must be >= 1");
    if (domain == Domain::unit_square) return detail::lattice_mesh(n, {{0, 0, n, n}});
    if (n % 2 != 0) throw InvalidArgument("generate: t_shape needs an even number of subdivisions");
    const int half = n / 2;
    return detail::lattice_mesh(n, {{0, 0, 3 * half, n}, {half, -n, n, 0}});
}

inline Domain parse_domain(const std::string& s)
{
    if (s == "unit_square") return Domain::unit_square;
    if (s == "t_shape") return Domain::t_shape;
    throw InvalidArgument("unknown domain '" + s + "'");
}

/// Red refinement: every triangle split into four through its edge midpoints.
inline Triangulation refine_uniform(const Triangulation& mesh)
{
    std::vector<Point> vertices = mesh.vertices();
    const int nv = mesh.n_vertices();
    for (int e = 0; e < mesh.n_edges(); ++e) vertices.push_back(mesh.edge_midpoint(e));

    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(4 * static_cast<std::size_t>(mesh.n_triangles()));
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& v = mesh.triangle(t);
        const auto& r = mesh.tri_edges(t);
        // m[j] is the midpoint of local edge j = (v[j], v[j+1]).
        const int m0 = nv + r[0].edge, m1 = nv + r[1].edge, m2 = nv + r[2].edge;
        triangles.push_back({v[0], m0, m2});
        triangles.push_back({m0, v[1], m1});
        triangles.push_back({m2, m1, v[2]});
        triangles.push_back({m0, m1, m2});
    }
    return Triangulation(std::move(vertices), std::move(triangles));
}

/// Triangle adjacency through shared edges.
inline std::vector<std::vector<int>> dual_graph(const Triangulation& mesh)
{
    std::vector<std::vector<int>> adj(mesh.n_triangles());
    for (int e = 0; e < mesh.n_edges(); ++e) {
        const auto& [a, b] = mesh.edge_tris(e);
        if (b < 0) continue;
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& list : adj) std::sort(list.begin(), list.end());
    return adj;
}

/// Triangles incident to each vertex.
inline std::vector<std::vector<int>> vertex_triangles(const Triangulation& mesh)
{
    std::vector<std::vector<int>> vt(mesh.n_vertices());
    for (int t = 0; t < mesh.n_triangles(); ++t)
        for (int v : mesh.triangle(t)) vt[v].push_back(t);
    return vt;
}

// Text format: "nv nt", nv lines "x y", nt lines "i j k" (0-based, CCW).

inline void write_mesh(const Triangulation& mesh, std::ostream& out)
{
    out << mesh.n_vertices() << ' ' << mesh.n_triangles() << '\n';
    out << std::setprecision(17);
    for (const auto& p : mesh.vertices()) out << p.x() << ' ' << p.y() << '\n';
    for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

inline void write_mesh(const Triangulation& mesh, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
    write_mesh(mesh, out);
}

inline Triangulation read_mesh(std::istream& in)
{
    std::string line;
    int lineno = 0;
    auto next_line = [&](const char* what) -> std::istringstream {
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
        }
        throw ParseError(std::string("unexpected end of file, expected ") + what, lineno + 1);
    };
    auto expect_end = [&](std::istringstream& ls) {
        std::string rest;
        if (ls >> rest) throw ParseError("trailing token '" + rest + "'", lineno);
    };

    long long nv = 0, nt = 0;
    {
        auto ls = next_line("header 'nv nt'");
        if (!(ls >> nv >> nt) || nv < 0 || nt < 0) throw ParseError("malformed header, expected 'nv nt'", lineno);
        expect_end(ls);
    }
    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>(nv));
    for (long long i = 0; i < nv; ++i) {
        auto ls = next_line("vertex line 'x y'");
        double x = 0.0, y = 0.0;
        if (!(ls >> x >> y)) throw ParseError("malformed vertex line, expected 'x y'", lineno);
        expect_end(ls);
        vertices.emplace_back(x, y);
    }
    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(static_cast<std::size_t>(nt));
    for (long long i = 0; i < nt; ++i) {
        auto ls = next_line("triangle line 'i j k'");
        long long a = 0, b = 0, c = 0;
        if (!(ls >> a >> b >> c)) throw ParseError("malformed triangle line, expected 'i j k'", lineno);
        expect_end(ls);
        for (long long v : {a, b, c})
            if (v < 0 || v >= nv)
                throw ValidationError("line " + std::to_string(lineno) + ": vertex index " + std::to_string(v) +
                                      " out of range");
        triangles.push_back({static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)});
    }
    return Triangulation(std::move(vertices), std::move(triangles));
}

inline Triangulation read_mesh(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open mesh file '" + path + "'");
    return read_mesh(in);
}

} // namespace hdgdd

#endif // HDGDD_MESH_HPP
