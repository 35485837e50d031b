#include "hdgdd/exact.hpp"
#include "hdgdd/experiments.hpp"
#include "hdgdd/schwarz.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

using namespace hdgdd;

namespace {

struct Problem {
    Triangulation mesh;
    DofMap dofs;
    StokesParams params;
    AssembledSystem sys;
};

Problem make_problem(int n, BoundaryKind bc, const std::string& name = "bubble")
{
    Problem p;
    p.mesh = generate(Domain::unit_square, n);
    p.dofs = DofMap(p.mesh, bc);
    p.params.bc = bc;
    p.sys = assemble(p.mesh, p.dofs, p.params, manufactured_data(catalogue(name, 1.0, bc)));
    return p;
}

/// Largest entrywise deviation of sum_i R_i^T D_i R_i from the identity.
double unity_defect(const Decomposition& dec, int n)
{
    std::vector<double> sum(n, 0.0);
    for (int i = 0; i < dec.n_parts; ++i)
        for (std::size_t k = 0; k < dec.dofs[i].size(); ++k) sum[dec.dofs[i][k]] += dec.weights[i][k];
    double d = 0.0;
    for (double s : sum) d = std::max(d, std::abs(s - 1.0));
    return d;
}

int iterations(const Problem& p, const SchwarzPreconditioner* P, unsigned seed)
{
    const auto xref = lu_factor(p.sys.A).solve(p.sys.rhs);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> x0(p.dofs.size());
    for (double& v : x0) v = U(rng);
    const LinearOperator A = [&p](std::span<const double> in, std::span<double> out) { p.sys.A.multiply(in, out); };
    const auto r = gmres(A, P ? P->as_operator() : LinearOperator{}, p.sys.rhs, x0,
                         StopCriterion::vs_reference(1e-6, xref));
    EXPECT_TRUE(r.report.converged);
    return r.report.iterations;
}

} // namespace

TEST(Partition, Uniform)
{
    const auto m = generate(Domain::unit_square, 6);
    const auto p = partition_uniform(m, 3, 2);
    EXPECT_EQ(p.n_parts, 6);
    std::vector<int> count(6, 0);
    for (int id : p.part) ++count[id];
    for (int c : count) EXPECT_EQ(c, 12);
    for (int t = 0; t < m.n_triangles(); ++t) {
        const Point c = m.barycentre(t);
        EXPECT_EQ(p.part[t], static_cast<int>(c.y() * 2) * 3 + static_cast<int>(c.x() * 3));
    }
    EXPECT_THROW(partition_uniform(generate(Domain::t_shape, 4), 2, 2), InvalidArgument);
    EXPECT_THROW(partition_uniform(m, 0, 2), InvalidArgument);
}

TEST(Partition, Bisect)
{
    const auto m = generate(Domain::unit_square, 10);
    for (int n : {1, 2, 3, 5, 8}) {
        const auto p = partition_bisect(m, n);
        EXPECT_EQ(p.n_parts, n);
        std::vector<int> count(n, 0);
        for (int id : p.part) ++count[id];
        const auto [lo, hi] = std::minmax_element(count.begin(), count.end());
        EXPECT_LE(*hi - *lo, 1) << n;
    }
    EXPECT_THROW(partition_bisect(m, 0), InvalidArgument);
    EXPECT_THROW(partition_bisect(generate(Domain::unit_square, 1), 3), InvalidArgument);
}

TEST(Partition, ReadFile)
{
    const auto m = generate(Domain::unit_square, 1);
    std::istringstream ok("0\n1\n");
    EXPECT_EQ(read_partition(ok, m).n_parts, 2);
    std::istringstream too_short("0\n");
    EXPECT_THROW(read_partition(too_short, m), ValidationError);
    std::istringstream negative("0\n-1\n");
    EXPECT_THROW(read_partition(negative, m), ValidationError);
    std::istringstream gap("0\n2\n");
    EXPECT_THROW(read_partition(gap, m), ValidationError);
    std::istringstream junk("0\nx\n");
    EXPECT_THROW(read_partition(junk, m), ParseError);
}

TEST(Overlap, VertexLayersOnStructuredMesh)
{
    // Left half of unit_square(4): one vertex layer reaches every triangle touching x = 1/2,
    // two layers every triangle touching x = 3/4.
    const auto m = generate(Domain::unit_square, 4);
    const auto p = partition_uniform(m, 2, 1);
    for (int l : {1, 2}) {
        const auto dec = add_overlap(m, p, l);
        const double reach = 0.5 + 0.25 * (l - 1);
        std::set<int> expected;
        for (int t = 0; t < m.n_triangles(); ++t) {
            double xmin = 2;
            for (int v : m.triangle(t)) xmin = std::min(xmin, m.vertex(v).x());
            if (xmin <= reach + 1e-12) expected.insert(t);
        }
        EXPECT_EQ(std::set<int>(dec.elems[0].begin(), dec.elems[0].end()), expected) << l;
        EXPECT_EQ(dec.elems[0].size(), l == 1 ? 24u : 32u);
    }
    EXPECT_THROW(add_overlap(m, p, 0), InvalidArgument);
}

TEST(Overlap, MatchesBreadthFirstSearch)
{
    // Independent oracle: BFS distance in the "shares a vertex" triangle graph.
    const auto m = generate(Domain::unit_square, 7);
    const auto p = partition_bisect(m, 5);
    const auto vt = vertex_triangles(m);
    for (int l : {1, 2, 3}) {
        const auto dec = add_overlap(m, p, l);
        for (int i = 0; i < p.n_parts; ++i) {
            std::vector<int> dist(m.n_triangles(), -1);
            std::vector<int> frontier;
            for (int t = 0; t < m.n_triangles(); ++t)
                if (p.part[t] == i) {
                    dist[t] = 0;
                    frontier.push_back(t);
                }
            for (int round = 1; round <= l; ++round) {
                std::vector<int> next;
                for (int t : frontier)
                    for (int v : m.triangle(t))
                        for (int s : vt[v])
                            if (dist[s] < 0) {
                                dist[s] = round;
                                next.push_back(s);
                            }
                frontier = next;
            }
            std::vector<int> expected;
            for (int t = 0; t < m.n_triangles(); ++t)
                if (dist[t] >= 0) expected.push_back(t);
            EXPECT_EQ(dec.elems[i], expected);
        }
    }
}

TEST(PartitionOfUnity, SumsToIdentity)
{
    const auto m = generate(Domain::unit_square, 12);
    for (auto bc : {BoundaryKind::TVNF, BoundaryKind::NVTF}) {
        const DofMap d(m, bc);
        for (const auto& part : {partition_uniform(m, 2, 2), partition_uniform(m, 3, 3), partition_bisect(m, 5)}) {
            for (int l : {1, 2}) {
                const auto dec = decompose(m, d, part, l);
                EXPECT_LE(unity_defect(dec, d.size()), 1e-12);
                for (const auto& w : dec.weights)
                    for (double x : w) {
                        EXPECT_GE(x, 0.0);
                        EXPECT_LE(x, 1.0);
                    }
            }
        }
    }
}

TEST(PartitionOfUnity, SingleSubdomainIsIdentity)
{
    const auto m = generate(Domain::unit_square, 3);
    const DofMap d(m, BoundaryKind::NVTF);
    const auto dec = decompose(m, d, partition_uniform(m, 1, 1), 1);
    ASSERT_EQ(static_cast<int>(dec.dofs[0].size()), d.size());
    for (double w : dec.weights[0]) EXPECT_EQ(w, 1.0);
}

TEST(PartitionOfUnity, InterfaceMidpointGetsOneHalf)
{
    // Both end points of an edge on x = 1/2 carry chi~ = 1 for both parts, so chi = 1/2 there.
    const auto m = generate(Domain::unit_square, 4);
    const DofMap d(m, BoundaryKind::TVNF);
    const auto dec = decompose(m, d, partition_uniform(m, 2, 1), 1);
    int checked = 0;
    for (int e = 0; e < m.n_edges(); ++e) {
        const Point a = m.vertex(m.edge(e)[0]), b = m.vertex(m.edge(e)[1]);
        if (std::abs(a.x() - 0.5) > 1e-12 || std::abs(b.x() - 0.5) > 1e-12) continue;
        for (int i = 0; i < 2; ++i) {
            const auto& dofs = dec.dofs[i];
            const auto it = std::lower_bound(dofs.begin(), dofs.end(), d.multiplier(e));
            ASSERT_TRUE(it != dofs.end() && *it == d.multiplier(e));
            EXPECT_NEAR(dec.weights[i][it - dofs.begin()], 0.5, 1e-15);
        }
        ++checked;
    }
    EXPECT_EQ(checked, 4);
}

TEST(PartitionOfUnity, ZeroOnTheOuterLayer)
{
    // Dofs on edges of the outer overlap boundary get weight zero.
    const auto m = generate(Domain::unit_square, 8);
    const DofMap d(m, BoundaryKind::TVNF);
    const auto dec = decompose(m, d, partition_uniform(m, 2, 2), 1);
    const auto loc = dof_locations(m, d);
    for (int i = 0; i < dec.n_parts; ++i)
        for (std::size_t k = 0; k < dec.dofs[i].size(); ++k) {
            const int dof = dec.dofs[i][k];
            if (dof >= d.n_geometric() || !d.is_multiplier(dof)) continue;
            const Point x = loc[dof];
            const double dx = i % 2 == 0 ? x.x() - 0.5 : 0.5 - x.x();
            const double dy = i / 2 == 0 ? x.y() - 0.5 : 0.5 - x.y();
            if (std::max(dx, dy) >= 0.125 - 1e-12) {
                EXPECT_EQ(dec.weights[i][k], 0.0);
            }
        }
}

TEST(Ras, SingleSubdomainIsTheInverse)
{
    auto p = make_problem(6, BoundaryKind::NVTF);
    const auto dec = decompose(p.mesh, p.dofs, partition_uniform(p.mesh, 1, 1), 1);
    const auto P = build_ras(p.sys.A, dec);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::vector<double> x(p.dofs.size()), y(p.dofs.size());
    for (double& v : x) v = g(rng);
    P.apply(p.sys.A * x, y);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-9);
    EXPECT_LE(iterations(p, &P, 3), 2);
}

TEST(Ras, IsLinear)
{
    auto p = make_problem(8, BoundaryKind::TVNF);
    const auto dec = decompose(p.mesh, p.dofs, partition_uniform(p.mesh, 2, 2), 1);
    const auto P = build_ras(p.sys.A, dec);
    const int n = p.dofs.size();
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    std::vector<double> u(n), v(n), w(n), Pu(n), Pv(n), Pw(n);
    for (int i = 0; i < n; ++i) {
        u[i] = g(rng);
        v[i] = g(rng);
        w[i] = 2.5 * u[i] + v[i];
    }
    P.apply(u, Pu);
    P.apply(v, Pv);
    P.apply(w, Pw);
    double scale = 0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(Pw[i]));
    for (int i = 0; i < n; ++i) EXPECT_NEAR(Pw[i], 2.5 * Pu[i] + Pv[i], 1e-12 * scale);
}

TEST(Ras, BeatsUnpreconditioned)
{
    auto p = make_problem(8, BoundaryKind::NVTF);
    const auto dec = decompose(p.mesh, p.dofs, partition_uniform(p.mesh, 2, 1), 1);
    const auto P = build_ras(p.sys.A, dec);
    EXPECT_LT(iterations(p, &P, 4), iterations(p, nullptr, 4));
}

TEST(Mras, SingleSubdomainMatchesRas)
{
    for (auto bc : {BoundaryKind::TVNF, BoundaryKind::NVTF}) {
        auto p = make_problem(5, bc);
        const auto dec = decompose(p.mesh, p.dofs, partition_uniform(p.mesh, 1, 1), 1);
        for (auto ic : {BoundaryKind::TVNF, BoundaryKind::NVTF}) {
            for (auto as : {MrasAssembly::restricted, MrasAssembly::local}) {
                const auto lp = mras_local_problem(p.sys.A, p.mesh, p.dofs, p.params, dec, 0, ic, as);
                EXPECT_TRUE(lp.interface_edges.empty());
                EXPECT_TRUE(lp.zeroed.empty());
                EXPECT_FALSE(lp.auxiliary_row);
                ASSERT_EQ(lp.matrix.size(), p.sys.A.size());
                double diff = 0;
                for (const auto& t : p.sys.A.triplets()) diff = std::max(diff, std::abs(t.value - lp.matrix(t.row, t.col)));
                for (const auto& t : lp.matrix.triplets()) diff = std::max(diff, std::abs(t.value - p.sys.A(t.row, t.col)));
                EXPECT_LE(diff, 1e-13 * p.sys.A.max_abs());
            }
        }
    }
}

TEST(Mras, RestrictedDiffersOnlyOnInterfaceDofs)
{
    auto p = make_problem(8, BoundaryKind::TVNF);
    const auto dec = decompose(p.mesh, p.dofs, partition_uniform(p.mesh, 2, 2), 1);
    for (auto ic : {BoundaryKind::TVNF, BoundaryKind::NVTF}) {
        for (int i = 0; i < dec.n_parts; ++i) {
            const auto lp = mras_local_problem(p.sys.A, p.mesh, p.dofs, p.params, dec, i, ic);
            const auto RAR = p.sys.A.submatrix(dec.dofs[i]);
            std::set<int> expected;
            for (int e : lp.interface_edges) {
                auto local = [&](int g) {
                    return static_cast<int>(std::lower_bound(dec.dofs[i].begin(), dec.dofs[i].end(), g) -
                                            dec.dofs[i].begin());
                };
                if (ic == BoundaryKind::TVNF) {
                    expected.insert(local(p.dofs.multiplier(e)));
                } else {
                    expected.insert(local(p.dofs.bdm(e, 0)));
                    expected.insert(local(p.dofs.bdm(e, 1)));
                }
            }
            EXPECT_EQ(std::set<int>(lp.zeroed.begin(), lp.zeroed.end()), expected);
            for (const auto& t : RAR.triplets()) {
                const bool touched = expected.count(t.row) || expected.count(t.col);
                if (touched) {
                    EXPECT_EQ(lp.matrix(t.row, t.col), t.row == t.col ? 1.0 : 0.0);
                } else {
                    EXPECT_EQ(lp.matrix(t.row, t.col), t.value);
                }
            }
            for (const auto& t : lp.matrix.triplets())
                if (!expected.count(t.row) && !expected.count(t.col)) {
                    EXPECT_EQ(t.value, RAR(t.row, t.col));
                }
        }
    }
}

TEST(Mras, InterfaceEdges)
{
    // 2x1 split of unit_square(4), one layer: the left part ends on x = 3/4 (4 interface edges).
    auto p = make_problem(4, BoundaryKind::TVNF);
    const auto dec = decompose(p.mesh, p.dofs, partition_uniform(p.mesh, 2, 1), 1);
    const auto lp = mras_local_problem(p.sys.A, p.mesh, p.dofs, p.params, dec, 0, BoundaryKind::TVNF);
    EXPECT_EQ(lp.interface_edges.size(), 4u);
    for (int e : lp.interface_edges) {
        EXPECT_NEAR(p.mesh.edge_midpoint(e).x(), 0.75, 1e-12);
        EXPECT_FALSE(p.mesh.is_boundary(e));
    }
}

TEST(Mras, FloatingSubdomainGetsMeanRow)
{
    // Centre of a 3x3 split never touches the boundary: NVTF interface conditions fix all
    // normal velocities there.
    auto p = make_problem(9, BoundaryKind::TVNF);
    const auto dec = decompose(p.mesh, p.dofs, partition_uniform(p.mesh, 3, 3), 1);
    for (auto as : {MrasAssembly::restricted, MrasAssembly::local}) {
        const auto lp = mras_local_problem(p.sys.A, p.mesh, p.dofs, p.params, dec, 4, BoundaryKind::NVTF, as);
        EXPECT_TRUE(lp.floating);
        EXPECT_TRUE(lp.auxiliary_row);
        EXPECT_EQ(lp.matrix.size(), static_cast<int>(dec.dofs[4].size()) + 1);
        const auto P = build_mras(p.sys.A, p.mesh, p.dofs, p.params, dec, BoundaryKind::NVTF, as);
        EXPECT_EQ(P.floating_subdomains(), 1);
        EXPECT_EQ(P.kind(), PrecondKind::mras_nvtf);
        const auto lt = mras_local_problem(p.sys.A, p.mesh, p.dofs, p.params, dec, 4, BoundaryKind::TVNF, as);
        EXPECT_FALSE(lt.floating);
    }
    // With the global NVTF constraint dof no extra row is needed.
    auto q = make_problem(9, BoundaryKind::NVTF);
    const auto dq = decompose(q.mesh, q.dofs, partition_uniform(q.mesh, 3, 3), 1);
    const auto lq = mras_local_problem(q.sys.A, q.mesh, q.dofs, q.params, dq, 4, BoundaryKind::NVTF);
    EXPECT_TRUE(lq.floating);
    EXPECT_FALSE(lq.auxiliary_row);
}

TEST(Mras, ConvergesForEveryVariant)
{
    auto p = make_problem(12, BoundaryKind::TVNF);
    const auto dec = decompose(p.mesh, p.dofs, partition_uniform(p.mesh, 3, 3), 1);
    const int none = iterations(p, nullptr, 5);
    for (auto ic : {BoundaryKind::TVNF, BoundaryKind::NVTF})
        for (auto as : {MrasAssembly::restricted, MrasAssembly::local}) {
            const auto P = build_mras(p.sys.A, p.mesh, p.dofs, p.params, dec, ic, as);
            EXPECT_LT(iterations(p, &P, 5), none);
        }
}

TEST(Precond, Parsing)
{
    EXPECT_EQ(parse_precond_kind("ras"), PrecondKind::ras);
    EXPECT_EQ(parse_precond_kind("mras-tvnf"), PrecondKind::mras_tvnf);
    EXPECT_EQ(parse_precond_kind("mras-nvtf"), PrecondKind::mras_nvtf);
    EXPECT_EQ(parse_precond_kind("none"), PrecondKind::none);
    EXPECT_THROW(parse_precond_kind("oras"), InvalidArgument);
    EXPECT_EQ(parse_mras_assembly("local"), MrasAssembly::local);
    EXPECT_THROW(parse_mras_assembly("x"), InvalidArgument);
}

TEST(Precond, RunReportsEveryKind)
{
    RunConfig cfg;
    cfg.command = "precond";
    cfg.n = 8;
    cfg.preconds = {PrecondKind::none, PrecondKind::ras, PrecondKind::mras_tvnf, PrecondKind::mras_nvtf};
    std::ostringstream csv;
    const auto runs = run_precond(cfg, &csv);
    ASSERT_EQ(runs.size(), 4u);
    for (const auto& r : runs) {
        EXPECT_TRUE(r.report.converged);
        EXPECT_LE(r.report.history.back(), 1e-6);
    }
    EXPECT_EQ(runs[0].n_parts, 1);
    EXPECT_EQ(runs[1].n_parts, 4);
    EXPECT_LT(runs[1].report.iterations, runs[0].report.iterations);
    EXPECT_NE(csv.str().find("N,kind,iterations,converged,final_error"), std::string::npos);
    // Same seed, same iteration counts.
    const auto again = run_precond(cfg);
    for (std::size_t k = 0; k < runs.size(); ++k) EXPECT_EQ(again[k].report.iterations, runs[k].report.iterations);
}
