#include "hdgdd/error_norms.hpp"
#include "hdgdd/exact.hpp"
#include "hdgdd/lu.hpp"
#include "hdgdd/system.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hdgdd;

namespace {

AssembledSystem build(int n, BoundaryKind bc, int eps, const std::string& name = "bubble")
{
    const auto mesh = generate(Domain::unit_square, n);
    StokesParams p;
    p.bc = bc;
    p.eps = eps;
    return assemble(mesh, DofMap(mesh, bc), p, manufactured_data(catalogue(name, 1.0, bc)));
}

/// Random velocity/multiplier field with zero pressure, zero constraint dof and zero essential dofs.
std::vector<double> random_velocity(const DofMap& d, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    std::vector<double> x(d.size(), 0.0);
    for (int k = 0; k < 3 * d.n_edges(); ++k)
        if (!d.is_constrained(k)) x[k] = g(rng);
    return x;
}

} // namespace

TEST(System, SymmetricForMinusOne)
{
    for (auto bc : {BoundaryKind::TVNF, BoundaryKind::NVTF}) {
        const auto sys = build(6, bc, -1);
        EXPECT_LE(sys.A.asymmetry(), 1e-12 * sys.A.max_abs()) << to_string(bc);
    }
    const auto ns = build(6, BoundaryKind::TVNF, 1);
    EXPECT_GT(ns.A.asymmetry(), 1e-3 * ns.A.max_abs());
}

TEST(System, EssentialRowsAreIdentity)
{
    for (auto bc : {BoundaryKind::TVNF, BoundaryKind::NVTF}) {
        const auto sys = build(4, bc, -1);
        for (int d : sys.dofmap.constrained()) {
            EXPECT_EQ(sys.A(d, d), 1.0);
            EXPECT_EQ(sys.A.row_cols(d).size(), 1u);
            EXPECT_EQ(sys.rhs[d], 0.0);
        }
    }
}

TEST(System, QuadraticFormIdentityForPlusOne)
{
    // Global oracle: nu sum_K (|v|_1,K^2 + tau / h_K sum_E |E| (mean(v . t_E) - v~_E)^2).
    const int n = 5;
    const auto mesh = generate(Domain::unit_square, n);
    std::mt19937_64 rng(11);
    for (auto bc : {BoundaryKind::TVNF, BoundaryKind::NVTF}) {
        StokesParams p;
        p.bc = bc;
        p.eps = 1;
        p.nu = 0.5;
        const DofMap d(mesh, bc);
        const auto sys = assemble(mesh, d, p, {});
        for (int trial = 0; trial < 100; ++trial) {
            const auto x = random_velocity(d, rng);
            const auto Ax = sys.A * x;
            double expected = 0.0;
            for (int t = 0; t < mesh.n_triangles(); ++t) {
                const auto k = bdm1_basis(mesh, t);
                const auto v = detail::element_velocity(k, d, x);
                expected += mesh.area(t) * v.grad.squaredNorm();
                for (int j = 0; j < 3; ++j) {
                    const int e = mesh.tri_edges(t)[j].edge;
                    const double jump = v(mesh.edge_midpoint(e)).dot(mesh.edge_tangent(e)) - x[d.multiplier(e)];
                    expected += p.tau / mesh.diameter(t) * mesh.edge_length(e) * jump * jump;
                }
            }
            expected *= p.nu;
            EXPECT_NEAR(dot(x, Ax), expected, 1e-10 * expected);
        }
    }
}

TEST(System, EnergyNormPositive)
{
    const auto mesh = generate(Domain::unit_square, 4);
    std::mt19937_64 rng(12);
    for (auto bc : {BoundaryKind::TVNF, BoundaryKind::NVTF}) {
        const DofMap d(mesh, bc);
        for (int trial = 0; trial < 100; ++trial) {
            const auto x = random_velocity(d, rng);
            EXPECT_GT(energy_norm(mesh, d, 1.0, 6.0, x), 0.0);
        }
        // A single multiplier dof gives a pure jump contribution.
        std::vector<double> x(d.size(), 0.0);
        int e = 0;
        while (mesh.is_boundary(e)) ++e;
        x[d.multiplier(e)] = 1.0;
        double expected = 0.0;
        for (int t : mesh.edge_tris(e)) expected += 6.0 / mesh.diameter(t) * mesh.edge_length(e);
        EXPECT_NEAR(energy_norm(mesh, d, 1.0, 6.0, x), std::sqrt(expected), 1e-12);
    }
}

TEST(System, LinearSolutionIsReproduced)
{
    for (auto bc : {BoundaryKind::TVNF, BoundaryKind::NVTF}) {
        for (int eps : {-1, 1}) {
            const auto mesh = generate(Domain::unit_square, 6);
            const DofMap d(mesh, bc);
            StokesParams p;
            p.bc = bc;
            p.eps = eps;
            const auto ex = catalogue("linear", 1.0, bc);
            const auto sys = assemble(mesh, d, p, manufactured_data(ex));
            const auto x = lu_factor(sys.A).solve(sys.rhs);
            const auto xi = interpolate(mesh, d, ex);
            double diff = 0.0;
            for (int k = 0; k < d.n_geometric(); ++k) diff = std::max(diff, std::abs(x[k] - xi[k]));
            EXPECT_LT(diff, 1e-9);
            const auto r = error_norms(mesh, d, p, x, ex);
            EXPECT_LT(r.err_energy, 1e-9);
            EXPECT_LT(r.err_l2_u, 1e-9);
            EXPECT_LT(r.err_l2_p, 1e-9);
        }
    }
}

TEST(System, DiscreteVelocityIsDivergenceFree)
{
    for (auto bc : {BoundaryKind::TVNF, BoundaryKind::NVTF}) {
        const auto mesh = generate(Domain::unit_square, 8);
        const DofMap d(mesh, bc);
        StokesParams p;
        p.bc = bc;
        const auto sys = assemble(mesh, d, p, manufactured_data(catalogue("curl_trig", 1.0, bc)));
        const auto x = lu_factor(sys.A).solve(sys.rhs);
        EXPECT_LE(max_divergence(mesh, d, x), 1e-10 * velocity_l2(mesh, d, x));
    }
}

TEST(System, NvtfPressureHasZeroMean)
{
    const auto mesh = generate(Domain::unit_square, 6);
    const DofMap d(mesh, BoundaryKind::NVTF);
    StokesParams p;
    p.bc = BoundaryKind::NVTF;
    const auto sys = assemble(mesh, d, p, manufactured_data(catalogue("bubble", 1.0, p.bc)));
    const auto x = lu_factor(sys.A).solve(sys.rhs);
    double mean = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) mean += mesh.area(t) * x[d.pressure(t)];
    EXPECT_NEAR(mean, 0.0, 1e-12);
}

TEST(System, RejectsMismatchedInputs)
{
    const auto mesh = generate(Domain::unit_square, 2);
    const auto other = generate(Domain::unit_square, 3);
    StokesParams p;
    EXPECT_THROW(assemble(mesh, DofMap(other, p.bc), p, {}), InternalError);
    EXPECT_THROW(assemble(mesh, DofMap(mesh, BoundaryKind::NVTF), p, {}), InternalError);
}
