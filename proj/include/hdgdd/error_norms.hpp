#ifndef HDGDD_ERROR_NORMS_HPP
#define HDGDD_ERROR_NORMS_HPP

#include "hdgdd/errors.hpp"
#include "hdgdd/exact.hpp"
#include "hdgdd/fem_space.hpp"
#include "hdgdd/local_assembly.hpp"
#include "hdgdd/mesh.hpp"
#include "hdgdd/quadrature.hpp"
#include "hdgdd/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace hdgdd {

/// Integral of a scalar function over the domain (degree-5 rule).
inline double integrate(const Triangulation& mesh, const std::function<double(const Point&)>& f)
{
    const TriangleRule& rule = triangle_rule_degree5();
    double s = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& v = mesh.triangle(t);
        double st = 0.0;
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            const auto& b = rule.bary[q];
            st += rule.weights[q] * f(b[0] * mesh.vertex(v[0]) + b[1] * mesh.vertex(v[1]) + b[2] * mesh.vertex(v[2]));
        }
        s += mesh.area(t) * st;
    }
    return s;
}

/// Mean of the exact pressure, subtracted when the discrete pressure is normalised (NVTF).
inline double pressure_shift(const Triangulation& mesh, const DofMap& dofs, const ExactSolution& ex)
{
    if (!dofs.has_mean_constraint()) return 0.0;
    return integrate(mesh, ex.p) / mesh.total_area();
}

/**
 * Canonical interpolant: BDM nodal values, edge averages of u . t_E, cell averages of p
 * (shifted to zero mean under NVTF). The constraint multiplier is zero.
 */
inline std::vector<double> interpolate(const Triangulation& mesh, const DofMap& dofs, const ExactSolution& ex)
{
    std::vector<double> x(dofs.size(), 0.0);
    for (int e = 0; e < mesh.n_edges(); ++e) {
        x[dofs.bdm(e, 0)] = bdm_functional(mesh, e, 0, ex.u);
        x[dofs.bdm(e, 1)] = bdm_functional(mesh, e, 1, ex.u);
        x[dofs.multiplier(e)] = multiplier_functional(mesh, e, ex.u);
    }
    const double shift = pressure_shift(mesh, dofs, ex);
    const TriangleRule& rule = triangle_rule_degree5();
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& v = mesh.triangle(t);
        double s = 0.0;
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
            const auto& b = rule.bary[q];
            s += rule.weights[q] * ex.p(b[0] * mesh.vertex(v[0]) + b[1] * mesh.vertex(v[1]) + b[2] * mesh.vertex(v[2]));
        }
        x[dofs.pressure(t)] = s - shift;
    }
    return x;
}

struct ErrorReport {
    double h = 0.0;
    double err_energy = 0.0; ///< |||(u - u_h, u~ - u~_h)|||
    double err_h = 0.0;      ///< err_energy + nu^{-1/2} ||p - p_h||
    double err_l2_u = 0.0;
    double err_l2_p = 0.0;
};

namespace detail {

/// Discrete velocity of element t as one linear field.
inline LinearField element_velocity(const ElementKernel& k, const DofMap& dofs, std::span<const double> x)
{
    const auto g = k.global_dofs(dofs);
    std::array<double, kLocalBdm> c{};
    for (int a = 0; a < kLocalBdm; ++a) c[a] = x[g[a]];
    return k.combine(c);
}

/**
 * Squared energy norm of (u - u_h, u~ - u~_h); u = 0 when `ex` is null. With u~ = u_t on
 * every edge the jump average reduces to u~_h - avg(u_h . t).
 */
inline double energy_squared(const Triangulation& mesh, const DofMap& dofs, double nu, double tau,
                             std::span<const double> x, const ExactSolution* ex)
{
    const TriangleRule& rule = triangle_rule_degree5();
    const LineRule& q = gauss_rule(4);
    double total = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementKernel k = bdm1_basis(mesh, t);
        const LinearField uh = element_velocity(k, dofs, x);

        double h1 = 0.0;
        if (ex) {
            for (std::size_t i = 0; i < rule.weights.size(); ++i) {
                const Point p = k.map(rule.bary[i]);
                h1 += rule.weights[i] * (ex->grad_u(p) - uh.grad).squaredNorm();
            }
            h1 *= k.area;
        } else {
            h1 = k.area * uh.grad.squaredNorm();
        }

        double dn = 0.0, jump = 0.0;
        for (const EdgeGeometry& eg : k.edges) {
            double dn_e = 0.0, avg = 0.0;
            for (std::size_t i = 0; i < q.nodes.size(); ++i) {
                const Point p = eg.at(q.nodes[i]);
                Mat2 G = -uh.grad;
                if (ex) G += ex->grad_u(p);
                dn_e += q.weights[i] * (G * eg.normal).squaredNorm();
                avg -= q.weights[i] * uh(p).dot(eg.tangent);
            }
            avg += x[dofs.multiplier(eg.edge)];
            dn += eg.length * dn_e;
            jump += eg.length * avg * avg;
        }
        total += h1 + k.diameter * dn + tau / k.diameter * jump;
    }
    return nu * total;
}

} // namespace detail

/// |||(v, v~)||| of a discrete field.
inline double energy_norm(const Triangulation& mesh, const DofMap& dofs, double nu, double tau,
                          std::span<const double> x)
{
    return std::sqrt(detail::energy_squared(mesh, dofs, nu, tau, x, nullptr));
}

inline ErrorReport error_norms(const Triangulation& mesh, const DofMap& dofs, const StokesParams& params,
                               std::span<const double> x, const ExactSolution& ex)
{
    if (static_cast<int>(x.size()) != dofs.size()) throw InternalError("error_norms: solution has the wrong size");
    ErrorReport r;
    r.h = mesh.h_max();
    r.err_energy = std::sqrt(detail::energy_squared(mesh, dofs, params.nu, params.tau, x, &ex));

    const double shift = pressure_shift(mesh, dofs, ex);
    const TriangleRule& rule = triangle_rule_degree5();
    double eu = 0.0, ep = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementKernel k = bdm1_basis(mesh, t);
        const LinearField uh = detail::element_velocity(k, dofs, x);
        const double ph = x[dofs.pressure(t)];
        double su = 0.0, sp = 0.0;
        for (std::size_t i = 0; i < rule.weights.size(); ++i) {
            const Point p = k.map(rule.bary[i]);
            su += rule.weights[i] * (ex.u(p) - uh(p)).squaredNorm();
            const double dp = ex.p(p) - shift - ph;
            sp += rule.weights[i] * dp * dp;
        }
        eu += k.area * su;
        ep += k.area * sp;
    }
    r.err_l2_u = std::sqrt(eu);
    r.err_l2_p = std::sqrt(ep);
    r.err_h = r.err_energy + r.err_l2_p / std::sqrt(params.nu);
    return r;
}

/// L2 norm of the discrete velocity.
inline double velocity_l2(const Triangulation& mesh, const DofMap& dofs, std::span<const double> x)
{
    const TriangleRule& rule = triangle_rule_degree4();
    double s = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementKernel k = bdm1_basis(mesh, t);
        const LinearField uh = detail::element_velocity(k, dofs, x);
        for (std::size_t i = 0; i < rule.weights.size(); ++i)
            s += k.area * rule.weights[i] * uh(k.map(rule.bary[i])).squaredNorm();
    }
    return std::sqrt(s);
}

/// max_K |div u_h| over all elements.
inline double max_divergence(const Triangulation& mesh, const DofMap& dofs, std::span<const double> x)
{
    double m = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementKernel k = bdm1_basis(mesh, t);
        m = std::max(m, std::abs(detail::element_velocity(k, dofs, x).div()));
    }
    return m;
}

/// Slopes log(e_{j-1}/e_j) / log(h_{j-1}/h_j); NaN at level 0 and wherever an error is zero.
inline std::vector<double> eoc(std::span<const double> h, std::span<const double> err)
{
    if (h.size() != err.size()) throw InvalidArgument("eoc: h and error sequences differ in length");
    std::vector<double> out(h.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t j = 1; j < h.size(); ++j) {
        if (!(err[j - 1] > 0.0) || !(err[j] > 0.0) || h[j - 1] == h[j]) continue;
        out[j] = std::log(err[j - 1] / err[j]) / std::log(h[j - 1] / h[j]);
    }
    return out;
}

} // namespace hdgdd

#endif // HDGDD_ERROR_NORMS_HPP
