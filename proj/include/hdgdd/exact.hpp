#ifndef HDGDD_EXACT_HPP
#define HDGDD_EXACT_HPP

#include "hdgdd/errors.hpp"
#include "hdgdd/fem_space.hpp"
#include "hdgdd/local_assembly.hpp"
#include "hdgdd/system.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace hdgdd {

/// Closed-form Stokes solution together with the data it induces.
struct ExactSolution {
    std::string name;
    double nu = 1.0;
    BoundaryKind bc = BoundaryKind::TVNF;
    /// False when u has nonzero essential traces on the boundary (they are then imposed from u).
    bool homogeneous_essential = true;

    VectorField u;
    std::function<Mat2(const Point&)> grad_u;
    VectorField laplace_u;
    std::function<double(const Point&)> p;
    VectorField grad_p;

    VectorField f;
    BoundaryDatum g;
};

/**
 * f = -nu lap u + grad p;  TVNF: g = sigma_nn = nu (grad u n).n - p;  NVTF: g = sigma_nt = nu (grad u n).t.
 */
inline ProblemData manufactured_data(const ExactSolution& ex)
{
    ProblemData d;
    const double nu = ex.nu;
    auto lap = ex.laplace_u;
    auto gp = ex.grad_p;
    d.f = [nu, lap, gp](const Point& x) -> Point { return -nu * lap(x) + gp(x); };
    auto gu = ex.grad_u;
    auto p = ex.p;
    if (ex.bc == BoundaryKind::TVNF) {
        d.g = [nu, gu, p](const Point& x, const Point& n, const Point&) { return nu * (gu(x) * n).dot(n) - p(x); };
    } else {
        d.g = [nu, gu](const Point& x, const Point& n, const Point& t) { return nu * (gu(x) * n).dot(t); };
    }
    if (!ex.homogeneous_essential) d.essential = ex.u;
    return d;
}

namespace detail {

/// Values of a 1D function and its first three derivatives.
using Jet = std::array<double, 4>;

inline Jet product(const Jet& a, const Jet& b)
{
    return {a[0] * b[0], a[1] * b[0] + a[0] * b[1], a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2],
            a[3] * b[0] + 3.0 * a[2] * b[1] + 3.0 * a[1] * b[2] + a[0] * b[3]};
}

/// sin(x^2)
inline Jet sin_sq(double x)
{
    const double s = std::sin(x * x), c = std::cos(x * x);
    return {s, 2.0 * x * c, 2.0 * c - 4.0 * x * x * s, -12.0 * x * s - 8.0 * x * x * x * c};
}

/// 1 - cos((1-x)^2)
inline Jet one_minus_cos_sq(double x)
{
    const double z = 1.0 - x;
    const double s = std::sin(z * z), c = std::cos(z * z);
    // derivatives in z, then chain rule with dz/dx = -1
    return {1.0 - c, -(2.0 * z * s), 2.0 * s + 4.0 * z * z * c, -(12.0 * z * c - 8.0 * z * z * z * s)};
}

/// x^2 (1-x)^2
inline Jet quartic_bump(double x)
{
    return {x * x * (1 - x) * (1 - x), 2 * x - 6 * x * x + 4 * x * x * x, 2 - 12 * x + 12 * x * x, -12 + 24 * x};
}

/// u = curl(scale F(x) F(y)) = (psi_y, -psi_x).
inline void set_separable_curl(ExactSolution& ex, double scale, std::function<Jet(double)> F)
{
    ex.u = [scale, F](const Point& x) -> Point {
        const Jet a = F(x.x()), b = F(x.y());
        return scale * Point(a[0] * b[1], -a[1] * b[0]);
    };
    ex.grad_u = [scale, F](const Point& x) -> Mat2 {
        const Jet a = F(x.x()), b = F(x.y());
        Mat2 g;
        g << a[1] * b[1], a[0] * b[2], -a[2] * b[0], -a[1] * b[1];
        return scale * g;
    };
    ex.laplace_u = [scale, F](const Point& x) -> Point {
        const Jet a = F(x.x()), b = F(x.y());
        return scale * Point(a[2] * b[1] + a[0] * b[3], -(a[3] * b[0] + a[1] * b[2]));
    };
}

} // namespace detail

inline const std::vector<std::string>& catalogue_names()
{
    static const std::vector<std::string> names{"curl_trig", "bubble", "poiseuille", "linear"};
    return names;
}

/// Whether the case satisfies the homogeneous essential condition of `bc` on the unit square
/// (or, for `linear`, carries its own essential data).
inline bool compatible(const std::string& name, BoundaryKind bc)
{
    if (name == "poiseuille") return bc == BoundaryKind::TVNF; // u_n = 4y(1-y) on x = 0, 1
    return name == "curl_trig" || name == "bubble" || name == "linear";
}

/**
 * Manufactured solutions on the unit square.
 *
 *   curl_trig   u = curl[100 (1-cos((1-x)^2)) sin(x^2) sin(y^2) (1-cos((1-y)^2))], p = tan(xy)
 *   bubble      u = curl[x^2 (1-x)^2 y^2 (1-y)^2],                              p = x - y
 *   poiseuille  u = (4y(1-y), 0),                                               p = 4 - 8x
 *   linear      u = (y, x), p = 1: lies in the discrete space, nonzero essential traces
 */
inline ExactSolution catalogue(const std::string& name, double nu = 1.0, BoundaryKind bc = BoundaryKind::TVNF)
{
    if (!(nu > 0.0)) throw InvalidArgument("catalogue: viscosity must be positive");
    ExactSolution ex;
    ex.name = name;
    ex.nu = nu;
    ex.bc = bc;
    if (name == "curl_trig") {
        detail::set_separable_curl(ex, 100.0, [](double x) {
            return detail::product(detail::one_minus_cos_sq(x), detail::sin_sq(x));
        });
        // Y(y) = sin(y^2)(1 - cos((1-y)^2)) is the same function of y as X(x).
        ex.p = [](const Point& x) { return std::tan(x.x() * x.y()); };
        ex.grad_p = [](const Point& x) -> Point {
            const double c = std::cos(x.x() * x.y());
            return Point(x.y(), x.x()) / (c * c);
        };
    } else if (name == "bubble") {
        detail::set_separable_curl(ex, 1.0, detail::quartic_bump);
        ex.p = [](const Point& x) { return x.x() - x.y(); };
        ex.grad_p = [](const Point&) -> Point { return {1.0, -1.0}; };
    } else if (name == "poiseuille") {
        ex.u = [](const Point& x) -> Point { return {4.0 * x.y() * (1.0 - x.y()), 0.0}; };
        ex.grad_u = [](const Point& x) -> Mat2 {
            Mat2 g;
            g << 0.0, 4.0 - 8.0 * x.y(), 0.0, 0.0;
            return g;
        };
        ex.laplace_u = [](const Point&) -> Point { return {-8.0, 0.0}; };
        ex.p = [](const Point& x) { return 4.0 - 8.0 * x.x(); };
        ex.grad_p = [](const Point&) -> Point { return {-8.0, 0.0}; };
    } else if (name == "linear") {
        ex.homogeneous_essential = false;
        ex.u = [](const Point& x) -> Point { return {x.y(), x.x()}; };
        ex.grad_u = [](const Point&) -> Mat2 {
            Mat2 g;
            g << 0.0, 1.0, 1.0, 0.0;
            return g;
        };
        ex.laplace_u = [](const Point&) -> Point { return Point::Zero(); };
        ex.p = [](const Point&) { return 1.0; };
        ex.grad_p = [](const Point&) -> Point { return Point::Zero(); };
    } else {
        throw InvalidArgument("unknown exact solution '" + name + "'");
    }
    const ProblemData d = manufactured_data(ex);
    ex.f = d.f;
    ex.g = d.g;
    return ex;
}

} // namespace hdgdd

#endif // HDGDD_EXACT_HPP
