#ifndef HDGDD_QUADRATURE_HPP
#define HDGDD_QUADRATURE_HPP

#include <array>
#include <cmath>
#include <vector>

namespace hdgdd {

/// Triangle rule in barycentric coordinates; weights sum to 1 (multiply by the area).
struct TriangleRule {
    std::vector<std::array<double, 3>> bary;
    std::vector<double> weights;
};

/// Rule on [0,1]; weights sum to 1 (multiply by the edge length).
struct LineRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

inline void add_orbit3(TriangleRule& rule, double a, double w)
{
    const double b = 1.0 - 2.0 * a;
    rule.bary.push_back({a, a, b});
    rule.bary.push_back({a, b, a});
    rule.bary.push_back({b, a, a});
    for (int i = 0; i < 3; ++i) rule.weights.push_back(w);
}

} // namespace detail

/// 6-point rule, exact for degree 4 (Strang-Fix / Dunavant).
inline const TriangleRule& triangle_rule_degree4()
{
    static const TriangleRule rule = [] {
        TriangleRule r;
        detail::add_orbit3(r, 0.44594849091596488632, 0.22338158967801146570);
        detail::add_orbit3(r, 0.09157621350977074346, 0.10995174365532186764);
        return r;
    }();
    return rule;
}

/// 7-point rule, exact for degree 5 (Radon).
inline const TriangleRule& triangle_rule_degree5()
{
    static const TriangleRule rule = [] {
        TriangleRule r;
        const double s15 = std::sqrt(15.0);
        r.bary.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
        r.weights.push_back(9.0 / 40.0);
        detail::add_orbit3(r, (6.0 - s15) / 21.0, (155.0 - s15) / 1200.0);
        detail::add_orbit3(r, (6.0 + s15) / 21.0, (155.0 + s15) / 1200.0);
        return r;
    }();
    return rule;
}

/// Gauss-Legendre on [0,1] with 1..4 points (exact for degree 2n-1).
inline const LineRule& gauss_rule(int points)
{
    static const std::array<LineRule, 4> rules = [] {
        std::array<LineRule, 4> r;
        r[0] = {{0.5}, {1.0}};
        const double d2 = 0.5 / std::sqrt(3.0);
        r[1] = {{0.5 - d2, 0.5 + d2}, {0.5, 0.5}};
        const double d3 = 0.5 * std::sqrt(0.6);
        r[2] = {{0.5 - d3, 0.5, 0.5 + d3}, {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0}};
        const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(1.2));
        const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(1.2));
        const double wa = (18.0 + std::sqrt(30.0)) / 72.0;
        const double wb = (18.0 - std::sqrt(30.0)) / 72.0;
        r[3] = {{0.5 - 0.5 * b, 0.5 - 0.5 * a, 0.5 + 0.5 * a, 0.5 + 0.5 * b}, {wb, wa, wa, wb}};
        return r;
    }();
    return rules.at(static_cast<std::size_t>(points - 1));
}

} // namespace hdgdd

#endif // HDGDD_QUADRATURE_HPP
