#ifndef HDGDD_GMRES_HPP
#define HDGDD_GMRES_HPP

#include "hdgdd/errors.hpp"
#include "hdgdd/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace hdgdd {

/// out = Op(in). Both spans have the operator dimension.
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

enum class StopMode { residual, vs_reference };

inline const char* to_string(StopMode m) { return m == StopMode::residual ? "residual" : "vs_reference"; }

/**
 * residual:     ||b - A x_k||_2 / ||b||_2 <= tol  (absolute if b = 0)
 * vs_reference: ||x_k - x_ref||_2 <= tol          (error against a direct solution)
 */
struct StopCriterion {
    StopMode mode = StopMode::residual;
    double tol = 1e-6;
    std::vector<double> reference;

    static StopCriterion residual(double tol) { return {StopMode::residual, tol, {}}; }
    static StopCriterion vs_reference(double tol, std::vector<double> ref)
    {
        return {StopMode::vs_reference, tol, std::move(ref)};
    }
};

struct GmresOptions {
    int max_iter = 1000;
    int restart = 0; ///< 0: full GMRES
    bool measure_orthogonality = false;
    /// Second modified Gram-Schmidt pass; keeps V orthonormal to working precision.
    bool reorthogonalize = true;
};

struct KrylovReport {
    int iterations = 0;
    bool converged = false;
    StopMode mode = StopMode::residual;
    double tol = 0.0;
    /// Stop-criterion quantity; entry k belongs to iteration k (entry 0 = initial guess).
    std::vector<double> history;
    /// ||b - A x_k||_2 from the Arnoldi least-squares problem, same indexing as history.
    std::vector<double> residual_history;
    /// max |V^T V - I| over the last Arnoldi basis (only when requested).
    double orthogonality_loss = 0.0;
};

struct GmresResult {
    std::vector<double> x;
    KrylovReport report;
};

/// `iter,value` rows preceded by a comment line describing the run.
inline void write_history_csv(std::ostream& out, const KrylovReport& r, const std::string& comment)
{
    out << "# " << comment << " stop=" << to_string(r.mode) << " tol=" << r.tol << " iterations=" << r.iterations
        << " converged=" << (r.converged ? 1 : 0) << '\n';
    out << "iter,value\n";
    const auto prec = out.precision(10);
    for (std::size_t k = 0; k < r.history.size(); ++k) out << k << ',' << r.history[k] << '\n';
    out.precision(prec);
}

/**
 * Right-preconditioned GMRES: solves A M^{-1} y = b, x = M^{-1} y.
 *
 * Arnoldi with modified Gram-Schmidt (two passes by default), Givens rotations on the
 * Hessenberg matrix. An empty `precond` means M = I. In vs_reference mode the iterate is formed at every step so the
 * error can be recorded.
 */
inline GmresResult gmres(const LinearOperator& apply_A, const LinearOperator& precond, std::span<const double> b,
                         std::span<const double> x0, const StopCriterion& stop, const GmresOptions& opt = {})
{
    const std::size_t n = b.size();
    if (x0.size() != n) throw InvalidArgument("gmres: initial guess has the wrong dimension");
    if (stop.mode == StopMode::vs_reference && stop.reference.size() != n)
        throw InvalidArgument("gmres: reference solution has the wrong dimension");
    if (opt.max_iter < 0 || opt.restart < 0) throw InvalidArgument("gmres: negative iteration limit");

    GmresResult res;
    res.x.assign(x0.begin(), x0.end());
    KrylovReport& rep = res.report;
    rep.mode = stop.mode;
    rep.tol = stop.tol;

    const double bnorm = norm2(b);
    const double rscale = bnorm > 0.0 ? bnorm : 1.0;
    const int cycle_len = opt.restart > 0 ? opt.restart : std::max(opt.max_iter, 1);
    const bool have_prec = static_cast<bool>(precond);

    std::vector<double> r(n), w(n);
    auto residual_into = [&](std::span<const double> x) {
        apply_A(x, w);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
        return norm2(r);
    };
    auto quantity = [&](const std::vector<double>& x, double resid) {
        return stop.mode == StopMode::residual ? resid / rscale : distance(x, stop.reference);
    };

    double beta = residual_into(res.x);
    rep.residual_history.push_back(beta);
    rep.history.push_back(quantity(res.x, beta));
    if (rep.history.back() <= stop.tol) {
        rep.converged = true;
        return res;
    }

    std::vector<std::vector<double>> V, Z;
    std::vector<std::vector<double>> H; // H[j] = column j, length j + 2
    std::vector<double> cs, sn, g;
    std::vector<double> xk(n);

    // y solves the leading j x j triangle of the rotated Hessenberg matrix.
    auto least_squares = [&](int j) {
        std::vector<double> y(j);
        for (int i = j - 1; i >= 0; --i) {
            double s = g[i];
            for (int k = i + 1; k < j; ++k) s -= H[k][i] * y[k];
            y[i] = s / H[i][i];
        }
        return y;
    };
    auto form_iterate = [&](int j, std::vector<double>& out) {
        const auto y = least_squares(j);
        out = res.x;
        const auto& basis = have_prec ? Z : V;
        for (int k = 0; k < j; ++k)
            for (std::size_t i = 0; i < n; ++i) out[i] += y[k] * basis[k][i];
    };

    while (rep.iterations < opt.max_iter) {
        if (beta == 0.0) {
            rep.converged = true;
            break;
        }
        V.assign(1, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
        Z.clear();
        H.clear();
        cs.clear();
        sn.clear();
        g.assign(1, beta);

        int j = 0;
        bool done = false;
        while (j < cycle_len && rep.iterations < opt.max_iter) {
            std::span<const double> dir = V[j];
            if (have_prec) {
                Z.emplace_back(n);
                precond(V[j], Z.back());
                dir = Z.back();
            }
            apply_A(dir, w);
            std::vector<double> h(j + 2, 0.0);
            for (int pass = 0; pass < (opt.reorthogonalize ? 2 : 1); ++pass) {
                for (int i = 0; i <= j; ++i) {
                    const double c = dot(w, V[i]);
                    h[i] += c;
                    for (std::size_t k = 0; k < n; ++k) w[k] -= c * V[i][k];
                }
            }
            h[j + 1] = norm2(w);
            const double subdiag = h[j + 1];
            double col_norm = 0.0;
            for (double v : h) col_norm = std::max(col_norm, std::abs(v));
            const bool breakdown = h[j + 1] <= 1e-14 * col_norm;

            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * h[i] + sn[i] * h[i + 1];
                h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
                h[i] = t;
            }
            const double denom = std::hypot(h[j], h[j + 1]);
            const double c = denom > 0.0 ? h[j] / denom : 1.0;
            const double s = denom > 0.0 ? h[j + 1] / denom : 0.0;
            cs.push_back(c);
            sn.push_back(s);
            h[j] = c * h[j] + s * h[j + 1];
            h[j + 1] = 0.0;
            g.push_back(-s * g[j]);
            g[j] = c * g[j];
            H.push_back(std::move(h));

            ++j;
            ++rep.iterations;
            const double resid = std::abs(g[j]);
            rep.residual_history.push_back(resid);
            if (stop.mode == StopMode::vs_reference || breakdown) {
                form_iterate(j, xk);
                rep.history.push_back(quantity(xk, resid));
            } else {
                rep.history.push_back(resid / rscale);
            }
            if (breakdown || rep.history.back() <= stop.tol) {
                rep.converged = true;
                done = true;
                break;
            }
            V.emplace_back(n);
            for (std::size_t k = 0; k < n; ++k) V[j][k] = w[k] / subdiag;
        }

        if (opt.measure_orthogonality) {
            double loss = 0.0;
            for (std::size_t a = 0; a < V.size(); ++a)
                for (std::size_t c = 0; c <= a; ++c)
                    loss = std::max(loss, std::abs(dot(V[a], V[c]) - (a == c ? 1.0 : 0.0)));
            rep.orthogonality_loss = std::max(rep.orthogonality_loss, loss);
        }
        form_iterate(j, xk);
        res.x = xk;
        if (done) break;
        beta = residual_into(res.x);
    }
    return res;
}

} // namespace hdgdd

#endif // HDGDD_GMRES_HPP
