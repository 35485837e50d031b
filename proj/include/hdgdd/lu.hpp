#ifndef HDGDD_LU_HPP
#define HDGDD_LU_HPP

#include "hdgdd/errors.hpp"
#include "hdgdd/sparse.hpp"

#include <klu.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hdgdd {

/**
 * Sparse LU with threshold partial pivoting (KLU, AMD ordering, max-row scaling).
 *
 * Our CSR arrays are handed over as the CSC arrays of A^T and solved with the transposed
 * solve, so no copy into column storage is needed. Each solve does one step of iterative
 * refinement.
 *
 * A pivot whose magnitude is below 1e-14 times the largest scaled matrix entry is treated
 * as a singularity and rejected.
 */
class Factorization {
public:
    static constexpr double kPivotTolerance = 1e-14;

    Factorization() = default;

    explicit Factorization(const SparseMatrix& A)
        : n_(A.size()),
          offsets_(A.row_offsets().begin(), A.row_offsets().end()),
          cols_(A.col_indices().begin(), A.col_indices().end()),
          values_(A.values().begin(), A.values().end()),
          common_(std::make_unique<klu_common>())
    {
        if (n_ == 0) return;
        klu_defaults(common_.get());
        symbolic_.reset(klu_analyze(n_, offsets_.data(), cols_.data(), common_.get()));
        if (!symbolic_)
            throw FactorizationError("symbolic factorisation failed (klu status " + std::to_string(common_->status) +
                                     ")");
        numeric_.reset(klu_factor(offsets_.data(), cols_.data(), values_.data(), symbolic_.get(), common_.get()));
        if (common_->status == KLU_SINGULAR) throw FactorizationError("matrix is singular (zero pivot)");
        if (!numeric_ || common_->status != KLU_OK)
            throw FactorizationError("numeric factorisation failed (klu status " + std::to_string(common_->status) +
                                     ")");
        check_pivots();
    }

    Factorization(Factorization&&) noexcept = default;
    Factorization& operator=(Factorization&&) noexcept = default;

    int size() const { return n_; }
    double min_pivot_ratio() const { return min_pivot_ratio_; }

    std::vector<double> solve(std::span<const double> b) const
    {
        std::vector<double> x(n_);
        solve(b, x);
        return x;
    }

    void solve(std::span<const double> b, std::span<double> x) const
    {
        if (n_ == 0) return;
        std::copy(b.begin(), b.end(), x.begin());
        raw_solve(x);
        std::vector<double> r(n_);
        for (int i = 0; i < n_; ++i) {
            double s = b[i];
            for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) s -= values_[k] * x[cols_[k]];
            r[i] = s;
        }
        raw_solve(r);
        for (int i = 0; i < n_; ++i) x[i] += r[i];
    }

private:
    struct SymbolicDeleter {
        void operator()(klu_symbolic* p) const
        {
            klu_common c;
            klu_defaults(&c);
            if (p) klu_free_symbolic(&p, &c);
        }
    };
    struct NumericDeleter {
        void operator()(klu_numeric* p) const
        {
            klu_common c;
            klu_defaults(&c);
            if (p) klu_free_numeric(&p, &c);
        }
    };

    void raw_solve(std::span<double> x) const
    {
        if (!klu_tsolve(symbolic_.get(), numeric_.get(), n_, 1, x.data(), common_.get()))
            throw FactorizationError("triangular solve failed (klu status " + std::to_string(common_->status) + ")");
    }

    void check_pivots()
    {
        // KLU factors the scaled matrix R \ M with M = A^T (row i of M = column i of A).
        const double* rs = numeric_->Rs;
        double max_entry = 0.0;
        for (int r = 0; r < n_; ++r) {
            for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) {
                const double s = rs ? 1.0 / rs[cols_[k]] : 1.0;
                max_entry = std::max(max_entry, std::abs(values_[k]) * s);
            }
        }
        const auto* udiag = static_cast<const double*>(numeric_->Udiag);
        double min_pivot = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n_; ++i) min_pivot = std::min(min_pivot, std::abs(udiag[i]));
        min_pivot_ratio_ = max_entry > 0.0 ? min_pivot / max_entry : 0.0;
        if (!(min_pivot_ratio_ >= kPivotTolerance))
            throw FactorizationError("matrix is numerically singular (pivot ratio " + std::to_string(min_pivot_ratio_) +
                                     ")");
    }

    int n_ = 0;
    std::vector<int> offsets_;
    std::vector<int> cols_;
    std::vector<double> values_;
    std::unique_ptr<klu_common> common_;
    std::unique_ptr<klu_symbolic, SymbolicDeleter> symbolic_;
    std::unique_ptr<klu_numeric, NumericDeleter> numeric_;
    double min_pivot_ratio_ = 1.0;
};

inline Factorization lu_factor(const SparseMatrix& A) { return Factorization(A); }

inline std::vector<double> lu_solve(const Factorization& F, std::span<const double> b) { return F.solve(b); }

} // namespace hdgdd

#endif // HDGDD_LU_HPP
