#ifndef HDGDD_SPARSE_HPP
#define HDGDD_SPARSE_HPP

#include "hdgdd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace hdgdd {

struct Triplet {
    int row;
    int col;
    double value;
};

/// Square CSR matrix. Column indices are sorted and unique within each row.
class SparseMatrix {
public:
    SparseMatrix() = default;

    /// Sums duplicate entries. Explicit zeros are kept so the pattern reflects assembly.
    static SparseMatrix from_triplets(int n, std::vector<Triplet> entries)
    {
        for (const auto& t : entries)
            if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n)
                throw InternalError("from_triplets: entry (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                                    ") outside a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
        std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        SparseMatrix m;
        m.n_ = n;
        m.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
        for (std::size_t i = 0; i < entries.size();) {
            std::size_t k = i;
            double v = 0.0;
            while (k < entries.size() && entries[k].row == entries[i].row && entries[k].col == entries[i].col)
                v += entries[k++].value;
            m.cols_.push_back(entries[i].col);
            m.values_.push_back(v);
            ++m.offsets_[entries[i].row + 1];
            i = k;
        }
        for (int r = 0; r < n; ++r) m.offsets_[r + 1] += m.offsets_[r];
        return m;
    }

    static SparseMatrix identity(int n)
    {
        std::vector<Triplet> t;
        for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
        return from_triplets(n, std::move(t));
    }

    int size() const { return n_; }
    std::size_t nnz() const { return values_.size(); }

    std::span<const int> row_offsets() const { return offsets_; }
    std::span<const int> col_indices() const { return cols_; }
    std::span<const double> values() const { return values_; }

    std::span<const int> row_cols(int r) const
    {
        return std::span<const int>(cols_).subspan(offsets_[r], offsets_[r + 1] - offsets_[r]);
    }
    std::span<const double> row_values(int r) const
    {
        return std::span<const double>(values_).subspan(offsets_[r], offsets_[r + 1] - offsets_[r]);
    }

    /// Entry lookup; zero outside the pattern.
    double operator()(int r, int c) const
    {
        const auto cols = row_cols(r);
        const auto it = std::lower_bound(cols.begin(), cols.end(), c);
        if (it == cols.end() || *it != c) return 0.0;
        return values_[offsets_[r] + static_cast<int>(it - cols.begin())];
    }

    /// y = A x. Row-wise accumulation in column order, so results are deterministic.
    void multiply(std::span<const double> x, std::span<double> y) const
    {
        for (int r = 0; r < n_; ++r) {
            double s = 0.0;
            for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) s += values_[k] * x[cols_[k]];
            y[r] = s;
        }
    }

    std::vector<double> operator*(std::span<const double> x) const
    {
        std::vector<double> y(n_);
        multiply(x, y);
        return y;
    }

    /// R A R^T for the sorted dof list `dofs`.
    SparseMatrix submatrix(std::span<const int> dofs) const
    {
        std::vector<int> local(n_, -1);
        for (std::size_t i = 0; i < dofs.size(); ++i) local[dofs[i]] = static_cast<int>(i);
        std::vector<Triplet> t;
        for (std::size_t i = 0; i < dofs.size(); ++i) {
            const int r = dofs[i];
            for (int k = offsets_[r]; k < offsets_[r + 1]; ++k)
                if (local[cols_[k]] >= 0) t.push_back({static_cast<int>(i), local[cols_[k]], values_[k]});
        }
        return from_triplets(static_cast<int>(dofs.size()), std::move(t));
    }

    SparseMatrix transpose() const
    {
        std::vector<Triplet> t;
        t.reserve(nnz());
        for (int r = 0; r < n_; ++r)
            for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) t.push_back({cols_[k], r, values_[k]});
        return from_triplets(n_, std::move(t));
    }

    double max_abs() const
    {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// max_ij |A_ij - A_ji|.
    double asymmetry() const
    {
        double m = 0.0;
        for (int r = 0; r < n_; ++r)
            for (int k = offsets_[r]; k < offsets_[r + 1]; ++k)
                m = std::max(m, std::abs(values_[k] - (*this)(cols_[k], r)));
        return m;
    }

    std::vector<Triplet> triplets() const
    {
        std::vector<Triplet> t;
        t.reserve(nnz());
        for (int r = 0; r < n_; ++r)
            for (int k = offsets_[r]; k < offsets_[r + 1]; ++k) t.push_back({r, cols_[k], values_[k]});
        return t;
    }

    void write_matrix_market(std::ostream& out) const
    {
        out << "%%MatrixMarket matrix coordinate real general\n";
        out << n_ << ' ' << n_ << ' ' << nnz() << '\n';
        out << std::setprecision(17);
        for (int r = 0; r < n_; ++r)
            for (int k = offsets_[r]; k < offsets_[r + 1]; ++k)
                out << r + 1 << ' ' << cols_[k] + 1 << ' ' << values_[k] << '\n';
    }

private:
    int n_ = 0;
    std::vector<int> offsets_{0};
    std::vector<int> cols_;
    std::vector<double> values_;
};

inline double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double distance(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

} // namespace hdgdd

#endif // HDGDD_SPARSE_HPP
