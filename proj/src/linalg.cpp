#include "ipi/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "ipi/errors.hpp"

namespace ipi {

double CsrMatrix::at(std::size_t r, std::size_t c) const {
    const auto cols_of_row = row_cols(r);
    const auto it = std::lower_bound(cols_of_row.begin(), cols_of_row.end(), c);
    if (it == cols_of_row.end() || *it != c) {
        return 0.0;
    }
    return values[row_ptr[r] + static_cast<std::size_t>(it - cols_of_row.begin())];
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
    CsrMatrix a;
    a.rows = a.cols = n;
    a.row_ptr.resize(n + 1);
    a.col_idx.resize(n);
    a.values.assign(n, 1.0);
    for (std::size_t i = 0; i <= n; ++i) {
        a.row_ptr[i] = i;
    }
    for (std::size_t i = 0; i < n; ++i) {
        a.col_idx[i] = i;
    }
    return a;
}

CsrMatrix CsrMatrix::from_dense(const DenseMatrix& dense) {
    CsrMatrix a;
    a.rows = dense.rows;
    a.cols = dense.cols;
    a.row_ptr.assign(1, 0);
    for (std::size_t r = 0; r < dense.rows; ++r) {
        for (std::size_t c = 0; c < dense.cols; ++c) {
            if (dense(r, c) != 0.0) {
                a.col_idx.push_back(c);
                a.values.push_back(dense(r, c));
            }
        }
        a.row_ptr.push_back(a.col_idx.size());
    }
    return a;
}

DenseMatrix CsrMatrix::to_dense() const {
    DenseMatrix d(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
            d(r, col_idx[k]) = values[k];
        }
    }
    return d;
}

CsrBuilder::CsrBuilder(std::size_t rows, std::size_t cols, std::size_t nnz_hint) {
    matrix_.rows = rows;
    matrix_.cols = cols;
    matrix_.row_ptr.reserve(rows + 1);
    matrix_.col_idx.reserve(nnz_hint);
    matrix_.values.reserve(nnz_hint);
}

void CsrBuilder::add_row(std::span<const std::size_t> cols, std::span<const double> vals, bool keep_zeros) {
    if (cols.size() != vals.size()) {
        throw ValidationError("CsrBuilder: column and value counts differ");
    }
    if (rows_added() >= matrix_.rows) {
        throw ValidationError("CsrBuilder: more rows added than declared");
    }
    scratch_.clear();
    for (std::size_t k = 0; k < cols.size(); ++k) {
        if (cols[k] >= matrix_.cols) {
            throw ValidationError("CsrBuilder: column " + std::to_string(cols[k]) + " out of range");
        }
        scratch_.emplace_back(cols[k], vals[k]);
    }
    std::stable_sort(scratch_.begin(), scratch_.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    for (std::size_t k = 0; k < scratch_.size();) {
        const std::size_t c = scratch_[k].first;
        double v = 0.0;
        for (; k < scratch_.size() && scratch_[k].first == c; ++k) {
            v += scratch_[k].second;
        }
        if (v != 0.0 || keep_zeros) {
            matrix_.col_idx.push_back(c);
            matrix_.values.push_back(v);
        }
    }
    matrix_.row_ptr.push_back(matrix_.col_idx.size());
}

CsrMatrix CsrBuilder::finish() && {
    if (rows_added() != matrix_.rows) {
        throw ValidationError("CsrBuilder: " + std::to_string(rows_added()) + " rows added, " +
                              std::to_string(matrix_.rows) + " declared");
    }
    return std::move(matrix_);
}

std::vector<std::string> check_csr(const CsrMatrix& a, std::size_t max_messages) {
    std::vector<std::string> issues;
    auto note = [&](std::string msg) {
        if (issues.size() < max_messages) {
            issues.push_back(std::move(msg));
        }
    };
    if (a.row_ptr.size() != a.rows + 1) {
        note("row_ptr has " + std::to_string(a.row_ptr.size()) + " entries, expected " + std::to_string(a.rows + 1));
        return issues;
    }
    if (a.row_ptr.front() != 0) {
        note("row_ptr[0] is not 0");
    }
    if (a.col_idx.size() != a.values.size()) {
        note("col_idx and values lengths differ");
        return issues;
    }
    if (a.row_ptr.back() != a.col_idx.size()) {
        note("row_ptr[rows] = " + std::to_string(a.row_ptr.back()) + " but nnz = " + std::to_string(a.col_idx.size()));
        return issues;
    }
    for (std::size_t r = 0; r < a.rows; ++r) {
        if (a.row_ptr[r + 1] < a.row_ptr[r]) {
            note("row_ptr decreases at row " + std::to_string(r));
            return issues;
        }
    }
    for (std::size_t r = 0; r < a.rows; ++r) {
        for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
            if (a.col_idx[k] >= a.cols) {
                note("row " + std::to_string(r) + ": column " + std::to_string(a.col_idx[k]) + " out of range");
            } else if (k > a.row_ptr[r] && a.col_idx[k] <= a.col_idx[k - 1]) {
                note("row " + std::to_string(r) + ": columns not strictly increasing");
            }
            if (!std::isfinite(a.values[k])) {
                note("row " + std::to_string(r) + ": non-finite value");
            }
        }
    }
    return issues;
}

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y, const Executor& exec) {
    if (x.size() != a.cols || y.size() != a.rows) {
        throw ValidationError("spmv: dimension mismatch (" + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                              " times " + std::to_string(x.size()) + ")");
    }
    const std::size_t* ptr = a.row_ptr.data();
    const std::size_t* idx = a.col_idx.data();
    const double* val = a.values.data();
    exec.for_blocks(a.rows, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double sum = 0.0;
            for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) {
                sum += val[k] * x[idx[k]];
            }
            y[i] = sum;
        }
    });
}

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x, const Executor& exec) {
    std::vector<double> y(a.rows);
    spmv(a, x, y, exec);
    return y;
}

double dot(std::span<const double> x, std::span<const double> y, const Executor& exec) {
    if (x.size() != y.size()) {
        throw ValidationError("dot: length mismatch (" + std::to_string(x.size()) + " vs " +
                              std::to_string(y.size()) + ")");
    }
    std::vector<double> partials(exec.workers(), 0.0);
    exec.for_blocks(x.size(), [&](std::size_t block, std::size_t begin, std::size_t end) {
        double sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            sum += x[i] * y[i];
        }
        partials[block] = sum;
    });
    return pairwise_sum(partials);
}

double norm(std::span<const double> x, NormKind kind, const Executor& exec) {
    if (kind == NormKind::Two) {
        return std::sqrt(dot(x, x, exec));
    }
    std::vector<double> partials(exec.workers(), 0.0);
    exec.for_blocks(x.size(), [&](std::size_t block, std::size_t begin, std::size_t end) {
        double best = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const double v = std::abs(x[i]);
            if (!(v <= best)) { // lets NaN through
                best = v;
            }
        }
        partials[block] = best;
    });
    double best = 0.0;
    for (const double v : partials) {
        if (!(v <= best)) {
            best = v;
        }
    }
    return best;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] += a * x[i];
    }
}

void xpby(std::span<const double> x, double b, std::span<double> y) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = x[i] + b * y[i];
    }
}

} // namespace ipi
