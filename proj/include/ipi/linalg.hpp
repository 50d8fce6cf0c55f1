#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ipi/parallel.hpp"

namespace ipi {

/// Row-major dense matrix.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool operator==(const DenseMatrix&) const = default;
};

/// Compressed sparse row matrix. Column indices are sorted and unique within each row.
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<std::size_t> col_idx;
    std::vector<double> values;

    std::size_t nnz() const { return col_idx.size(); }
    std::size_t row_nnz(std::size_t r) const { return row_ptr[r + 1] - row_ptr[r]; }
    std::span<const std::size_t> row_cols(std::size_t r) const {
        return {col_idx.data() + row_ptr[r], row_nnz(r)};
    }
    std::span<const double> row_values(std::size_t r) const {
        return {values.data() + row_ptr[r], row_nnz(r)};
    }

    /// Value at (r, c), zero when not stored.
    double at(std::size_t r, std::size_t c) const;

    bool operator==(const CsrMatrix&) const = default;

    static CsrMatrix identity(std::size_t n);
    static CsrMatrix from_dense(const DenseMatrix& dense);
    DenseMatrix to_dense() const;
};

/// Incremental row-by-row CSR construction. Each added row is sorted and duplicate
/// columns are summed; exact zeros are kept only if `keep_zeros` is set.
class CsrBuilder {
public:
    CsrBuilder(std::size_t rows, std::size_t cols, std::size_t nnz_hint = 0);

    void add_row(std::span<const std::size_t> cols, std::span<const double> vals, bool keep_zeros = false);
    std::size_t rows_added() const { return matrix_.row_ptr.size() - 1; }
    CsrMatrix finish() &&;

private:
    CsrMatrix matrix_;
    std::vector<std::pair<std::size_t, double>> scratch_;
};

/// Returns an empty list when the CSR structural invariants hold, else the first problems found.
std::vector<std::string> check_csr(const CsrMatrix& a, std::size_t max_messages = 10);

enum class NormKind { Inf, Two };

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y,
          const Executor& exec = Executor::serial());
std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x,
                         const Executor& exec = Executor::serial());

/// Block partial sums combined in a fixed pairwise tree: bit-reproducible for a fixed worker count.
double dot(std::span<const double> x, std::span<const double> y, const Executor& exec = Executor::serial());
double norm(std::span<const double> x, NormKind kind, const Executor& exec = Executor::serial());
inline double norm_inf(std::span<const double> x, const Executor& exec = Executor::serial()) {
    return norm(x, NormKind::Inf, exec);
}
inline double norm2(std::span<const double> x, const Executor& exec = Executor::serial()) {
    return norm(x, NormKind::Two, exec);
}

/// y += a*x
void axpy(double a, std::span<const double> x, std::span<double> y);
/// y = x + b*y
void xpby(std::span<const double> x, double b, std::span<double> y);

} // namespace ipi
