#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ipi/linalg.hpp"
#include "ipi/solver.hpp"

namespace ipi {

// Binary matrix file, all integers and reals little-endian:
//   bytes 0..7   magic "MDPMAT01"
//   byte  8      kind (0 = dense, 1 = CSR)
//   bytes 9..32  rows, cols, nnz as uint64
//   dense: rows*cols float64 row-major (nnz = rows*cols)
//   CSR:   row_ptr (rows+1 uint64), col_idx (nnz uint64), values (nnz float64)
inline constexpr char kMatrixMagic[8] = {'M', 'D', 'P', 'M', 'A', 'T', '0', '1'};
inline constexpr std::size_t kMatrixHeaderBytes = 33;

using Matrix = std::variant<DenseMatrix, CsrMatrix>;

void write_matrix(const std::filesystem::path& path, const DenseMatrix& m);
void write_matrix(const std::filesystem::path& path, const CsrMatrix& m);
std::vector<std::uint8_t> encode_matrix(const Matrix& m);

/// Throws FormatError (with byte offset) on malformed content, std::runtime_error on I/O failure.
Matrix read_matrix(const std::filesystem::path& path);
Matrix decode_matrix(const std::vector<std::uint8_t>& bytes);
DenseMatrix read_dense(const std::filesystem::path& path);
CsrMatrix read_csr(const std::filesystem::path& path);

void write_vector_csv(const std::filesystem::path& path, const std::string& header, const std::vector<double>& v);
void write_policy_csv(const std::filesystem::path& path, const Policy& pi);
void write_residuals_csv(const std::filesystem::path& path, const SolveResult& result);
/// Line-oriented key=value report.
std::string stats_report(const SolveResult& result);

/// 2-D layout of a grid problem: state s sits at (s / cols, s % cols).
struct GridMetadata {
    std::string family; // "maze" or "pendulum"
    std::size_t rows = 0;
    std::size_t cols = 0;
};

/// Writes <prefix>_values.csv (rows x cols heatmap) and <prefix>_policy.csv
/// (action labels). Throws UnsupportedError for non-grid problems.
void export_grid_artifacts(const SolveResult& result, const std::optional<GridMetadata>& grid,
                           const std::filesystem::path& prefix);

} // namespace ipi
