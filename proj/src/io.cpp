#include "ipi/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "ipi/errors.hpp"
#include "ipi/generators.hpp"

namespace ipi {

namespace {

constexpr std::uint8_t kKindDense = 0;
constexpr std::uint8_t kKindCsr = 1;

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    put_u64(out, bits);
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    }
    return v;
}

double get_f64(const std::uint8_t* p) {
    const std::uint64_t bits = get_u64(p);
    double v = 0.0;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

void put_header(std::vector<std::uint8_t>& out, std::uint8_t kind, std::uint64_t rows, std::uint64_t cols,
                std::uint64_t nnz) {
    out.insert(out.end(), std::begin(kMatrixMagic), std::end(kMatrixMagic));
    out.push_back(kind);
    put_u64(out, rows);
    put_u64(out, cols);
    put_u64(out, nnz);
}

struct Header {
    std::uint8_t kind;
    std::uint64_t rows, cols, nnz;
};

bool mul_overflows(std::uint64_t a, std::uint64_t b, std::uint64_t& out) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
        return true;
    }
    out = a * b;
    return false;
}

bool add_overflows(std::uint64_t a, std::uint64_t b, std::uint64_t& out) {
    if (b > std::numeric_limits<std::uint64_t>::max() - a) {
        return true;
    }
    out = a + b;
    return false;
}

/// Checks the 33 header bytes against the total length; nothing beyond the header
/// is touched, so callers can validate a file before reading its payload.
Header parse_header(const std::uint8_t* bytes, std::uint64_t available, std::uint64_t total) {
    if (available < kMatrixHeaderBytes) {
        throw FormatError("truncated header: " + std::to_string(available) + " of " +
                              std::to_string(kMatrixHeaderBytes) + " bytes",
                          available);
    }
    for (std::size_t i = 0; i < 8; ++i) {
        if (bytes[i] != static_cast<std::uint8_t>(kMatrixMagic[i])) {
            throw FormatError("bad magic, expected MDPMAT01", i);
        }
    }
    Header h{bytes[8], get_u64(bytes + 9), get_u64(bytes + 17), get_u64(bytes + 25)};
    if (h.kind != kKindDense && h.kind != kKindCsr) {
        throw FormatError("unknown matrix kind " + std::to_string(h.kind), 8);
    }
    std::uint64_t payload = 0;
    bool overflow = false;
    if (h.kind == kKindDense) {
        std::uint64_t cells = 0;
        overflow = mul_overflows(h.rows, h.cols, cells);
        if (!overflow && h.nnz != cells) {
            throw FormatError("dense nnz " + std::to_string(h.nnz) + " differs from rows*cols " +
                                  std::to_string(cells),
                              25);
        }
        overflow = overflow || mul_overflows(cells, 8, payload);
    } else {
        std::uint64_t ptr_bytes = 0, entry_bytes = 0, rows1 = 0;
        overflow = add_overflows(h.rows, 1, rows1) || mul_overflows(rows1, 8, ptr_bytes) ||
                   mul_overflows(h.nnz, 16, entry_bytes) || add_overflows(ptr_bytes, entry_bytes, payload);
    }
    std::uint64_t expected = 0;
    if (overflow || add_overflows(payload, kMatrixHeaderBytes, expected) ||
        expected > std::numeric_limits<std::size_t>::max()) {
        throw FormatError("header sizes overflow", 9);
    }
    if (total != expected) {
        throw FormatError("file length " + std::to_string(total) + " does not match header (expected " +
                              std::to_string(expected) + " bytes)",
                          std::min(total, expected));
    }
    return h;
}

Matrix decode_payload(const Header& h, const std::uint8_t* payload) {
    std::uint64_t at = kMatrixHeaderBytes;
    const std::uint8_t* p = payload;
    auto next_u64 = [&] {
        const std::uint64_t v = get_u64(p);
        p += 8;
        at += 8;
        return v;
    };
    auto next_f64 = [&] {
        const double v = get_f64(p);
        p += 8;
        at += 8;
        return v;
    };
    if (h.kind == kKindDense) {
        DenseMatrix d(h.rows, h.cols);
        for (double& v : d.data) {
            const std::uint64_t here = at;
            v = next_f64();
            if (!std::isfinite(v)) {
                throw FormatError("non-finite value", here);
            }
        }
        return d;
    }
    CsrMatrix c;
    c.rows = h.rows;
    c.cols = h.cols;
    c.row_ptr.resize(h.rows + 1);
    c.col_idx.resize(h.nnz);
    c.values.resize(h.nnz);
    for (std::uint64_t r = 0; r <= h.rows; ++r) {
        const std::uint64_t here = at;
        c.row_ptr[r] = next_u64();
        if (r == 0 && c.row_ptr[0] != 0) {
            throw FormatError("row_ptr[0] must be 0", here);
        }
        if (r > 0 && c.row_ptr[r] < c.row_ptr[r - 1]) {
            throw FormatError("row_ptr decreases at row " + std::to_string(r), here);
        }
        if (c.row_ptr[r] > h.nnz) {
            throw FormatError("row_ptr exceeds nnz", here);
        }
    }
    if (c.row_ptr[h.rows] != h.nnz) {
        throw FormatError("row_ptr[rows] differs from declared nnz", at - 8);
    }
    std::uint64_t row = 0;
    for (std::uint64_t k = 0; k < h.nnz; ++k) {
        const std::uint64_t here = at;
        c.col_idx[k] = next_u64();
        while (c.row_ptr[row + 1] <= k) {
            ++row;
        }
        if (c.col_idx[k] >= h.cols) {
            throw FormatError("column index " + std::to_string(c.col_idx[k]) + " out of range", here);
        }
        if (k > c.row_ptr[row] && c.col_idx[k] <= c.col_idx[k - 1]) {
            throw FormatError("column indices not strictly increasing in row " + std::to_string(row), here);
        }
    }
    for (std::uint64_t k = 0; k < h.nnz; ++k) {
        const std::uint64_t here = at;
        c.values[k] = next_f64();
        if (!std::isfinite(c.values[k])) {
            throw FormatError("non-finite value", here);
        }
    }
    return c;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

std::ofstream open_text(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    return out;
}

std::string fmt_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::vector<std::uint8_t> encode_matrix(const Matrix& m) {
    std::vector<std::uint8_t> out;
    if (const auto* d = std::get_if<DenseMatrix>(&m)) {
        if (d->data.size() != d->rows * d->cols) {
            throw ValidationError("dense matrix storage does not match its shape");
        }
        out.reserve(kMatrixHeaderBytes + 8 * d->data.size());
        put_header(out, kKindDense, d->rows, d->cols, d->data.size());
        for (double v : d->data) {
            put_f64(out, v);
        }
        return out;
    }
    const auto& c = std::get<CsrMatrix>(m);
    if (const auto issues = check_csr(c, 1); !issues.empty()) {
        throw ValidationError("cannot encode malformed CSR matrix: " + issues.front());
    }
    out.reserve(kMatrixHeaderBytes + 8 * (c.rows + 1) + 16 * c.nnz());
    put_header(out, kKindCsr, c.rows, c.cols, c.nnz());
    for (auto v : c.row_ptr) put_u64(out, v);
    for (auto v : c.col_idx) put_u64(out, v);
    for (double v : c.values) put_f64(out, v);
    return out;
}

void write_matrix(const std::filesystem::path& path, const DenseMatrix& m) { write_bytes(path, encode_matrix(m)); }
void write_matrix(const std::filesystem::path& path, const CsrMatrix& m) { write_bytes(path, encode_matrix(m)); }

Matrix decode_matrix(const std::vector<std::uint8_t>& bytes) {
    const Header h = parse_header(bytes.data(), bytes.size(), bytes.size());
    return decode_payload(h, bytes.data() + kMatrixHeaderBytes);
}

Matrix read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    const std::uint64_t total = std::filesystem::file_size(path);
    std::uint8_t header[kMatrixHeaderBytes] = {};
    in.read(reinterpret_cast<char*>(header), kMatrixHeaderBytes);
    const Header h = parse_header(header, static_cast<std::uint64_t>(in.gcount()), total);
    std::vector<std::uint8_t> payload(total - kMatrixHeaderBytes);
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (static_cast<std::uint64_t>(in.gcount()) != payload.size()) {
        throw FormatError("file shrank while reading", kMatrixHeaderBytes + in.gcount());
    }
    return decode_payload(h, payload.data());
}

DenseMatrix read_dense(const std::filesystem::path& path) {
    Matrix m = read_matrix(path);
    if (auto* d = std::get_if<DenseMatrix>(&m)) {
        return std::move(*d);
    }
    // a CSR file is accepted and densified
    return std::get<CsrMatrix>(m).to_dense();
}

CsrMatrix read_csr(const std::filesystem::path& path) {
    Matrix m = read_matrix(path);
    if (auto* c = std::get_if<CsrMatrix>(&m)) {
        return std::move(*c);
    }
    return CsrMatrix::from_dense(std::get<DenseMatrix>(m));
}

void write_vector_csv(const std::filesystem::path& path, const std::string& header, const std::vector<double>& v) {
    auto out = open_text(path);
    out << "state," << header << '\n';
    for (std::size_t s = 0; s < v.size(); ++s) {
        out << s << ',' << fmt_real(v[s]) << '\n';
    }
}

void write_policy_csv(const std::filesystem::path& path, const Policy& pi) {
    auto out = open_text(path);
    out << "state,action\n";
    for (std::size_t s = 0; s < pi.size(); ++s) {
        out << s << ',' << pi[s] << '\n';
    }
}

void write_residuals_csv(const std::filesystem::path& path, const SolveResult& result) {
    auto out = open_text(path);
    out << "iteration,residual_inf,inner_iterations\n";
    for (std::size_t k = 0; k < result.residual_history.size(); ++k) {
        out << k << ',' << fmt_real(result.residual_history[k]) << ',';
        if (k < result.inner_iterations.size()) {
            out << result.inner_iterations[k];
        }
        out << '\n';
    }
}

std::string stats_report(const SolveResult& result) {
    std::string s;
    auto line = [&](const char* key, const std::string& value) {
        s += key;
        s += '=';
        s += value;
        s += '\n';
    };
    line("status", std::string(to_string(result.status)));
    line("outer_iterations", std::to_string(result.outer_iterations));
    line("inner_iterations_total", std::to_string(result.inner_iterations_total));
    line("final_residual_inf",
         result.residual_history.empty() ? "nan" : fmt_real(result.residual_history.back()));
    line("breakdowns", std::to_string(result.breakdowns));
    line("wall_time_s", fmt_real(result.wall_time));
    line("time_greedy_s", fmt_real(result.phases.greedy));
    line("time_assembly_s", fmt_real(result.phases.assembly));
    line("time_inner_s", fmt_real(result.phases.inner));
    line("states", std::to_string(result.V.size()));
    return s;
}

void export_grid_artifacts(const SolveResult& result, const std::optional<GridMetadata>& grid,
                           const std::filesystem::path& prefix) {
    if (!grid) {
        throw UnsupportedError("grid export needs a maze or pendulum problem");
    }
    const std::size_t cells = grid->rows * grid->cols;
    if (result.V.size() != cells || result.pi.size() != cells) {
        throw ValidationError("grid export: result has " + std::to_string(result.V.size()) + " states, grid has " +
                              std::to_string(cells));
    }
    auto header = [&](std::ofstream& out) {
        for (std::size_t c = 0; c < grid->cols; ++c) {
            out << (c ? "," : "") << 'c' << c;
        }
        out << '\n';
    };
    const bool maze = grid->family == "maze";
    {
        auto out = open_text(std::filesystem::path(prefix.string() + "_values.csv"));
        header(out);
        for (std::size_t r = 0; r < grid->rows; ++r) {
            for (std::size_t c = 0; c < grid->cols; ++c) {
                out << (c ? "," : "") << fmt_real(result.V[r * grid->cols + c]);
            }
            out << '\n';
        }
    }
    auto out = open_text(std::filesystem::path(prefix.string() + "_policy.csv"));
    header(out);
    for (std::size_t r = 0; r < grid->rows; ++r) {
        for (std::size_t c = 0; c < grid->cols; ++c) {
            const std::size_t a = result.pi[r * grid->cols + c];
            out << (c ? "," : "") << (maze ? std::string(maze_action_label(a)) : std::to_string(a));
        }
        out << '\n';
    }
}

} // namespace ipi
