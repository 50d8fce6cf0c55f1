#include "ipi/policy_operator.hpp"

#include <algorithm>

namespace ipi {

CsrMatrix gather_policy_matrix(const MdpInstance& mdp, const Policy& pi) {
    require_valid(mdp, pi);
    const CsrMatrix& p = mdp.transitions;
    CsrMatrix out;
    out.rows = mdp.n;
    out.cols = mdp.n;
    out.row_ptr.resize(mdp.n + 1);
    out.row_ptr[0] = 0;
    for (std::size_t s = 0; s < mdp.n; ++s) {
        out.row_ptr[s + 1] = out.row_ptr[s] + p.row_nnz(s * mdp.m + pi[s]);
    }
    out.col_idx.resize(out.row_ptr.back());
    out.values.resize(out.row_ptr.back());
    for (std::size_t s = 0; s < mdp.n; ++s) {
        const std::size_t src = s * mdp.m + pi[s];
        std::copy(p.col_idx.begin() + static_cast<std::ptrdiff_t>(p.row_ptr[src]),
                  p.col_idx.begin() + static_cast<std::ptrdiff_t>(p.row_ptr[src + 1]),
                  out.col_idx.begin() + static_cast<std::ptrdiff_t>(out.row_ptr[s]));
        std::copy(p.values.begin() + static_cast<std::ptrdiff_t>(p.row_ptr[src]),
                  p.values.begin() + static_cast<std::ptrdiff_t>(p.row_ptr[src + 1]),
                  out.values.begin() + static_cast<std::ptrdiff_t>(out.row_ptr[s]));
    }
    return out;
}

std::vector<double> gather_policy_cost(const MdpInstance& mdp, const Policy& pi) {
    require_valid(mdp, pi);
    std::vector<double> g(mdp.n);
    for (std::size_t s = 0; s < mdp.n; ++s) {
        g[s] = mdp.stage_cost(s, pi[s]);
    }
    return g;
}

PolicyOperator::PolicyOperator(CsrMatrix p_pi, double gamma) : p_pi_(std::move(p_pi)), gamma_(gamma) {
    if (p_pi_.rows != p_pi_.cols) {
        throw ValidationError("PolicyOperator: P_pi must be square");
    }
    if (!(gamma_ >= 0.0 && gamma_ < 1.0)) {
        throw ValidationError("PolicyOperator: gamma must lie in [0,1)");
    }
}

void PolicyOperator::apply(std::span<const double> x, std::span<double> y, const Executor& exec) const {
    spmv(p_pi_, x, y, exec);
    const double g = gamma_;
    exec.for_blocks(y.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            y[i] = x[i] - g * y[i];
        }
    });
}

void PolicyOperator::apply_affine(std::span<const double> b, std::span<const double> x, std::span<double> y,
                                  const Executor& exec) const {
    spmv(p_pi_, x, y, exec);
    const double g = gamma_;
    exec.for_blocks(y.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            y[i] = b[i] + g * y[i];
        }
    });
}

std::vector<double> PolicyOperator::diagonal() const {
    std::vector<double> d(size());
    for (std::size_t s = 0; s < size(); ++s) {
        d[s] = 1.0 - gamma_ * p_pi_.at(s, s);
    }
    return d;
}

CsrMatrix assemble_explicit(const PolicyOperator& op) {
    const CsrMatrix& p = op.transitions();
    const double g = op.gamma();
    CsrMatrix a;
    a.rows = a.cols = p.rows;
    a.row_ptr.assign(1, 0);
    a.col_idx.reserve(p.nnz() + p.rows);
    a.values.reserve(p.nnz() + p.rows);
    for (std::size_t r = 0; r < p.rows; ++r) {
        bool diagonal_done = false;
        for (std::size_t k = p.row_ptr[r]; k < p.row_ptr[r + 1]; ++k) {
            const std::size_t c = p.col_idx[k];
            if (!diagonal_done && c >= r) {
                a.col_idx.push_back(r);
                a.values.push_back(c == r ? 1.0 - g * p.values[k] : 1.0);
                diagonal_done = true;
                if (c == r) {
                    continue;
                }
            }
            a.col_idx.push_back(c);
            a.values.push_back(-g * p.values[k]);
        }
        if (!diagonal_done) {
            a.col_idx.push_back(r);
            a.values.push_back(1.0);
        }
        a.row_ptr.push_back(a.col_idx.size());
    }
    return a;
}

} // namespace ipi
