#include "ipi/bellman.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "ipi/policy_operator.hpp"

namespace ipi {

GreedyResult greedy_policy(const MdpInstance& mdp, std::span<const double> v, const Executor& exec) {
    require_valid(mdp, v);
    const std::size_t n = mdp.n;
    const std::size_t m = mdp.m;
    const double gamma = mdp.gamma;
    const bool maximize = mdp.mode == Mode::Max;
    const CsrMatrix& p = mdp.transitions;

    std::vector<double> pv(n * m);
    GreedyResult out;
    out.policy.actions.resize(n);
    out.applied.values.resize(n);

    exec.for_blocks(n, [&](std::size_t, std::size_t begin, std::size_t end) {
        // local slice of PV: rows [begin*m, end*m)
        for (std::size_t row = begin * m; row < end * m; ++row) {
            double sum = 0.0;
            for (std::size_t k = p.row_ptr[row]; k < p.row_ptr[row + 1]; ++k) {
                sum += p.values[k] * v[p.col_idx[k]];
            }
            pv[row] = sum;
        }
        for (std::size_t s = begin; s < end; ++s) {
            std::size_t best_a = 0;
            double best = mdp.stage_cost(s, 0) + gamma * pv[s * m];
            for (std::size_t a = 1; a < m; ++a) {
                const double q = mdp.stage_cost(s, a) + gamma * pv[s * m + a];
                if (maximize ? q > best : q < best) {
                    best = q;
                    best_a = a;
                }
            }
            out.policy.actions[s] = best_a;
            out.applied.values[s] = best;
        }
    });
    return out;
}

Residual bellman_residual(const MdpInstance& mdp, std::span<const double> v, const Executor& exec) {
    const auto greedy = greedy_policy(mdp, v, exec);
    Residual r;
    r.vector.resize(mdp.n);
    for (std::size_t s = 0; s < mdp.n; ++s) {
        r.vector[s] = v[s] - greedy.applied[s];
    }
    r.inf_norm = norm_inf(r.vector, exec);
    return r;
}

std::vector<double> apply_policy_operator(const MdpInstance& mdp, const Policy& pi, std::span<const double> v,
                                          const Executor& exec) {
    require_valid(mdp, v);
    const PolicyOperator op(gather_policy_matrix(mdp, pi), mdp.gamma);
    const auto g = gather_policy_cost(mdp, pi);
    std::vector<double> tv(mdp.n);
    op.apply_affine(g, v, tv, exec);
    return tv;
}

Residual policy_residual(const MdpInstance& mdp, const Policy& pi, std::span<const double> v,
                         const Executor& exec) {
    const auto tv = apply_policy_operator(mdp, pi, v, exec);
    Residual r;
    r.vector.resize(mdp.n);
    for (std::size_t s = 0; s < mdp.n; ++s) {
        r.vector[s] = v[s] - tv[s];
    }
    r.inf_norm = norm_inf(r.vector, exec);
    return r;
}

CostVector policy_cost_exact(const MdpInstance& mdp, const Policy& pi, std::size_t dense_cap) {
    if (mdp.n > dense_cap) {
        throw ResourceError("policy_cost_exact: n = " + std::to_string(mdp.n) + " exceeds the dense cap of " +
                            std::to_string(dense_cap) + " states; use an iterative inner solver instead");
    }
    const CsrMatrix p_pi = gather_policy_matrix(mdp, pi);
    const auto g = gather_policy_cost(mdp, pi);
    const auto n = static_cast<Eigen::Index>(mdp.n);

    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t r = 0; r < p_pi.rows; ++r) {
        for (std::size_t k = p_pi.row_ptr[r]; k < p_pi.row_ptr[r + 1]; ++k) {
            a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p_pi.col_idx[k])) -= mdp.gamma * p_pi.values[k];
        }
    }
    const Eigen::Map<const Eigen::VectorXd> rhs(g.data(), n);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const Eigen::VectorXd x = lu.solve(rhs);

    CostVector out;
    out.values.assign(x.data(), x.data() + n);
    for (const double value : out.values) {
        if (!std::isfinite(value)) {
            throw NumericalError("policy_cost_exact: factorization produced non-finite values (corrupted input?)");
        }
    }
    return out;
}

} // namespace ipi
