#pragma once

#include <span>
#include <vector>

#include "ipi/linalg.hpp"
#include "ipi/model.hpp"

namespace ipi {

/// n x n matrix P_pi: row s is row s*m + pi[s] of the flattened tensor.
CsrMatrix gather_policy_matrix(const MdpInstance& mdp, const Policy& pi);

/// g_pi[s] = g(s, pi[s])
std::vector<double> gather_policy_cost(const MdpInstance& mdp, const Policy& pi);

/// Matrix-free J_pi = I - gamma P_pi.
class PolicyOperator {
public:
    PolicyOperator(CsrMatrix p_pi, double gamma);

    std::size_t size() const { return p_pi_.rows; }
    double gamma() const { return gamma_; }
    const CsrMatrix& transitions() const { return p_pi_; }

    /// y = x - gamma * (P_pi x)
    void apply(std::span<const double> x, std::span<double> y, const Executor& exec = Executor::serial()) const;

    /// y = b + gamma * (P_pi x), i.e. T_pi x when b = g_pi.
    void apply_affine(std::span<const double> b, std::span<const double> x, std::span<double> y,
                      const Executor& exec = Executor::serial()) const;

    /// 1 - gamma * P_pi(s, s) for every s, read from the gathered rows.
    std::vector<double> diagonal() const;

private:
    CsrMatrix p_pi_;
    double gamma_;
};

/// Materializes I - gamma P_pi with an explicit diagonal slot in every row.
CsrMatrix assemble_explicit(const PolicyOperator& op);

} // namespace ipi
