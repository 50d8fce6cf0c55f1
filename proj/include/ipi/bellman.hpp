#pragma once

#include <span>
#include <vector>

#include "ipi/model.hpp"

namespace ipi {

struct GreedyResult {
    Policy policy;
    CostVector applied; // (TV)[s] = g(s, pi(s)) + gamma (P_pi V)[s]
};

struct Residual {
    std::vector<double> vector;
    double inf_norm = 0.0;
};

/// Greedy policy over the full action-value table: one product P V of length n*m,
/// reshaped to n x m, scaled by gamma and offset by g; then a row-wise argmin (argmax
/// in Max mode). Ties go to the smallest action index.
GreedyResult greedy_policy(const MdpInstance& mdp, std::span<const double> v,
                           const Executor& exec = Executor::serial());

/// r(V) = V - TV
Residual bellman_residual(const MdpInstance& mdp, std::span<const double> v,
                          const Executor& exec = Executor::serial());

/// r_pi(V) = V - (g_pi + gamma P_pi V)
Residual policy_residual(const MdpInstance& mdp, const Policy& pi, std::span<const double> v,
                         const Executor& exec = Executor::serial());

/// T_pi V
std::vector<double> apply_policy_operator(const MdpInstance& mdp, const Policy& pi, std::span<const double> v,
                                          const Executor& exec = Executor::serial());

/// Largest n accepted by dense factorization paths.
inline constexpr std::size_t kDenseFactorizationCap = 4096;

/// Exact V_pi by a dense LU solve of (I - gamma P_pi) V = g_pi. Throws ResourceError
/// when n exceeds `dense_cap`.
CostVector policy_cost_exact(const MdpInstance& mdp, const Policy& pi,
                             std::size_t dense_cap = kDenseFactorizationCap);

} // namespace ipi
