#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "ipi/policy_operator.hpp"
#include "ipi/preconditioner.hpp"

namespace ipi {

enum class InnerSolverKind { Richardson, Gmres, Bicgstab, Tfqmr };

std::string_view to_string(InnerSolverKind kind);
/// Accepts richardson|gmres|bicgstab|tfqmr; throws ValidationError listing them otherwise.
InnerSolverKind parse_inner_solver(std::string_view name);

struct InnerSolveConfig {
    InnerSolverKind kind = InnerSolverKind::Gmres;
    double target_2norm = 1e-8;
    std::size_t max_it = 1000;
    /// Run exactly max_it iterations; target_2norm is ignored.
    bool fixed_iterations = false;
    double richardson_scale = 1.0;
    std::size_t gmres_restart = 30;
};

struct InnerSolveReport {
    std::size_t iterations = 0;
    double final_linear_residual_2norm = 0.0;
    bool converged = false;
    bool breakdown = false;
};

/// Relative floor applied to the stopping target: 1e-14 * max(1, ||b||_2).
inline constexpr double kTargetFloor = 1e-14;

/// Approximately solves (I - gamma P_pi) theta = b from theta0, with left
/// preconditioning by `pc`. Stops once ||b - A theta||_2 <= target (as tracked by the
/// method's own residual recurrence for Krylov kinds) or after max_it iterations.
/// BiCGStab and TFQMR return their smallest-residual iterate when they stop short
/// of the target.
InnerSolveReport inner_solve(const PolicyOperator& op, const Preconditioner& pc, std::span<const double> b,
                             std::span<double> theta, const InnerSolveConfig& config,
                             const Executor& exec = Executor::serial());

} // namespace ipi
