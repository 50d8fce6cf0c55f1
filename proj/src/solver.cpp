#include "ipi/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include "ipi/bellman.hpp"
#include "ipi/errors.hpp"
#include "ipi/policy_operator.hpp"

namespace ipi {

std::string_view to_string(SolveStatus status) {
    switch (status) {
    case SolveStatus::Converged: return "CONVERGED";
    case SolveStatus::OuterCap: return "OUTER_CAP";
    case SolveStatus::Stalled: return "STALLED";
    }
    return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

} // namespace

SolveResult solve(const MdpInstance& input, const SolveOptions& opts) {
    validate_options(opts);
    require_valid(input);

    // A mode override needs its own instance since greedy extraction reads mdp.mode.
    std::optional<MdpInstance> overridden;
    if (opts.mode && *opts.mode != input.mode) {
        overridden = input;
        overridden->mode = *opts.mode;
    }
    const MdpInstance& mdp = overridden ? *overridden : input;

    const auto start = Clock::now();
    Executor exec(opts.worker_count);

    std::vector<double> V(mdp.n, 0.0);
    if (opts.initial_values) {
        require_valid(mdp, *opts.initial_values);
        V = *opts.initial_values;
    }

    PreconditionerConfig pc_config;
    pc_config.kind = opts.pc;
    pc_config.sor_omega = opts.sor_omega;
    pc_config.assembly_nnz_cap = opts.assembly_nnz_cap;
    pc_config.dense_cap = opts.dense_cap;

    InnerSolveConfig inner;
    inner.kind = opts.inner;
    inner.max_it = opts.ksp_max_it.value_or(opts.max_inner);
    inner.fixed_iterations = opts.ksp_max_it.has_value();
    inner.richardson_scale = opts.richardson_scale;
    inner.gmres_restart = opts.gmres_restart;

    SolveResult result;
    double previous = std::numeric_limits<double>::infinity();
    std::size_t without_decrease = 0;
    std::size_t k = 0;
    for (;;) {
        auto phase = Clock::now();
        GreedyResult greedy = greedy_policy(mdp, V, exec);
        std::vector<double> r(mdp.n);
        for (std::size_t s = 0; s < mdp.n; ++s) {
            r[s] = V[s] - greedy.applied.values[s];
        }
        const double rn = norm_inf(r, exec);
        result.phases.greedy += seconds_since(phase);

        result.residual_history.push_back(rn);
        if (opts.record_trace) {
            result.value_trace.push_back(V);
        }
        result.pi = greedy.policy;
        if (!std::isfinite(rn)) {
            throw NumericalError("outer residual became non-finite at iteration " + std::to_string(k));
        }
        if (rn <= opts.tol) {
            result.status = SolveStatus::Converged;
            break;
        }
        if (k >= opts.max_outer) {
            result.status = SolveStatus::OuterCap;
            break;
        }
        without_decrease = rn < previous ? 0 : without_decrease + 1;
        previous = rn;
        if (without_decrease >= opts.stall_window) {
            result.status = SolveStatus::Stalled;
            break;
        }
        if (opts.record_trace) {
            result.policy_trace.push_back(greedy.policy);
        }

        phase = Clock::now();
        const std::vector<double> g_pi = gather_policy_cost(mdp, greedy.policy);
        const PolicyOperator op(gather_policy_matrix(mdp, greedy.policy), mdp.gamma);
        const Preconditioner pc = Preconditioner::build(op, pc_config);
        result.phases.assembly += seconds_since(phase);

        phase = Clock::now();
        // r_{pi_{k+1}}(V_k) = r(V_k) because pi_{k+1} is greedy for V_k
        inner.target_2norm = opts.alpha * rn;
        std::vector<double> theta = V;
        const InnerSolveReport report = inner_solve(op, pc, g_pi, theta, inner, exec);
        if (report.breakdown) {
            // one plain sweep: T_{pi_{k+1}} V_k, already computed by the greedy step
            ++result.breakdowns;
            theta = std::move(greedy.applied.values);
        }
        result.phases.inner += seconds_since(phase);

        result.inner_iterations.push_back(report.iterations);
        result.inner_iterations_total += report.iterations;
        V = std::move(theta);
        ++k;
    }

    result.V.values = std::move(V);
    result.outer_iterations = k;
    result.wall_time = seconds_since(start);
    return result;
}

} // namespace ipi
