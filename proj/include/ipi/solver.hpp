#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ipi/inner_solver.hpp"
#include "ipi/model.hpp"

namespace ipi {

struct SolveOptions {
    double tol = 1e-8;            // -atol_pi
    double alpha = 1e-4;          // -alpha
    std::size_t max_outer = 1000; // -max_iter_pi
    std::size_t max_inner = 1000; // -max_iter_ksp
    InnerSolverKind inner = InnerSolverKind::Gmres;   // -ksp_type
    PreconditionerKind pc = PreconditionerKind::None; // -pc_type
    /// -ksp_max_it: fixes the inner iteration count and disables the alpha test.
    std::optional<std::size_t> ksp_max_it;
    double richardson_scale = 1.0; // -ksp_richardson_scale
    double sor_omega = 1.0;        // -pc_sor_omega
    std::size_t gmres_restart = 30;
    std::size_t worker_count = 1;
    std::optional<Mode> mode;
    std::optional<std::vector<double>> initial_values;
    /// Outer iterations without residual decrease before reporting Stalled.
    std::size_t stall_window = 50;
    std::size_t assembly_nnz_cap = std::size_t{1} << 28;
    std::size_t dense_cap = 4096;
    /// Keep every iterate V_k and policy pi_k in the result.
    bool record_trace = false;
};

/// Throws ValidationError naming the first violated option invariant.
void validate_options(const SolveOptions& opts);

enum class SolveStatus { Converged, OuterCap, Stalled };

std::string_view to_string(SolveStatus status);

struct PhaseTimes {
    double greedy = 0.0;
    double assembly = 0.0;
    double inner = 0.0;
};

struct SolveResult {
    CostVector V;
    Policy pi;
    std::size_t outer_iterations = 0;
    std::size_t inner_iterations_total = 0;
    std::vector<double> residual_history; // ||r(V_k)||_inf, k = 0..outer_iterations
    std::vector<std::size_t> inner_iterations; // per outer iteration
    std::size_t breakdowns = 0;
    SolveStatus status = SolveStatus::OuterCap;
    double wall_time = 0.0;
    PhaseTimes phases;
    std::vector<std::vector<double>> value_trace; // V_0, V_1, ... when record_trace
    std::vector<Policy> policy_trace;             // pi_1, pi_2, ... when record_trace
};

/// Inexact policy iteration: greedy extraction, preconditioned inexact evaluation
/// warm-started at V_k with target alpha * ||r(V_k)||_inf, until ||r(V_k)||_inf <= tol.
SolveResult solve(const MdpInstance& mdp, const SolveOptions& opts = {});

enum class PresetKind { VI, PI, OPI, BetaVI, GsVI, JVI };

/// Option sets recovering classical dynamic programming methods. `param` is W for
/// OPI and beta for BetaVI; ignored otherwise.
SolveOptions preset(PresetKind kind, double param = 0.0, const SolveOptions& base = {});

/// Parses "VI", "PI", "OPI(W)", "BETA_VI(b)", "GS_VI", "J_VI" (also with '-' separators).
SolveOptions preset(std::string_view name, const SolveOptions& base = {});

struct PresetDescription {
    std::string name;
    std::string options;
};
std::vector<PresetDescription> describe_presets();

/// Option names understood by set_option, in table order.
std::vector<std::string> option_names();

/// Applies one named option (-max_iter_pi, -ksp_type, ...). Flag options such as
/// -pc_sor_forward take an empty value. Throws ValidationError for unknown names
/// or unparsable values.
void set_option(SolveOptions& opts, std::string_view name, std::string_view value);

/// True when `name` is a flag that takes no value.
bool is_flag_option(std::string_view name);

} // namespace ipi
