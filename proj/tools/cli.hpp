#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ipi/generators.hpp"
#include "ipi/io.hpp"

namespace ipi::cli {

inline constexpr int kExitConverged = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNotConverged = 2;

/// Generator selection shared by `solve`, `generate` and `bench-amdahl`.
struct ProblemConfig {
    std::string family; // random | sis | pendulum | maze
    RandomParams random;
    SisParams sis;
    PendulumParams pendulum;
    MazeParams maze;
    std::optional<double> discount;
    std::optional<std::size_t> wall_col;
    std::optional<std::size_t> gap_row;
};

struct Problem {
    MdpInstance mdp;
    std::optional<GridMetadata> grid;
};

Problem make_problem(const ProblemConfig& problem_cfg, const Executor& exec = Executor::serial());

/// Rewrites single-dash option names (-ksp_type) to the double-dash form the
/// parser expects; everything else passes through.
std::vector<std::string> normalize_args(const std::vector<std::string>& args);

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

} // namespace ipi::cli
