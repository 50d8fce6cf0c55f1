#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "ipi/model.hpp"

namespace ipi {

struct RandomParams {
    std::size_t n = 100;
    std::size_t m = 10;
    std::size_t nnz_per_row = 5;
    double gamma = 0.9;
    std::uint64_t seed = 0;
};

/// Uniform stage costs in (0,1); per (s,a), nnz_per_row distinct successors drawn
/// uniformly without replacement with normalized Uniform(0,1) weights. Each row
/// depends only on (seed, row), so output is independent of the worker count.
MdpInstance gen_random(const RandomParams& p, const Executor& exec = Executor::serial());

/// Controlled SIS epidemic. Actions a = a1*4 + a2 over 5 hygiene levels x 4
/// distancing levels. Coefficient defaults are illustrative configuration.
struct SisParams {
    std::size_t N = 100;
    double w_f = 1.0;
    double w_q = 0.1;
    double w_h = 2.0;
    std::array<double, 5> cf_hm{0.0, 10.0, 25.0, 50.0, 100.0};
    std::array<double, 4> cf_sd{0.0, 20.0, 80.0, 200.0};
    std::array<double, 5> cq_hm{1.0, 0.95, 0.85, 0.7, 0.4};
    std::array<double, 4> cq_sd{1.0, 0.85, 0.6, 0.3};
    std::array<double, 5> psi{0.2, 0.15, 0.1, 0.06, 0.02};
    std::array<double, 4> lambda{4.0, 2.5, 1.2, 0.4};
    double gamma = 0.99;
};

inline constexpr std::size_t kSisActions = 20;
/// Binomial probabilities below this are dropped before renormalization.
inline constexpr double kSisTruncation = 1e-15;

/// q(s,a) = 1 - exp(-lambda(a2) beta(s) psi(a1)), beta(s) = 1 - s/N.
double sis_infection_probability(const SisParams& p, std::size_t s, std::size_t a);
double sis_stage_cost(const SisParams& p, std::size_t s, std::size_t a);
MdpInstance gen_sis(const SisParams& p, const Executor& exec = Executor::serial());

struct PendulumParams {
    std::size_t Ns = 11;
    std::size_t Na = 51;
    double Ts = 0.01;
    double omega_max = 10.0;
    double torque_max = 3.0;
    double gravity = 9.80665;
    double gamma = 0.999;
};

/// Grid coordinates of the discretized pendulum. Angles are stored as offsets from
/// upright (theta - pi) so that the reflection (theta, omega, F) -> (2pi - theta,
/// -omega, -F) maps grid points to grid points with exactly negated coordinates.
struct PendulumGrid {
    explicit PendulumGrid(const PendulumParams& p);

    std::size_t Ns, Na;
    double theta_step, omega_step, torque_step;

    double theta_offset(std::size_t i) const; // theta_i - pi
    double theta(std::size_t i) const { return theta_offset(i) + 3.14159265358979323846; }
    double omega(std::size_t j) const;
    double torque(std::size_t k) const;
    std::size_t state(std::size_t i, std::size_t j) const { return i * Ns + j; }
    /// Grid index of the reflected state (2pi - theta_i, -omega_j).
    std::size_t mirror_state(std::size_t s) const;

private:
    double omega_max_, torque_max_;
};

struct GridWeights {
    std::vector<std::size_t> states; // sorted, unique
    std::vector<double> weights;
};

double pendulum_stage_cost(double theta, double omega, double torque);
/// One forward Euler step of theta'' = F - g sin(theta); returns (theta', omega') unwrapped.
std::pair<double, double> pendulum_step(const PendulumParams& p, double theta, double omega, double torque);
/// Bilinear weights of a continuous state over the surrounding grid nodes
/// (theta periodic, omega clamped).
GridWeights pendulum_interpolate(const PendulumGrid& grid, double theta, double omega);
MdpInstance gen_pendulum(const PendulumParams& p, const Executor& exec = Executor::serial());

enum class MazeAction : std::size_t { Stay = 0, North = 1, East = 2, South = 3, West = 4 };
inline constexpr std::size_t kMazeActions = 5;
std::string_view maze_action_label(std::size_t a);

struct MazeParams {
    std::size_t H = 5;
    std::size_t W = 5;
    std::vector<std::size_t> obstacles;
    std::optional<std::size_t> goal; // defaults to the bottom-right cell
    double wall_cost = 1e20;
    double goal_cost = -100.0;
    double gamma = 0.99;

    std::size_t goal_cell() const { return goal.value_or(H * W - 1); }
};

/// Successor of cell s under action a, and whether the move is blocked.
std::pair<std::size_t, bool> maze_move(const MazeParams& p, const std::vector<bool>& blocked, std::size_t s,
                                       std::size_t a);
MdpInstance gen_maze(const MazeParams& p);

/// Vertical wall in column `col` spanning all rows except `gap_row`.
std::vector<std::size_t> maze_wall_with_gap(std::size_t H, std::size_t W, std::size_t col, std::size_t gap_row);

struct TransitionRow {
    std::vector<std::size_t> columns;
    std::vector<double> probabilities;
};

using CostFn = std::function<double(std::size_t s, std::size_t a)>;
using TransitionFn = std::function<TransitionRow(std::size_t s, std::size_t a)>;

/// Builds an instance from per-(s,a) callbacks, each state block on its own worker.
/// `max_row_nnz`, when given, is a per-row capacity: a callback row with more
/// entries raises ResourceError instead of being truncated.
MdpInstance build_from_callbacks(std::size_t n, std::size_t m, double gamma, const CostFn& cost_fn,
                                 const TransitionFn& trans_fn, std::optional<std::size_t> max_row_nnz = {},
                                 const Executor& exec = Executor::serial());

} // namespace ipi
