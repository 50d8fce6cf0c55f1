#include "ipi/generators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <unordered_set>

#include "ipi/errors.hpp"

namespace ipi {

namespace {

using RowFn = std::function<void(std::size_t s, std::size_t a, std::vector<std::size_t>& cols,
                                 std::vector<double>& vals, double& cost)>;

/// Fills the cost matrix and the (n*m) x n transition tensor, one state block per
/// worker. Blocks are concatenated in order, so the result does not depend on the
/// worker count.
void build_rows(MdpInstance& mdp, const RowFn& row_fn, const Executor& exec) {
    const std::size_t n = mdp.n;
    const std::size_t m = mdp.m;
    mdp.stage_cost = DenseMatrix(n, m);
    const Partition part = make_partition(n, exec.workers());
    std::vector<CsrMatrix> pieces(part.worker_count);
    exec.for_blocks(part, [&](std::size_t block, std::size_t begin, std::size_t end) {
        CsrBuilder builder((end - begin) * m, n);
        std::vector<std::size_t> cols;
        std::vector<double> vals;
        for (std::size_t s = begin; s < end; ++s) {
            for (std::size_t a = 0; a < m; ++a) {
                cols.clear();
                vals.clear();
                double cost = 0.0;
                row_fn(s, a, cols, vals, cost);
                mdp.stage_cost(s, a) = cost;
                builder.add_row(cols, vals);
            }
        }
        pieces[block] = std::move(builder).finish();
    });

    CsrMatrix& t = mdp.transitions;
    t = CsrMatrix{};
    t.rows = n * m;
    t.cols = n;
    std::size_t nnz = 0;
    for (const auto& piece : pieces) {
        nnz += piece.nnz();
    }
    t.row_ptr.reserve(t.rows + 1);
    t.col_idx.reserve(nnz);
    t.values.reserve(nnz);
    for (const auto& piece : pieces) {
        const std::size_t offset = t.col_idx.size();
        for (std::size_t r = 1; r < piece.row_ptr.size(); ++r) {
            t.row_ptr.push_back(offset + piece.row_ptr[r]);
        }
        t.col_idx.insert(t.col_idx.end(), piece.col_idx.begin(), piece.col_idx.end());
        t.values.insert(t.values.end(), piece.values.begin(), piece.values.end());
    }
}

void require_discount(double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw ValidationError("discount factor must lie in (0,1), got " + std::to_string(gamma));
    }
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 row_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t row) {
    return std::mt19937_64(splitmix64(splitmix64(seed ^ splitmix64(stream)) + row));
}

/// Uniform in the open interval (0,1).
double open_unit(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform integer in [0, bound), by rejection.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = rng();
    while (x >= limit) {
        x = rng();
    }
    return x % bound;
}

} // namespace

MdpInstance gen_random(const RandomParams& p, const Executor& exec) {
    if (p.n < 1 || p.m < 1) {
        throw ValidationError("random MDP needs n >= 1 and m >= 1");
    }
    if (p.nnz_per_row < 1 || p.nnz_per_row > p.n) {
        throw ValidationError("nnz_per_row must lie in [1, n]");
    }
    require_discount(p.gamma);
    MdpInstance mdp;
    mdp.n = p.n;
    mdp.m = p.m;
    mdp.gamma = p.gamma;
    const std::size_t k = p.nnz_per_row;
    build_rows(
        mdp,
        [&](std::size_t s, std::size_t a, std::vector<std::size_t>& cols, std::vector<double>& vals, double& cost) {
            const std::size_t row = s * p.m + a;
            auto rng = row_rng(p.seed, 1, row);
            // Floyd's sampling of k distinct columns
            std::unordered_set<std::size_t> chosen;
            for (std::size_t j = p.n - k; j < p.n; ++j) {
                const std::size_t t = uniform_below(rng, j + 1);
                const std::size_t pick = chosen.count(t) ? j : t;
                chosen.insert(pick);
                cols.push_back(pick);
            }
            std::sort(cols.begin(), cols.end());
            double sum = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                vals.push_back(open_unit(rng));
                sum += vals.back();
            }
            for (double& v : vals) {
                v /= sum;
            }
            auto cost_rng = row_rng(p.seed, 2, row);
            cost = open_unit(cost_rng);
        },
        exec);
    return mdp;
}

namespace {

void check_sis(const SisParams& p) {
    if (p.N < 1) {
        throw ValidationError("SIS population N must be at least 1");
    }
    require_discount(p.gamma);
    auto unit = [](const auto& arr, const char* name) {
        for (double v : arr) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ValidationError(std::string("SIS ") + name + " entries must lie in [0,1]");
            }
        }
    };
    unit(p.cq_hm, "cq_hm");
    unit(p.cq_sd, "cq_sd");
    unit(p.psi, "psi");
    for (double v : p.lambda) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ValidationError("SIS lambda entries must be non-negative");
        }
    }
    for (double w : {p.w_f, p.w_q, p.w_h}) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ValidationError("SIS weights must be non-negative");
        }
    }
}

double sis_exponent(const SisParams& p, std::size_t s, std::size_t a) {
    const std::size_t a1 = a / 4;
    const std::size_t a2 = a % 4;
    const double beta = 1.0 - static_cast<double>(s) / static_cast<double>(p.N);
    return p.lambda[a2] * beta * p.psi[a1];
}

} // namespace

double sis_infection_probability(const SisParams& p, std::size_t s, std::size_t a) {
    if (s > p.N || a >= kSisActions) {
        throw ValidationError("SIS state or action out of range");
    }
    return -std::expm1(-sis_exponent(p, s, a));
}

double sis_stage_cost(const SisParams& p, std::size_t s, std::size_t a) {
    if (s > p.N || a >= kSisActions) {
        throw ValidationError("SIS state or action out of range");
    }
    const std::size_t a1 = a / 4;
    const std::size_t a2 = a % 4;
    const double financial = p.cf_hm[a1] + p.cf_sd[a2];
    const double quality = p.cq_hm[a1] * p.cq_sd[a2];
    const double health = std::pow(static_cast<double>(p.N - s), 1.1);
    return p.w_f * financial - p.w_q * quality + p.w_h * health;
}

MdpInstance gen_sis(const SisParams& p, const Executor& exec) {
    check_sis(p);
    MdpInstance mdp;
    mdp.n = p.N + 1;
    mdp.m = kSisActions;
    mdp.gamma = p.gamma;
    build_rows(
        mdp,
        [&](std::size_t s, std::size_t a, std::vector<std::size_t>& cols, std::vector<double>& vals, double& cost) {
            cost = sis_stage_cost(p, s, a);
            const double x = sis_exponent(p, s, a);
            if (s == 0 || x == 0.0) {
                cols.push_back(p.N); // no new infections
                vals.push_back(1.0);
                return;
            }
            // Binomial(s, q) over new infections i, s' = N - i, in log space
            const double log_q = std::log(-std::expm1(-x));
            const double log_1mq = -x;
            const double q = -std::expm1(-x);
            const double lg_s = std::lgamma(static_cast<double>(s) + 1.0);
            auto log_pmf = [&](std::size_t i) {
                const double di = static_cast<double>(i);
                const double dr = static_cast<double>(s - i);
                return lg_s - std::lgamma(di + 1.0) - std::lgamma(dr + 1.0) + di * log_q + dr * log_1mq;
            };
            const std::size_t mode =
                std::min(s, static_cast<std::size_t>(std::floor((static_cast<double>(s) + 1.0) * q)));
            std::vector<std::pair<std::size_t, double>> mass;
            for (std::size_t i = mode + 1; i-- > 0;) {
                const double v = std::exp(log_pmf(i));
                if (v < kSisTruncation && i != mode) {
                    break;
                }
                mass.emplace_back(i, v);
            }
            for (std::size_t i = mode + 1; i <= s; ++i) {
                const double v = std::exp(log_pmf(i));
                if (v < kSisTruncation) {
                    break;
                }
                mass.emplace_back(i, v);
            }
            double sum = 0.0;
            for (const auto& [i, v] : mass) {
                sum += v;
            }
            std::sort(mass.begin(), mass.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
            for (const auto& [i, v] : mass) {
                cols.push_back(p.N - i);
                vals.push_back(v / sum);
            }
        },
        exec);
    return mdp;
}

// ---------------------------------------------------------------------------
// Pendulum

namespace {

void check_pendulum(const PendulumParams& p) {
    if (p.Ns < 2) {
        throw ValidationError("pendulum Ns must be at least 2");
    }
    if (p.Na < 1 || p.Na % 2 == 0) {
        throw ValidationError("pendulum Na must be odd so that zero torque is on the grid");
    }
    if (!(p.Ts > 0.0) || !(p.omega_max > 0.0) || !(p.torque_max >= 0.0)) {
        throw ValidationError("pendulum Ts and omega range must be positive, torque range non-negative");
    }
    require_discount(p.gamma);
}

/// Euler step in upright-offset coordinates d = theta - pi, where sin(theta) = -sin(d).
std::pair<double, double> step_offset(const PendulumParams& p, double d, double omega, double torque) {
    return {d + p.Ts * omega, omega + p.Ts * (torque + p.gravity * std::sin(d))};
}

GridWeights interpolate_offset(const PendulumGrid& grid, double d, double omega, double omega_max) {
    const double ns = static_cast<double>(grid.Ns);
    double u = std::fmod(d / grid.theta_step + ns / 2.0, ns);
    if (u < 0.0) {
        u += ns;
    }
    auto i0 = static_cast<std::size_t>(std::floor(u));
    double fu = u - static_cast<double>(i0);
    if (i0 >= grid.Ns) {
        i0 = 0;
        fu = 0.0;
    }
    const std::size_t i1 = (i0 + 1) % grid.Ns;

    const double w = std::clamp(omega, -omega_max, omega_max);
    const double v = (w + omega_max) / grid.omega_step;
    std::size_t j0 = static_cast<std::size_t>(std::floor(std::max(v, 0.0)));
    j0 = std::min(j0, grid.Ns - 2);
    const double fv = std::clamp(v - static_cast<double>(j0), 0.0, 1.0);

    std::vector<std::pair<std::size_t, double>> nodes = {
        {grid.state(i0, j0), (1.0 - fu) * (1.0 - fv)},
        {grid.state(i0, j0 + 1), (1.0 - fu) * fv},
        {grid.state(i1, j0), fu * (1.0 - fv)},
        {grid.state(i1, j0 + 1), fu * fv},
    };
    std::sort(nodes.begin(), nodes.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    GridWeights out;
    for (const auto& [state, weight] : nodes) {
        if (weight == 0.0) {
            continue;
        }
        if (!out.states.empty() && out.states.back() == state) {
            out.weights.back() += weight;
        } else {
            out.states.push_back(state);
            out.weights.push_back(weight);
        }
    }
    return out;
}

constexpr double kPi = std::numbers::pi;

} // namespace

PendulumGrid::PendulumGrid(const PendulumParams& p)
    : Ns((check_pendulum(p), p.Ns)), Na(p.Na), theta_step(2.0 * kPi / static_cast<double>(p.Ns)),
      omega_step(2.0 * p.omega_max / static_cast<double>(p.Ns - 1)),
      torque_step(p.Na > 1 ? 2.0 * p.torque_max / static_cast<double>(p.Na - 1) : 0.0),
      omega_max_(p.omega_max), torque_max_(p.torque_max) {}

double PendulumGrid::theta_offset(std::size_t i) const {
    return static_cast<double>(2 * static_cast<long long>(i) - static_cast<long long>(Ns)) * kPi /
           static_cast<double>(Ns);
}

double PendulumGrid::omega(std::size_t j) const {
    return static_cast<double>(2 * static_cast<long long>(j) - static_cast<long long>(Ns - 1)) * omega_max_ /
           static_cast<double>(Ns - 1);
}

double PendulumGrid::torque(std::size_t k) const {
    if (Na == 1) {
        return 0.0;
    }
    return static_cast<double>(2 * static_cast<long long>(k) - static_cast<long long>(Na - 1)) * torque_max_ /
           static_cast<double>(Na - 1);
}

std::size_t PendulumGrid::mirror_state(std::size_t s) const {
    const std::size_t i = s / Ns;
    const std::size_t j = s % Ns;
    return state((Ns - i) % Ns, Ns - 1 - j);
}

double pendulum_stage_cost(double theta, double omega, double torque) {
    const double d = theta - kPi;
    return 2.0 * (d * d + omega * omega) + torque * torque;
}

std::pair<double, double> pendulum_step(const PendulumParams& p, double theta, double omega, double torque) {
    const auto [d, w] = step_offset(p, theta - kPi, omega, torque);
    return {d + kPi, w};
}

GridWeights pendulum_interpolate(const PendulumGrid& grid, double theta, double omega) {
    return interpolate_offset(grid, theta - kPi, omega, grid.omega(grid.Ns - 1));
}

MdpInstance gen_pendulum(const PendulumParams& p, const Executor& exec) {
    const PendulumGrid grid(p);
    MdpInstance mdp;
    mdp.n = p.Ns * p.Ns;
    mdp.m = p.Na;
    mdp.gamma = p.gamma;
    build_rows(
        mdp,
        [&](std::size_t s, std::size_t a, std::vector<std::size_t>& cols, std::vector<double>& vals, double& cost) {
            const double d = grid.theta_offset(s / p.Ns);
            const double w = grid.omega(s % p.Ns);
            const double f = grid.torque(a);
            // cost written in offset form so that mirrored states agree bitwise
            cost = 2.0 * (d * d + w * w) + f * f;
            const auto [d_next, w_next] = step_offset(p, d, w, f);
            GridWeights gw = interpolate_offset(grid, d_next, w_next, p.omega_max);
            cols = std::move(gw.states);
            vals = std::move(gw.weights);
        },
        exec);
    return mdp;
}

// ---------------------------------------------------------------------------
// Maze

std::string_view maze_action_label(std::size_t a) {
    static constexpr std::string_view labels[] = {"stay", "N", "E", "S", "W"};
    if (a >= kMazeActions) {
        throw ValidationError("maze action out of range: " + std::to_string(a));
    }
    return labels[a];
}

std::pair<std::size_t, bool> maze_move(const MazeParams& p, const std::vector<bool>& blocked, std::size_t s,
                                       std::size_t a) {
    const std::size_t r = s / p.W;
    const std::size_t c = s % p.W;
    std::size_t target = s;
    switch (static_cast<MazeAction>(a)) {
    case MazeAction::Stay: return {s, false};
    case MazeAction::North:
        if (r == 0) return {s, true};
        target = s - p.W;
        break;
    case MazeAction::East:
        if (c + 1 >= p.W) return {s, true};
        target = s + 1;
        break;
    case MazeAction::South:
        if (r + 1 >= p.H) return {s, true};
        target = s + p.W;
        break;
    case MazeAction::West:
        if (c == 0) return {s, true};
        target = s - 1;
        break;
    default: throw ValidationError("maze action out of range: " + std::to_string(a));
    }
    if (blocked[target]) {
        return {s, true};
    }
    return {target, false};
}

MdpInstance gen_maze(const MazeParams& p) {
    if (p.H < 1 || p.W < 1) {
        throw ValidationError("maze dimensions must be positive");
    }
    require_discount(p.gamma);
    const std::size_t cells = p.H * p.W;
    std::vector<bool> blocked(cells, false);
    for (std::size_t o : p.obstacles) {
        if (o >= cells) {
            throw ValidationError("maze obstacle index " + std::to_string(o) + " out of range");
        }
        blocked[o] = true;
    }
    const std::size_t goal = p.goal_cell();
    if (goal >= cells) {
        throw ValidationError("maze goal index out of range");
    }
    if (blocked[goal]) {
        throw ValidationError("maze goal cell " + std::to_string(goal) + " is an obstacle");
    }
    MdpInstance mdp;
    mdp.n = cells;
    mdp.m = kMazeActions;
    mdp.gamma = p.gamma;
    build_rows(
        mdp,
        [&](std::size_t s, std::size_t a, std::vector<std::size_t>& cols, std::vector<double>& vals, double& cost) {
            std::size_t next = s;
            if (s == goal) {
                cost = p.goal_cost;
            } else if (blocked[s]) {
                cost = p.wall_cost;
            } else {
                const auto [succ, hit] = maze_move(p, blocked, s, a);
                next = succ;
                cost = hit ? p.wall_cost : 0.0;
            }
            cols.push_back(next);
            vals.push_back(1.0);
        },
        Executor::serial());
    return mdp;
}

std::vector<std::size_t> maze_wall_with_gap(std::size_t H, std::size_t W, std::size_t col, std::size_t gap_row) {
    if (col >= W || gap_row >= H) {
        throw ValidationError("wall column or gap row out of range");
    }
    std::vector<std::size_t> cells;
    for (std::size_t r = 0; r < H; ++r) {
        if (r != gap_row) {
            cells.push_back(r * W + col);
        }
    }
    return cells;
}

// ---------------------------------------------------------------------------
// Callbacks

MdpInstance build_from_callbacks(std::size_t n, std::size_t m, double gamma, const CostFn& cost_fn,
                                 const TransitionFn& trans_fn, std::optional<std::size_t> max_row_nnz,
                                 const Executor& exec) {
    if (n < 1 || m < 1) {
        throw ValidationError("build_from_callbacks needs n >= 1 and m >= 1");
    }
    require_discount(gamma);
    if (!cost_fn || !trans_fn) {
        throw ValidationError("build_from_callbacks: both callbacks are required");
    }
    MdpInstance mdp;
    mdp.n = n;
    mdp.m = m;
    mdp.gamma = gamma;
    build_rows(
        mdp,
        [&](std::size_t s, std::size_t a, std::vector<std::size_t>& cols, std::vector<double>& vals, double& cost) {
            const std::string where = "(s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
            cost = cost_fn(s, a);
            if (!std::isfinite(cost)) {
                throw ValidationError("stage cost at " + where + " is not finite");
            }
            TransitionRow row = trans_fn(s, a);
            if (row.columns.size() != row.probabilities.size()) {
                throw ValidationError("transition callback at " + where + " returned " +
                                      std::to_string(row.columns.size()) + " columns but " +
                                      std::to_string(row.probabilities.size()) + " probabilities");
            }
            if (max_row_nnz && row.columns.size() > *max_row_nnz) {
                throw ResourceError("transition row at " + where + " has " + std::to_string(row.columns.size()) +
                                    " entries, exceeding the preallocated " + std::to_string(*max_row_nnz) +
                                    " per row; raise the preallocation hint");
            }
            double sum = 0.0;
            for (std::size_t k = 0; k < row.columns.size(); ++k) {
                const double v = row.probabilities[k];
                if (row.columns[k] >= n) {
                    throw ValidationError("transition callback at " + where + " returned column " +
                                          std::to_string(row.columns[k]) + " outside [0, " + std::to_string(n) + ")");
                }
                if (!(v >= 0.0 && v <= 1.0)) {
                    throw ValidationError("transition callback at " + where + " returned probability " +
                                          std::to_string(v) + " outside [0,1]");
                }
                sum += v;
            }
            if (!(std::abs(sum - 1.0) <= 1e-9)) {
                throw ValidationError("transition callback at " + where + " returned probabilities summing to " +
                                      std::to_string(sum));
            }
            if (sum != 1.0) {
                for (double& v : row.probabilities) {
                    v /= sum;
                }
            }
            cols = std::move(row.columns);
            vals = std::move(row.probabilities);
        },
        exec);
    require_valid(mdp);
    return mdp;
}

} // namespace ipi
