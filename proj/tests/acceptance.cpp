// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <thread>

#include "ipi/amdahl.hpp"
#include "ipi/bellman.hpp"
#include "ipi/errors.hpp"
#include "ipi/generators.hpp"
#include "ipi/io.hpp"
#include "ipi/solver.hpp"
#include "oracles.hpp"

using namespace ipi;
namespace fs = std::filesystem;

namespace {

constexpr InnerSolverKind kAllKinds[] = {InnerSolverKind::Richardson, InnerSolverKind::Gmres,
                                         InnerSolverKind::Bicgstab, InnerSolverKind::Tfqmr};

// pinned tolerances
constexpr double kOracleTol = 1e-6;
constexpr double kFidelityTol = 1e-12;
constexpr double kContractionSlack = 1e-12;
constexpr double kDeterminismTol = 1e-10;
constexpr double kMazeRelTol = 1e-6;
constexpr double kSymmetryRelTol = 1e-5;

struct Check {
    bool ok = true;
    std::string detail;

    void fail(const std::string& why) {
        if (ok) detail = why;
        ok = false;
    }
    void require(bool cond, const std::string& why) {
        if (!cond) fail(why);
    }
};

int failures = 0;

void report(const char* name, const std::function<Check()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Check c;
    try {
        c = body();
    } catch (const std::exception& e) {
        c.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!c.ok) ++failures;
    std::printf("%s %-22s %s (%.2fs)\n", c.ok ? "PASS" : "FAIL", name, c.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

/// The seeded 20-state 4-action instance shared by the fidelity and determinism checks.
MdpInstance fidelity_instance() {
    return gen_random({.n = 20, .m = 4, .nnz_per_row = 6, .gamma = 0.9, .seed = 2041});
}

std::vector<MdpInstance> oracle_instances() {
    std::vector<MdpInstance> out;
    const double gammas[] = {0.5, 0.9, 0.99};
    std::mt19937_64 rng(77);
    for (std::uint64_t k = 0; k < 50; ++k) {
        const std::size_t n = 1 + rng() % 6;
        const std::size_t m = 1 + rng() % 3;
        const std::size_t nnz = 1 + rng() % n;
        out.push_back(gen_random({.n = n, .m = m, .nnz_per_row = nnz, .gamma = gammas[k % 3], .seed = 1000 + k}));
    }
    return out;
}

Check oracle_optimality() {
    Check c;
    double worst = 0.0;
    std::size_t runs = 0;
    for (const MdpInstance& mdp : oracle_instances()) {
        const auto d = oracle::densify(mdp);
        const auto vstar = oracle::brute_force(d);
        const auto pistar = oracle::greedy(d, vstar);
        for (InnerSolverKind kind : kAllKinds) {
            SolveOptions o;
            o.inner = kind;
            o.tol = 1e-9;
            o.max_inner = 100000;
            const SolveResult r = solve(mdp, o);
            ++runs;
            const double err = oracle::max_abs_diff(r.V.values, vstar);
            worst = std::max(worst, err);
            const std::string tag = " (n=" + std::to_string(mdp.n) + ", m=" + std::to_string(mdp.m) +
                                    ", gamma=" + fmt("%g", mdp.gamma) + ", " + std::string(to_string(kind)) + ")";
            c.require(r.status == SolveStatus::Converged, "not converged" + tag);
            c.require(err <= kOracleTol, "value error " + fmt("%.3g", err) + tag);
            c.require(r.pi.actions == pistar, "policy not greedy for V*" + tag);
        }
    }
    if (c.ok) c.detail = std::to_string(runs) + " solves, worst |V - V*|_inf = " + fmt("%.3g", worst);
    return c;
}

/// Runs a preset for `steps` outer iterations and compares every iterate with
/// `oracle_step` applied to the oracle's own previous iterate.
void compare_iterates(Check& c, const MdpInstance& mdp, SolveOptions o, std::size_t steps,
                      const std::function<oracle::Vec(const oracle::Vec&)>& oracle_step, const char* name,
                      double& worst) {
    o.max_outer = steps;
    o.tol = 1e-300;
    o.stall_window = steps + 1;
    o.record_trace = true;
    const SolveResult r = solve(mdp, o);
    if (r.value_trace.size() != steps + 1) {
        c.fail(std::string(name) + ": stopped after " + std::to_string(r.value_trace.size() - 1) + " iterates");
        return;
    }
    oracle::Vec V(mdp.n, 0.0);
    for (std::size_t k = 0; k <= steps; ++k) {
        const double err = oracle::max_abs_diff(r.value_trace[k], V);
        worst = std::max(worst, err);
        if (err > kFidelityTol) {
            c.fail(std::string(name) + ": iterate " + std::to_string(k) + " off by " + fmt("%.3g", err));
            return;
        }
        V = oracle_step(V);
    }
}

Check preset_fidelity() {
    Check c;
    const MdpInstance mdp = fidelity_instance();
    const auto d = oracle::densify(mdp);
    double worst = 0.0;

    compare_iterates(c, mdp, preset(PresetKind::VI), 100, [&](const oracle::Vec& V) { return oracle::bellman(d, V); },
                     "VI", worst);
    compare_iterates(
        c, mdp, preset(PresetKind::OPI, 5), 60,
        [&](const oracle::Vec& V) {
            const auto pi = oracle::greedy(d, V);
            oracle::Vec x = V;
            for (int w = 0; w < 5; ++w) x = oracle::apply_policy(d, pi, x);
            return x;
        },
        "OPI(5)", worst);
    compare_iterates(
        c, mdp, preset(PresetKind::GsVI), 100,
        [&](const oracle::Vec& V) { return oracle::gauss_seidel_sweep(d, oracle::greedy(d, V), V); }, "GS_VI", worst);
    compare_iterates(
        c, mdp, preset(PresetKind::JVI), 100,
        [&](const oracle::Vec& V) { return oracle::jacobi_sweep(d, oracle::greedy(d, V), V); }, "J_VI", worst);

    SolveOptions pi_opts = preset(PresetKind::PI);
    pi_opts.tol = 1e-10;
    pi_opts.record_trace = true;
    const SolveResult r = solve(mdp, pi_opts);
    const auto seq = oracle::policy_iteration(d);
    c.require(r.status == SolveStatus::Converged, "PI: not converged");
    bool same = r.policy_trace.size() >= seq.size();
    for (std::size_t k = 0; same && k < seq.size(); ++k) same = r.policy_trace[k].actions == seq[k];
    for (std::size_t k = seq.size(); same && k < r.policy_trace.size(); ++k) same = r.policy_trace[k].actions == seq.back();
    c.require(same, "PI: policy sequence differs from exact policy iteration");
    c.require(oracle::max_abs_diff(r.V.values, oracle::evaluate(d, seq.back())) <= 1e-9, "PI: final value differs");

    if (c.ok)
        c.detail = "VI/OPI(5)/GS_VI/J_VI worst iterate error " + fmt("%.3g", worst) + ", PI matched " +
                   std::to_string(seq.size()) + " policies";
    return c;
}

void check_contraction(Check& c, const MdpInstance& mdp, std::size_t max_outer, const std::string& name,
                       std::size_t& checked) {
    SolveOptions o = preset(PresetKind::VI);
    o.max_outer = max_outer;
    o.tol = 1e-10;
    const SolveResult r = solve(mdp, o);
    const auto& h = r.residual_history;
    for (std::size_t k = 0; k + 1 < h.size(); ++k) {
        ++checked;
        if (h[k + 1] > mdp.gamma * h[k] + kContractionSlack) {
            c.fail(name + ": step " + std::to_string(k) + " residual " + fmt("%.17g", h[k + 1]) + " > " +
                   fmt("%.17g", mdp.gamma * h[k]));
            return;
        }
    }
}

Check contraction() {
    Check c;
    std::size_t checked = 0;
    std::size_t i = 0;
    for (const MdpInstance& mdp : oracle_instances()) check_contraction(c, mdp, 5000, "oracle#" + std::to_string(i++), checked);
    check_contraction(c, fidelity_instance(), 5000, "fidelity", checked);
    for (double gamma : {0.5, 0.9, 0.99, 0.999}) {
        check_contraction(c, gen_random({.n = 500, .m = 20, .nnz_per_row = 10, .gamma = gamma, .seed = 1}), 20000,
                          "random500(gamma=" + fmt("%g", gamma) + ")", checked);
    }
    if (c.ok) c.detail = std::to_string(checked) + " VI steps on " + std::to_string(i + 5) + " instances";
    return c;
}

Check discount_sensitivity() {
    Check c;
    auto total_inner = [&](double gamma, InnerSolverKind kind) {
        const MdpInstance mdp = gen_random({.n = 500, .m = 20, .nnz_per_row = 10, .gamma = gamma, .seed = 1});
        SolveOptions o;
        o.inner = kind;
        o.tol = 1e-8;
        o.max_inner = 100000;
        const SolveResult r = solve(mdp, o);
        c.require(r.status == SolveStatus::Converged,
                  std::string(to_string(kind)) + " at gamma " + fmt("%g", gamma) + " did not converge");
        return static_cast<double>(r.inner_iterations_total);
    };
    const double rich_lo = total_inner(0.9, InnerSolverKind::Richardson);
    const double rich_hi = total_inner(0.9999, InnerSolverKind::Richardson);
    const double gm_lo = total_inner(0.9, InnerSolverKind::Gmres);
    const double gm_hi = total_inner(0.9999, InnerSolverKind::Gmres);
    const std::string numbers = "richardson " + fmt("%.0f", rich_lo) + " -> " + fmt("%.0f", rich_hi) + " (x" +
                                fmt("%.1f", rich_hi / rich_lo) + "), gmres " + fmt("%.0f", gm_lo) + " -> " +
                                fmt("%.0f", gm_hi) + " (x" + fmt("%.2f", gm_hi / gm_lo) + ")";
    c.require(rich_hi >= 10.0 * rich_lo, "richardson growth below 10x: " + numbers);
    c.require(gm_hi <= 4.0 * gm_lo, "gmres growth above 4x: " + numbers);
    if (c.ok) c.detail = numbers;
    return c;
}

Check sis() {
    Check c;
    SisParams p;
    p.N = 2000;
    p.gamma = 0.99;
    const MdpInstance mdp = gen_sis(p);
    const ValidationReport v = validate(mdp);
    c.require(v.ok(), "validation: " + v.summary());
    double row_err = 0.0;
    for (std::size_t r = 0; r < mdp.transitions.rows; ++r) {
        double sum = 0.0;
        for (double x : mdp.transitions.row_values(r)) sum += x;
        row_err = std::max(row_err, std::abs(sum - 1.0));
    }
    c.require(row_err <= 1e-12, "row sum error " + fmt("%.3g", row_err));
    for (std::size_t a = 0; a < kSisActions; ++a) {
        const std::size_t row = p.N * kSisActions + a;
        c.require(mdp.transitions.row_nnz(row) == 1 && mdp.transitions.at(row, p.N) == 1.0, "state N not absorbing");
    }
    SolveOptions o;
    o.inner = InnerSolverKind::Gmres;
    o.alpha = 0.01;
    o.tol = 1e-7;
    const SolveResult r = solve(mdp, o);
    const double res = bellman_residual(mdp, r.V.values).inf_norm;
    c.require(r.status == SolveStatus::Converged, "status " + std::string(to_string(r.status)));
    c.require(res <= 1e-7, "final residual " + fmt("%.3g", res));
    c.require(r.wall_time < 60.0, "solve took " + fmt("%.1f", r.wall_time) + " s");
    if (c.ok)
        c.detail = "N=2000, " + std::to_string(r.outer_iterations) + " outer, residual " + fmt("%.3g", res) + ", " +
                   fmt("%.2f", r.wall_time) + " s";
    return c;
}

Check pendulum() {
    Check c;
    PendulumParams p;
    p.Ns = 51;
    p.Na = 51;
    p.gamma = 0.999;
    const MdpInstance mdp = gen_pendulum(p);
    const PendulumGrid grid(p);
    SolveOptions o;
    o.inner = InnerSolverKind::Tfqmr;
    o.alpha = 1e-3;
    o.tol = 1e-7;
    const SolveResult r = solve(mdp, o);
    c.require(r.status == SolveStatus::Converged, "status " + std::string(to_string(r.status)));
    const auto& V = r.V.values;
    const double vmax = oracle::max_abs(V);
    double asym = 0.0;
    for (std::size_t s = 0; s < mdp.n; ++s) asym = std::max(asym, std::abs(V[s] - V[grid.mirror_state(s)]));
    c.require(asym <= kSymmetryRelTol * vmax, "asymmetry " + fmt("%.3g", asym) + " vs max|V| " + fmt("%.3g", vmax));

    // grid points nearest (pi, 0); with an odd Ns two theta nodes are equally close
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < mdp.n; ++s) {
        const double dt = grid.theta_offset(s / p.Ns), dw = grid.omega(s % p.Ns);
        best_dist = std::min(best_dist, std::hypot(dt, dw));
    }
    const std::size_t argmin = static_cast<std::size_t>(std::min_element(V.begin(), V.end()) - V.begin());
    const double argmin_dist = std::hypot(grid.theta_offset(argmin / p.Ns), grid.omega(argmin % p.Ns));
    c.require(argmin_dist <= best_dist * (1.0 + 1e-12),
              "minimum at theta=" + fmt("%.4f", grid.theta(argmin / p.Ns)) + ", omega=" +
                  fmt("%.4f", grid.omega(argmin % p.Ns)));
    if (c.ok)
        c.detail = std::to_string(r.outer_iterations) + " outer, asymmetry/max|V| = " + fmt("%.3g", asym / vmax) +
                   ", min at theta=" + fmt("%.4f", grid.theta(argmin / p.Ns)) +
                   ", omega=" + fmt("%.4f", grid.omega(argmin % p.Ns));
    return c;
}

Check maze() {
    Check c;
    MazeParams p;
    p.H = 33;
    p.W = 33;
    p.obstacles = maze_wall_with_gap(33, 33, 16, 5);
    const MdpInstance mdp = gen_maze(p);
    SolveOptions o;
    o.inner = InnerSolverKind::Tfqmr;
    o.pc = PreconditionerKind::Jacobi;
    o.tol = 1e-8;
    const SolveResult r = solve(mdp, o);
    c.require(r.status == SolveStatus::Converged, "status " + std::string(to_string(r.status)));

    std::vector<bool> blocked(mdp.n, false);
    for (std::size_t cell : p.obstacles) blocked[cell] = true;
    const auto dist = oracle::bfs_distance(p.H, p.W, blocked, p.goal_cell());
    double worst = 0.0;
    std::size_t reachable = 0, obstacles = 0, unreachable = 0;
    for (std::size_t s = 0; s < mdp.n; ++s) {
        if (blocked[s] || dist[s] < 0) {
            (blocked[s] ? obstacles : unreachable) += 1;
            c.require(r.V.values[s] >= p.wall_cost, "cell " + std::to_string(s) + " not wall-dominated");
            continue;
        }
        ++reachable;
        const double expected = p.goal_cost * std::pow(p.gamma, static_cast<double>(dist[s])) / (1.0 - p.gamma);
        worst = std::max(worst, std::abs(r.V.values[s] - expected) / std::abs(expected));
    }
    c.require(worst <= kMazeRelTol, "worst relative error " + fmt("%.3g", worst));
    if (c.ok)
        c.detail = std::to_string(reachable) + " reachable cells, worst rel error " + fmt("%.3g", worst) + ", " +
                   std::to_string(obstacles) + " obstacles, " + std::to_string(unreachable) + " unreachable";
    return c;
}

Check amdahl() {
    Check c;
    std::vector<AmdahlSample> synthetic;
    for (std::size_t R = 1; R <= 48; ++R) synthetic.push_back({R, 100.0 / amdahl_speedup(0.95, double(R))});
    const AmdahlFit fit = fit_amdahl(synthetic);
    c.require(std::abs(fit.p - 0.95) <= 0.005, "fitted p " + fmt("%.5f", fit.p));
    c.require(fit.s_max >= 19.0 && fit.s_max <= 21.0, "s_max " + fmt("%.3f", fit.s_max));

    // measured curve, only up to the available cores
    const std::size_t cores = std::max(1u, std::thread::hardware_concurrency());
    const MdpInstance mdp = gen_random({.n = 20000, .m = 10, .nnz_per_row = 10, .gamma = 0.99, .seed = 5});
    std::vector<std::pair<std::size_t, double>> times;
    for (std::size_t R = 1; R <= std::min<std::size_t>(cores, 4); R *= 2) {
        SolveOptions o;
        o.worker_count = R;
        std::vector<double> t;
        for (int rep = 0; rep < 3; ++rep) t.push_back(solve(mdp, o).wall_time);
        std::sort(t.begin(), t.end());
        times.emplace_back(R, t[1]);
    }
    std::string curve;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double speedup = times[0].second / times[k].second;
        curve += (k ? ", " : "") + std::to_string(times[k].first) + ":" + fmt("%.2f", speedup);
        // timing noise allowance between adjacent worker counts
        if (k > 0) {
            c.require(times[k].second <= times[k - 1].second * 1.10, "measured speedup decreased: " + curve);
        }
    }
    if (c.ok)
        c.detail = "synthetic p=" + fmt("%.5f", fit.p) + ", s_max=" + fmt("%.2f", fit.s_max) + "; measured (" +
                   std::to_string(cores) + " cores) " + curve;
    return c;
}

Check parallel_determinism() {
    Check c;
    const MdpInstance mdp = fidelity_instance();
    double worst = 0.0;
    for (InnerSolverKind kind : kAllKinds) {
        SolveOptions o;
        o.inner = kind;
        o.max_inner = 100000;
        o.worker_count = 1;
        const SolveResult base = solve(mdp, o);
        for (std::size_t R : {1u, 2u, 4u}) {
            o.worker_count = R;
            const SolveResult a = solve(mdp, o);
            const SolveResult b = solve(mdp, o);
            const std::string tag = std::string(to_string(kind)) + ", R=" + std::to_string(R);
            const double err = oracle::max_abs_diff(a.V.values, base.V.values);
            worst = std::max(worst, err);
            c.require(err <= kDeterminismTol, "R-dependence " + fmt("%.3g", err) + " (" + tag + ")");
            c.require(a.V == b.V && a.pi == b.pi && a.residual_history == b.residual_history,
                      "rerun not bitwise identical (" + tag + ")");
        }
    }
    if (c.ok) c.detail = "4 kinds x R in {1,2,4}, worst difference " + fmt("%.3g", worst) + ", reruns bitwise";
    return c;
}

std::vector<std::uint8_t> file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Check file_format() {
    Check c;
    const fs::path dir = fs::temp_directory_path() / ("ipi_acceptance_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);

    SisParams sis;
    sis.N = 300;
    PendulumParams pend;
    pend.Ns = 21;
    MazeParams maze;
    maze.H = 33;
    maze.W = 33;
    maze.obstacles = maze_wall_with_gap(33, 33, 16, 5);
    const std::pair<const char*, MdpInstance> outputs[] = {
        {"random", gen_random({.n = 1000, .m = 8, .nnz_per_row = 12, .gamma = 0.9, .seed = 9})},
        {"sis", gen_sis(sis)},
        {"pendulum", gen_pendulum(pend)},
        {"maze", gen_maze(maze)},
        {"callbacks", build_from_callbacks(
                          50, 2, 0.9, [](std::size_t s, std::size_t a) { return double(s) - 0.5 * double(a); },
                          [](std::size_t s, std::size_t a) {
                              return TransitionRow{{s, (s + a + 1) % 50}, {0.25, 0.75}};
                          })},
    };
    for (const auto& [name, mdp] : outputs) {
        const fs::path g = dir / "cost.bin", t = dir / "transitions.bin";
        write_matrix(g, mdp.stage_cost);
        write_matrix(t, mdp.transitions);
        const DenseMatrix g2 = read_dense(g);
        const CsrMatrix t2 = read_csr(t);
        c.require(g2 == mdp.stage_cost && t2 == mdp.transitions, std::string(name) + ": round trip differs");
        write_matrix(dir / "again.bin", g2);
        c.require(file_bytes(dir / "again.bin") == file_bytes(g), std::string(name) + ": rewritten bytes differ");
        write_matrix(dir / "again.bin", t2);
        c.require(file_bytes(dir / "again.bin") == file_bytes(t), std::string(name) + ": rewritten bytes differ");
    }

    // corrupted copies of a valid CSR file
    const auto good = encode_matrix(outputs[0].second.transitions);
    auto set_u64 = [](std::vector<std::uint8_t> b, std::size_t at, std::uint64_t v) {
        for (int i = 0; i < 8; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
        return b;
    };
    auto set_byte = [](std::vector<std::uint8_t> b, std::size_t at, std::uint8_t v) {
        b[at] = v;
        return b;
    };
    const std::pair<const char*, std::vector<std::uint8_t>> fixtures[] = {
        {"bad magic", set_byte(good, 0, 'X')},
        {"unknown kind", set_byte(good, 8, 9)},
        {"truncated header", std::vector<std::uint8_t>(good.begin(), good.begin() + 17)},
        {"rows too large", set_u64(good, 9, good.size())},
        {"nnz too large", set_u64(good, 25, std::uint64_t{1} << 62)},
        {"overflowing rows", set_u64(good, 9, ~std::uint64_t{0})},
        {"truncated payload", std::vector<std::uint8_t>(good.begin(), good.end() - 1)},
    };
    std::size_t rejected = 0;
    for (const auto& [name, bytes] : fixtures) {
        const fs::path f = dir / "corrupt.bin";
        {
            std::ofstream out(f, std::ios::binary | std::ios::trunc);
            out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        }
        try {
            read_matrix(f);
            c.fail(std::string(name) + ": accepted");
        } catch (const FormatError&) {
            ++rejected;
        }
    }
    fs::remove_all(dir);
    if (c.ok)
        c.detail = std::to_string(std::size(outputs)) + " generator outputs round-tripped bitwise, " +
                   std::to_string(rejected) + " corrupted headers rejected";
    return c;
}

} // namespace

int main() {
    report("oracle_optimality", oracle_optimality);
    report("preset_fidelity", preset_fidelity);
    report("contraction", contraction);
    report("discount_sensitivity", discount_sensitivity);
    report("sis", sis);
    report("pendulum", pendulum);
    report("maze_closed_form", maze);
    report("amdahl", amdahl);
    report("parallel_determinism", parallel_determinism);
    report("file_format", file_format);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
