#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "ipi/amdahl.hpp"
#include "ipi/errors.hpp"
#include "ipi/solver.hpp"

namespace ipi::cli {

namespace fs = std::filesystem;

namespace {

std::vector<std::size_t> parse_list(const std::string& text, const char* what) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) {
            continue;
        }
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(item, &used);
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw ValidationError(std::string("cannot parse ") + what + " entry '" + item + "'");
        }
    }
    return out;
}

Mode parse_mode_flag(const std::string& text) {
    SolveOptions tmp;
    set_option(tmp, "-mode", text);
    return *tmp.mode;
}

void add_problem_flags(CLI::App& app, ProblemConfig& problem_cfg) {
    app.add_option("--n", problem_cfg.random.n, "random: state count");
    app.add_option("--m", problem_cfg.random.m, "random: action count");
    app.add_option("--nnz", problem_cfg.random.nnz_per_row, "random: successors per state-action pair");
    app.add_option("--population", problem_cfg.sis.N, "sis: population size N");
    app.add_option("--ns", problem_cfg.pendulum.Ns, "pendulum: grid points per state dimension");
    app.add_option("--na", problem_cfg.pendulum.Na, "pendulum: torque grid points (odd)");
    app.add_option("--height", problem_cfg.maze.H, "maze: rows");
    app.add_option("--width", problem_cfg.maze.W, "maze: columns");
    app.add_option_function<std::string>(
        "--obstacles", [&problem_cfg](const std::string& v) { problem_cfg.maze.obstacles = parse_list(v, "obstacle"); },
        "maze: comma-separated obstacle cells (row-major)");
    app.add_option("--wall-col", problem_cfg.wall_col, "maze: column of a vertical wall");
    app.add_option("--gap-row", problem_cfg.gap_row, "maze: row left open in the wall");
    app.add_option("--goal", problem_cfg.maze.goal, "maze: goal cell (default bottom-right)");
    app.add_option("--wall-cost", problem_cfg.maze.wall_cost, "maze: cost of blocked moves");
    app.add_option("--goal-cost", problem_cfg.maze.goal_cost, "maze: cost per step at the goal");
    app.add_option("--discount", problem_cfg.discount, "discount factor in (0,1)");
}

void write_meta(const fs::path& path, const Problem& problem, const std::string& family) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", problem.mdp.gamma);
    out << "family=" << family << "\nn=" << problem.mdp.n << "\nm=" << problem.mdp.m << "\ndiscount=" << buf
        << "\nmode=" << (problem.mdp.mode == Mode::Min ? "min" : "max") << '\n';
    if (problem.grid) {
        out << "grid_rows=" << problem.grid->rows << "\ngrid_cols=" << problem.grid->cols << '\n';
    }
}

std::map<std::string, std::string> read_meta(const fs::path& path) {
    std::map<std::string, std::string> kv;
    std::ifstream in(path);
    if (!in) {
        return kv;
    }
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) {
            kv[line.substr(0, eq)] = line.substr(eq + 1);
        }
    }
    return kv;
}

/// Sources for `solve`: generator, input directory, or explicit files.
struct SolveInputs {
    ProblemConfig problem_cfg;
    std::string input_dir;
    std::string cost_file;
    std::string transitions_file;
    std::string mode;
    std::string preset;
    std::size_t workers = 1;
    std::optional<std::uint64_t> seed;
    std::string output_dir = ".";
    std::map<std::string, std::string> table_options;
    bool sor_forward = false;
};

Problem load_problem(SolveInputs& in, const Executor& exec) {
    const int sources = (!in.problem_cfg.family.empty()) + (!in.input_dir.empty()) +
                        (!in.cost_file.empty() || !in.transitions_file.empty());
    if (sources != 1) {
        throw ValidationError("choose exactly one input: --problem, --input-dir, or --cost with --transitions");
    }
    if (in.seed) {
        in.problem_cfg.random.seed = *in.seed;
    }
    if (!in.problem_cfg.family.empty()) {
        return make_problem(in.problem_cfg, exec);
    }
    Problem problem;
    std::map<std::string, std::string> meta;
    if (!in.input_dir.empty()) {
        in.cost_file = (fs::path(in.input_dir) / "cost.bin").string();
        in.transitions_file = (fs::path(in.input_dir) / "transitions.bin").string();
        meta = read_meta(fs::path(in.input_dir) / "meta.txt");
    } else if (in.cost_file.empty() || in.transitions_file.empty()) {
        throw ValidationError("--cost and --transitions must be given together");
    }
    MdpInstance& mdp = problem.mdp;
    mdp.stage_cost = read_dense(in.cost_file);
    mdp.transitions = read_csr(in.transitions_file);
    mdp.n = mdp.stage_cost.rows;
    mdp.m = mdp.stage_cost.cols;
    if (in.problem_cfg.discount) {
        mdp.gamma = *in.problem_cfg.discount;
    } else if (meta.count("discount")) {
        mdp.gamma = std::stod(meta["discount"]);
    } else {
        throw ValidationError("--discount is required when solving from files");
    }
    if (meta.count("mode")) {
        mdp.mode = parse_mode_flag(meta["mode"]);
    }
    if (meta.count("grid_rows") && meta.count("grid_cols")) {
        problem.grid = GridMetadata{meta["family"], std::stoul(meta["grid_rows"]), std::stoul(meta["grid_cols"])};
    }
    return problem;
}

SolveOptions build_options(const SolveInputs& in) {
    SolveOptions opts;
    if (!in.preset.empty()) {
        opts = preset(in.preset, opts);
    }
    for (const auto& [name, value] : in.table_options) {
        set_option(opts, "-" + name, value);
    }
    if (in.sor_forward) {
        set_option(opts, "-pc_sor_forward", "");
    }
    if (!in.mode.empty()) {
        opts.mode = parse_mode_flag(in.mode);
    }
    opts.worker_count = in.workers;
    return opts;
}

void add_solve_flags(CLI::App& app, SolveInputs& in) {
    app.add_option("--problem", in.problem_cfg.family, "generator: random, sis, pendulum, maze")
        ->check(CLI::IsMember({"random", "sis", "pendulum", "maze"}));
    add_problem_flags(app, in.problem_cfg);
    app.add_option("--input-dir", in.input_dir, "directory written by `generate`");
    app.add_option("--cost", in.cost_file, "stage-cost matrix file");
    app.add_option("--transitions", in.transitions_file, "transition tensor file");
    app.add_option("--mode", in.mode, "min or max")->check(CLI::IsMember({"min", "max", "MINCOST", "MAXREWARD"}));
    app.add_option("--workers", in.workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", in.seed, "random generator seed");
    app.add_option("--preset", in.preset, "VI, PI, OPI(W), BETA_VI(beta), GS_VI, J_VI");
    for (const auto& name : option_names()) {
        if (is_flag_option(name) || name == "-mode") {
            continue;
        }
        const std::string key = name.substr(1);
        app.add_option_function<std::string>(
            "-" + name, [&in, key](const std::string& v) { in.table_options[key] = v; }, "solver option");
    }
    app.add_flag("--pc_sor_forward", in.sor_forward, "forward SOR preconditioner");
}

int do_solve(SolveInputs& in, std::ostream& out) {
    const SolveOptions opts = build_options(in);
    validate_options(opts);
    Executor gen_exec(in.workers);
    const Problem problem = load_problem(in, gen_exec);
    const SolveResult result = solve(problem.mdp, opts);

    const fs::path dir(in.output_dir);
    fs::create_directories(dir);
    write_vector_csv(dir / "value.csv", "value", result.V.values);
    DenseMatrix column(result.V.size(), 1);
    column.data = result.V.values;
    write_matrix(dir / "value.bin", column);
    write_policy_csv(dir / "policy.csv", result.pi);
    write_residuals_csv(dir / "residuals.csv", result);
    const std::string stats = stats_report(result);
    {
        std::ofstream s(dir / "stats.txt");
        s << stats;
    }
    if (problem.grid) {
        export_grid_artifacts(result, problem.grid, dir / "grid");
    }
    out << stats;
    return result.status == SolveStatus::Converged ? kExitConverged : kExitNotConverged;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size() / 2;
    return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

} // namespace

Problem make_problem(const ProblemConfig& problem_cfg, const Executor& exec) {
    Problem problem;
    if (problem_cfg.family == "random") {
        RandomParams p = problem_cfg.random;
        if (problem_cfg.discount) p.gamma = *problem_cfg.discount;
        problem.mdp = gen_random(p, exec);
    } else if (problem_cfg.family == "sis") {
        SisParams p = problem_cfg.sis;
        if (problem_cfg.discount) p.gamma = *problem_cfg.discount;
        problem.mdp = gen_sis(p, exec);
    } else if (problem_cfg.family == "pendulum") {
        PendulumParams p = problem_cfg.pendulum;
        if (problem_cfg.discount) p.gamma = *problem_cfg.discount;
        problem.mdp = gen_pendulum(p, exec);
        problem.grid = GridMetadata{"pendulum", p.Ns, p.Ns};
    } else if (problem_cfg.family == "maze") {
        MazeParams p = problem_cfg.maze;
        if (problem_cfg.discount) p.gamma = *problem_cfg.discount;
        if (problem_cfg.wall_col.has_value() != problem_cfg.gap_row.has_value()) {
            throw ValidationError("--wall-col and --gap-row must be given together");
        }
        if (problem_cfg.wall_col) {
            const auto wall = maze_wall_with_gap(p.H, p.W, *problem_cfg.wall_col, *problem_cfg.gap_row);
            p.obstacles.insert(p.obstacles.end(), wall.begin(), wall.end());
        }
        problem.mdp = gen_maze(p);
        problem.grid = GridMetadata{"maze", p.H, p.W};
    } else {
        throw ValidationError("unknown problem family '" + problem_cfg.family + "'; supported: random, sis, pendulum, maze");
    }
    return problem;
}

std::vector<std::string> normalize_args(const std::vector<std::string>& args) {
    const auto names = option_names();
    std::vector<std::string> out;
    out.reserve(args.size());
    for (const auto& a : args) {
        const auto eq = a.find('=');
        const std::string head = a.substr(0, eq);
        if (std::find(names.begin(), names.end(), head) != names.end()) {
            // -mode is spelled --mode on the command line
            out.push_back("-" + a);
        } else {
            out.push_back(a);
        }
    }
    return out;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Inexact policy iteration solver for discounted MDPs", "ipi"};
    app.require_subcommand(1);

    SolveInputs solve_in;
    auto* solve_cmd = app.add_subcommand("solve", "solve an MDP from files or a generator");
    add_solve_flags(*solve_cmd, solve_in);
    solve_cmd->add_option("--output-dir", solve_in.output_dir, "where results are written");

    ProblemConfig gen_problem;
    std::string gen_dir = ".";
    std::optional<std::uint64_t> gen_seed;
    auto* gen_cmd = app.add_subcommand("generate", "write a benchmark instance to files");
    gen_cmd->add_option("family", gen_problem.family, "random, sis, pendulum, maze")
        ->required()
        ->check(CLI::IsMember({"random", "sis", "pendulum", "maze"}));
    add_problem_flags(*gen_cmd, gen_problem);
    gen_cmd->add_option("--seed", gen_seed, "random generator seed");
    gen_cmd->add_option("--output-dir", gen_dir, "destination directory");

    SolveInputs bench_in;
    std::string workers_list = "1,2,4";
    std::size_t repeats = 3;
    std::string bench_out;
    auto* bench_cmd = app.add_subcommand("bench-amdahl", "time a solve across worker counts and fit Amdahl's law");
    add_solve_flags(*bench_cmd, bench_in);
    bench_cmd->add_option("--workers-list", workers_list, "comma-separated worker counts (must include 1)");
    bench_cmd->add_option("--repeats", repeats, "runs per worker count (median is used)")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--output-dir", bench_out, "write amdahl.csv here");

    auto* presets_cmd = app.add_subcommand("presets", "list option sets recovering classical DP methods");

    std::vector<std::string> args = normalize_args(raw_args);
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*presets_cmd) {
            for (const auto& p : describe_presets()) {
                out << p.name << ": " << p.options << '\n';
            }
            return kExitConverged;
        }
        if (*gen_cmd) {
            if (gen_seed) {
                gen_problem.random.seed = *gen_seed;
            }
            const Problem problem = make_problem(gen_problem);
            const fs::path dir(gen_dir);
            fs::create_directories(dir);
            write_matrix(dir / "cost.bin", problem.mdp.stage_cost);
            write_matrix(dir / "transitions.bin", problem.mdp.transitions);
            write_meta(dir / "meta.txt", problem, gen_problem.family);
            out << "wrote " << problem.mdp.n << " states x " << problem.mdp.m << " actions to " << dir.string()
                << '\n';
            return kExitConverged;
        }
        if (*solve_cmd) {
            return do_solve(solve_in, out);
        }
        if (*bench_cmd) {
            const auto counts = parse_list(workers_list, "worker count");
            if (std::find(counts.begin(), counts.end(), std::size_t{1}) == counts.end()) {
                throw ValidationError("--workers-list must include 1 (the speedup baseline)");
            }
            SolveOptions opts = build_options(bench_in);
            const Problem problem = load_problem(bench_in, Executor::serial());
            std::vector<AmdahlSample> samples;
            std::vector<std::pair<std::size_t, double>> medians;
            for (std::size_t r : counts) {
                opts.worker_count = r;
                std::vector<double> times;
                for (std::size_t i = 0; i < repeats; ++i) {
                    times.push_back(solve(problem.mdp, opts).wall_time);
                }
                const double t = median(times);
                medians.emplace_back(r, t);
                samples.push_back({r, t});
            }
            const AmdahlFit fit = fit_amdahl(samples);
            std::ostringstream table;
            table << "workers,median_runtime_s,speedup\n";
            const double t1 = std::find_if(medians.begin(), medians.end(), [](const auto& x) {
                                  return x.first == 1;
                              })->second;
            for (const auto& [r, t] : medians) {
                table << r << ',' << t << ',' << t1 / t << '\n';
            }
            out << table.str() << "p=" << fit.p << "\ns_max=" << fit.s_max << '\n';
            if (!bench_out.empty()) {
                fs::create_directories(bench_out);
                std::ofstream f(fs::path(bench_out) / "amdahl.csv");
                f << table.str();
                f << "# p=" << fit.p << " s_max=" << fit.s_max << '\n';
            }
            return kExitConverged;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

} // namespace ipi::cli
