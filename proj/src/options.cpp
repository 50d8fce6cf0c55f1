#include "ipi/solver.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "ipi/errors.hpp"

namespace ipi {

void validate_options(const SolveOptions& opts) {
    if (!(opts.tol > 0.0) || !std::isfinite(opts.tol)) {
        throw ValidationError("tol (-atol_pi) must be a positive finite number");
    }
    if (!(opts.alpha > 0.0 && opts.alpha < 1.0)) {
        throw ValidationError("alpha (-alpha) must lie in (0,1)");
    }
    if (opts.max_outer < 1) {
        throw ValidationError("max_outer (-max_iter_pi) must be at least 1");
    }
    if (opts.max_inner < 1) {
        throw ValidationError("max_inner (-max_iter_ksp) must be at least 1");
    }
    if (opts.ksp_max_it && *opts.ksp_max_it < 1) {
        throw ValidationError("-ksp_max_it must be at least 1");
    }
    if (!(opts.richardson_scale > 0.0) || !std::isfinite(opts.richardson_scale)) {
        throw ValidationError("-ksp_richardson_scale must be a positive finite number");
    }
    if (!(opts.sor_omega > 0.0 && opts.sor_omega < 2.0)) {
        throw ValidationError("-pc_sor_omega must lie in (0,2)");
    }
    if (opts.gmres_restart < 1) {
        throw ValidationError("gmres restart length must be at least 1");
    }
    if (opts.worker_count < 1) {
        throw ValidationError("worker count must be at least 1");
    }
    if (opts.stall_window < 1) {
        throw ValidationError("stall window must be at least 1");
    }
    if (opts.pc == PreconditionerKind::Exact && opts.inner != InnerSolverKind::Richardson) {
        throw ValidationError("-pc_type svd is only supported with -ksp_type richardson");
    }
}

namespace {

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
    std::replace(out.begin(), out.end(), '-', '_');
    return out;
}

double parse_real(std::string_view name, std::string_view text) {
    const std::string copy(text);
    try {
        std::size_t used = 0;
        const double value = std::stod(copy, &used);
        if (used == copy.size()) {
            return value;
        }
    } catch (const std::exception&) {
    }
    throw ValidationError("option " + std::string(name) + ": cannot parse '" + copy + "' as a real number");
}

std::size_t parse_count(std::string_view name, std::string_view text) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ValidationError("option " + std::string(name) + ": cannot parse '" + std::string(text) +
                              "' as a non-negative integer");
    }
    return value;
}

Mode parse_mode(std::string_view text) {
    const std::string u = upper(text);
    if (u == "MIN" || u == "MINCOST") return Mode::Min;
    if (u == "MAX" || u == "MAXREWARD") return Mode::Max;
    throw ValidationError("unknown mode '" + std::string(text) + "'; supported: min, max");
}

} // namespace

SolveOptions preset(PresetKind kind, double param, const SolveOptions& base) {
    SolveOptions o = base;
    o.inner = InnerSolverKind::Richardson;
    o.pc = PreconditionerKind::None;
    o.richardson_scale = 1.0;
    o.ksp_max_it = 1;
    switch (kind) {
    case PresetKind::VI:
        break;
    case PresetKind::PI:
        o.pc = PreconditionerKind::Exact;
        break;
    case PresetKind::OPI:
        if (!(param >= 1.0) || param != std::floor(param)) {
            throw ValidationError("OPI(W) needs an integer W >= 1");
        }
        o.ksp_max_it = static_cast<std::size_t>(param);
        break;
    case PresetKind::BetaVI:
        if (!(param > 0.0 && param <= 1.0)) {
            throw ValidationError("BETA_VI(beta) needs beta in (0,1]");
        }
        o.richardson_scale = param;
        break;
    case PresetKind::GsVI:
        o.pc = PreconditionerKind::SorForward;
        o.sor_omega = 1.0;
        break;
    case PresetKind::JVI:
        o.pc = PreconditionerKind::Jacobi;
        break;
    }
    return o;
}

SolveOptions preset(std::string_view name, const SolveOptions& base) {
    std::string u = upper(name);
    std::optional<double> param;
    if (const auto open = u.find('('); open != std::string::npos) {
        if (u.back() != ')') {
            throw ValidationError("malformed preset '" + std::string(name) + "'");
        }
        param = parse_real("preset", std::string_view(u).substr(open + 1, u.size() - open - 2));
        u.resize(open);
    }
    struct Entry {
        const char* name;
        PresetKind kind;
        bool needs_param;
    };
    static constexpr Entry table[] = {
        {"VI", PresetKind::VI, false},         {"PI", PresetKind::PI, false},
        {"OPI", PresetKind::OPI, true},        {"BETA_VI", PresetKind::BetaVI, true},
        {"GS_VI", PresetKind::GsVI, false},    {"J_VI", PresetKind::JVI, false},
    };
    for (const Entry& e : table) {
        if (u == e.name) {
            if (e.needs_param != param.has_value()) {
                throw ValidationError(std::string("preset ") + e.name +
                                      (e.needs_param ? " needs a parameter, e.g. OPI(5)" : " takes no parameter"));
            }
            return preset(e.kind, param.value_or(0.0), base);
        }
    }
    throw ValidationError("unknown preset '" + std::string(name) +
                          "'; supported: VI, PI, OPI(W), BETA_VI(beta), GS_VI, J_VI");
}

std::vector<PresetDescription> describe_presets() {
    return {
        {"VI", "-ksp_type richardson -pc_type none -ksp_max_it 1"},
        {"PI", "-ksp_type richardson -pc_type svd -ksp_max_it 1"},
        {"OPI(W)", "-ksp_type richardson -pc_type none -ksp_max_it W"},
        {"BETA_VI(beta)", "-ksp_type richardson -pc_type none -ksp_max_it 1 -ksp_richardson_scale beta"},
        {"GS_VI", "-ksp_type richardson -pc_type sor -pc_sor_forward -ksp_max_it 1"},
        {"J_VI", "-ksp_type richardson -pc_type jacobi -ksp_max_it 1"},
    };
}

std::vector<std::string> option_names() {
    return {"-max_iter_pi",   "-max_iter_ksp", "-atol_pi",
            "-alpha",         "-ksp_type",     "-pc_type",
            "-ksp_max_it",    "-ksp_richardson_scale", "-pc_sor_forward",
            "-pc_sor_omega",  "-mode"};
}

bool is_flag_option(std::string_view name) { return name == "-pc_sor_forward"; }

void set_option(SolveOptions& opts, std::string_view name, std::string_view value) {
    if (name == "-max_iter_pi") {
        opts.max_outer = parse_count(name, value);
    } else if (name == "-max_iter_ksp") {
        opts.max_inner = parse_count(name, value);
    } else if (name == "-atol_pi") {
        opts.tol = parse_real(name, value);
    } else if (name == "-alpha") {
        opts.alpha = parse_real(name, value);
    } else if (name == "-ksp_type") {
        opts.inner = parse_inner_solver(value);
    } else if (name == "-pc_type") {
        opts.pc = parse_preconditioner(value);
    } else if (name == "-ksp_max_it") {
        opts.ksp_max_it = parse_count(name, value);
    } else if (name == "-ksp_richardson_scale") {
        opts.richardson_scale = parse_real(name, value);
    } else if (name == "-pc_sor_forward") {
        if (!value.empty()) {
            throw ValidationError("-pc_sor_forward is a flag and takes no value");
        }
        opts.pc = PreconditionerKind::SorForward;
    } else if (name == "-pc_sor_omega") {
        opts.sor_omega = parse_real(name, value);
    } else if (name == "-mode") {
        opts.mode = parse_mode(value);
    } else {
        std::string known;
        for (const auto& n : option_names()) {
            known += (known.empty() ? "" : ", ") + n;
        }
        throw ValidationError("unknown option '" + std::string(name) + "'; known: " + known);
    }
}

} // namespace ipi
