#include "ipi/inner_solver.hpp"

#include "ipi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ipi {

std::string_view to_string(InnerSolverKind kind) {
    switch (kind) {
    case InnerSolverKind::Richardson: return "richardson";
    case InnerSolverKind::Gmres: return "gmres";
    case InnerSolverKind::Bicgstab: return "bicgstab";
    case InnerSolverKind::Tfqmr: return "tfqmr";
    }
    return "?";
}

InnerSolverKind parse_inner_solver(std::string_view name) {
    if (name == "richardson") return InnerSolverKind::Richardson;
    if (name == "gmres") return InnerSolverKind::Gmres;
    if (name == "bicgstab" || name == "bcgs") return InnerSolverKind::Bicgstab;
    if (name == "tfqmr") return InnerSolverKind::Tfqmr;
    throw ValidationError("unknown inner solver '" + std::string(name) +
                          "'; supported: richardson, gmres, bicgstab, tfqmr");
}

namespace {

// Relative size below which a recurrence denominator counts as a breakdown.
constexpr double kBreakdownTolerance = 1e-20;

using Vec = std::vector<double>;

/// Shared state of one inner solve: the operator, the left preconditioner and the
/// stopping rule.
class InnerContext {
public:
    InnerContext(const PolicyOperator& op, const Preconditioner& pc, std::span<const double> b,
                 const InnerSolveConfig& config, const Executor& exec)
        : op_(op), pc_(pc), b_(b), config_(config), exec_(exec), n_(b.size()), scratch_(n_) {
        target_ = std::max(config.target_2norm, kTargetFloor * std::max(1.0, norm2(b, exec)));
    }

    std::size_t n() const { return n_; }
    double target() const { return target_; }
    bool fixed() const { return config_.fixed_iterations; }
    std::size_t max_it() const { return config_.max_it; }
    bool preconditioned() const { return pc_.kind() != PreconditionerKind::None; }
    const Executor& exec() const { return exec_; }
    const PolicyOperator& op() const { return op_; }
    const Preconditioner& pc() const { return pc_; }
    std::span<const double> b() const { return b_; }

    /// Reached the target (never, with a fixed iteration count).
    bool done(double residual) const { return !fixed() && residual <= target_; }

    /// r = b - A x; returns ||r||_2
    double true_residual(std::span<const double> x, std::span<double> r) const {
        op_.apply(x, r, exec_);
        for (std::size_t i = 0; i < n_; ++i) {
            r[i] = b_[i] - r[i];
        }
        return norm2(r, exec_);
    }

    double true_residual(std::span<const double> x) { return true_residual(x, scratch_); }

    /// y = D A x
    void apply_preconditioned(std::span<const double> x, std::span<double> y) {
        if (!preconditioned()) {
            op_.apply(x, y, exec_);
            return;
        }
        op_.apply(x, scratch_, exec_);
        pc_.apply(scratch_, y);
    }

    /// y = D r
    void precondition(std::span<const double> r, std::span<double> y) const { pc_.apply(r, y); }

private:
    const PolicyOperator& op_;
    const Preconditioner& pc_;
    std::span<const double> b_;
    const InnerSolveConfig& config_;
    const Executor& exec_;
    std::size_t n_;
    Vec scratch_;
    double target_;
};

/// Smallest-residual iterate seen so far. Non-monotone methods return it instead of
/// a worse final iterate, so the reported residual never grows with max_it.
class BestIterate {
public:
    BestIterate(std::span<const double> x, double residual) : x_(x.begin(), x.end()), residual_(residual) {}

    void offer(std::span<const double> x, double residual) {
        if (residual < residual_) {
            std::copy(x.begin(), x.end(), x_.begin());
            residual_ = residual;
        }
    }

    void restore_if_better(std::span<double> theta, InnerSolveReport& rep) const {
        if (residual_ < rep.final_linear_residual_2norm) {
            std::copy(x_.begin(), x_.end(), theta.begin());
            rep.final_linear_residual_2norm = residual_;
        }
    }

private:
    Vec x_;
    double residual_;
};

InnerSolveReport richardson(InnerContext& ctx, std::span<double> theta, double beta) {
    const std::size_t n = ctx.n();
    InnerSolveReport rep;
    Vec next(n);
    Vec r(n);
    if (!ctx.preconditioned() && beta == 1.0) {
        // theta_{i+1} = theta_i + (b - A theta_i) = T_pi theta_i exactly
        for (;;) {
            ctx.op().apply_affine(ctx.b(), theta, next, ctx.exec());
            for (std::size_t i = 0; i < n; ++i) {
                r[i] = next[i] - theta[i];
            }
            const double rn = norm2(r, ctx.exec());
            rep.final_linear_residual_2norm = rn;
            if (ctx.done(rn) || rep.iterations >= ctx.max_it()) {
                break;
            }
            std::copy(next.begin(), next.end(), theta.begin());
            ++rep.iterations;
        }
    } else {
        Vec z(n);
        for (;;) {
            const double rn = ctx.true_residual(theta, r);
            rep.final_linear_residual_2norm = rn;
            if (ctx.done(rn) || rep.iterations >= ctx.max_it()) {
                break;
            }
            ctx.precondition(r, z);
            axpy(beta, z, theta);
            ++rep.iterations;
        }
    }
    rep.converged = rep.final_linear_residual_2norm <= ctx.target();
    return rep;
}

/// Solves the k x k upper-triangular system held in the first k columns of h.
Vec back_substitute(const std::vector<Vec>& h, const Vec& g, std::size_t k) {
    Vec y(k);
    for (std::size_t i = k; i-- > 0;) {
        double sum = g[i];
        for (std::size_t j = i + 1; j < k; ++j) {
            sum -= h[i][j] * y[j];
        }
        y[i] = sum / h[i][i];
    }
    return y;
}

InnerSolveReport gmres(InnerContext& ctx, std::span<double> theta, std::size_t restart) {
    const std::size_t n = ctx.n();
    const auto& exec = ctx.exec();
    InnerSolveReport rep;
    restart = std::max<std::size_t>(restart, 1);

    Vec r(n);
    Vec w(n);
    Vec trial(n);
    std::vector<Vec> basis;
    std::vector<Vec> h(restart + 1, Vec(restart, 0.0));
    Vec cs(restart), sn(restart), g(restart + 1);

    double rn = ctx.true_residual(theta, r);
    rep.final_linear_residual_2norm = rn;
    if (ctx.done(rn) || rn == 0.0) {
        rep.converged = rn <= ctx.target();
        return rep;
    }

    bool converged = false;
    while (rep.iterations < ctx.max_it() && !converged) {
        if (basis.empty()) {
            basis.assign(1, Vec(n));
        }
        ctx.precondition(r, basis[0]);
        const double beta = norm2(basis[0], exec);
        if (beta == 0.0) {
            break;
        }
        for (double& x : basis[0]) {
            x /= beta;
        }
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;

        std::size_t k = 0;
        bool happy = false;
        double estimate = beta;
        for (std::size_t j = 0; j < restart && rep.iterations < ctx.max_it(); ++j) {
            ctx.apply_preconditioned(basis[j], w);
            for (std::size_t i = 0; i <= j; ++i) {
                const double hij = dot(w, basis[i], exec);
                h[i][j] = hij;
                axpy(-hij, basis[i], w);
            }
            const double hnext = norm2(w, exec);
            for (std::size_t i = 0; i < j; ++i) {
                const double t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            const double denom = std::hypot(h[j][j], hnext);
            cs[j] = h[j][j] / denom;
            sn[j] = hnext / denom;
            h[j][j] = denom;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            k = j + 1;
            ++rep.iterations;
            estimate = std::abs(g[j + 1]);
            happy = hnext <= 1e-14 * beta;

            if (!ctx.preconditioned()) {
                if (ctx.done(estimate)) {
                    converged = true;
                }
            } else {
                // preconditioned recurrence tracks ||D r||; test the true residual
                const Vec y = back_substitute(h, g, k);
                std::copy(theta.begin(), theta.end(), trial.begin());
                for (std::size_t i = 0; i < k; ++i) {
                    axpy(y[i], basis[i], trial);
                }
                estimate = ctx.true_residual(trial);
                converged = ctx.done(estimate);
            }
            if (converged || happy) {
                break;
            }
            if (basis.size() < j + 2) {
                basis.emplace_back(n);
            }
            for (std::size_t i = 0; i < n; ++i) {
                basis[j + 1][i] = w[i] / hnext;
            }
        }

        const Vec y = back_substitute(h, g, k);
        for (std::size_t i = 0; i < k; ++i) {
            axpy(y[i], basis[i], theta);
        }
        if (converged) {
            rep.final_linear_residual_2norm = estimate;
            break;
        }
        rn = ctx.true_residual(theta, r);
        rep.final_linear_residual_2norm = rn;
        if (ctx.done(rn)) {
            converged = true;
            break;
        }
        if (happy && ctx.fixed()) {
            break; // Krylov space exhausted: theta is exact up to rounding
        }
    }
    rep.converged = rep.final_linear_residual_2norm <= ctx.target();
    return rep;
}

bool tiny(double value, double scale) { return std::abs(value) <= kBreakdownTolerance * scale || value == 0.0; }

InnerSolveReport bicgstab(InnerContext& ctx, std::span<double> theta) {
    const std::size_t n = ctx.n();
    const auto& exec = ctx.exec();
    InnerSolveReport rep;

    Vec r(n), r_hat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), trial(n), true_r(n);
    double rn = ctx.true_residual(theta, true_r);
    rep.final_linear_residual_2norm = rn;
    if (ctx.done(rn) || rn == 0.0) {
        rep.converged = rn <= ctx.target();
        return rep;
    }
    BestIterate best(theta, rn);
    ctx.precondition(true_r, r);
    r_hat = r;
    const double r_hat_norm = norm2(r_hat, exec);
    double rho_old = 1.0, alpha = 1.0, omega = 1.0;

    // residual used for stopping: recurrence when unpreconditioned, true otherwise
    auto residual_of = [&](std::span<const double> x, std::span<const double> recurrence) {
        return ctx.preconditioned() ? ctx.true_residual(x) : norm2(recurrence, exec);
    };

    while (rep.iterations < ctx.max_it()) {
        const double rho = dot(r_hat, r, exec);
        if (tiny(rho, r_hat_norm * norm2(r, exec))) {
            rep.breakdown = true;
            break;
        }
        if (rep.iterations == 0) {
            p = r;
        } else {
            const double beta = (rho / rho_old) * (alpha / omega);
            for (std::size_t i = 0; i < n; ++i) {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
        }
        ctx.apply_preconditioned(p, v);
        const double denom = dot(r_hat, v, exec);
        if (tiny(denom, r_hat_norm * norm2(v, exec))) {
            rep.breakdown = true;
            break;
        }
        alpha = rho / denom;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = r[i] - alpha * v[i];
        }
        ++rep.iterations;

        std::copy(theta.begin(), theta.end(), trial.begin());
        axpy(alpha, p, trial);
        const double half = residual_of(trial, s);
        best.offer(trial, half);
        if (ctx.done(half) || half == 0.0) {
            std::copy(trial.begin(), trial.end(), theta.begin());
            rep.final_linear_residual_2norm = half;
            break;
        }

        ctx.apply_preconditioned(s, t);
        const double tt = dot(t, t, exec);
        if (tt == 0.0) {
            std::copy(trial.begin(), trial.end(), theta.begin());
            rep.final_linear_residual_2norm = half;
            rep.breakdown = true;
            break;
        }
        omega = dot(t, s, exec) / tt;
        std::copy(trial.begin(), trial.end(), theta.begin());
        axpy(omega, s, theta);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = s[i] - omega * t[i];
        }
        rn = residual_of(theta, r);
        rep.final_linear_residual_2norm = rn;
        best.offer(theta, rn);
        if (ctx.done(rn) || rn == 0.0) {
            break;
        }
        if (tiny(omega, 1.0)) {
            rep.breakdown = true;
            break;
        }
        rho_old = rho;
    }
    if (rep.breakdown) {
        rep.final_linear_residual_2norm = ctx.true_residual(theta);
    }
    best.restore_if_better(theta, rep);
    rep.converged = rep.final_linear_residual_2norm <= ctx.target();
    return rep;
}

InnerSolveReport tfqmr(InnerContext& ctx, std::span<double> theta) {
    const std::size_t n = ctx.n();
    const auto& exec = ctx.exec();
    InnerSolveReport rep;

    Vec true_r(n);
    double rn = ctx.true_residual(theta, true_r);
    rep.final_linear_residual_2norm = rn;
    if (ctx.done(rn) || rn == 0.0) {
        rep.converged = rn <= ctx.target();
        return rep;
    }

    Vec r0(n);
    ctx.precondition(true_r, r0);
    BestIterate best(theta, rn);
    // r0 doubles as the shadow vector; `res` tracks D(b - A theta) by recurrence
    Vec w = r0, u_even = r0, u_odd(n), v(n), au_even(n), au_odd(n), d(n, 0.0), ad(n, 0.0), res = r0;
    ctx.apply_preconditioned(u_even, v);
    au_even = v;
    const Vec& r_tilde = r0;
    const double r_tilde_norm = norm2(r_tilde, exec);
    double tau = norm2(r0, exec);
    double theta_q = 0.0, eta = 0.0;
    double rho = dot(r_tilde, r0, exec);

    bool stop = false;
    while (rep.iterations < ctx.max_it() && !stop) {
        const double sigma = dot(r_tilde, v, exec);
        if (tiny(sigma, r_tilde_norm * norm2(v, exec))) {
            rep.breakdown = true;
            break;
        }
        const double alpha = rho / sigma;
        for (std::size_t i = 0; i < n; ++i) {
            u_odd[i] = u_even[i] - alpha * v[i];
        }
        ++rep.iterations;

        for (int half = 0; half < 2; ++half) {
            const Vec& u = half == 0 ? u_even : u_odd;
            if (half == 1) {
                ctx.apply_preconditioned(u_odd, au_odd);
            }
            const Vec& au = half == 0 ? au_even : au_odd;
            axpy(-alpha, au, w);
            const double coef = theta_q * theta_q * eta / alpha;
            for (std::size_t i = 0; i < n; ++i) {
                d[i] = u[i] + coef * d[i];
                ad[i] = au[i] + coef * ad[i];
            }
            theta_q = norm2(w, exec) / tau;
            const double c = 1.0 / std::sqrt(1.0 + theta_q * theta_q);
            tau = tau * theta_q * c;
            eta = c * c * alpha;
            axpy(eta, d, theta);
            axpy(-eta, ad, res);

            const double est = ctx.preconditioned() ? ctx.true_residual(theta) : norm2(res, exec);
            rep.final_linear_residual_2norm = est;
            best.offer(theta, est);
            if (ctx.done(est) || tau == 0.0 || est == 0.0) {
                stop = true;
                break;
            }
        }
        if (stop) {
            break;
        }

        const double rho_new = dot(r_tilde, w, exec);
        if (tiny(rho_new, r_tilde_norm * norm2(w, exec))) {
            rep.breakdown = true;
            break;
        }
        const double beta = rho_new / rho;
        rho = rho_new;
        for (std::size_t i = 0; i < n; ++i) {
            u_even[i] = w[i] + beta * u_odd[i];
        }
        ctx.apply_preconditioned(u_even, au_even);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = au_even[i] + beta * (au_odd[i] + beta * v[i]);
        }
    }
    if (rep.breakdown) {
        rep.final_linear_residual_2norm = ctx.true_residual(theta);
    }
    best.restore_if_better(theta, rep);
    rep.converged = rep.final_linear_residual_2norm <= ctx.target();
    return rep;
}

} // namespace

InnerSolveReport inner_solve(const PolicyOperator& op, const Preconditioner& pc, std::span<const double> b,
                             std::span<double> theta, const InnerSolveConfig& config, const Executor& exec) {
    if (b.size() != op.size() || theta.size() != op.size()) {
        throw ValidationError("inner_solve: dimension mismatch");
    }
    if (config.max_it == 0) {
        throw ValidationError("inner_solve: max_it must be at least 1");
    }
    if (!config.fixed_iterations && !(config.target_2norm > 0.0)) {
        throw ValidationError("inner_solve: target_2norm must be positive");
    }
    InnerContext ctx(op, pc, b, config, exec);
    switch (config.kind) {
    case InnerSolverKind::Richardson: return richardson(ctx, theta, config.richardson_scale);
    case InnerSolverKind::Gmres: return gmres(ctx, theta, config.gmres_restart);
    case InnerSolverKind::Bicgstab: return bicgstab(ctx, theta);
    case InnerSolverKind::Tfqmr: return tfqmr(ctx, theta);
    }
    return {};
}

} // namespace ipi
