#include "ipi/preconditioner.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <variant>

namespace ipi {

std::string_view to_string(PreconditionerKind kind) {
    switch (kind) {
    case PreconditionerKind::None: return "none";
    case PreconditionerKind::Jacobi: return "jacobi";
    case PreconditionerKind::SorForward: return "sor";
    case PreconditionerKind::Exact: return "svd";
    }
    return "?";
}

PreconditionerKind parse_preconditioner(std::string_view name) {
    if (name == "none") return PreconditionerKind::None;
    if (name == "jacobi") return PreconditionerKind::Jacobi;
    if (name == "sor") return PreconditionerKind::SorForward;
    if (name == "svd" || name == "exact") return PreconditionerKind::Exact;
    throw ValidationError("unknown preconditioner '" + std::string(name) +
                          "'; supported: none, jacobi, sor, svd");
}

namespace {

struct Identity {};

struct Jacobi {
    std::vector<double> inverse_diagonal;
};

struct Sor {
    CsrMatrix a;                      // explicit I - gamma P_pi
    std::vector<std::size_t> diag_at; // position of a(i,i) in a.values
    double omega;
};

struct Exact {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
};

} // namespace

struct Preconditioner::Impl {
    std::variant<Identity, Jacobi, Sor, Exact> data;
};

Preconditioner::Preconditioner(PreconditionerKind kind, std::unique_ptr<Impl> impl)
    : kind_(kind), impl_(std::move(impl)) {}
Preconditioner::Preconditioner(Preconditioner&&) noexcept = default;
Preconditioner& Preconditioner::operator=(Preconditioner&&) noexcept = default;
Preconditioner::~Preconditioner() = default;

Preconditioner Preconditioner::build(const PolicyOperator& op, const PreconditionerConfig& config) {
    auto impl = std::make_unique<Impl>();
    const std::size_t n = op.size();
    switch (config.kind) {
    case PreconditionerKind::None:
        impl->data = Identity{};
        break;
    case PreconditionerKind::Jacobi: {
        auto d = op.diagonal();
        for (double& x : d) {
            x = 1.0 / x;
        }
        impl->data = Jacobi{std::move(d)};
        break;
    }
    case PreconditionerKind::SorForward: {
        if (!(config.sor_omega > 0.0 && config.sor_omega < 2.0)) {
            throw ValidationError("SOR relaxation omega must lie in (0,2)");
        }
        const std::size_t needed = op.transitions().nnz() + n;
        if (needed > config.assembly_nnz_cap) {
            throw ResourceError("SOR needs an explicit matrix with up to " + std::to_string(needed) +
                                " entries, above the assembly cap of " + std::to_string(config.assembly_nnz_cap) +
                                "; raise the cap or choose -pc_type none|jacobi");
        }
        Sor sor{assemble_explicit(op), {}, config.sor_omega};
        sor.diag_at.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto cols = sor.a.row_cols(i);
            const auto it = std::lower_bound(cols.begin(), cols.end(), i);
            sor.diag_at[i] = sor.a.row_ptr[i] + static_cast<std::size_t>(it - cols.begin());
        }
        impl->data = std::move(sor);
        break;
    }
    case PreconditionerKind::Exact: {
        if (n > config.dense_cap) {
            throw ResourceError("exact (svd) preconditioner needs a dense " + std::to_string(n) + "x" +
                                std::to_string(n) + " factorization, above the cap of " +
                                std::to_string(config.dense_cap) + " states; choose an iterative preconditioner");
        }
        const auto dim = static_cast<Eigen::Index>(n);
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(dim, dim);
        const CsrMatrix& p = op.transitions();
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t k = p.row_ptr[r]; k < p.row_ptr[r + 1]; ++k) {
                a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p.col_idx[k])) -= op.gamma() * p.values[k];
            }
        }
        impl->data = Exact{Eigen::PartialPivLU<Eigen::MatrixXd>(a)};
        break;
    }
    }
    return Preconditioner(config.kind, std::move(impl));
}

void Preconditioner::apply(std::span<const double> in, std::span<double> out) const {
    std::visit(
        [&](const auto& pc) {
            using T = std::decay_t<decltype(pc)>;
            if constexpr (std::is_same_v<T, Identity>) {
                std::copy(in.begin(), in.end(), out.begin());
            } else if constexpr (std::is_same_v<T, Jacobi>) {
                for (std::size_t i = 0; i < in.size(); ++i) {
                    out[i] = pc.inverse_diagonal[i] * in[i];
                }
            } else if constexpr (std::is_same_v<T, Sor>) {
                // one forward sweep from zero: (D/omega + L) out = in
                const CsrMatrix& a = pc.a;
                for (std::size_t i = 0; i < in.size(); ++i) {
                    double sum = in[i];
                    for (std::size_t k = a.row_ptr[i]; k < pc.diag_at[i]; ++k) {
                        sum -= a.values[k] * out[a.col_idx[k]];
                    }
                    out[i] = pc.omega * sum / a.values[pc.diag_at[i]];
                }
            } else {
                const auto dim = static_cast<Eigen::Index>(in.size());
                const Eigen::Map<const Eigen::VectorXd> rhs(in.data(), dim);
                Eigen::Map<Eigen::VectorXd> x(out.data(), dim);
                x = pc.lu.solve(rhs);
            }
        },
        impl_->data);
}

} // namespace ipi
