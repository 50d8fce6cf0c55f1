#pragma once

#include <memory>
#include <span>
#include <string_view>

#include "ipi/policy_operator.hpp"

namespace ipi {

enum class PreconditionerKind { None, Jacobi, SorForward, Exact };

std::string_view to_string(PreconditionerKind kind);
/// Accepts the option spellings none|jacobi|sor|svd (also "exact").
PreconditionerKind parse_preconditioner(std::string_view name);

struct PreconditionerConfig {
    PreconditionerKind kind = PreconditionerKind::None;
    double sor_omega = 1.0;
    /// Stored-entry cap for the explicit assembly SOR needs.
    std::size_t assembly_nnz_cap = std::size_t{1} << 28;
    /// State-count cap for the dense factorization of Exact.
    std::size_t dense_cap = 4096;
};

/// Approximate inverse D of J_pi, applied as out = D in.
class Preconditioner {
public:
    static Preconditioner build(const PolicyOperator& op, const PreconditionerConfig& config);

    PreconditionerKind kind() const { return kind_; }
    void apply(std::span<const double> in, std::span<double> out) const;

    Preconditioner(Preconditioner&&) noexcept;
    Preconditioner& operator=(Preconditioner&&) noexcept;
    ~Preconditioner();

private:
    struct Impl;
    Preconditioner(PreconditionerKind kind, std::unique_ptr<Impl> impl);

    PreconditionerKind kind_;
    std::unique_ptr<Impl> impl_;
};

} // namespace ipi
