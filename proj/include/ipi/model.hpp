#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ipi/errors.hpp"
#include "ipi/linalg.hpp"
#include "ipi/parallel.hpp"

namespace ipi {

enum class Mode { Min, Max };

/// A discounted MDP with n states and m actions.
///
/// Transitions use the row-stacked layout: an (n*m) x n CSR matrix whose row
/// s*m + a holds P(s, ., a). Stage costs are a dense n x m matrix.
struct MdpInstance {
    std::size_t n = 0;
    std::size_t m = 0;
    double gamma = 0.0;
    Mode mode = Mode::Min;
    DenseMatrix stage_cost;
    CsrMatrix transitions;
};

struct Policy {
    std::vector<std::size_t> actions;

    std::size_t size() const { return actions.size(); }
    std::size_t operator[](std::size_t s) const { return actions[s]; }
    bool operator==(const Policy&) const = default;
};

struct CostVector {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t s) const { return values[s]; }
    bool operator==(const CostVector&) const = default;
};

/// Row of the flattened transition tensor holding P(s, ., a).
std::size_t flatten_index(std::size_t s, std::size_t a, std::size_t m, std::size_t n);

/// Inverse of flatten_index: {s, a}.
inline std::pair<std::size_t, std::size_t> unflatten_index(std::size_t row, std::size_t m) {
    return {row / m, row % m};
}

struct ValidationReport {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

/// Tolerance on |row sum - 1| accepted by validate().
inline constexpr double kRowSumTolerance = 1e-12;

ValidationReport validate(const MdpInstance& mdp);

/// Throws ValidationError with the report summary when validate() fails.
void require_valid(const MdpInstance& mdp);

void require_valid(const MdpInstance& mdp, const Policy& pi);
void require_valid(const MdpInstance& mdp, std::span<const double> v);

} // namespace ipi
