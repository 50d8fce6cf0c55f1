#include "ipi/model.hpp"

#include <cmath>
#include <sstream>

namespace ipi {

std::size_t flatten_index(std::size_t s, std::size_t a, std::size_t m, std::size_t n) {
    if (s >= n || a >= m) {
        throw ValidationError("flatten_index: (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                              ") outside " + std::to_string(n) + " states x " + std::to_string(m) + " actions");
    }
    return s * m + a;
}

std::string ValidationReport::summary() const {
    if (ok()) {
        return "pass";
    }
    std::ostringstream out;
    out << violations.size() << " violation(s):";
    for (const auto& v : violations) {
        out << "\n  - " << v;
    }
    return out.str();
}

namespace {

constexpr std::size_t kMaxRowMessages = 10;

void check_rows(const MdpInstance& mdp, ValidationReport& report) {
    const CsrMatrix& p = mdp.transitions;
    std::size_t bad_rows = 0;
    for (std::size_t r = 0; r < p.rows; ++r) {
        double sum = 0.0;
        bool bad_entry = false;
        for (const double v : p.row_values(r)) {
            sum += v;
            bad_entry = bad_entry || !(v >= 0.0 && v <= 1.0);
        }
        const bool bad_sum = !(std::abs(sum - 1.0) <= kRowSumTolerance);
        if (bad_entry || bad_sum) {
            if (++bad_rows <= kMaxRowMessages) {
                const auto [s, a] = unflatten_index(r, mdp.m);
                std::ostringstream msg;
                msg.precision(17);
                msg << "row " << r << " (s=" << s << ", a=" << a << ")";
                if (bad_sum) {
                    msg << " sums to " << sum;
                }
                if (bad_entry) {
                    msg << (bad_sum ? " and" : "") << " has an entry outside [0,1]";
                }
                report.violations.push_back(msg.str());
            }
        }
    }
    if (bad_rows > kMaxRowMessages) {
        report.violations.push_back("... " + std::to_string(bad_rows - kMaxRowMessages) + " more row violation(s)");
    }
}

} // namespace

ValidationReport validate(const MdpInstance& mdp) {
    ValidationReport report;
    auto& v = report.violations;
    if (mdp.n == 0) {
        v.push_back("state count n must be at least 1");
    }
    if (mdp.m == 0) {
        v.push_back("action count m must be at least 1");
    }
    if (!(mdp.gamma > 0.0 && mdp.gamma < 1.0)) {
        std::ostringstream msg;
        msg << "discount factor " << mdp.gamma << " outside (0,1)";
        v.push_back(msg.str());
    }
    if (mdp.stage_cost.rows != mdp.n || mdp.stage_cost.cols != mdp.m ||
        mdp.stage_cost.data.size() != mdp.n * mdp.m) {
        v.push_back("shape mismatch: stage cost is " + std::to_string(mdp.stage_cost.rows) + "x" +
                    std::to_string(mdp.stage_cost.cols) + ", expected " + std::to_string(mdp.n) + "x" +
                    std::to_string(mdp.m));
    } else {
        for (std::size_t i = 0; i < mdp.stage_cost.data.size(); ++i) {
            if (!std::isfinite(mdp.stage_cost.data[i])) {
                v.push_back("stage cost (" + std::to_string(i / mdp.m) + ", " + std::to_string(i % mdp.m) +
                            ") is not finite");
                break;
            }
        }
    }
    const CsrMatrix& p = mdp.transitions;
    if (p.rows != mdp.n * mdp.m || p.cols != mdp.n) {
        v.push_back("shape mismatch: transitions are " + std::to_string(p.rows) + "x" + std::to_string(p.cols) +
                    ", expected " + std::to_string(mdp.n * mdp.m) + "x" + std::to_string(mdp.n));
    }
    const auto csr_issues = check_csr(p);
    for (const auto& issue : csr_issues) {
        v.push_back("transitions: " + issue);
    }
    if (csr_issues.empty() && mdp.m > 0) {
        check_rows(mdp, report);
    }
    return report;
}

void require_valid(const MdpInstance& mdp) {
    const auto report = validate(mdp);
    if (!report.ok()) {
        throw ValidationError("invalid MDP: " + report.summary());
    }
}

void require_valid(const MdpInstance& mdp, const Policy& pi) {
    if (pi.size() != mdp.n) {
        throw ValidationError("policy has length " + std::to_string(pi.size()) + ", expected " +
                              std::to_string(mdp.n));
    }
    for (std::size_t s = 0; s < pi.size(); ++s) {
        if (pi[s] >= mdp.m) {
            throw ValidationError("policy action " + std::to_string(pi[s]) + " at state " + std::to_string(s) +
                                  " is not below m = " + std::to_string(mdp.m));
        }
    }
}

void require_valid(const MdpInstance& mdp, std::span<const double> v) {
    if (v.size() != mdp.n) {
        throw ValidationError("cost vector has length " + std::to_string(v.size()) + ", expected " +
                              std::to_string(mdp.n));
    }
    for (std::size_t s = 0; s < v.size(); ++s) {
        if (!std::isfinite(v[s])) {
            throw ValidationError("cost vector entry " + std::to_string(s) + " is not finite");
        }
    }
}

} // namespace ipi
