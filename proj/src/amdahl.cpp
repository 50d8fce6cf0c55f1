#include "ipi/amdahl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "ipi/errors.hpp"

namespace ipi {

double amdahl_speedup(double p, double workers) { return 1.0 / (1.0 - p + p / workers); }

AmdahlFit fit_amdahl(const std::vector<AmdahlSample>& samples) {
    std::map<std::size_t, std::pair<double, std::size_t>> by_workers;
    for (const auto& s : samples) {
        if (s.workers < 1) {
            throw ValidationError("Amdahl sample with zero workers");
        }
        if (!(s.runtime > 0.0) || !std::isfinite(s.runtime)) {
            throw ValidationError("Amdahl runtimes must be positive, got " + std::to_string(s.runtime));
        }
        auto& [sum, count] = by_workers[s.workers];
        sum += s.runtime;
        ++count;
    }
    if (!by_workers.count(1)) {
        throw ValidationError("Amdahl fit needs a single-worker sample as the speedup baseline");
    }
    if (by_workers.size() < 2) {
        throw ValidationError("Amdahl fit needs at least two distinct worker counts");
    }
    const double t1 = by_workers[1].first / static_cast<double>(by_workers[1].second);
    std::vector<std::pair<double, double>> speedups; // (R, S_obs)
    for (const auto& [r, acc] : by_workers) {
        speedups.emplace_back(static_cast<double>(r), t1 / (acc.first / static_cast<double>(acc.second)));
    }
    auto loss = [&](double p) {
        double total = 0.0;
        for (const auto& [r, s] : speedups) {
            total += std::abs(s - amdahl_speedup(p, r));
        }
        return total;
    };

    constexpr int kSteps = 10000;
    int best = 0;
    double best_loss = loss(0.0);
    for (int i = 1; i <= kSteps; ++i) {
        const double l = loss(static_cast<double>(i) / kSteps);
        if (l < best_loss) {
            best_loss = l;
            best = i;
        }
    }
    // golden-section refinement inside the bracketing grid cells
    double lo = std::max(0.0, static_cast<double>(best - 1) / kSteps);
    double hi = std::min(1.0, static_cast<double>(best + 1) / kSteps);
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - ratio * (hi - lo);
    double x2 = lo + ratio * (hi - lo);
    double f1 = loss(x1), f2 = loss(x2);
    for (int it = 0; it < 60; ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = loss(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = loss(x2);
        }
    }
    double p = 0.5 * (lo + hi);
    if (loss(p) > best_loss) {
        p = static_cast<double>(best) / kSteps;
    }

    AmdahlFit fit;
    fit.samples = samples;
    fit.p = std::clamp(p, 0.0, 1.0);
    fit.s_max = fit.p >= 1.0 ? std::numeric_limits<double>::infinity() : 1.0 / (1.0 - fit.p);
    return fit;
}

} // namespace ipi
