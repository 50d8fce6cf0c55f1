#pragma once

#include <cstddef>
#include <vector>

namespace ipi {

struct AmdahlSample {
    std::size_t workers;
    double runtime; // seconds
};

struct AmdahlFit {
    std::vector<AmdahlSample> samples;
    double p = 0.0;     // parallel fraction in [0,1]
    double s_max = 1.0; // 1/(1-p); +inf when p = 1
};

/// S(R) = 1 / (1 - p + p/R)
double amdahl_speedup(double p, double workers);

/// Least-absolute-error fit of p to the observed speedups t(1)/t(R): grid search on
/// [0,1] at 1e-4 resolution followed by golden-section refinement. Requires an R = 1
/// sample and at least two distinct worker counts; repeated R are averaged.
AmdahlFit fit_amdahl(const std::vector<AmdahlSample>& samples);

} // namespace ipi
