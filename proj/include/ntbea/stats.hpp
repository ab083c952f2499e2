#pragma once

#include <span>

#include "ntbea/seeding.hpp"

namespace ntbea {

struct Ci {
    double lo = 0.0;
    double hi = 0.0;
};

double mean(std::span<const double> xs);
double sample_sd(std::span<const double> xs);  // n-1 denominator; 0 for n < 2

// Basic (reverse-percentile) bootstrap CI of the mean:
//   lo = 2m - q_{(1+level)/2},  hi = 2m - q_{(1-level)/2}
// over `resamples` bootstrap means. Requires >= 2 samples and
// resamples >= 1000; level in (0,1).
Ci basic_bootstrap_ci(std::span<const double> samples, double level,
                      int resamples, Rng& rng);

}  // namespace ntbea
