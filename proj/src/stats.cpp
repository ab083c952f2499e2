#include "ntbea/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ntbea/errors.hpp"

namespace ntbea {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw Error("mean of empty sample");
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

namespace {

// Type-7 (linear interpolation) quantile of a sorted vector.
double quantile_sorted(const std::vector<double>& sorted, double q) {
    double pos = q * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace

Ci basic_bootstrap_ci(std::span<const double> samples, double level, int resamples,
                      Rng& rng) {
    if (samples.size() < 2) throw Error("bootstrap CI needs at least 2 samples");
    if (!(level > 0.0 && level < 1.0)) throw Error("CI level must lie in (0,1)");
    if (resamples < 1000) throw Error("bootstrap needs at least 1000 resamples");

    const double m = mean(samples);
    const std::size_t n = samples.size();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> means(resamples);
    for (int b = 0; b < resamples; ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += samples[pick(rng)];
        means[b] = acc / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    double q_hi = quantile_sorted(means, (1.0 + level) / 2.0);
    double q_lo = quantile_sorted(means, (1.0 - level) / 2.0);
    return Ci{2.0 * m - q_hi, 2.0 * m - q_lo};
}

}  // namespace ntbea
