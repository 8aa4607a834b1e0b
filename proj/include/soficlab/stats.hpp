#pragma once

// Seed derivation and simple Monte Carlo error estimates.

#include <cmath>
#include <cstdint>
#include <vector>

namespace soficlab {

/// splitmix64 finaliser
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent stream seed for (seed, index); scheduling-independent.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) { return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL)); }

struct MeanError {
    double mean = 0.0;
    double stderr = 0.0;
};

/// Mean and standard error of i.i.d. draws.
inline MeanError mean_stderr(const std::vector<double>& xs) {
    MeanError r;
    if (xs.empty()) return r;
    double s = 0.0;
    for (double x : xs) s += x;
    r.mean = s / static_cast<double>(xs.size());
    if (xs.size() < 2) return r;
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.stderr = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    return r;
}

/// Batch-means error for a correlated series.
inline MeanError batch_means(const std::vector<double>& xs, size_t batches = 32) {
    if (xs.size() < 2 * batches) return mean_stderr(xs);
    const size_t len = xs.size() / batches;
    std::vector<double> means;
    for (size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (size_t i = b * len; i < (b + 1) * len; ++i) s += xs[i];
        means.push_back(s / static_cast<double>(len));
    }
    MeanError r = mean_stderr(means);
    double s = 0.0;
    for (double x : xs) s += x;
    r.mean = s / static_cast<double>(xs.size());
    return r;
}

} // namespace soficlab
