#pragma once

#include <cstdint>
#include <random>

namespace swtedge {

// Deterministic random source used everywhere the library needs randomness.
// std::mt19937_64 is fully specified by the C++ standard, so the raw stream
// is reproducible across platforms for a given seed. Gaussian deviates come
// from the Box-Muller transform rather than std::normal_distribution (whose
// algorithm is implementation-defined):
//
//   u1 in (0,1], u2 in [0,1)
//   z0 = sqrt(-2 ln u1) * cos(2 pi u2)
//   z1 = sqrt(-2 ln u1) * sin(2 pi u2)
//
// z1 is cached and handed out by the next call, so one uniform pair yields
// two deviates.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform double in [0, 1) with 53-bit resolution.
    double uniform();

    // Uniform double in [a, b).
    double uniform(double a, double b);

    // Zero-mean, unit-variance Gaussian deviate.
    double gaussian();

    // Zero-mean Laplacian deviate with scale b, by inverse CDF:
    //   u in [-1/2, 1/2),  x = -b * sgn(u) * ln(1 - 2|u|)
    double laplacian(double b);

    // Uniform integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace swtedge
