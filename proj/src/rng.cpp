#include "swtedge/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace swtedge {

double Rng::uniform() {
    // Top 53 bits of the 64-bit word, scaled into [0, 1).
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) {
    return a + (b - a) * uniform();
}

double Rng::gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // 1 - uniform() lies in (0, 1], keeping the log argument positive.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

double Rng::laplacian(double b) {
    if (!(b > 0.0)) {
        throw std::invalid_argument("laplacian scale must be positive");
    }
    double u = uniform() - 0.5;
    double sign = u < 0.0 ? -1.0 : 1.0;
    // |u| < 1/2 so the log argument stays in (0, 1].
    return -b * sign * std::log(1.0 - 2.0 * std::fabs(u));
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) {
        throw std::invalid_argument("below(n) needs n > 0");
    }
    // Rejection sampling keeps the draw unbiased.
    std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

}  // namespace swtedge
