#pragma once

#include <cstddef>
#include <vector>

#include "swtedge/image.hpp"

namespace swtedge {

// One coefficient plane at full image resolution.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> v;

    Plane() = default;
    Plane(int w, int h, double fill = 0.0)
        : width(w), height(h), v(std::size_t(w) * h, fill) {}

    double& at(int x, int y) { return v[std::size_t(y) * width + x]; }
    const double& at(int x, int y) const { return v[std::size_t(y) * width + x]; }
};

enum class Wavelet { haar };

// Undecimated (a trous) separable wavelet pyramid. Every plane keeps the
// source dimensions — nothing is downsampled; instead the filters at level
// j (1-based) are the base pair upsampled by inserting 2^(j-1)-1 zeros
// between taps. Convolution is causal with periodic boundaries:
//
//   w[i] = sum_k f[k] * x[(i - k * 2^(j-1)) mod N]
//
// Haar analysis pair: lowpass h = [1/2, 1/2], highpass g = [1/2, -1/2].
//
// Orientation names give the filter applied along x, then along y:
//   lh = low x, high y   -> responds to horizontal edges
//   hl = high x, low y   -> responds to vertical edges
//   hh = high x, high y  -> diagonal detail
// Scale j planes sit at index j-1; scale 1 is the finest.
struct SwtPyramid {
    int width = 0;
    int height = 0;
    int scales = 0;
    std::vector<Plane> lh, hl, hh;
    Plane approx;  // lowpass residue after the deepest level
};

// Forward transform. scales must be >= 1 and both image dimensions must be
// at least 2^scales (so the longest filter stride fits); violations throw
// std::invalid_argument.
SwtPyramid swt_forward(const GrayImage& img, int scales, Wavelet wavelet = Wavelet::haar);

// Inverse transform with the synthesis pair [1, 1] / [1, -1], i.e. the
// average of the two exact single-shift reconstructions offered by the
// redundant representation. Round-trips swt_forward to a few ulp. The
// result is clamped to [0, 1], which for an unmodified pyramid only ever
// moves values closer to the original image.
GrayImage swt_inverse(const SwtPyramid& pyr, Wavelet wavelet = Wavelet::haar);

// Circular shift helpers: out(x, y) = in((x - dx) mod W, (y - dy) mod H).
// The transform commutes with these exactly (bitwise), which the tests
// rely on.
GrayImage circular_shift(const GrayImage& img, int dx, int dy);
Plane circular_shift(const Plane& plane, int dx, int dy);

}  // namespace swtedge
