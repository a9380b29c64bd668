#include "swtedge/swt.hpp"

#include <stdexcept>
#include <string>

namespace swtedge {

namespace {

int wrap(int i, int n) {
    int m = i % n;
    return m < 0 ? m + n : m;
}

// One level of the analysis filter bank along x with stride d:
// low[x] = (in[x] + in[x-d])/2, high[x] = (in[x] - in[x-d])/2.
void analyze_rows(const Plane& in, int d, Plane& low, Plane& high) {
    int w = in.width, h = in.height;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double a = in.at(x, y);
            double b = in.at(wrap(x - d, w), y);
            low.at(x, y) = 0.5 * (a + b);
            high.at(x, y) = 0.5 * (a - b);
        }
    }
}

// Same filter pair applied along y.
void analyze_cols(const Plane& in, int d, Plane& low, Plane& high) {
    int w = in.width, h = in.height;
    for (int y = 0; y < h; ++y) {
        int yp = wrap(y - d, h);
        for (int x = 0; x < w; ++x) {
            double a = in.at(x, y);
            double b = in.at(x, yp);
            low.at(x, y) = 0.5 * (a + b);
            high.at(x, y) = 0.5 * (a - b);
        }
    }
}

// Inverse of analyze_cols. The analysis pair admits two exact
// reconstructions — s[y] = low[y] + high[y] and
// s[y] = low[y+d] - high[y+d] — and the synthesis pair [1,1]/[1,-1]
// averages them.
void synthesize_cols(const Plane& low, const Plane& high, int d, Plane& out) {
    int w = low.width, h = low.height;
    for (int y = 0; y < h; ++y) {
        int yn = wrap(y + d, h);
        for (int x = 0; x < w; ++x) {
            out.at(x, y) = 0.5 * (low.at(x, y) + high.at(x, y) +
                                  low.at(x, yn) - high.at(x, yn));
        }
    }
}

void synthesize_rows(const Plane& low, const Plane& high, int d, Plane& out) {
    int w = low.width, h = low.height;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int xn = wrap(x + d, w);
            out.at(x, y) = 0.5 * (low.at(x, y) + high.at(x, y) +
                                  low.at(xn, y) - high.at(xn, y));
        }
    }
}

void check_wavelet(Wavelet wavelet) {
    if (wavelet != Wavelet::haar) {
        throw std::invalid_argument("unsupported wavelet");
    }
}

}  // namespace

SwtPyramid swt_forward(const GrayImage& img, int scales, Wavelet wavelet) {
    check_wavelet(wavelet);
    if (scales < 1) {
        throw std::invalid_argument("scales must be at least 1");
    }
    if (scales >= 31 || img.width < (1 << scales) || img.height < (1 << scales)) {
        throw std::invalid_argument("image dimensions must be at least 2^scales (got " +
                                    std::to_string(img.width) + "x" + std::to_string(img.height) +
                                    " for " + std::to_string(scales) + " scales)");
    }
    if (img.data.size() != std::size_t(img.width) * img.height) {
        throw std::invalid_argument("malformed image buffer");
    }

    SwtPyramid pyr;
    pyr.width = img.width;
    pyr.height = img.height;
    pyr.scales = scales;

    Plane approx(img.width, img.height);
    approx.v = img.data;

    Plane row_low(img.width, img.height), row_high(img.width, img.height);
    for (int j = 1; j <= scales; ++j) {
        int d = 1 << (j - 1);
        analyze_rows(approx, d, row_low, row_high);

        Plane ll(img.width, img.height), lh(img.width, img.height);
        Plane hl(img.width, img.height), hh(img.width, img.height);
        analyze_cols(row_low, d, ll, lh);
        analyze_cols(row_high, d, hl, hh);

        pyr.lh.push_back(std::move(lh));
        pyr.hl.push_back(std::move(hl));
        pyr.hh.push_back(std::move(hh));
        approx = std::move(ll);
    }
    pyr.approx = std::move(approx);
    return pyr;
}

GrayImage swt_inverse(const SwtPyramid& pyr, Wavelet wavelet) {
    check_wavelet(wavelet);
    if (pyr.scales < 1 || int(pyr.lh.size()) != pyr.scales ||
        int(pyr.hl.size()) != pyr.scales || int(pyr.hh.size()) != pyr.scales) {
        throw std::invalid_argument("malformed pyramid");
    }
    auto fits = [&pyr](const Plane& plane) {
        return plane.width == pyr.width && plane.height == pyr.height &&
               plane.v.size() == std::size_t(pyr.width) * std::size_t(pyr.height);
    };
    for (int j = 0; j < pyr.scales; ++j) {
        if (!fits(pyr.lh[j]) || !fits(pyr.hl[j]) || !fits(pyr.hh[j])) {
            throw std::invalid_argument("malformed pyramid: plane dimensions disagree");
        }
    }
    if (!fits(pyr.approx)) {
        throw std::invalid_argument("malformed pyramid: plane dimensions disagree");
    }

    Plane approx = pyr.approx;
    Plane row_low(pyr.width, pyr.height), row_high(pyr.width, pyr.height);
    Plane next(pyr.width, pyr.height);
    for (int j = pyr.scales; j >= 1; --j) {
        int d = 1 << (j - 1);
        synthesize_cols(approx, pyr.lh[j - 1], d, row_low);
        synthesize_cols(pyr.hl[j - 1], pyr.hh[j - 1], d, row_high);
        synthesize_rows(row_low, row_high, d, next);
        approx = next;
    }

    GrayImage out(pyr.width, pyr.height);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        double v = approx.v[i];
        out.data[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
    return out;
}

GrayImage circular_shift(const GrayImage& img, int dx, int dy) {
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        int ys = wrap(y - dy, img.height);
        for (int x = 0; x < img.width; ++x) {
            out.at(x, y) = img.at(wrap(x - dx, img.width), ys);
        }
    }
    return out;
}

Plane circular_shift(const Plane& plane, int dx, int dy) {
    Plane out(plane.width, plane.height);
    for (int y = 0; y < plane.height; ++y) {
        int ys = wrap(y - dy, plane.height);
        for (int x = 0; x < plane.width; ++x) {
            out.at(x, y) = plane.at(wrap(x - dx, plane.width), ys);
        }
    }
    return out;
}

}  // namespace swtedge
