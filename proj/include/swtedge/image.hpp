#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace swtedge {

// Grayscale raster with intensities normalized to [0, 1], stored row-major:
// data[y * width + x].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0);

    double& at(int x, int y) { return data[std::size_t(y) * width + x]; }
    const double& at(int x, int y) const { return data[std::size_t(y) * width + x]; }
    std::size_t size() const { return data.size(); }
};

// Binary raster (1 = set). One byte per pixel in `pix`, row-major.
struct Bitmap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pix;

    Bitmap() = default;
    Bitmap(int w, int h, std::uint8_t fill = 0);

    std::uint8_t& at(int x, int y) { return pix[std::size_t(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return pix[std::size_t(y) * width + x]; }
};

// Parse failure in a PGM/PBM payload. `offset` is the byte position where
// the problem was detected; the message names it too.
class PnmError : public std::runtime_error {
public:
    PnmError(const std::string& what, std::size_t offset);
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

// Reads a PGM image (ASCII "P2" or binary "P5"), maxval 1..65535, with '#'
// comments allowed in the header. Binary samples are one byte, or two bytes
// big-endian when maxval > 255. Intensities are divided by maxval so the
// result lies in [0, 1]. Malformed input raises PnmError.
GrayImage read_pgm(const std::vector<std::uint8_t>& bytes);

// Serializes as binary PGM ("P5") with the given maxval (1..65535, two
// bytes per sample big-endian above 255). Quantization is round(v * maxval).
std::vector<std::uint8_t> write_pgm(const GrayImage& img, int maxval = 255);

// PBM bit rasters ("P4" binary out; "P1" ASCII or "P4" accepted in). Rows
// are padded to whole bytes, most significant bit first, per the format.
std::vector<std::uint8_t> write_pbm(const Bitmap& map);
Bitmap read_pbm(const std::vector<std::uint8_t>& bytes);

// img plus i.i.d. zero-mean Gaussian noise of standard deviation sigma,
// clamped back to [0, 1]. Deterministic for a given seed; sigma = 0 returns
// the input unchanged, negative sigma throws.
GrayImage add_gaussian_noise(const GrayImage& img, double sigma, std::uint64_t seed);

// Vertical two-level step: columns < edge_column get `low`, the rest get
// `high`. edge_column must lie in [0, width]; low/high must be in [0, 1].
GrayImage make_step_image(int width, int height, int edge_column, double low, double high);

// Horizontal linear ramp from `low` (leftmost column) to `high` (rightmost).
GrayImage make_ramp_image(int width, int height, double low, double high);

GrayImage make_constant_image(int width, int height, double value);

// Whole-file helpers used by the CLI and the tests.
std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace swtedge
