#include "swtedge/image.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "swtedge/rng.hpp"

namespace swtedge {

namespace {

bool is_pnm_space(int c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
}

// Cursor over a PNM payload that remembers its byte position so parse
// errors can point at the exact offset.
class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::size_t pos() const { return pos_; }
    bool eof() const { return pos_ >= bytes_.size(); }
    int peek() const { return eof() ? -1 : bytes_[pos_]; }
    int get() { return eof() ? -1 : bytes_[pos_++]; }

    // Whitespace and '#' comments (running to end of line) separate header
    // tokens and P1 samples.
    void skip_space_and_comments() {
        while (!eof()) {
            int c = peek();
            if (is_pnm_space(c)) {
                ++pos_;
            } else if (c == '#') {
                while (!eof() && peek() != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    // Unsigned decimal token. `what` names the field in error messages.
    long read_number(const std::string& what) {
        skip_space_and_comments();
        std::size_t start = pos_;
        if (eof() || peek() < '0' || peek() > '9') {
            throw PnmError("expected " + what, pos_);
        }
        long value = 0;
        while (!eof() && peek() >= '0' && peek() <= '9') {
            value = value * 10 + (get() - '0');
            if (value > std::numeric_limits<int>::max()) {
                throw PnmError(what + " is out of range", start);
            }
        }
        return value;
    }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

GrayImage::GrayImage(int w, int h, double fill) : width(w), height(h) {
    if (w < 1 || h < 1) {
        throw std::invalid_argument("GrayImage dimensions must be positive");
    }
    data.assign(std::size_t(w) * h, fill);
}

Bitmap::Bitmap(int w, int h, std::uint8_t fill) : width(w), height(h) {
    if (w < 1 || h < 1) {
        throw std::invalid_argument("Bitmap dimensions must be positive");
    }
    pix.assign(std::size_t(w) * h, fill);
}

PnmError::PnmError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
      offset_(offset) {}

GrayImage read_pgm(const std::vector<std::uint8_t>& bytes) {
    ByteReader in(bytes);
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
        throw PnmError("unsupported magic, expected P2 or P5", 0);
    }
    bool binary = bytes[1] == '5';
    in.get();
    in.get();

    long w = in.read_number("width");
    long h = in.read_number("height");
    std::size_t maxval_at = in.pos();
    long maxval = in.read_number("maxval");
    if (w < 1 || h < 1) {
        throw PnmError("image dimensions must be positive", 2);
    }
    if (maxval < 1 || maxval > 65535) {
        throw PnmError("maxval must be in [1, 65535]", maxval_at);
    }

    GrayImage img{int(w), int(h)};

    if (binary) {
        // Exactly one whitespace byte separates the header from the raster.
        int sep = in.get();
        if (sep == -1 || !is_pnm_space(sep)) {
            throw PnmError("expected single whitespace before binary raster", in.pos() == 0 ? 0 : in.pos() - 1);
        }
        int bytes_per_sample = maxval > 255 ? 2 : 1;
        for (std::size_t i = 0; i < img.size(); ++i) {
            long v;
            if (bytes_per_sample == 1) {
                int b = in.get();
                if (b == -1) throw PnmError("raster ends early", in.pos());
                v = b;
            } else {
                int hi = in.get();
                int lo = in.get();
                if (hi == -1 || lo == -1) throw PnmError("raster ends early", in.pos());
                v = (long(hi) << 8) | long(lo);
            }
            if (v > maxval) {
                throw PnmError("sample exceeds maxval", in.pos() - bytes_per_sample);
            }
            img.data[i] = double(v) / double(maxval);
        }
    } else {
        for (std::size_t i = 0; i < img.size(); ++i) {
            std::size_t at = in.pos();
            long v = in.read_number("sample");
            if (v > maxval) {
                throw PnmError("sample exceeds maxval", at);
            }
            img.data[i] = double(v) / double(maxval);
        }
    }
    return img;
}

std::vector<std::uint8_t> write_pgm(const GrayImage& img, int maxval) {
    if (img.width < 1 || img.height < 1 || img.data.size() != std::size_t(img.width) * img.height) {
        throw std::invalid_argument("write_pgm: malformed image");
    }
    if (maxval < 1 || maxval > 65535) {
        throw std::invalid_argument("write_pgm: maxval must be in [1, 65535]");
    }
    std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                         "\n" + std::to_string(maxval) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + img.size() * (maxval > 255 ? 2 : 1));
    for (double v : img.data) {
        double clamped = std::min(1.0, std::max(0.0, v));
        long q = std::lround(clamped * maxval);
        if (maxval > 255) {
            out.push_back(std::uint8_t(q >> 8));
            out.push_back(std::uint8_t(q & 0xff));
        } else {
            out.push_back(std::uint8_t(q));
        }
    }
    return out;
}

std::vector<std::uint8_t> write_pbm(const Bitmap& map) {
    if (map.width < 1 || map.height < 1 || map.pix.size() != std::size_t(map.width) * map.height) {
        throw std::invalid_argument("write_pbm: malformed bitmap");
    }
    std::string header = "P4\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    int row_bytes = (map.width + 7) / 8;
    for (int y = 0; y < map.height; ++y) {
        for (int byte = 0; byte < row_bytes; ++byte) {
            std::uint8_t packed = 0;
            for (int bit = 0; bit < 8; ++bit) {
                int x = byte * 8 + bit;
                if (x < map.width && map.at(x, y)) {
                    packed |= std::uint8_t(0x80 >> bit);
                }
            }
            out.push_back(packed);
        }
    }
    return out;
}

Bitmap read_pbm(const std::vector<std::uint8_t>& bytes) {
    ByteReader in(bytes);
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '1' && bytes[1] != '4')) {
        throw PnmError("unsupported magic, expected P1 or P4", 0);
    }
    bool binary = bytes[1] == '4';
    in.get();
    in.get();

    long w = in.read_number("width");
    long h = in.read_number("height");
    if (w < 1 || h < 1) {
        throw PnmError("image dimensions must be positive", 2);
    }
    Bitmap map{int(w), int(h)};

    if (binary) {
        int sep = in.get();
        if (sep == -1 || !is_pnm_space(sep)) {
            throw PnmError("expected single whitespace before binary raster", in.pos() == 0 ? 0 : in.pos() - 1);
        }
        int row_bytes = (map.width + 7) / 8;
        for (int y = 0; y < map.height; ++y) {
            for (int byte = 0; byte < row_bytes; ++byte) {
                int b = in.get();
                if (b == -1) throw PnmError("raster ends early", in.pos());
                for (int bit = 0; bit < 8; ++bit) {
                    int x = byte * 8 + bit;
                    if (x < map.width) {
                        map.at(x, y) = (b >> (7 - bit)) & 1;
                    }
                }
            }
        }
    } else {
        // P1 samples are single '0'/'1' characters and need no separators.
        for (std::size_t i = 0; i < map.pix.size(); ++i) {
            in.skip_space_and_comments();
            int c = in.get();
            if (c != '0' && c != '1') {
                throw PnmError("expected 0 or 1 sample", in.pos() == 0 ? 0 : in.pos() - 1);
            }
            map.pix[i] = std::uint8_t(c - '0');
        }
    }
    return map;
}

GrayImage add_gaussian_noise(const GrayImage& img, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) {
        throw std::invalid_argument("noise sigma must be non-negative");
    }
    GrayImage out = img;
    if (sigma == 0.0) {
        return out;
    }
    Rng rng(seed);
    for (double& v : out.data) {
        v = std::min(1.0, std::max(0.0, v + sigma * rng.gaussian()));
    }
    return out;
}

GrayImage make_step_image(int width, int height, int edge_column, double low, double high) {
    if (edge_column < 0 || edge_column > width) {
        throw std::invalid_argument("edge_column must lie in [0, width]");
    }
    if (low < 0.0 || low > 1.0 || high < 0.0 || high > 1.0) {
        throw std::invalid_argument("step levels must lie in [0, 1]");
    }
    GrayImage img(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            img.at(x, y) = x < edge_column ? low : high;
        }
    }
    return img;
}

GrayImage make_ramp_image(int width, int height, double low, double high) {
    if (low < 0.0 || low > 1.0 || high < 0.0 || high > 1.0) {
        throw std::invalid_argument("ramp levels must lie in [0, 1]");
    }
    GrayImage img(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double t = width > 1 ? double(x) / double(width - 1) : 0.0;
            img.at(x, y) = low + (high - low) * t;
        }
    }
    return img;
}

GrayImage make_constant_image(int width, int height, double value) {
    if (value < 0.0 || value > 1.0) {
        throw std::invalid_argument("constant level must lie in [0, 1]");
    }
    return GrayImage(width, height, value);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path);
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw std::runtime_error("read failed: " + path);
    }
    return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

}  // namespace swtedge
