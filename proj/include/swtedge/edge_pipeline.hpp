#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "swtedge/hmc.hpp"
#include "swtedge/hmt.hpp"
#include "swtedge/image.hpp"
#include "swtedge/swt.hpp"

namespace swtedge {

enum class Orientation { lh, hl, hh };
enum class ModelKind { hmc, hmt };
enum class FusionRule { logical_or, logical_and, majority };

// How per-pixel labels come out of a trained model:
//   map       — joint MAP decoding (Viterbi along chains, max-product on
//               trees), the default;
//   posterior — per-pixel thresholding of the marginal edge posterior under
//               a position-free state prior (the chain's stationary
//               distribution, or the depth-implied prior on trees). This
//               path commutes exactly with circular shifts when parameters
//               are frozen, which the MAP path cannot guarantee at sequence
//               boundaries.
enum class DecodeMode { map, posterior };

const char* to_string(Orientation o);       // "LH", "HL", "HH"
const char* to_string(ModelKind m);         // "hmc", "hmt"
const char* to_string(FusionRule r);        // "or", "and", "majority"
const char* to_string(DecodeMode d);        // "map", "posterior"
Orientation parse_orientation(const std::string& s);
ModelKind parse_model(const std::string& s);
FusionRule parse_fusion(const std::string& s);
DecodeMode parse_decode(const std::string& s);

struct PipelineConfig {
    int scales = 3;
    ModelKind model = ModelKind::hmc;
    Wavelet wavelet = Wavelet::haar;
    FusionRule fusion = FusionRule::logical_or;
    DecodeMode decode = DecodeMode::map;
    bool include_hh = false;   // diagonal band joins training and fusion
    bool lh_columns = false;   // scan the LH band down columns instead of along rows
    EmOptions em;
};

// Per-pixel state labels for one subband at one scale.
struct StatePlane {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> s;  // entries in {0, 1}

    StatePlane() = default;
    StatePlane(int w, int h) : width(w), height(h), s(std::size_t(w) * h, 0) {}
    std::uint8_t& at(int x, int y) { return s[std::size_t(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return s[std::size_t(y) * width + x]; }
};

struct EdgeMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // entries in {0, 1}

    EdgeMap() = default;
    EdgeMap(int w, int h) : width(w), height(h), pixels(std::size_t(w) * h, 0) {}
    std::uint8_t& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
};

int edge_count(const EdgeMap& map);

// What happened while fitting one band (reported in metrics; a model that
// failed to converge inside max_iters is usable, just flagged).
struct BandFlags {
    bool skipped = false;    // all |coefficients| under the variance floor; never trained
    bool relabeled = false;  // states swapped because EM left P(edge) > 1/2
    // Two-state fit beat the single-Gaussian null by too little (the band is
    // noise); parameters were reset so the edge state is unreachable.
    bool uninformative = false;
    bool converged = false;
    bool any_state_frozen = false;
    int iterations = 0;
    double log_likelihood = 0.0;
};

struct ChainBandModel {
    ChainParams params;
    BandFlags flags;
};

struct TreeOrientModel {
    TreeParams params;  // depth = scales; depth 0 is the coarsest scale
    BandFlags flags;
};

struct TrainedModel {
    ModelKind model = ModelKind::hmc;
    int scales = 0;
    std::vector<Orientation> orientations;     // fusion order: lh, hl, then hh if present
    std::vector<std::vector<ChainBandModel>> chains;  // [orientation][scale-1], hmc only
    std::vector<TreeOrientModel> trees;               // [orientation], hmt only
};

struct DetectResult {
    EdgeMap map;
    // states[i][j-1]: labels for orientations[i] at scale j (1 = finest).
    // Only the finest scale feeds fusion; the rest are for inspection.
    std::vector<std::vector<StatePlane>> states;
    TrainedModel model;
};

// Full run: forward transform, per-subband EM training, decoding, fusion
// of the finest-scale LH/HL (optionally HH) states into one edge map.
// Pure function of its inputs. Near-constant subbands (every |coefficient|
// below the variance floor) are skipped and contribute all-zero states, so
// constant images yield empty maps.
DetectResult detect_edges(const GrayImage& img, const PipelineConfig& config);

// Same, but decoding with pre-trained parameters; no EM runs. The model
// must match the config's kind, scale count, and orientation set.
DetectResult detect_edges(const GrayImage& img, const PipelineConfig& config,
                          const TrainedModel& model);

// Pixelwise combination of equal-sized planes. or: any vote; and: all
// votes; majority: strictly more than half (ties fall to non-edge).
EdgeMap fuse_states(std::span<const StatePlane> planes, FusionRule rule);

struct F1Result {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int matched = 0;
    int detected = 0;
    int truth = 0;
};

// Tolerant F1: a detected pixel is a true positive when an unmatched truth
// pixel lies within Chebyshev distance tolerance_px. Detected pixels are
// visited row-major and greedily claim the nearest unmatched truth pixel
// (ties again row-major); each truth pixel matches at most once. An empty
// detected set has precision 1 by convention; an empty truth set has
// recall 1.
F1Result edge_f1(const EdgeMap& map, const EdgeMap& truth, int tolerance_px);

// Serialized edge-map formats: PBM (P4) or PGM with values {0, 255}.
std::vector<std::uint8_t> encode_edge_map(const EdgeMap& map, bool as_pgm = false);
// Accepts either: PBM bits are taken directly, PGM pixels count as edges
// above half of maxval.
EdgeMap decode_edge_map(const std::vector<std::uint8_t>& bytes);

}  // namespace swtedge
