// Command-line front end: detect (edge detection on a PGM image), synth
// (synthetic test images with ground truth), eval (tolerant precision/
// recall/F1 between edge maps). All randomness flows from --seed; given
// identical flags and seed, every output file is byte-identical across
// runs.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swtedge/edge_pipeline.hpp"
#include "swtedge/image.hpp"
#include "swtedge/params_io.hpp"

namespace {

using namespace swtedge;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct DetectArgs {
    std::string in, out, metrics, params_in, params_out;
    int scales = 3;
    std::string model = "hmc";
    std::string wavelet = "haar";
    std::string fusion = "or";
    std::string decode = "map";
    int max_iters = 50;
    double tol = 1e-6;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    bool include_hh = false;
    bool lh_columns = false;
};

std::string band_metrics(const TrainedModel& model) {
    std::string out;
    for (std::size_t i = 0; i < model.orientations.size(); ++i) {
        std::string name = to_string(model.orientations[i]);
        if (model.model == ModelKind::hmc) {
            for (int j = 1; j <= model.scales; ++j) {
                const ChainBandModel& bm = model.chains[i][j - 1];
                std::string prefix = "band." + name + "." + std::to_string(j) + ".";
                out += prefix + "skipped=" + (bm.flags.skipped ? "1" : "0") + "\n";
                out += prefix + "relabeled=" + (bm.flags.relabeled ? "1" : "0") + "\n";
                out += prefix + "uninformative=" + (bm.flags.uninformative ? "1" : "0") + "\n";
                out += prefix + "converged=" + (bm.flags.converged ? "1" : "0") + "\n";
                out += prefix + "frozen=" + (bm.flags.any_state_frozen ? "1" : "0") + "\n";
                out += prefix + "iterations=" + std::to_string(bm.flags.iterations) + "\n";
                out += prefix + "log_likelihood=" + fmt(bm.flags.log_likelihood) + "\n";
                const ChainParams& p = bm.params;
                out += prefix + "initial=" + fmt(p.initial[0]) + "," + fmt(p.initial[1]) + "\n";
                out += prefix + "transition=" + fmt(p.transition[0][0]) + "," +
                       fmt(p.transition[0][1]) + "," + fmt(p.transition[1][0]) + "," +
                       fmt(p.transition[1][1]) + "\n";
                out += prefix + "sigma0=" + fmt(p.sigma0) + "\n";
                out += prefix + "b1=" + fmt(p.b1) + "\n";
            }
        } else {
            const TreeOrientModel& tm = model.trees[i];
            std::string prefix = "band." + name + ".";
            out += prefix + "skipped=" + (tm.flags.skipped ? "1" : "0") + "\n";
            out += prefix + "relabeled=" + (tm.flags.relabeled ? "1" : "0") + "\n";
            out += prefix + "uninformative=" + (tm.flags.uninformative ? "1" : "0") + "\n";
            out += prefix + "converged=" + (tm.flags.converged ? "1" : "0") + "\n";
            out += prefix + "frozen=" + (tm.flags.any_state_frozen ? "1" : "0") + "\n";
            out += prefix + "iterations=" + std::to_string(tm.flags.iterations) + "\n";
            out += prefix + "log_likelihood=" + fmt(tm.flags.log_likelihood) + "\n";
            const TreeParams& p = tm.params;
            out += prefix + "root_prior=" + fmt(p.root_prior[0]) + "," +
                   fmt(p.root_prior[1]) + "\n";
            for (int d = 1; d < model.scales; ++d) {
                const auto& e = p.child_transition[d - 1];
                out += prefix + "transition." + std::to_string(d) + "=" + fmt(e[0][0]) + "," +
                       fmt(e[0][1]) + "," + fmt(e[1][0]) + "," + fmt(e[1][1]) + "\n";
            }
            for (int k = 0; k < model.scales; ++k) {
                out += prefix + "emission." + std::to_string(k) + "=" +
                       fmt(p.emissions[k].sigma0) + "," + fmt(p.emissions[k].b1) + "\n";
            }
        }
    }
    return out;
}

int run_detect(const DetectArgs& a) {
    GrayImage img = read_pgm(read_file(a.in));
    if (a.noise_sigma > 0.0) {
        img = add_gaussian_noise(img, a.noise_sigma, a.seed);
    }

    PipelineConfig config;
    config.scales = a.scales;
    config.model = parse_model(a.model);
    config.fusion = parse_fusion(a.fusion);
    config.decode = parse_decode(a.decode);
    config.include_hh = a.include_hh;
    config.lh_columns = a.lh_columns;
    config.em.max_iters = a.max_iters;
    config.em.tol = a.tol;

    DetectResult result;
    if (!a.params_in.empty()) {
        TrainedModel model = load_params(a.params_in);
        result = detect_edges(img, config, model);
    } else {
        result = detect_edges(img, config);
    }

    for (std::size_t i = 0; i < result.model.orientations.size(); ++i) {
        std::string name = to_string(result.model.orientations[i]);
        if (result.model.model == ModelKind::hmc) {
            for (int j = 1; j <= result.model.scales; ++j) {
                const BandFlags& f = result.model.chains[i][j - 1].flags;
                if (!f.skipped && !f.converged && f.iterations > 0) {
                    std::cerr << "warning: band " << name << " scale " << j
                              << " did not converge within " << f.iterations
                              << " iterations\n";
                }
            }
        } else {
            const BandFlags& f = result.model.trees[i].flags;
            if (!f.skipped && !f.converged && f.iterations > 0) {
                std::cerr << "warning: band " << name << " did not converge within "
                          << f.iterations << " iterations\n";
            }
        }
    }

    write_file(a.out, encode_edge_map(result.map, ends_with(a.out, ".pgm")));

    std::string metrics;
    metrics += std::string("model=") + to_string(result.model.model) + "\n";
    metrics += "scales=" + std::to_string(a.scales) + "\n";
    metrics += "wavelet=" + a.wavelet + "\n";
    metrics += std::string("fusion=") + a.fusion + "\n";
    metrics += std::string("decode=") + a.decode + "\n";
    metrics += std::string("include_hh=") + (a.include_hh ? "1" : "0") + "\n";
    metrics += std::string("lh_columns=") + (a.lh_columns ? "1" : "0") + "\n";
    metrics += "max_iters=" + std::to_string(a.max_iters) + "\n";
    metrics += "tol=" + fmt(a.tol) + "\n";
    metrics += "noise_sigma=" + fmt(a.noise_sigma) + "\n";
    metrics += "seed=" + std::to_string(a.seed) + "\n";
    metrics += "width=" + std::to_string(img.width) + "\n";
    metrics += "height=" + std::to_string(img.height) + "\n";
    metrics += "edge_count=" + std::to_string(edge_count(result.map)) + "\n";
    metrics += band_metrics(result.model);
    std::string metrics_path = a.metrics.empty() ? a.out + ".metrics" : a.metrics;
    write_file(metrics_path, std::vector<std::uint8_t>(metrics.begin(), metrics.end()));

    if (!a.params_out.empty()) {
        save_params(a.params_out, result.model);
    }
    return 0;
}

struct SynthArgs {
    std::string kind;  // step | ramp | constant
    std::string out, truth;
    int width = 64;
    int height = 64;
    int edge_col = -1;  // step only; defaults to width/2
    double low = 0.0;
    double high = 1.0;
    double value = 0.5;
    int maxval = 255;
};

int run_synth(const SynthArgs& a) {
    GrayImage img;
    EdgeMap truth(a.width, a.height);
    if (a.kind == "step") {
        int col = a.edge_col >= 0 ? a.edge_col : a.width / 2;
        img = make_step_image(a.width, a.height, col, a.low, a.high);
        // Convention: the truth marks column col, the first high column;
        // a step at 0 or width is no step at all.
        if (col > 0 && col < a.width && a.low != a.high) {
            for (int y = 0; y < a.height; ++y) {
                truth.at(col, y) = 1;
            }
        }
    } else if (a.kind == "ramp") {
        img = make_ramp_image(a.width, a.height, a.low, a.high);
    } else if (a.kind == "constant") {
        img = make_constant_image(a.width, a.height, a.value);
    } else {
        throw std::invalid_argument("synth kind must be step, ramp, or constant");
    }

    write_file(a.out, write_pgm(img, a.maxval));
    std::string truth_path = a.truth.empty() ? a.out + ".truth.pbm" : a.truth;
    write_file(truth_path, encode_edge_map(truth, ends_with(truth_path, ".pgm")));
    return 0;
}

struct EvalArgs {
    std::string map, truth;
    int tolerance = 1;
};

int run_eval(const EvalArgs& a) {
    EdgeMap map = decode_edge_map(read_file(a.map));
    EdgeMap truth = decode_edge_map(read_file(a.truth));
    F1Result r = edge_f1(map, truth, a.tolerance);
    std::cout << "precision=" << fmt(r.precision) << "\n"
              << "recall=" << fmt(r.recall) << "\n"
              << "f1=" << fmt(r.f1) << "\n"
              << "edge_count=" << edge_count(map) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Edge detection on grayscale images: stationary wavelet transform "
                 "with two-state hidden Markov chain/tree models"};
    app.require_subcommand(1);

    DetectArgs d;
    CLI::App* detect = app.add_subcommand("detect", "Detect edges in a PGM image");
    detect->add_option("--in", d.in, "input PGM image")->required();
    detect->add_option("--out", d.out, "output edge map (.pbm, or .pgm for 0/255)")->required();
    detect->add_option("--scales", d.scales, "wavelet decomposition levels")
        ->check(CLI::Range(1, 16))
        ->capture_default_str();
    detect->add_option("--model", d.model, "state model")
        ->check(CLI::IsMember({"hmc", "hmt"}))
        ->capture_default_str();
    detect->add_option("--wavelet", d.wavelet, "wavelet family")
        ->check(CLI::IsMember({"haar"}))
        ->capture_default_str();
    detect->add_option("--fusion", d.fusion, "how subband states combine")
        ->check(CLI::IsMember({"or", "and", "majority"}))
        ->capture_default_str();
    detect->add_option("--decode", d.decode, "map (joint MAP) or posterior (pixelwise)")
        ->check(CLI::IsMember({"map", "posterior"}))
        ->capture_default_str();
    detect->add_option("--max-iters", d.max_iters, "EM iteration cap")
        ->check(CLI::Range(0, 1000000))
        ->capture_default_str();
    detect->add_option("--tol", d.tol, "EM relative improvement threshold")
        ->capture_default_str();
    detect->add_option("--noise-sigma", d.noise_sigma, "Gaussian noise added before detection")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    detect->add_option("--seed", d.seed, "seed for all randomness")->capture_default_str();
    detect->add_option("--params-in", d.params_in, "reuse trained parameters (skips EM)");
    detect->add_option("--params-out", d.params_out, "save trained parameters");
    detect->add_option("--metrics", d.metrics, "metrics path (default: <out>.metrics)");
    detect->add_flag("--include-hh", d.include_hh, "train and fuse the diagonal band too");
    detect->add_flag("--lh-columns", d.lh_columns, "scan the LH band down columns");

    SynthArgs s;
    CLI::App* synth = app.add_subcommand("synth", "Write a synthetic image and its truth map");
    synth->add_option("kind", s.kind, "step | ramp | constant")
        ->required()
        ->check(CLI::IsMember({"step", "ramp", "constant"}));
    synth->add_option("--out", s.out, "output PGM image")->required();
    synth->add_option("--truth", s.truth, "truth map path (default: <out>.truth.pbm)");
    synth->add_option("--width", s.width, "image width")->check(CLI::Range(1, 1 << 20))
        ->capture_default_str();
    synth->add_option("--height", s.height, "image height")->check(CLI::Range(1, 1 << 20))
        ->capture_default_str();
    synth->add_option("--edge-col", s.edge_col, "step: first high column (default width/2)");
    synth->add_option("--low", s.low, "low level")->check(CLI::Bound(0.0, 1.0))
        ->capture_default_str();
    synth->add_option("--high", s.high, "high level")->check(CLI::Bound(0.0, 1.0))
        ->capture_default_str();
    synth->add_option("--value", s.value, "constant level")->check(CLI::Bound(0.0, 1.0))
        ->capture_default_str();
    synth->add_option("--maxval", s.maxval, "PGM maxval")->check(CLI::Range(1, 65535))
        ->capture_default_str();

    EvalArgs e;
    CLI::App* eval = app.add_subcommand("eval", "Score an edge map against ground truth");
    eval->add_option("--map", e.map, "detected edge map (PBM or PGM)")->required();
    eval->add_option("--truth", e.truth, "ground-truth edge map")->required();
    eval->add_option("--tolerance", e.tolerance, "match radius in pixels (Chebyshev)")
        ->check(CLI::Range(0, 1 << 20))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        int code = app.exit(ex);  // prints help or the error with the flag name
        return code == 0 ? 0 : 1;
    }

    try {
        if (detect->parsed()) return run_detect(d);
        if (synth->parsed()) return run_synth(s);
        if (eval->parsed()) return run_eval(e);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 1;
}
