// Acceptance gate: one line per criterion, PASS or FAIL, exit 0 only when
// every requested criterion passes. Run with no arguments for all eleven,
// or `--criterion N` (repeatable) for a subset.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "swtedge/edge_pipeline.hpp"
#include "swtedge/hmc.hpp"
#include "swtedge/hmt.hpp"
#include "swtedge/image.hpp"
#include "swtedge/rng.hpp"
#include "swtedge/stat_models.hpp"
#include "swtedge/swt.hpp"

namespace {

using namespace swtedge;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string note;
};

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double elapsed_seconds(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// --- 1: perfect reconstruction on random images ---------------------------

Outcome criterion_1() {
    auto start = Clock::now();
    Rng rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        int scales = 1 + trial % 3;
        GrayImage img(64, 64);
        for (double& v : img.data) v = rng.uniform();
        GrayImage back = swt_inverse(swt_forward(img, scales));
        for (std::size_t i = 0; i < img.data.size(); ++i) {
            worst = std::max(worst, std::abs(back.data[i] - img.data[i]));
        }
    }
    double secs = elapsed_seconds(start);
    bool pass = worst <= 1e-9 && secs < 5.0;
    return {pass, "max error " + fmt_g(worst) + " over 20 images, " + fmt_g(secs) + "s"};
}

// --- 2: analysis commutes with circular shifts -----------------------------

Outcome criterion_2() {
    Rng rng(202);
    GrayImage img(64, 64);
    for (double& v : img.data) v = rng.uniform();
    const int scales = 3;
    SwtPyramid base = swt_forward(img, scales);

    auto plane_gap = [](const Plane& a, const Plane& b) {
        double worst = 0.0;
        for (std::size_t i = 0; i < a.v.size(); ++i) {
            worst = std::max(worst, std::abs(a.v[i] - b.v[i]));
        }
        return worst;
    };

    double worst = 0.0;
    for (int dx : {1, 3, 7}) {
        for (int dy : {1, 3, 7}) {
            SwtPyramid moved = swt_forward(circular_shift(img, dx, dy), scales);
            for (int j = 0; j < scales; ++j) {
                worst = std::max(worst, plane_gap(moved.lh[j], circular_shift(base.lh[j], dx, dy)));
                worst = std::max(worst, plane_gap(moved.hl[j], circular_shift(base.hl[j], dx, dy)));
                worst = std::max(worst, plane_gap(moved.hh[j], circular_shift(base.hh[j], dx, dy)));
            }
            worst = std::max(worst, plane_gap(moved.approx, circular_shift(base.approx, dx, dy)));
        }
    }
    return {worst <= 1e-12, "max coefficient gap " + fmt_g(worst) + " over 9 shifts"};
}

// --- 3: Viterbi equals exhaustive maximization ------------------------------

Outcome criterion_3() {
    Rng rng(303);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        int t = 1 + trial % 12;
        ChainParams params = oracle::random_chain_params(rng);
        std::vector<double> obs = oracle::random_observations(rng, t);
        ViterbiResult vit = viterbi(obs, params);
        oracle::ChainExhaustive ex = oracle::chain_exhaustive(obs, params);
        worst = std::max(worst, std::abs(vit.log_prob - ex.best_log_prob));
        worst = std::max(worst,
                         std::abs(oracle::chain_path_log_score(obs, params, vit.states) -
                                  ex.best_log_prob));
    }
    return {worst <= 1e-9, "max log-score gap " + fmt_g(worst) + " over 100 trials"};
}

// --- 4: forward-backward equals exhaustive summation ------------------------

Outcome criterion_4() {
    Rng rng(404);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        int t = 1 + trial % 10;
        ChainParams params = oracle::random_chain_params(rng);
        std::vector<double> obs = oracle::random_observations(rng, t);
        FbResult fb = forward_backward(obs, params);
        oracle::ChainExhaustive ex = oracle::chain_exhaustive(obs, params);
        worst = std::max(worst, std::abs(fb.log_likelihood - ex.log_likelihood));
    }
    return {worst <= 1e-9, "max log-likelihood gap " + fmt_g(worst) + " over 100 trials"};
}

// --- 5: EM never decreases the training objective ---------------------------

Outcome criterion_5() {
    // Chains: one fixed dataset, many random starting points.
    Rng data_rng(505);
    ChainParams truth;
    truth.initial = {0.7, 0.3};
    truth.transition = {{{0.85, 0.15}, {0.3, 0.7}}};
    truth.sigma0 = 0.05;
    truth.b1 = 0.6;
    std::vector<std::vector<double>> sequences;
    for (int s = 0; s < 6; ++s) {
        sequences.push_back(oracle::sample_chain(data_rng, truth, 60));
    }

    double worst_drop = 0.0;  // most negative step seen, as a positive number
    auto scan = [&worst_drop](const std::vector<double>& history) {
        for (std::size_t k = 1; k < history.size(); ++k) {
            worst_drop = std::max(worst_drop, history[k - 1] - history[k]);
        }
    };

    Rng init_rng(506);
    EmOptions options;
    options.max_iters = 15;
    options.tol = 1e-15;
    for (int trial = 0; trial < 50; ++trial) {
        scan(em_train(sequences, oracle::random_chain_params(init_rng), options).history);
    }

    // Trees: same exercise on a sampled forest.
    Rng tree_rng(507);
    TreeParams tree_truth = make_tree_params(2);
    tree_truth.root_prior = {0.75, 0.25};
    tree_truth.child_transition[0] = {{{0.9, 0.1}, {0.25, 0.75}}};
    tree_truth.emissions[0] = {0.05, 0.5};
    tree_truth.emissions[1] = {0.08, 0.7};
    std::vector<CoeffQuadtree> forest;
    for (int s = 0; s < 25; ++s) {
        forest.push_back(oracle::sample_tree(tree_rng, tree_truth, 2));
    }
    Rng tree_init_rng(508);
    for (int trial = 0; trial < 50; ++trial) {
        scan(em_train_tree(forest, oracle::random_tree_params(tree_init_rng, 2), options)
                 .history);
    }

    return {worst_drop <= 1e-9,
            "worst log-likelihood drop " + fmt_g(worst_drop) + " across 100 runs"};
}

// --- 6: EM recovers known chain parameters ----------------------------------

Outcome criterion_6() {
    auto start = Clock::now();
    ChainParams truth;
    truth.initial = {0.9, 0.1};
    truth.transition = {{{0.95, 0.05}, {0.4, 0.6}}};
    truth.sigma0 = 0.01;
    truth.b1 = 0.1;

    Rng rng(612);
    std::vector<std::vector<double>> sequences;
    for (int s = 0; s < 100; ++s) {
        sequences.push_back(oracle::sample_chain(rng, truth, 1000));
    }

    EmOptions options;
    options.max_iters = 100;
    options.tol = 1e-8;
    ChainTrainResult result = em_train(sequences, default_chain_init(sequences), options);
    const ChainParams& got = result.params;

    double worst = 0.0;
    auto rel = [&worst](double got_v, double want_v) {
        worst = std::max(worst, std::abs(got_v - want_v) / std::abs(want_v));
    };
    rel(got.initial[0], truth.initial[0]);
    rel(got.initial[1], truth.initial[1]);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) rel(got.transition[i][j], truth.transition[i][j]);
    }
    rel(got.sigma0, truth.sigma0);
    rel(got.b1, truth.b1);

    double secs = elapsed_seconds(start);
    bool pass = worst <= 0.15 && secs < 30.0;
    return {pass, "max relative parameter error " + fmt_g(worst) + ", " + fmt_g(secs) + "s"};
}

// --- 7: tree inference equals exhaustive enumeration ------------------------

Outcome criterion_7() {
    Rng rng(707);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        int depth = 1 + trial % 3;
        TreeParams params = oracle::random_tree_params(rng, depth);
        CoeffQuadtree tree = oracle::random_tree(rng, depth);

        UpwardResult up = upward_pass(tree, params);
        DownwardResult down = downward_pass(tree, params, up);
        TreeMapResult map = map_states_tree(tree, params);
        oracle::TreeExhaustive ex = oracle::tree_exhaustive(tree, params);

        worst = std::max(worst, std::abs(up.log_likelihood - ex.log_likelihood));
        worst = std::max(worst, std::abs(map.log_prob - ex.best_log_prob));
        worst = std::max(worst,
                         std::abs(oracle::tree_joint_log_score(tree, params, map.states) -
                                  ex.best_log_prob));
        for (std::size_t k = 0; k < ex.posterior.size(); ++k) {
            for (std::size_t n = 0; n < ex.posterior[k].size(); ++n) {
                for (int m = 0; m < 2; ++m) {
                    worst = std::max(worst,
                                     std::abs(down.posterior[k][n][m] - ex.posterior[k][n][m]));
                }
            }
        }
        for (std::size_t k = 1; k < ex.pairwise.size(); ++k) {
            for (std::size_t n = 0; n < ex.pairwise[k].size(); ++n) {
                for (int i = 0; i < 2; ++i) {
                    for (int j = 0; j < 2; ++j) {
                        worst = std::max(worst, std::abs(down.pairwise[k][n][i][j] -
                                                         ex.pairwise[k][n][i][j]));
                    }
                }
            }
        }
    }
    return {worst <= 1e-9, "max gap " + fmt_g(worst) + " over 50 trees"};
}

// --- 8: generalized Gaussian reductions and normalization -------------------

Outcome criterion_8() {
    double worst_reduction = 0.0;
    const double q = 0.7;
    for (int i = 0; i < 1000; ++i) {
        double y = -10.0 + 20.0 * i / 999.0;
        worst_reduction = std::max(
            worst_reduction, std::abs(ggd_pdf(y, {q, 1.0}) - laplacian_pdf(y, q)));
        worst_reduction = std::max(
            worst_reduction,
            std::abs(ggd_pdf(y, {q, 2.0}) - gaussian_pdf(y, q / std::sqrt(2.0))));
    }

    // Total mass via the substitution y = q u^2, which concentrates the
    // quadrature nodes near the origin where heavy-tailed shapes peak and
    // reaches y = 400 q by u = 20 (tail mass far below the tolerance).
    double worst_mass = 0.0;
    for (double p : {0.5, 1.0, 2.0, 4.0}) {
        for (double scale : {0.5, 1.0}) {
            double mass = 2.0 * oracle::simpson(0.0, 20.0, 40000, [&](double u) {
                return ggd_pdf(scale * u * u, {scale, p}) * 2.0 * scale * u;
            });
            worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
        }
    }

    bool pass = worst_reduction <= 1e-12 && worst_mass <= 1e-6;
    return {pass, "max reduction gap " + fmt_g(worst_reduction) + ", max |mass - 1| " +
                      fmt_g(worst_mass)};
}

// --- 9 and 10: step-edge detection quality ----------------------------------

EdgeMap periodic_step_truth(int w, int h, int col) {
    EdgeMap truth(w, h);
    for (int y = 0; y < h; ++y) {
        truth.at(0, y) = 1;  // wraparound seam is a real discontinuity
        truth.at(col, y) = 1;
    }
    return truth;
}

Outcome criterion_9() {
    GrayImage img = make_step_image(64, 64, 32, 0.0, 1.0);
    PipelineConfig config;
    config.scales = 2;
    DetectResult r = detect_edges(img, config);
    F1Result f1 = edge_f1(r.map, periodic_step_truth(64, 64, 32), 1);
    return {f1.f1 >= 0.90,
            "F1 " + fmt_g(f1.f1) + " at 1 px, " + std::to_string(edge_count(r.map)) +
                " edge pixels"};
}

Outcome criterion_10() {
    GrayImage img = make_step_image(64, 64, 32, 0.0, 1.0);
    PipelineConfig config;
    config.scales = 2;
    int clean_count = edge_count(detect_edges(img, config).map);

    GrayImage noisy = add_gaussian_noise(img, 0.05, 424242);
    DetectResult r = detect_edges(noisy, config);
    F1Result f1 = edge_f1(r.map, periodic_step_truth(64, 64, 32), 1);
    int count = edge_count(r.map);

    bool pass = f1.f1 >= 0.75 && count <= 3 * clean_count && clean_count > 0;
    return {pass, "F1 " + fmt_g(f1.f1) + ", " + std::to_string(count) + " edge pixels vs " +
                      std::to_string(clean_count) + " clean"};
}

// --- 11: CLI byte determinism ------------------------------------------------

int run_cmd(const std::string& cmd) {
    int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
    if (rc == -1 || !WIFEXITED(rc)) return -1;
    return WEXITSTATUS(rc);
}

std::vector<char> slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(in),
                             std::istreambuf_iterator<char>());
}

Outcome criterion_11() {
    const char* bin = std::getenv("SWTEDGE_BIN");
    if (!bin) return {false, "SWTEDGE_BIN is not set"};

    char tmpl[] = "/tmp/swtedge_accept_XXXXXX";
    if (!mkdtemp(tmpl)) return {false, "could not create a temp directory"};
    fs::path dir = tmpl;
    auto cleanup = [&dir] {
        std::error_code ec;
        fs::remove_all(dir, ec);
    };

    std::string img = (dir / "img.pgm").string();
    if (run_cmd(std::string(bin) + " synth step --out " + img) != 0) {
        cleanup();
        return {false, "synth failed"};
    }
    auto detect = [&](const std::string& tag) {
        return std::string(bin) + " detect --in " + img + " --out " +
               (dir / (tag + ".pbm")).string() + " --metrics " +
               (dir / (tag + ".metrics")).string() +
               " --scales 2 --noise-sigma 0.05 --seed 99";
    };
    if (run_cmd(detect("a")) != 0 || run_cmd(detect("b")) != 0) {
        cleanup();
        return {false, "detect failed"};
    }

    bool maps_equal = slurp(dir / "a.pbm") == slurp(dir / "b.pbm");
    bool metrics_equal = slurp(dir / "a.metrics") == slurp(dir / "b.metrics");
    bool nonempty = !slurp(dir / "a.pbm").empty() && !slurp(dir / "a.metrics").empty();
    cleanup();

    bool pass = maps_equal && metrics_equal && nonempty;
    std::string note = std::string("maps ") + (maps_equal ? "identical" : "DIFFER") +
                       ", metrics " + (metrics_equal ? "identical" : "DIFFER");
    return {pass, note};
}

struct Criterion {
    const char* description;
    std::function<Outcome()> run;
};

const Criterion kCriteria[] = {
    {"periodic wavelet transform reconstructs random images exactly", criterion_1},
    {"wavelet analysis commutes with circular shifts", criterion_2},
    {"chain MAP decoding matches exhaustive search", criterion_3},
    {"chain likelihood matches exhaustive summation", criterion_4},
    {"EM never decreases the training log-likelihood", criterion_5},
    {"EM recovers known chain parameters from sampled data", criterion_6},
    {"tree inference matches exhaustive enumeration", criterion_7},
    {"generalized Gaussian density reduces and normalizes correctly", criterion_8},
    {"clean step edge is localized within one pixel", criterion_9},
    {"noisy step detection stays accurate without overfiring", criterion_10},
    {"identical CLI invocations produce byte-identical outputs", criterion_11},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            int id = std::atoi(argv[++i]);
            if (id < 1 || id > 11) {
                std::fprintf(stderr, "criterion id must be 1..11, got %s\n", argv[i]);
                return 2;
            }
            selected.push_back(id);
        } else {
            std::fprintf(stderr, "usage: %s [--criterion N]...\n", argv[0]);
            return 2;
        }
    }
    if (selected.empty()) {
        for (int id = 1; id <= 11; ++id) selected.push_back(id);
    }

    bool all_pass = true;
    for (int id : selected) {
        Outcome outcome;
        try {
            outcome = kCriteria[id - 1].run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %d: %s - %s (%s)\n", id, outcome.pass ? "PASS" : "FAIL",
                    kCriteria[id - 1].description, outcome.note.c_str());
        all_pass = all_pass && outcome.pass;
    }
    return all_pass ? 0 : 1;
}
