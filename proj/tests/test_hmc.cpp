#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "support/oracles.hpp"
#include "swtedge/hmc.hpp"
#include "swtedge/rng.hpp"
#include "swtedge/stat_models.hpp"

using namespace swtedge;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("chain parameter validation") {
    ChainParams good;
    CHECK_NOTHROW(good.validate());

    ChainParams bad_row = good;
    bad_row.transition[0] = {0.9, 0.1 + 1e-6};
    CHECK_THROWS_AS(bad_row.validate(), std::invalid_argument);

    ChainParams negative = good;
    negative.initial = {1.2, -0.2};
    CHECK_THROWS_AS(negative.validate(), std::invalid_argument);

    ChainParams tiny_sigma = good;
    tiny_sigma.sigma0 = 1e-9;  // below the variance floor
    CHECK_THROWS_AS(tiny_sigma.validate(), std::invalid_argument);

    ChainParams degenerate_rows = good;
    degenerate_rows.transition = {{{1.0, 0.0}, {0.0, 1.0}}};
    CHECK_NOTHROW(degenerate_rows.validate());
}

TEST_CASE("single-step decoding follows the prior under equal emissions") {
    // Emission densities coincide at w = 0 when b1 = sigma0 sqrt(2 pi) / 2,
    // so only the prior separates the states.
    ChainParams p;
    p.sigma0 = 0.1;
    p.b1 = 0.1 * std::sqrt(2.0 * 3.14159265358979323846) / 2.0;

    p.initial = {0.9, 0.1};
    std::vector<double> obs{0.0};
    ViterbiResult r0 = viterbi(obs, p);
    REQUIRE(r0.states.size() == 1);
    CHECK(r0.states[0] == 0);

    p.initial = {0.1, 0.9};
    ViterbiResult r1 = viterbi(obs, p);
    CHECK(r1.states[0] == 1);
}

TEST_CASE("absorbing chains never leave their start state") {
    ChainParams p;
    p.transition = {{{1.0, 0.0}, {0.0, 1.0}}};
    std::vector<double> obs{0.5, -2.0, 0.3, 0.0};

    p.initial = {0.0, 1.0};
    ViterbiResult ones = viterbi(obs, p);
    for (auto s : ones.states) CHECK(s == 1);
    CHECK(std::isfinite(ones.log_prob));

    p.initial = {1.0, 0.0};
    ViterbiResult zeros = viterbi(obs, p);
    for (auto s : zeros.states) CHECK(s == 0);
}

TEST_CASE("trellis shape and backpointer initialization") {
    ChainParams p;
    std::vector<double> obs{0.1, -0.4, 0.9};
    ViterbiResult r = viterbi(obs, p);
    REQUIRE(r.trellis.delta.size() == 3);
    REQUIRE(r.trellis.psi.size() == 3);
    CHECK(r.trellis.psi[0][0] == 0);
    CHECK(r.trellis.psi[0][1] == 0);
    for (auto s : r.states) CHECK((s == 0 || s == 1));
}

TEST_CASE("decoded paths attain the exhaustive maximum") {
    Rng rng(330);
    for (int trial = 0; trial < 100; ++trial) {
        int t_len = 1 + trial % 12;
        ChainParams p = oracle::random_chain_params(rng);
        std::vector<double> obs = oracle::random_observations(rng, t_len);

        ViterbiResult r = viterbi(obs, p);
        oracle::ChainExhaustive ex = oracle::chain_exhaustive(obs, p);
        CHECK(std::fabs(r.log_prob - ex.best_log_prob) <= 1e-9);
        // The returned path itself must score what the decoder claims.
        CHECK(std::fabs(oracle::chain_path_log_score(obs, p, r.states) - r.log_prob) <= 1e-9);
    }
}

TEST_CASE("single-observation posteriors are the prior-weighted emissions") {
    ChainParams p;
    p.initial = {0.9, 0.1};
    p.sigma0 = 0.1;
    p.b1 = 1.0;
    double o = 0.05;
    FbResult r = forward_backward(std::vector<double>{o}, p);
    double w0 = 0.9 * gaussian_pdf(o, p.sigma0);
    double w1 = 0.1 * laplacian_pdf(o, p.b1);
    CHECK(r.gamma[0][0] == doctest::Approx(w0 / (w0 + w1)).epsilon(1e-12));
    CHECK(r.gamma[0][1] == doctest::Approx(w1 / (w0 + w1)).epsilon(1e-12));
    CHECK(r.log_likelihood == doctest::Approx(std::log(w0 + w1)).epsilon(1e-12));
    CHECK(r.xi.empty());
}

TEST_CASE("absorbing chains concentrate all posterior mass") {
    ChainParams p;
    p.initial = {1.0, 0.0};
    p.transition = {{{1.0, 0.0}, {0.0, 1.0}}};
    std::vector<double> obs{0.3, -0.7, 0.1, 2.0, 0.0};
    FbResult r = forward_backward(obs, p);
    for (const auto& g : r.gamma) {
        CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("forward-backward matches exhaustive summation") {
    Rng rng(440);
    for (int trial = 0; trial < 100; ++trial) {
        int t_len = 1 + trial % 10;
        ChainParams p = oracle::random_chain_params(rng);
        std::vector<double> obs = oracle::random_observations(rng, t_len);

        FbResult r = forward_backward(obs, p);
        oracle::ChainExhaustive ex = oracle::chain_exhaustive(obs, p);
        CHECK(std::fabs(r.log_likelihood - ex.log_likelihood) <= 1e-9);
        CHECK(chain_log_likelihood(obs, p) ==
              doctest::Approx(r.log_likelihood).epsilon(1e-12));
        for (int t = 0; t < t_len; ++t) {
            CHECK(std::fabs(r.gamma[std::size_t(t)][0] - ex.gamma[std::size_t(t)][0]) <= 1e-9);
            CHECK(std::fabs(r.gamma[std::size_t(t)][1] - ex.gamma[std::size_t(t)][1]) <= 1e-9);
            CHECK(r.gamma[std::size_t(t)][0] + r.gamma[std::size_t(t)][1] ==
                  doctest::Approx(1.0).epsilon(1e-12));
        }
        for (int t = 0; t + 1 < t_len; ++t) {
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    CHECK(std::fabs(r.xi[std::size_t(t)][std::size_t(i)][std::size_t(j)] -
                                    ex.xi[std::size_t(t)][std::size_t(i)][std::size_t(j)]) <=
                          1e-9);
                }
            }
            // Pairwise posteriors must marginalize back to the node posteriors.
            double row0 = r.xi[std::size_t(t)][0][0] + r.xi[std::size_t(t)][0][1];
            CHECK(row0 == doctest::Approx(r.gamma[std::size_t(t)][0]).epsilon(1e-9));
            double col1 = r.xi[std::size_t(t)][0][1] + r.xi[std::size_t(t)][1][1];
            CHECK(col1 == doctest::Approx(r.gamma[std::size_t(t) + 1][1]).epsilon(1e-9));
        }
    }
}

TEST_CASE("per-step emission rescaling shifts the likelihood and preserves the path") {
    Rng rng(17);
    ChainParams p = oracle::random_chain_params(rng);
    std::vector<double> obs = oracle::random_observations(rng, 6);
    auto le = chain_log_emissions(obs, p);

    FbResult base_fb = forward_backward_core(le, p);
    ViterbiResult base_vit = viterbi_core(le, p);

    const double c = 137.5;
    auto shifted = le;
    shifted[2][0] += c;
    shifted[2][1] += c;

    FbResult fb = forward_backward_core(shifted, p);
    CHECK(fb.log_likelihood == doctest::Approx(base_fb.log_likelihood + c).epsilon(1e-9));

    ViterbiResult vit = viterbi_core(shifted, p);
    CHECK(vit.states == base_vit.states);
    CHECK(vit.log_prob == doctest::Approx(base_vit.log_prob + c).epsilon(1e-9));
}

TEST_CASE("a step with no emission mass reports its index") {
    ChainParams p;
    std::vector<std::array<double, 2>> le{{0.0, 0.0}, {-kInf, -kInf}, {0.0, 0.0}};
    CHECK_THROWS_WITH_AS(forward_backward_core(le, p),
                         doctest::Contains("lost all probability mass"), std::runtime_error);
}

TEST_CASE("empty observation sequences are rejected") {
    ChainParams p;
    std::vector<double> empty;
    CHECK_THROWS_AS(viterbi(empty, p), std::invalid_argument);
    CHECK_THROWS_AS(forward_backward(empty, p), std::invalid_argument);
}

TEST_CASE("training demands a sequence with at least two steps") {
    ChainParams init;
    EmOptions opts;
    CHECK_THROWS_AS(em_train({}, init, opts), std::invalid_argument);
    CHECK_THROWS_AS(em_train({{0.5}}, init, opts), std::invalid_argument);
    CHECK_NOTHROW(em_train({{0.5}, {0.3, 0.2}}, init, opts));
}

TEST_CASE("an infinite tolerance runs exactly one update") {
    Rng rng(21);
    std::vector<std::vector<double>> seqs{oracle::random_observations(rng, 30)};
    ChainParams init;
    EmOptions opts;
    opts.max_iters = 50;
    opts.tol = kInf;
    ChainTrainResult r = em_train(seqs, init, opts);
    CHECK(r.iterations == 1);
    CHECK(r.history.size() == 2);
    CHECK(r.converged);
}

TEST_CASE("training history never decreases") {
    Rng rng(550);
    ChainParams truth = oracle::random_chain_params(rng);
    std::vector<std::vector<double>> seqs;
    for (int i = 0; i < 3; ++i) {
        seqs.push_back(oracle::sample_chain(rng, truth, 60));
    }
    for (int init_trial = 0; init_trial < 10; ++init_trial) {
        ChainParams init = oracle::random_chain_params(rng);
        EmOptions opts;
        opts.max_iters = 25;
        opts.tol = 1e-12;
        ChainTrainResult r = em_train(seqs, init, opts);
        REQUIRE(r.history.size() >= 2);
        for (std::size_t i = 1; i < r.history.size(); ++i) {
            CHECK(r.history[i] >= r.history[i - 1] - 1e-9);
        }
    }
}

TEST_CASE("one update never decreases the exhaustive log-likelihood") {
    Rng rng(660);
    for (int trial = 0; trial < 10; ++trial) {
        ChainParams init = oracle::random_chain_params(rng);
        std::vector<double> obs = oracle::random_observations(rng, 8);
        EmOptions opts;
        opts.max_iters = 1;
        opts.tol = 1e-15;
        ChainTrainResult r = em_train({obs}, init, opts);
        double before = oracle::chain_exhaustive(obs, init).log_likelihood;
        double after = oracle::chain_exhaustive(obs, r.params).log_likelihood;
        CHECK(r.history.front() == doctest::Approx(before).epsilon(1e-9));
        CHECK(after >= before - 1e-9);
        CHECK(r.history.back() == doctest::Approx(after).epsilon(1e-9));
    }
}

TEST_CASE("training recovers the generating parameters") {
    ChainParams truth;
    truth.initial = {0.9, 0.1};
    truth.transition = {{{0.95, 0.05}, {0.4, 0.6}}};
    truth.sigma0 = 0.01;
    truth.b1 = 0.1;

    Rng rng(612);
    std::vector<std::vector<double>> seqs;
    for (int i = 0; i < 100; ++i) {
        seqs.push_back(oracle::sample_chain(rng, truth, 1000));
    }

    EmOptions opts;
    opts.max_iters = 100;
    opts.tol = 1e-8;
    ChainTrainResult r = em_train(seqs, default_chain_init(seqs), opts);

    auto rel = [](double est, double want) { return std::fabs(est - want) / std::fabs(want); };
    CHECK(rel(r.params.initial[0], truth.initial[0]) <= 0.15);
    CHECK(rel(r.params.initial[1], truth.initial[1]) <= 0.15);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            CHECK(rel(r.params.transition[std::size_t(i)][std::size_t(j)],
                      truth.transition[std::size_t(i)][std::size_t(j)]) <= 0.15);
        }
    }
    CHECK(rel(r.params.sigma0, truth.sigma0) <= 0.15);
    CHECK(rel(r.params.b1, truth.b1) <= 0.15);
}

TEST_CASE("an unreachable state freezes instead of degenerating") {
    ChainParams init;
    init.initial = {1.0, 0.0};
    init.transition = {{{1.0, 0.0}, {0.5, 0.5}}};
    init.sigma0 = 0.05;
    init.b1 = 0.7;
    std::vector<std::vector<double>> seqs{{0.0, 0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
    EmOptions opts;
    opts.max_iters = 3;
    opts.tol = 1e-15;
    ChainTrainResult r = em_train(seqs, init, opts);
    CHECK(r.any_state_frozen);
    CHECK(r.params.b1 == 0.7);                          // frozen emission
    CHECK(r.params.transition[1][0] == 0.5);            // frozen row
    CHECK(r.params.sigma0 == kVarianceFloor);           // all-zero data floors sigma
    for (std::size_t i = 1; i < r.history.size(); ++i) {
        CHECK(r.history[i] >= r.history[i - 1] - 1e-9);
    }
}

TEST_CASE("the data-driven initializer splits magnitudes 75/25") {
    std::vector<std::vector<double>> seqs{
        {0.1, -0.1, 0.1, 0.1, -0.1, 0.1, 0.1, 0.1},
        {-0.1, 0.1, 0.1, -0.1, 1.0, -1.0, 1.0, 1.0},
    };
    ChainParams p = default_chain_init(seqs);
    CHECK(p.sigma0 == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(p.b1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.initial[0] == 0.9);
    CHECK(p.transition[1][1] == 0.7);

    std::vector<std::vector<double>> zeros{{0.0, 0.0, 0.0, 0.0}};
    ChainParams z = default_chain_init(zeros);
    CHECK(z.sigma0 == kVarianceFloor);
    CHECK(z.b1 == kVarianceFloor);
}

TEST_CASE("stationary distribution of the transition matrix") {
    ChainParams p;
    p.transition = {{{0.95, 0.05}, {0.4, 0.6}}};
    auto pi = stationary_distribution(p);
    CHECK(pi[0] == doctest::Approx(8.0 / 9.0).epsilon(1e-12));
    CHECK(pi[1] == doctest::Approx(1.0 / 9.0).epsilon(1e-12));

    ChainParams frozen;
    frozen.initial = {0.3, 0.7};
    frozen.transition = {{{1.0, 0.0}, {0.0, 1.0}}};
    auto fallback = stationary_distribution(frozen);
    CHECK(fallback[0] == 0.3);
    CHECK(fallback[1] == 0.7);
}
