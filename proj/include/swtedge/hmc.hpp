#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace swtedge {

// Two-state hidden Markov chain over a sequence of wavelet coefficients.
// State 0 models smooth regions with a zero-mean Gaussian emission, state 1
// models edges with a zero-mean Laplacian.
struct ChainParams {
    std::array<double, 2> initial{0.9, 0.1};
    // transition[i][j] = P(s_t = j | s_{t-1} = i)
    std::array<std::array<double, 2>, 2> transition{{{0.9, 0.1}, {0.3, 0.7}}};
    double sigma0 = 0.1;  // state-0 Gaussian std-dev
    double b1 = 1.0;      // state-1 Laplacian scale

    // Throws std::invalid_argument when a probability leaves [0, 1], a row
    // fails to sum to 1 within 1e-12, or an emission scale drops below the
    // variance floor.
    void validate() const;
};

using StateSequence = std::vector<std::uint8_t>;  // entries in {0, 1}

// Dynamic-programming table of the MAP decoder: delta holds the running
// best log scores, psi the argmax backpointers (psi[0] is {0, 0} by
// convention since the first step has no predecessor).
struct Trellis {
    std::vector<std::array<double, 2>> delta;
    std::vector<std::array<std::uint8_t, 2>> psi;
};

struct ViterbiResult {
    StateSequence states;
    double log_prob;  // log of the best path's joint density
    Trellis trellis;
};

// MAP state sequence. All scoring happens in log space; every argmax tie
// breaks toward state 0 (candidates are scanned 0 then 1 and replaced only
// on strict improvement).
ViterbiResult viterbi(std::span<const double> obs, const ChainParams& params);

struct FbResult {
    double log_likelihood;
    // gamma[t][i] = P(s_t = i | obs); xi[t][i][j] = P(s_t = i, s_{t+1} = j | obs)
    std::vector<std::array<double, 2>> gamma;
    std::vector<std::array<std::array<double, 2>, 2>> xi;  // size T-1
};

// Scaled forward-backward pass. Per-step emission vectors are shifted by
// their maximum before exponentiation and the forward variables normalized
// step by step, so the recursion never under- or overflows; the
// log-likelihood is recovered from the scale factors. A step whose scaled
// emissions still sum to zero mass raises std::runtime_error naming the
// step index.
FbResult forward_backward(std::span<const double> obs, const ChainParams& params);

// Forward pass only; same scaling scheme.
double chain_log_likelihood(std::span<const double> obs, const ChainParams& params);

// Log emission densities per step: column 0 Gaussian(sigma0), column 1
// Laplacian(b1). The *_core variants below consume such a table directly,
// which lets tests probe invariances of the recursions themselves.
std::vector<std::array<double, 2>> chain_log_emissions(std::span<const double> obs,
                                                       const ChainParams& params);
ViterbiResult viterbi_core(const std::vector<std::array<double, 2>>& log_emissions,
                           const ChainParams& params);
FbResult forward_backward_core(const std::vector<std::array<double, 2>>& log_emissions,
                               const ChainParams& params);

struct EmOptions {
    int max_iters = 50;   // parameter updates, >= 0
    double tol = 1e-6;    // relative log-likelihood improvement threshold, > 0
};

struct ChainTrainResult {
    ChainParams params;
    // Log-likelihood under the starting parameters, then after every
    // update; monotone non-decreasing up to floating-point noise.
    std::vector<double> history;
    int iterations = 0;            // updates actually applied
    bool converged = false;        // stopping rule fired before max_iters ran out
    bool any_state_frozen = false;
};

// Baum-Welch over one or more observation sequences (statistics pooled in
// sequence order). M-step:
//   initial[i]   <- mean of gamma_1(i) across sequences
//   a_ij         <- sum xi_t(i,j) / sum_j sum xi_t(i,j)
//   sigma0^2     <- sum gamma_t(0) o_t^2 / sum gamma_t(0)
//   b1           <- sum gamma_t(1) |o_t| / sum gamma_t(1)
// Emission scales are clamped to the variance floor. A state whose total
// responsibility falls below 1e-12 keeps its previous emission and
// transition row and sets any_state_frozen. Stops after the relative
// improvement (ll_new - ll_prev) / max(|ll_prev|, 1e-12) drops below tol,
// or after max_iters updates.
ChainTrainResult em_train(const std::vector<std::vector<double>>& sequences,
                          const ChainParams& init, const EmOptions& opts);

// Deterministic, data-driven starting point: sigma0 is the root mean
// square of the smallest 75% of |coefficients|, b1 the mean of the largest
// 25%, both floored; initial and transition take the ChainParams defaults.
ChainParams default_chain_init(const std::vector<std::vector<double>>& sequences);

// Stationary distribution of the transition matrix. Falls back to the
// initial distribution when the chain never leaves its states (both
// off-diagonal rates zero).
std::array<double, 2> stationary_distribution(const ChainParams& params);

}  // namespace swtedge
