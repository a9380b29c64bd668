#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "swtedge/hmc.hpp"
#include "swtedge/swt.hpp"

namespace swtedge {

// Complete quadtree of wavelet coefficients linking scales. depths[k]
// holds the 4^k values of depth k in row-major 2^k x 2^k order; depth 0 is
// the root (the coarsest scale) and the last depth the leaves (the finest).
// The children of node (u, v) at depth k are (2u + du, 2v + dv) at depth
// k + 1, du, dv in {0, 1}.
struct CoeffQuadtree {
    std::vector<std::vector<double>> depths;

    int depth_count() const { return int(depths.size()); }
    int side(int depth) const { return 1 << depth; }
    double value(int depth, int u, int v) const {
        return depths[depth][std::size_t(u) * side(depth) + v];
    }
};

// Builds the tree rooted at position (root_r, root_c) of the coarsest
// plane. planes run coarsest to finest, all with equal dimensions (the
// undecimated transform keeps full resolution at every scale, so every
// coarse position roots one complete tree). The node at depth k and block
// offset (u, v) reads planes[k] at row (root_r * 2^k + u) mod height,
// column (root_c * 2^k + v) mod width — each parent's support splits into
// the four child positions at the next finer scale.
CoeffQuadtree extract_quadtree(std::span<const Plane> planes, int root_r, int root_c);

// Tree-structured two-state model. State semantics match the chain: 0 is
// smooth (Gaussian emission), 1 is edge (Laplacian). Parameters are tied
// per depth.
struct TreeParams {
    std::array<double, 2> root_prior{0.9, 0.1};
    // child_transition[d-1][m][n] = P(s_child = n | s_parent = m) for
    // children at depth d (one matrix per non-root depth)
    std::vector<std::array<std::array<double, 2>, 2>> child_transition;

    struct Emission {
        double sigma0;
        double b1;
    };
    std::vector<Emission> emissions;  // one per depth

    void validate(int depth_count) const;
};

// Returns defaults sized for depth_count: root prior {0.9, 0.1}, every
// transition {{0.9, 0.1}, {0.3, 0.7}}, every emission {0.1, 1.0}.
TreeParams make_tree_params(int depth_count);

// Upward sweep. log_beta[k][node][m] is the log conditional likelihood of
// the subtree hanging off that node given its state m; the total tree
// likelihood combines the root betas with the root prior.
struct UpwardResult {
    std::vector<std::vector<std::array<double, 2>>> log_beta;
    double log_likelihood;
};
UpwardResult upward_pass(const CoeffQuadtree& tree, const TreeParams& params);

// Downward sweep, combining with an upward result to produce exact
// posteriors. posterior[k][node][m] = P(s = m | all coefficients);
// pairwise[k][node][m][n] (k >= 1) is the joint posterior of the node's
// parent being m and the node n. Everything runs in log space.
struct DownwardResult {
    std::vector<std::vector<std::array<double, 2>>> posterior;
    std::vector<std::vector<std::array<std::array<double, 2>, 2>>> pairwise;
};
DownwardResult downward_pass(const CoeffQuadtree& tree, const TreeParams& params,
                             const UpwardResult& up);

// Joint MAP state assignment by max-product over the tree, all in log
// space. Ties break toward state 0 at every choice.
struct TreeMapResult {
    std::vector<std::vector<std::uint8_t>> states;  // [depth][node]
    double log_prob;
};
TreeMapResult map_states_tree(const CoeffQuadtree& tree, const TreeParams& params);

struct TreeTrainResult {
    TreeParams params;
    std::vector<double> history;  // summed tree log-likelihoods, as in the chain trainer
    int iterations = 0;
    bool converged = false;
    bool any_state_frozen = false;
};

// EM over a forest of equal-depth trees: the E-step runs the up/down
// sweeps per tree, the M-step re-estimates the root prior from root
// posteriors, each depth's transition matrix from the pairwise posteriors,
// and each depth's emission scales from the weighted moments, with the
// same responsibility freezing and variance flooring as the chain
// trainer. Stopping mirrors em_train.
TreeTrainResult em_train_tree(const std::vector<CoeffQuadtree>& trees,
                              const TreeParams& init, const EmOptions& opts);

// Data-driven start mirroring default_chain_init, applied per depth across
// the forest: sigma0 from the smallest 75% of |coefficients| at that
// depth, b1 from the largest 25%.
TreeParams default_tree_init(const std::vector<CoeffQuadtree>& trees);

// Marginal state distribution at each depth implied by the root prior and
// the transition chain.
std::vector<std::array<double, 2>> depth_state_priors(const TreeParams& params,
                                                      int depth_count);

}  // namespace swtedge
