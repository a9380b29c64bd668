#include "swtedge/hmt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "swtedge/stat_models.hpp"

namespace swtedge {

namespace {

constexpr double kResponsibilityFloor = 1e-12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse2(double a, double b) {
    double m = std::max(a, b);
    if (m == kNegInf) {
        return kNegInf;
    }
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

void check_distribution(const std::array<double, 2>& d, const std::string& name) {
    for (double p : d) {
        if (!(p >= 0.0) || !(p <= 1.0)) {
            throw std::invalid_argument(name + " has an entry outside [0, 1]");
        }
    }
    if (std::fabs(d[0] + d[1] - 1.0) > 1e-12) {
        throw std::invalid_argument(name + " does not sum to 1");
    }
}

double log_emission(const TreeParams& params, int depth, double w, int state) {
    const TreeParams::Emission& e = params.emissions[depth];
    return state == 0 ? log_gaussian_pdf(w, e.sigma0) : log_laplacian_pdf(w, e.b1);
}

void check_tree(const CoeffQuadtree& tree) {
    if (tree.depths.empty()) {
        throw std::invalid_argument("quadtree has no depths");
    }
    for (int k = 0; k < tree.depth_count(); ++k) {
        std::size_t expect = std::size_t(1) << (2 * k);
        if (tree.depths[k].size() != expect) {
            throw std::invalid_argument("quadtree depth " + std::to_string(k) +
                                        " has the wrong node count");
        }
        for (double w : tree.depths[k]) {
            if (!std::isfinite(w)) {
                throw std::invalid_argument("quadtree coefficients must be finite");
            }
        }
    }
}

// log transition matrices, one per non-root depth
std::vector<std::array<std::array<double, 2>, 2>> log_transitions(const TreeParams& params) {
    std::vector<std::array<std::array<double, 2>, 2>> out(params.child_transition.size());
    for (std::size_t d = 0; d < params.child_transition.size(); ++d) {
        for (int m = 0; m < 2; ++m) {
            for (int n = 0; n < 2; ++n) {
                out[d][m][n] = std::log(params.child_transition[d][m][n]);
            }
        }
    }
    return out;
}

}  // namespace

void TreeParams::validate(int depth_count) const {
    if (depth_count < 1) {
        throw std::invalid_argument("depth_count must be positive");
    }
    check_distribution(root_prior, "root prior");
    if (int(child_transition.size()) != depth_count - 1) {
        throw std::invalid_argument("expected one transition matrix per non-root depth");
    }
    for (std::size_t d = 0; d < child_transition.size(); ++d) {
        check_distribution(child_transition[d][0],
                           "transition row 0 at depth " + std::to_string(d + 1));
        check_distribution(child_transition[d][1],
                           "transition row 1 at depth " + std::to_string(d + 1));
    }
    if (int(emissions.size()) != depth_count) {
        throw std::invalid_argument("expected one emission pair per depth");
    }
    for (const Emission& e : emissions) {
        if (!(e.sigma0 >= kVarianceFloor) || !std::isfinite(e.sigma0) ||
            !(e.b1 >= kVarianceFloor) || !std::isfinite(e.b1)) {
            throw std::invalid_argument(
                "emission scales must be finite and at least the variance floor");
        }
    }
}

TreeParams make_tree_params(int depth_count) {
    if (depth_count < 1) {
        throw std::invalid_argument("depth_count must be positive");
    }
    TreeParams params;
    params.child_transition.assign(std::size_t(depth_count - 1), {{{0.9, 0.1}, {0.3, 0.7}}});
    params.emissions.assign(std::size_t(depth_count), {0.1, 1.0});
    return params;
}

CoeffQuadtree extract_quadtree(std::span<const Plane> planes, int root_r, int root_c) {
    if (planes.empty()) {
        throw std::invalid_argument("extract_quadtree needs at least one plane");
    }
    int w = planes[0].width, h = planes[0].height;
    for (const Plane& p : planes) {
        if (p.width != w || p.height != h) {
            throw std::invalid_argument("all planes must share dimensions");
        }
    }
    if (root_r < 0 || root_r >= h || root_c < 0 || root_c >= w) {
        throw std::invalid_argument("tree root lies outside the plane");
    }

    CoeffQuadtree tree;
    tree.depths.resize(planes.size());
    for (std::size_t k = 0; k < planes.size(); ++k) {
        int side = 1 << k;
        tree.depths[k].resize(std::size_t(side) * side);
        for (int u = 0; u < side; ++u) {
            int row = int(((long(root_r) << k) + u) % h);
            for (int v = 0; v < side; ++v) {
                int col = int(((long(root_c) << k) + v) % w);
                tree.depths[k][std::size_t(u) * side + v] = planes[k].at(col, row);
            }
        }
    }
    return tree;
}

UpwardResult upward_pass(const CoeffQuadtree& tree, const TreeParams& params) {
    check_tree(tree);
    int depth_count = tree.depth_count();
    params.validate(depth_count);
    auto log_eps = log_transitions(params);

    UpwardResult up;
    up.log_beta.resize(depth_count);
    for (int k = depth_count - 1; k >= 0; --k) {
        int side = tree.side(k);
        up.log_beta[k].resize(tree.depths[k].size());
        for (int u = 0; u < side; ++u) {
            for (int v = 0; v < side; ++v) {
                std::size_t idx = std::size_t(u) * side + v;
                double w = tree.depths[k][idx];
                std::array<double, 2> lb{log_emission(params, k, w, 0),
                                         log_emission(params, k, w, 1)};
                if (k + 1 < depth_count) {
                    int child_side = side * 2;
                    for (int du = 0; du < 2; ++du) {
                        for (int dv = 0; dv < 2; ++dv) {
                            std::size_t cidx =
                                std::size_t(2 * u + du) * child_side + (2 * v + dv);
                            const auto& cb = up.log_beta[k + 1][cidx];
                            for (int m = 0; m < 2; ++m) {
                                lb[m] += lse2(log_eps[k][m][0] + cb[0],
                                              log_eps[k][m][1] + cb[1]);
                            }
                        }
                    }
                }
                up.log_beta[k][idx] = lb;
            }
        }
    }
    up.log_likelihood = lse2(std::log(params.root_prior[0]) + up.log_beta[0][0][0],
                             std::log(params.root_prior[1]) + up.log_beta[0][0][1]);
    return up;
}

DownwardResult downward_pass(const CoeffQuadtree& tree, const TreeParams& params,
                             const UpwardResult& up) {
    check_tree(tree);
    int depth_count = tree.depth_count();
    params.validate(depth_count);
    if (int(up.log_beta.size()) != depth_count) {
        throw std::invalid_argument("upward result does not match the tree");
    }
    auto log_eps = log_transitions(params);
    double log_l = up.log_likelihood;

    std::vector<std::vector<std::array<double, 2>>> log_alpha(depth_count);
    for (int k = 0; k < depth_count; ++k) {
        log_alpha[k].resize(tree.depths[k].size());
    }
    log_alpha[0][0] = {std::log(params.root_prior[0]), std::log(params.root_prior[1])};

    DownwardResult down;
    down.posterior.resize(depth_count);
    down.pairwise.resize(depth_count);
    for (int k = 0; k < depth_count; ++k) {
        down.posterior[k].resize(tree.depths[k].size());
        if (k >= 1) {
            down.pairwise[k].resize(tree.depths[k].size());
        }
    }

    for (int k = 0; k + 1 < depth_count; ++k) {
        int side = tree.side(k);
        int child_side = side * 2;
        for (int u = 0; u < side; ++u) {
            for (int v = 0; v < side; ++v) {
                std::size_t idx = std::size_t(u) * side + v;
                for (int du = 0; du < 2; ++du) {
                    for (int dv = 0; dv < 2; ++dv) {
                        std::size_t cidx = std::size_t(2 * u + du) * child_side + (2 * v + dv);
                        const auto& cb = up.log_beta[k + 1][cidx];
                        // Message this child sent up, divided back out of
                        // beta so the parent quantity excludes the child's
                        // own subtree.
                        std::array<double, 2> ex;
                        for (int m = 0; m < 2; ++m) {
                            double msg = lse2(log_eps[k][m][0] + cb[0],
                                              log_eps[k][m][1] + cb[1]);
                            ex[m] = log_alpha[k][idx][m] + up.log_beta[k][idx][m] - msg;
                        }
                        for (int n = 0; n < 2; ++n) {
                            log_alpha[k + 1][cidx][n] = lse2(log_eps[k][0][n] + ex[0],
                                                             log_eps[k][1][n] + ex[1]);
                        }
                        double total = 0.0;
                        auto& pw = down.pairwise[k + 1][cidx];
                        for (int m = 0; m < 2; ++m) {
                            for (int n = 0; n < 2; ++n) {
                                pw[m][n] = std::exp(ex[m] + log_eps[k][m][n] + cb[n] - log_l);
                                total += pw[m][n];
                            }
                        }
                        if (!(total > 0.0)) {
                            throw std::runtime_error("pair posterior lost all mass at depth " +
                                                     std::to_string(k + 1));
                        }
                        for (int m = 0; m < 2; ++m) {
                            for (int n = 0; n < 2; ++n) {
                                pw[m][n] /= total;
                            }
                        }
                    }
                }
            }
        }
    }

    for (int k = 0; k < depth_count; ++k) {
        for (std::size_t idx = 0; idx < tree.depths[k].size(); ++idx) {
            double p0 = std::exp(log_alpha[k][idx][0] + up.log_beta[k][idx][0] - log_l);
            double p1 = std::exp(log_alpha[k][idx][1] + up.log_beta[k][idx][1] - log_l);
            double sum = p0 + p1;
            if (!(sum > 0.0)) {
                throw std::runtime_error("state posterior lost all mass at depth " +
                                         std::to_string(k));
            }
            down.posterior[k][idx] = {p0 / sum, p1 / sum};
        }
    }
    return down;
}

TreeMapResult map_states_tree(const CoeffQuadtree& tree, const TreeParams& params) {
    check_tree(tree);
    int depth_count = tree.depth_count();
    params.validate(depth_count);
    auto log_eps = log_transitions(params);

    // mu[k][node][m]: best log score of the subtree under the node given
    // the node's state m. bp[k][node][m]: the node's best state when its
    // parent takes state m.
    std::vector<std::vector<std::array<double, 2>>> mu(depth_count);
    std::vector<std::vector<std::array<std::uint8_t, 2>>> bp(depth_count);
    for (int k = 0; k < depth_count; ++k) {
        mu[k].resize(tree.depths[k].size());
        bp[k].resize(tree.depths[k].size());
    }

    for (int k = depth_count - 1; k >= 0; --k) {
        int side = tree.side(k);
        for (int u = 0; u < side; ++u) {
            for (int v = 0; v < side; ++v) {
                std::size_t idx = std::size_t(u) * side + v;
                double w = tree.depths[k][idx];
                std::array<double, 2> score{log_emission(params, k, w, 0),
                                            log_emission(params, k, w, 1)};
                if (k + 1 < depth_count) {
                    int child_side = side * 2;
                    for (int du = 0; du < 2; ++du) {
                        for (int dv = 0; dv < 2; ++dv) {
                            std::size_t cidx =
                                std::size_t(2 * u + du) * child_side + (2 * v + dv);
                            const auto& cmu = mu[k + 1][cidx];
                            for (int m = 0; m < 2; ++m) {
                                double best = log_eps[k][m][0] + cmu[0];
                                int arg = 0;
                                double alt = log_eps[k][m][1] + cmu[1];
                                if (alt > best) {
                                    best = alt;
                                    arg = 1;
                                }
                                score[m] += best;
                                bp[k + 1][cidx][m] = std::uint8_t(arg);
                            }
                        }
                    }
                }
                mu[k][idx] = score;
            }
        }
    }

    TreeMapResult result;
    result.states.resize(depth_count);
    for (int k = 0; k < depth_count; ++k) {
        result.states[k].resize(tree.depths[k].size());
    }
    double root0 = std::log(params.root_prior[0]) + mu[0][0][0];
    double root1 = std::log(params.root_prior[1]) + mu[0][0][1];
    result.states[0][0] = root1 > root0 ? 1 : 0;
    result.log_prob = std::max(root0, root1);

    for (int k = 0; k + 1 < depth_count; ++k) {
        int side = tree.side(k);
        int child_side = side * 2;
        for (int u = 0; u < side; ++u) {
            for (int v = 0; v < side; ++v) {
                std::uint8_t parent_state = result.states[k][std::size_t(u) * side + v];
                for (int du = 0; du < 2; ++du) {
                    for (int dv = 0; dv < 2; ++dv) {
                        std::size_t cidx = std::size_t(2 * u + du) * child_side + (2 * v + dv);
                        result.states[k + 1][cidx] = bp[k + 1][cidx][parent_state];
                    }
                }
            }
        }
    }
    return result;
}

namespace {

struct TreeAccumulators {
    std::array<double, 2> root{0.0, 0.0};
    std::vector<std::array<std::array<double, 2>, 2>> trans;  // per non-root depth
    std::vector<std::array<double, 2>> gamma_depth;
    std::vector<double> weighted_sq;
    std::vector<double> weighted_abs;
    double log_likelihood = 0.0;
    int trees = 0;
};

TreeAccumulators expectation_pass(const std::vector<CoeffQuadtree>& trees,
                                  const TreeParams& params, int depth_count) {
    TreeAccumulators acc;
    acc.trans.assign(std::size_t(depth_count - 1), {{{0.0, 0.0}, {0.0, 0.0}}});
    acc.gamma_depth.assign(std::size_t(depth_count), {0.0, 0.0});
    acc.weighted_sq.assign(std::size_t(depth_count), 0.0);
    acc.weighted_abs.assign(std::size_t(depth_count), 0.0);

    for (const CoeffQuadtree& tree : trees) {
        UpwardResult up = upward_pass(tree, params);
        DownwardResult down = downward_pass(tree, params, up);
        acc.log_likelihood += up.log_likelihood;
        acc.trees += 1;
        acc.root[0] += down.posterior[0][0][0];
        acc.root[1] += down.posterior[0][0][1];
        for (int k = 0; k < depth_count; ++k) {
            for (std::size_t idx = 0; idx < tree.depths[k].size(); ++idx) {
                double w = tree.depths[k][idx];
                const auto& g = down.posterior[k][idx];
                acc.gamma_depth[k][0] += g[0];
                acc.gamma_depth[k][1] += g[1];
                acc.weighted_sq[k] += g[0] * w * w;
                acc.weighted_abs[k] += g[1] * std::fabs(w);
                if (k >= 1) {
                    const auto& pw = down.pairwise[k][idx];
                    for (int m = 0; m < 2; ++m) {
                        for (int n = 0; n < 2; ++n) {
                            acc.trans[k - 1][m][n] += pw[m][n];
                        }
                    }
                }
            }
        }
    }
    return acc;
}

TreeParams maximization_step(const TreeAccumulators& acc, const TreeParams& prev,
                             int depth_count, bool& any_frozen) {
    TreeParams next = prev;

    double root_sum = acc.root[0] + acc.root[1];
    next.root_prior[0] = acc.root[0] / root_sum;
    next.root_prior[1] = acc.root[1] / root_sum;

    for (int d = 0; d + 1 < depth_count; ++d) {
        for (int m = 0; m < 2; ++m) {
            double row_sum = acc.trans[d][m][0] + acc.trans[d][m][1];
            if (row_sum < kResponsibilityFloor) {
                any_frozen = true;  // keep the previous row
                continue;
            }
            next.child_transition[d][m][0] = acc.trans[d][m][0] / row_sum;
            next.child_transition[d][m][1] = acc.trans[d][m][1] / row_sum;
        }
    }

    for (int k = 0; k < depth_count; ++k) {
        if (acc.gamma_depth[k][0] < kResponsibilityFloor) {
            any_frozen = true;
        } else {
            next.emissions[k].sigma0 =
                std::max(kVarianceFloor, std::sqrt(acc.weighted_sq[k] / acc.gamma_depth[k][0]));
        }
        if (acc.gamma_depth[k][1] < kResponsibilityFloor) {
            any_frozen = true;
        } else {
            next.emissions[k].b1 =
                std::max(kVarianceFloor, acc.weighted_abs[k] / acc.gamma_depth[k][1]);
        }
    }
    return next;
}

}  // namespace

TreeTrainResult em_train_tree(const std::vector<CoeffQuadtree>& trees,
                              const TreeParams& init, const EmOptions& opts) {
    if (trees.empty()) {
        throw std::invalid_argument("em_train_tree needs at least one tree");
    }
    int depth_count = trees[0].depth_count();
    for (const CoeffQuadtree& tree : trees) {
        if (tree.depth_count() != depth_count) {
            throw std::invalid_argument("all trees must share the same depth");
        }
    }
    init.validate(depth_count);
    if (opts.max_iters < 0) {
        throw std::invalid_argument("max_iters must be non-negative");
    }
    if (!(opts.tol > 0.0)) {
        throw std::invalid_argument("tol must be positive");
    }

    TreeTrainResult result;
    result.params = init;

    TreeAccumulators acc = expectation_pass(trees, result.params, depth_count);
    double ll_prev = acc.log_likelihood;
    result.history.push_back(ll_prev);

    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        result.params = maximization_step(acc, result.params, depth_count,
                                          result.any_state_frozen);
        result.iterations = iter;

        acc = expectation_pass(trees, result.params, depth_count);
        double ll_new = acc.log_likelihood;
        result.history.push_back(ll_new);

        double rel = (ll_new - ll_prev) / std::max(std::fabs(ll_prev), 1e-12);
        ll_prev = ll_new;
        if (rel < opts.tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

TreeParams default_tree_init(const std::vector<CoeffQuadtree>& trees) {
    if (trees.empty()) {
        throw std::invalid_argument("default_tree_init needs at least one tree");
    }
    int depth_count = trees[0].depth_count();
    for (const CoeffQuadtree& tree : trees) {
        if (tree.depth_count() != depth_count) {
            throw std::invalid_argument("all trees must share the same depth");
        }
        check_tree(tree);
    }

    TreeParams params = make_tree_params(depth_count);
    for (int k = 0; k < depth_count; ++k) {
        std::vector<double> mags;
        for (const CoeffQuadtree& tree : trees) {
            for (double w : tree.depths[k]) {
                mags.push_back(std::fabs(w));
            }
        }
        std::sort(mags.begin(), mags.end());
        std::size_t split = mags.size() * 3 / 4;
        double sq = 0.0;
        for (std::size_t i = 0; i < split; ++i) {
            sq += mags[i] * mags[i];
        }
        params.emissions[k].sigma0 =
            split > 0 ? std::max(kVarianceFloor, std::sqrt(sq / double(split))) : kVarianceFloor;
        double abs_sum = 0.0;
        for (std::size_t i = split; i < mags.size(); ++i) {
            abs_sum += mags[i];
        }
        std::size_t big = mags.size() - split;
        params.emissions[k].b1 =
            big > 0 ? std::max(kVarianceFloor, abs_sum / double(big)) : kVarianceFloor;
    }
    return params;
}

std::vector<std::array<double, 2>> depth_state_priors(const TreeParams& params,
                                                      int depth_count) {
    params.validate(depth_count);
    std::vector<std::array<double, 2>> priors;
    priors.resize(std::size_t(depth_count));
    priors[0] = params.root_prior;
    for (int k = 1; k < depth_count; ++k) {
        for (int n = 0; n < 2; ++n) {
            priors[k][n] = priors[k - 1][0] * params.child_transition[k - 1][0][n] +
                           priors[k - 1][1] * params.child_transition[k - 1][1][n];
        }
    }
    return priors;
}

}  // namespace swtedge
