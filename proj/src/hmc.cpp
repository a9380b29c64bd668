#include "swtedge/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "swtedge/stat_models.hpp"

namespace swtedge {

namespace {

constexpr double kResponsibilityFloor = 1e-12;

void check_distribution(const std::array<double, 2>& d, const char* name) {
    for (double p : d) {
        if (!(p >= 0.0) || !(p <= 1.0)) {
            throw std::invalid_argument(std::string(name) + " has an entry outside [0, 1]");
        }
    }
    if (std::fabs(d[0] + d[1] - 1.0) > 1e-12) {
        throw std::invalid_argument(std::string(name) + " does not sum to 1");
    }
}

void check_observations(std::span<const double> obs) {
    if (obs.empty()) {
        throw std::invalid_argument("observation sequence is empty");
    }
    for (double o : obs) {
        if (!std::isfinite(o)) {
            throw std::invalid_argument("observations must be finite");
        }
    }
}

}  // namespace

void ChainParams::validate() const {
    check_distribution(initial, "initial distribution");
    check_distribution(transition[0], "transition row 0");
    check_distribution(transition[1], "transition row 1");
    if (!(sigma0 >= kVarianceFloor) || !std::isfinite(sigma0)) {
        throw std::invalid_argument("sigma0 must be finite and at least the variance floor");
    }
    if (!(b1 >= kVarianceFloor) || !std::isfinite(b1)) {
        throw std::invalid_argument("b1 must be finite and at least the variance floor");
    }
}

std::vector<std::array<double, 2>> chain_log_emissions(std::span<const double> obs,
                                                       const ChainParams& params) {
    check_observations(obs);
    std::vector<std::array<double, 2>> logb(obs.size());
    for (std::size_t t = 0; t < obs.size(); ++t) {
        logb[t][0] = log_gaussian_pdf(obs[t], params.sigma0);
        logb[t][1] = log_laplacian_pdf(obs[t], params.b1);
    }
    return logb;
}

ViterbiResult viterbi_core(const std::vector<std::array<double, 2>>& log_emissions,
                           const ChainParams& params) {
    params.validate();
    std::size_t n = log_emissions.size();
    if (n == 0) {
        throw std::invalid_argument("observation sequence is empty");
    }

    Trellis trellis;
    trellis.delta.resize(n);
    trellis.psi.assign(n, {0, 0});

    double log_a[2][2];
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            log_a[i][j] = std::log(params.transition[i][j]);
        }
    }

    for (int j = 0; j < 2; ++j) {
        trellis.delta[0][j] = std::log(params.initial[j]) + log_emissions[0][j];
    }
    for (std::size_t t = 1; t < n; ++t) {
        for (int j = 0; j < 2; ++j) {
            // Candidate i = 0 first; replace only on strict improvement, so
            // ties resolve to state 0.
            int best = 0;
            double best_score = trellis.delta[t - 1][0] + log_a[0][j];
            double alt = trellis.delta[t - 1][1] + log_a[1][j];
            if (alt > best_score) {
                best = 1;
                best_score = alt;
            }
            trellis.delta[t][j] = best_score + log_emissions[t][j];
            trellis.psi[t][j] = std::uint8_t(best);
        }
    }

    ViterbiResult result;
    result.states.resize(n);
    int last = trellis.delta[n - 1][1] > trellis.delta[n - 1][0] ? 1 : 0;
    result.log_prob = trellis.delta[n - 1][last];
    result.states[n - 1] = std::uint8_t(last);
    for (std::size_t t = n - 1; t > 0; --t) {
        result.states[t - 1] = trellis.psi[t][result.states[t]];
    }
    result.trellis = std::move(trellis);
    return result;
}

ViterbiResult viterbi(std::span<const double> obs, const ChainParams& params) {
    return viterbi_core(chain_log_emissions(obs, params), params);
}

namespace {

// Shared forward pass. Emissions are rescaled per step by their maximum
// (btil[t][j] = exp(logb[t][j] - m_t)) and alpha renormalized by c_t, so
// log L = sum_t (log c_t + m_t).
struct ForwardData {
    std::vector<std::array<double, 2>> alpha_hat;
    std::vector<std::array<double, 2>> btil;
    std::vector<double> scale;  // c_t
    std::vector<double> shift;  // m_t
    double log_likelihood = 0.0;
};

ForwardData forward_scaled(const std::vector<std::array<double, 2>>& logb,
                           const ChainParams& params) {
    std::size_t n = logb.size();
    ForwardData fwd;
    fwd.alpha_hat.resize(n);
    fwd.btil.resize(n);
    fwd.scale.resize(n);
    fwd.shift.resize(n);

    for (std::size_t t = 0; t < n; ++t) {
        double m = std::max(logb[t][0], logb[t][1]);
        fwd.shift[t] = m;
        fwd.btil[t][0] = std::exp(logb[t][0] - m);
        fwd.btil[t][1] = std::exp(logb[t][1] - m);
    }

    for (int j = 0; j < 2; ++j) {
        fwd.alpha_hat[0][j] = params.initial[j] * fwd.btil[0][j];
    }
    for (std::size_t t = 1; t <= n; ++t) {
        std::size_t s = t - 1;
        double c = fwd.alpha_hat[s][0] + fwd.alpha_hat[s][1];
        if (!(c > 0.0)) {
            throw std::runtime_error("forward pass lost all probability mass at step " +
                                     std::to_string(s));
        }
        fwd.scale[s] = c;
        fwd.alpha_hat[s][0] /= c;
        fwd.alpha_hat[s][1] /= c;
        fwd.log_likelihood += std::log(c) + fwd.shift[s];
        if (t == n) break;
        for (int j = 0; j < 2; ++j) {
            double pred = fwd.alpha_hat[s][0] * params.transition[0][j] +
                          fwd.alpha_hat[s][1] * params.transition[1][j];
            fwd.alpha_hat[t][j] = pred * fwd.btil[t][j];
        }
    }
    return fwd;
}

}  // namespace

FbResult forward_backward_core(const std::vector<std::array<double, 2>>& log_emissions,
                               const ChainParams& params) {
    params.validate();
    std::size_t n = log_emissions.size();
    if (n == 0) {
        throw std::invalid_argument("observation sequence is empty");
    }

    ForwardData fwd = forward_scaled(log_emissions, params);

    // Backward variables under the same per-step scaling.
    std::vector<std::array<double, 2>> beta_hat(n);
    beta_hat[n - 1] = {1.0, 1.0};
    for (std::size_t t = n - 1; t > 0; --t) {
        std::size_t s = t - 1;
        for (int i = 0; i < 2; ++i) {
            double sum = 0.0;
            for (int j = 0; j < 2; ++j) {
                sum += params.transition[i][j] * fwd.btil[t][j] * beta_hat[t][j];
            }
            beta_hat[s][i] = sum / fwd.scale[t];
        }
    }

    FbResult result;
    result.log_likelihood = fwd.log_likelihood;
    result.gamma.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        double g0 = fwd.alpha_hat[t][0] * beta_hat[t][0];
        double g1 = fwd.alpha_hat[t][1] * beta_hat[t][1];
        double sum = g0 + g1;
        if (!(sum > 0.0)) {
            throw std::runtime_error("state posterior lost all probability mass at step " +
                                     std::to_string(t));
        }
        result.gamma[t] = {g0 / sum, g1 / sum};
    }
    if (n > 1) {
        result.xi.resize(n - 1);
        for (std::size_t t = 0; t + 1 < n; ++t) {
            double sum = 0.0;
            std::array<std::array<double, 2>, 2> x{};
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    x[i][j] = fwd.alpha_hat[t][i] * params.transition[i][j] *
                              fwd.btil[t + 1][j] * beta_hat[t + 1][j] / fwd.scale[t + 1];
                    sum += x[i][j];
                }
            }
            if (!(sum > 0.0)) {
                throw std::runtime_error("pair posterior lost all probability mass at step " +
                                         std::to_string(t));
            }
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    result.xi[t][i][j] = x[i][j] / sum;
                }
            }
        }
    }
    return result;
}

FbResult forward_backward(std::span<const double> obs, const ChainParams& params) {
    return forward_backward_core(chain_log_emissions(obs, params), params);
}

double chain_log_likelihood(std::span<const double> obs, const ChainParams& params) {
    params.validate();
    return forward_scaled(chain_log_emissions(obs, params), params).log_likelihood;
}

namespace {

struct EmAccumulators {
    std::array<double, 2> gamma_first{0.0, 0.0};
    std::array<std::array<double, 2>, 2> xi_sum{{{0.0, 0.0}, {0.0, 0.0}}};
    std::array<double, 2> gamma_total{0.0, 0.0};
    double weighted_sq = 0.0;   // sum gamma_t(0) * o_t^2
    double weighted_abs = 0.0;  // sum gamma_t(1) * |o_t|
    double log_likelihood = 0.0;
    int sequences = 0;
};

EmAccumulators expectation_pass(const std::vector<std::vector<double>>& sequences,
                                const ChainParams& params) {
    EmAccumulators acc;
    for (const auto& seq : sequences) {
        FbResult fb = forward_backward(seq, params);
        acc.log_likelihood += fb.log_likelihood;
        acc.sequences += 1;
        acc.gamma_first[0] += fb.gamma[0][0];
        acc.gamma_first[1] += fb.gamma[0][1];
        for (std::size_t t = 0; t < seq.size(); ++t) {
            acc.gamma_total[0] += fb.gamma[t][0];
            acc.gamma_total[1] += fb.gamma[t][1];
            acc.weighted_sq += fb.gamma[t][0] * seq[t] * seq[t];
            acc.weighted_abs += fb.gamma[t][1] * std::fabs(seq[t]);
        }
        for (const auto& x : fb.xi) {
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    acc.xi_sum[i][j] += x[i][j];
                }
            }
        }
    }
    return acc;
}

ChainParams maximization_step(const EmAccumulators& acc, const ChainParams& prev,
                              bool& any_frozen) {
    ChainParams next = prev;

    next.initial[0] = acc.gamma_first[0] / acc.sequences;
    next.initial[1] = acc.gamma_first[1] / acc.sequences;
    double init_sum = next.initial[0] + next.initial[1];
    next.initial[0] /= init_sum;
    next.initial[1] /= init_sum;

    for (int i = 0; i < 2; ++i) {
        double row_sum = acc.xi_sum[i][0] + acc.xi_sum[i][1];
        if (row_sum < kResponsibilityFloor) {
            any_frozen = true;  // no transition evidence; keep the old row
            continue;
        }
        next.transition[i][0] = acc.xi_sum[i][0] / row_sum;
        next.transition[i][1] = acc.xi_sum[i][1] / row_sum;
    }

    if (acc.gamma_total[0] < kResponsibilityFloor) {
        any_frozen = true;
    } else {
        next.sigma0 = std::max(kVarianceFloor, std::sqrt(acc.weighted_sq / acc.gamma_total[0]));
    }
    if (acc.gamma_total[1] < kResponsibilityFloor) {
        any_frozen = true;
    } else {
        next.b1 = std::max(kVarianceFloor, acc.weighted_abs / acc.gamma_total[1]);
    }
    return next;
}

}  // namespace

ChainTrainResult em_train(const std::vector<std::vector<double>>& sequences,
                          const ChainParams& init, const EmOptions& opts) {
    init.validate();
    bool has_pair = false;
    for (const auto& seq : sequences) {
        has_pair = has_pair || seq.size() >= 2;
    }
    if (!has_pair) {
        throw std::invalid_argument(
            "em_train needs at least one sequence with two or more observations");
    }
    if (opts.max_iters < 0) {
        throw std::invalid_argument("max_iters must be non-negative");
    }
    if (!(opts.tol > 0.0)) {
        throw std::invalid_argument("tol must be positive");
    }

    ChainTrainResult result;
    result.params = init;

    EmAccumulators acc = expectation_pass(sequences, result.params);
    double ll_prev = acc.log_likelihood;
    result.history.push_back(ll_prev);

    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        result.params = maximization_step(acc, result.params, result.any_state_frozen);
        result.iterations = iter;

        acc = expectation_pass(sequences, result.params);
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

ChainParams default_chain_init(const std::vector<std::vector<double>>& sequences) {
    std::vector<double> mags;
    for (const auto& seq : sequences) {
        for (double o : seq) {
            if (!std::isfinite(o)) {
                throw std::invalid_argument("observations must be finite");
            }
            mags.push_back(std::fabs(o));
        }
    }
    if (mags.empty()) {
        throw std::invalid_argument("default_chain_init needs observations");
    }
    std::sort(mags.begin(), mags.end());

    std::size_t split = mags.size() * 3 / 4;
    ChainParams params;  // initial and transition keep their defaults
    double sq = 0.0;
    for (std::size_t i = 0; i < split; ++i) {
        sq += mags[i] * mags[i];
    }
    params.sigma0 = split > 0 ? std::max(kVarianceFloor, std::sqrt(sq / double(split)))
                              : kVarianceFloor;
    double abs_sum = 0.0;
    for (std::size_t i = split; i < mags.size(); ++i) {
        abs_sum += mags[i];
    }
    std::size_t big = mags.size() - split;
    params.b1 = big > 0 ? std::max(kVarianceFloor, abs_sum / double(big)) : kVarianceFloor;
    return params;
}

std::array<double, 2> stationary_distribution(const ChainParams& params) {
    double up = params.transition[0][1];    // 0 -> 1
    double down = params.transition[1][0];  // 1 -> 0
    if (up + down <= 0.0) {
        return params.initial;
    }
    double pi1 = up / (up + down);
    return {1.0 - pi1, pi1};
}

}  // namespace swtedge
