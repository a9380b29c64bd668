#include "swtedge/stat_models.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace swtedge {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // log(2*pi)/2

void check_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string(name) + " must be positive and finite");
    }
}

}  // namespace

double gamma_function(double x) {
    if (!std::isfinite(x)) {
        throw std::invalid_argument("gamma_function needs a finite argument");
    }
    if (x <= 0.0 && x == std::floor(x)) {
        throw std::invalid_argument("gamma_function has poles at non-positive integers");
    }
    // Lanczos approximation, g = 7, nine coefficients.
    static constexpr double kCoef[9] = {
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    };
    if (x < 0.5) {
        // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
        return std::numbers::pi / (std::sin(std::numbers::pi * x) * gamma_function(1.0 - x));
    }
    double z = x - 1.0;
    double a = kCoef[0];
    for (int i = 1; i < 9; ++i) {
        a += kCoef[i] / (z + double(i));
    }
    double t = z + 7.5;
    return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, z + 0.5) * std::exp(-t) * a;
}

double gaussian_pdf(double w, double sigma) {
    return std::exp(log_gaussian_pdf(w, sigma));
}

double log_gaussian_pdf(double w, double sigma) {
    check_positive(sigma, "sigma");
    double z = w / sigma;
    return -std::log(sigma) - kHalfLog2Pi - 0.5 * z * z;
}

double laplacian_pdf(double w, double b) {
    return std::exp(log_laplacian_pdf(w, b));
}

double log_laplacian_pdf(double w, double b) {
    check_positive(b, "b");
    return -std::log(2.0 * b) - std::fabs(w) / b;
}

double ggd_pdf(double y, const GgdParams& params) {
    check_positive(params.q, "q");
    check_positive(params.p, "p");
    double norm = params.p / (2.0 * params.q * gamma_function(1.0 / params.p));
    return norm * std::exp(-std::pow(std::fabs(y / params.q), params.p));
}

double mixture_pdf(double w, const MixtureParams& params) {
    if (params.prior_edge < 0.0 || params.prior_edge > 1.0) {
        throw std::invalid_argument("prior_edge must lie in [0, 1]");
    }
    return (1.0 - params.prior_edge) * gaussian_pdf(w, params.sigma0) +
           params.prior_edge * laplacian_pdf(w, params.b1);
}

PosteriorResult posterior_state(double w, const MixtureParams& params) {
    if (params.prior_edge < 0.0 || params.prior_edge > 1.0) {
        throw std::invalid_argument("prior_edge must lie in [0, 1]");
    }
    double w0 = (1.0 - params.prior_edge) * gaussian_pdf(w, params.sigma0);
    double w1 = params.prior_edge * laplacian_pdf(w, params.b1);
    double total = w0 + w1;
    if (total <= 0.0) {
        return {params.prior_edge, true};
    }
    return {w1 / total, false};
}

}  // namespace swtedge
