#pragma once

namespace swtedge {

// Emission scale parameters (standard deviations, Laplacian scales, GGD
// scales) are clamped to this floor wherever they are estimated, keeping
// every density finite and every EM update well defined. Units are
// normalized intensity, matching GrayImage.
inline constexpr double kVarianceFloor = 1e-6;

// Gamma function via the Lanczos approximation (g = 7, nine coefficients),
// with the reflection formula below 1/2. Relative error is around 1e-14
// over the arguments used here, which a quadrature test pins down.
double gamma_function(double x);

// Zero-mean Gaussian with standard deviation sigma > 0.
double gaussian_pdf(double w, double sigma);
double log_gaussian_pdf(double w, double sigma);

// Zero-mean Laplacian with scale b > 0: f(w) = exp(-|w|/b) / (2b).
double laplacian_pdf(double w, double b);
double log_laplacian_pdf(double w, double b);

// Generalized Gaussian density
//   f(y) = p / (2 q Gamma(1/p)) * exp(-|y/q|^p),  q > 0, p > 0.
// p = 1 is the Laplacian with scale q; p = 2 is the Gaussian with
// sigma = q / sqrt(2).
struct GgdParams {
    double q;  // scale
    double p;  // shape
};
double ggd_pdf(double y, const GgdParams& params);

// Two-state coefficient mixture: state 0 (smooth region) emits from the
// Gaussian, state 1 (edge) from the heavier-tailed Laplacian.
struct MixtureParams {
    double prior_edge;  // P(state = 1), in [0, 1]
    double sigma0;      // Gaussian std-dev, >= floor
    double b1;          // Laplacian scale, >= floor
};

double mixture_pdf(double w, const MixtureParams& params);

struct PosteriorResult {
    double p_edge;    // P(state = 1 | w)
    bool underflowed; // both weighted densities vanished; prior returned instead
};
PosteriorResult posterior_state(double w, const MixtureParams& params);

}  // namespace swtedge
