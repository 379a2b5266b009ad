#pragma once

#include "flowcorr/kernels.hpp"
#include "flowcorr/quadrature.hpp"

#include <string>
#include <vector>

namespace flowcorr {

enum class RhoMethod {
    closed_form,
    chi2_quadrature,
    mixture_quadrature,
    matern_quadrature,
    matern_lower_bound,
};

std::string to_string(RhoMethod m);

struct CorrelationResult {
    double rho = 0.0;
    double sigma2 = 0.0;
    RhoMethod method = RhoMethod::closed_form;
    double error_estimate = 0.0;
    bool series_branch = false;  // r fell below the series threshold
    bool degenerate = false;     // all-zero roughness input
    bool converged = true;
};

// Series threshold for the removable r = 0 singularity of the closed forms.
inline constexpr double kSeriesThreshold = 1e-6;

// Isotropic squared-exponential closed form. Below the series threshold the
// quadratic expansion about r = 0 takes over.
CorrelationResult rho_se_isotropic_ex(double r, int T);
double rho_se_isotropic(double r, int T);

// 1/2 - rho for the isotropic SE model, computed so the O(r^4) gap at T = 1
// survives in floating point.
double se_half_gap_isotropic(double r, int T);

// Anisotropic SE closed form over roughness coefficients (Result 8 main-text
// numerator). All-zero input returns the 1/2 limit with `degenerate` set.
CorrelationResult rho_se_anisotropic(const std::vector<double>& roughness);

// sigma^2 = 2 sigma_u^2 (1 - prod_j (1+4 r_j^2)^{-1/2}) for the SE kernel.
double sigma2_se_anisotropic(const std::vector<double>& roughness, double amplitude);

// Universal chi^2 route (any isotropic kernel family): both sigma^2 and rho
// from 1-D/2-D expectations over independent chi^2(T) variables. Smooth
// kernels use tensorized generalized Gauss-Laguerre with node counts scaled
// by T; slowly decaying kernels (exponential, Matern) fall back to adaptive
// subdivision.
CorrelationResult rho_sigma_chi2(const IsotropicKernel& kernel, double sigma_x, int T,
                                 const QuadratureSpec& spec);

// sigma^2 alone through the same route.
double sigma2_flow(const IsotropicKernel& kernel, double sigma_x, int T, const QuadratureSpec& spec,
                   double* error_estimate = nullptr);

// Scale-mixture of SE kernels: isotropic law over r^2.
CorrelationResult rho_mixture(const ScaleMixture& mixture, int T, const QuadratureSpec& spec);

// Anisotropic mixture: r_j^2 = base_r2[j] * V with V ~ law (a joint scalar
// rescaling of a fixed roughness profile).
CorrelationResult rho_mixture_anisotropic(const Density1D& law, const std::vector<double>& base_r2,
                                          const QuadratureSpec& spec);

// Matern kernel via the inverse-gamma scale-mixture representation, using the
// bulk/tail-split integrator. sigma2 is reported for the given amplitude.
CorrelationResult rho_matern(double r, double nu, int T, const QuadratureSpec& spec,
                             double amplitude = 1.0);

// Lower bound rho_tilde = 1 - J(r)/J(sqrt2 r).
CorrelationResult rho_matern_lower_bound(double r, double nu, int T, const QuadratureSpec& spec);

// 1/2 - rho_tilde through a single second-difference expectation; stable for
// small r where the direct subtraction loses all digits.
QuadResult matern_lower_bound_half_gap(double r, double nu, int T, const QuadratureSpec& spec);

} // namespace flowcorr
