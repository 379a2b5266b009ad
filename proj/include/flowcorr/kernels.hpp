#pragma once

#include "flowcorr/linalg.hpp"
#include "flowcorr/quadrature.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace flowcorr {

enum class KernelFamily { SquaredExponential, Exponential, Matern, RationalQuadratic };

std::string to_string(KernelFamily f);
KernelFamily kernel_family_from_string(const std::string& s);

// Stationary isotropic kernel k(tau) = amplitude * h(||tau||), h(0) = 1.
struct IsotropicKernel {
    KernelFamily family = KernelFamily::SquaredExponential;
    double length_scale = 1.0;
    double shape = 0.0;      // nu for Matern, alpha for rational quadratic
    double amplitude = 1.0;  // sigma_u^2

    void validate() const;
};

nlohmann::json to_json(const IsotropicKernel& k);
IsotropicKernel kernel_from_json(const nlohmann::json& j);

// h(d), the unit-amplitude correlation profile.
double eval_h(const IsotropicKernel& kernel, double d);

// log h(d), exact in log space for every family.
double eval_log_h(const IsotropicKernel& kernel, double d);

// 1 - h(d) without cancellation at small d.
double eval_one_minus_h(const IsotropicKernel& kernel, double d);

// h(d1) - h(d2) for d1 <= d2, without cancellation when the two are close.
double eval_h_diff(const IsotropicKernel& kernel, double d1, double d2);

// Matern power spectral density in `dim` dimensions at ordinary frequency
// ||zeta|| (e^{2 pi i zeta tau} convention).
double matern_psd(double zeta_norm, double nu, double l, int dim);

// Roughness coordinates: either given directly, or derived from the trait
// covariance and the kernel's squared length scales.
struct RoughnessSpec {
    std::optional<std::vector<double>> coefficients;
    std::optional<Eigen::MatrixXd> sigma_x;
    std::optional<Eigen::MatrixXd> sigma_u;
};

// r_j = sqrt(lambda_j(Sigma_u^{-1/2} Sigma_x Sigma_u^{-1/2})), descending.
std::vector<double> roughness_coefficients(const RoughnessSpec& spec);

// k_u on the product space: k_u([x,y],[v,w]) = amplitude * h(||[x-v, y-w]||).
struct ProductKernel {
    IsotropicKernel base;

    double eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& v,
                const Eigen::VectorXd& w) const;
};

// Skew-symmetric flow covariance assembled from the utility kernel:
// k_f([x,y],[v,w]) = k_u([x,y],[v,w]) - k_u([x,y],[w,v])
//                  - k_u([y,x],[v,w]) + k_u([y,x],[w,v])
double flow_kernel(const ProductKernel& ku, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& v, const Eigen::VectorXd& w);

// ---------------------------------------------------------------------------
// Scale mixtures (trait/kernel variance mixing and the induced law of r^2).

enum class TraitFamily { Gaussian, Laplace, StudentT };

std::string to_string(TraitFamily f);
TraitFamily trait_family_from_string(const std::string& s);

enum class MixingTarget { TraitVariance, KernelVariance, RoughnessSquared };

struct ScaleMixture {
    MixingTarget target = MixingTarget::RoughnessSquared;
    Density1D law = PointMassDist{1.0};
    bool slow_tail = false;  // half-Cauchy / beta-prime rows need the split-domain integrator
};

// The r^2 mixing law for a (trait family, kernel family) pair. `trait_scale`
// is the Laplace scale b or Student-t scale (Gaussian: sigma_x), and
// `kernel_shape` the rational-quadratic alpha or Student-t dof where one is
// needed. Unsupported pairs throw.
ScaleMixture mixture_rep(TraitFamily traits, KernelFamily kernel, double trait_scale = 1.0,
                         double length_scale = 1.0, double kernel_shape = 1.0,
                         double trait_dof = 3.0);

} // namespace flowcorr
