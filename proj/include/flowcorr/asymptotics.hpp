#pragma once

#include "flowcorr/kernels.hpp"
#include "flowcorr/quadrature.hpp"

#include <string>
#include <vector>

namespace flowcorr {

// Smoothness-limit regimes of the Matern shape parameter. Boundaries:
// nu = 1 classifies as nu_equal_1, nu = 2 as nu_1_to_2.
enum class RegimeTag { nu_below_1, nu_equal_1, nu_1_to_2, nu_above_2 };

RegimeTag classify_regime(double nu);
std::string to_string(RegimeTag tag);

enum class LimitKind { smooth, rough };

// Validity bands for the limit operations; extrapolation outside them is
// rejected rather than silently returned.
inline constexpr double kSmoothBand = 0.25;
inline constexpr double kRoughBand = 2.0;

struct LimitValue {
    double rho = 0.0;
    std::vector<int> rough_set;   // indices used by the rough branch
    std::vector<int> smooth_set;
};

// SE limits: smooth expansion (isotropic / anisotropic average+dispersion
// form) or rough geometric-average form over the rough set.
LimitValue limit_se(const std::vector<double>& roughness, LimitKind which);
double limit_se_isotropic(double r, int T, LimitKind which);

// Smoothness limit for an isotropic scale mixture over r^2:
// 1/2 - (T-1)/4 * E[r^4]/E[r^2]. Mixtures without a finite fourth moment
// (e.g. inverse-gamma shape <= 2 over r^2) are rejected.
double limit_mixture_smooth(const ScaleMixture& mixture, int T);

// Matern limits. The rough branch needs nu > T/2; the smooth branch picks
// the regime expansion (lower-bound asymptote for nu < 1).
double limit_matern(double r, double nu, int T, LimitKind which);

// G(nu, T) = Gamma(nu) / (Gamma(nu - T/2) (nu - T/2)^(T/2)); real only for
// nu > T/2.
double matern_rough_constant(double nu, int T);

enum class PadeFamily { SquaredExponential, Matern };

// Two-point Pade approximant joining the smoothness expansion to the
// roughness asymptote; no validity band (built for extrapolation).
double pade_rho(PadeFamily family, double r, int T, double nu = 0.0);

} // namespace flowcorr
