#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

namespace flowcorr {

struct QuadratureSpec {
    double relative_tolerance = 1e-10;
    double absolute_tolerance = 1e-13;
    int max_subdivisions = 400;
    int node_count_hint = 64;

    void validate() const {
        if (!(relative_tolerance > 0) || !(absolute_tolerance > 0))
            throw std::invalid_argument("QuadratureSpec: tolerances must be > 0");
        if (max_subdivisions < 1)
            throw std::invalid_argument("QuadratureSpec: max_subdivisions must be >= 1");
    }
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = true;
};

using ScalarFn = std::function<double(double)>;

// Adaptive Gauss-Kronrod (G7,K15) on a finite interval.
QuadResult integrate_adaptive(const ScalarFn& f, double a, double b, const QuadratureSpec& spec);

// Same, but the interval list is pre-split at the given interior points.
QuadResult integrate_adaptive_split(const ScalarFn& f, double a, double b,
                                    const std::vector<double>& interior, const QuadratureSpec& spec);

// Nodes/weights of generalized Gauss-Laguerre (weight x^alpha e^-x) via
// Golub-Welsch. Cached per (n, alpha).
struct GaussLaguerreRule {
    std::vector<double> nodes;
    std::vector<double> weights; // include the total mass Gamma(alpha+1)
};
const GaussLaguerreRule& gauss_laguerre(int n, double alpha);

// E[g(S)] for S ~ chi^2(T), by generalized Gauss-Laguerre with n nodes.
double chi2_expect_gl(const ScalarFn& g, int dof, int n);

// E[g(S)] for S ~ chi^2(T), by adaptive quadrature (for rough integrands).
QuadResult chi2_expect_adaptive(const ScalarFn& g, int dof, const QuadratureSpec& spec);

// ---------------------------------------------------------------------------
// Named 1-D densities on (0, inf) and their expectations.

struct PointMassDist { double location; };
struct ExponentialDist { double rate; };
struct GammaDist { double shape; double rate; };
struct InverseGammaDist { double shape; double scale; };
struct HalfCauchyDist { double scale; };
struct BetaPrimeDist { double a; double b; };

using Density1D = std::variant<PointMassDist, ExponentialDist, GammaDist, InverseGammaDist,
                               HalfCauchyDist, BetaPrimeDist>;

double density_pdf(const Density1D& d, double v);

// Raw moment E[V^k] where it exists; throws std::domain_error otherwise.
double density_moment(const Density1D& d, int k);

// E[f(V)] for V ~ density. The domain is split at max(1, scale hints) with
// the tail mapped through u = 1/v; power-law endpoint singularities are
// removed by a w = u^p substitution. `f_scale_hint` marks where f itself
// turns over (e.g. 1/r^2 for the mixture integrands) and is added to the
// split list.
QuadResult expect_1d(const Density1D& density, const ScalarFn& f, const QuadratureSpec& spec,
                     std::optional<double> f_scale_hint = std::nullopt);

} // namespace flowcorr
