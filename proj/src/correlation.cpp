#include "flowcorr/correlation.hpp"
#include "flowcorr/special.hpp"
#include <limits>

#include <array>
#include <cmath>

namespace flowcorr {

namespace {

// (1+2x)^{-T/2} - (1+x)^{-T/2}(1+3x)^{-T/2} as g2*(1 - e^{-delta}) with
// delta = (T/2)[log1p(x) + log1p(3x) - log1p(2x)] >= 0; no cancellation.
long double numer_term(long double x, long double T) {
    const long double g2 = std::exp(-0.5L * T * std::log1p(2.0L * x));
    const long double delta =
        0.5L * T * (std::log1p(x) + std::log1p(3.0L * x) - std::log1p(2.0L * x));
    return -g2 * std::expm1(-delta);
}

// 1 - (1+kx)^{-T/2}
long double one_minus_g(long double k, long double x, long double T) {
    return -std::expm1(-0.5L * T * std::log1p(k * x));
}

// (1+2x)^{-T/2} - (1+4x)^{-T/2}
long double lb_numer_term(long double x, long double T) {
    const long double g2 = std::exp(-0.5L * T * std::log1p(2.0L * x));
    const long double delta = 0.5L * T * (std::log1p(4.0L * x) - std::log1p(2.0L * x));
    return -g2 * std::expm1(-delta);
}

// 1 - 2(1+2x)^{-T/2} + (1+4x)^{-T/2}; the O(x^2) second difference.
long double second_diff_term(long double x, long double T) {
    const long double a = 0.5L * T * std::log1p(2.0L * x);
    const long double b = 0.5L * T * std::log1p(4.0L * x);
    // (1 - e^-a) - e^-a (1 - e^-(b-a))
    return -std::expm1(-a) + std::exp(-a) * std::expm1(-(b - a));
}

} // namespace

std::string to_string(RhoMethod m) {
    switch (m) {
        case RhoMethod::closed_form: return "closed_form";
        case RhoMethod::chi2_quadrature: return "chi2_quadrature";
        case RhoMethod::mixture_quadrature: return "mixture_quadrature";
        case RhoMethod::matern_quadrature: return "matern_quadrature";
        case RhoMethod::matern_lower_bound: return "matern_lower_bound";
    }
    return "?";
}

CorrelationResult rho_se_isotropic_ex(double r, int T) {
    if (r < 0 || T < 1) throw std::invalid_argument("rho_se_isotropic: r >= 0, T >= 1 required");
    CorrelationResult out;
    out.method = RhoMethod::closed_form;
    out.error_estimate = 1e-15;
    if (r < kSeriesThreshold) {
        out.series_branch = true;
        out.rho = 0.5 * (1.0 - 0.5 * (T - 1) * r * r);
        return out;
    }
    const long double x = static_cast<long double>(r) * r;
    const long double Tl = T;
    out.rho = static_cast<double>(numer_term(x, Tl) / one_minus_g(4.0L, x, Tl));
    return out;
}

double rho_se_isotropic(double r, int T) { return rho_se_isotropic_ex(r, T).rho; }

double se_half_gap_isotropic(double r, int T) {
    if (r < kSeriesThreshold) return 0.25 * (T - 1) * r * r;
    const long double x = static_cast<long double>(r) * r;
    const long double Tl = T;
    const long double den = one_minus_g(4.0L, x, Tl);
    return static_cast<double>((0.5L * den - numer_term(x, Tl)) / den);
}

CorrelationResult rho_se_anisotropic(const std::vector<double>& roughness) {
    if (roughness.empty()) throw std::invalid_argument("rho_se_anisotropic: empty roughness list");
    double rmax = 0.0;
    for (double r : roughness) {
        if (r < 0 || !std::isfinite(r))
            throw std::invalid_argument("rho_se_anisotropic: roughness must be finite, >= 0");
        rmax = std::max(rmax, r);
    }
    CorrelationResult out;
    out.method = RhoMethod::closed_form;
    out.error_estimate = 1e-14;
    const int T = static_cast<int>(roughness.size());
    if (rmax == 0.0) {
        out.rho = 0.5;
        out.degenerate = true;
        return out;
    }
    if (rmax < kSeriesThreshold) {
        // dispersion expansion about r = 0: 1/2 - ((T-1) av(r^2) - dis(r^2)) / 4
        out.series_branch = true;
        double s1 = 0.0, s2 = 0.0;
        for (double r : roughness) {
            s1 += r * r;
            s2 += r * r * r * r;
        }
        const double av = s1 / T;
        const double var = s2 / T - av * av;
        out.rho = 0.5 - 0.25 * ((T - 1) * av - var / av);
        return out;
    }
    // log-space products, assembled like the isotropic stable form
    long double l2 = 0.0L, l13 = 0.0L, l4 = 0.0L;
    for (double r : roughness) {
        const long double x = static_cast<long double>(r) * r;
        l2 += std::log1p(2.0L * x);
        l13 += std::log1p(x) + std::log1p(3.0L * x);
        l4 += std::log1p(4.0L * x);
    }
    const long double g2 = std::exp(-0.5L * l2);
    const long double num = -g2 * std::expm1(-0.5L * (l13 - l2));
    const long double den = -std::expm1(-0.5L * l4);
    out.rho = static_cast<double>(num / den);
    return out;
}

double sigma2_se_anisotropic(const std::vector<double>& roughness, double amplitude) {
    long double l4 = 0.0L;
    for (double r : roughness) l4 += std::log1p(4.0L * static_cast<long double>(r) * r);
    return static_cast<double>(2.0L * amplitude * -std::expm1(-0.5L * l4));
}

namespace {

bool smooth_family(KernelFamily f) {
    return f == KernelFamily::SquaredExponential || f == KernelFamily::RationalQuadratic;
}

struct Chi2Terms {
    double num = 0;  // E[h(sx sqrt(2 S1)) - h(sx sqrt(S1 + 3 S2))]
    double den = 0;  // E[1 - h(sx sqrt(4 S1))]
    double error = 0;
    bool converged = true;
};

Chi2Terms chi2_terms(const IsotropicKernel& kernel, double sigma_x, int T,
                     const QuadratureSpec& spec) {
    IsotropicKernel unit = kernel;
    unit.amplitude = 1.0;
    Chi2Terms out;

    // denominator as a single expectation of 1 - h (no cancellation)
    QuadResult den = chi2_expect_adaptive(
        [&](double s) { return eval_one_minus_h(unit, sigma_x * std::sqrt(4.0 * s)); }, T, spec);
    out.den = den.value;

    // numerator as one joint expectation of the pointwise h-difference
    const auto diff = [&](double s1, double s2) {
        return eval_h_diff(unit, sigma_x * std::sqrt(2.0 * s1), sigma_x * std::sqrt(s1 + 3.0 * s2));
    };
    const double tol = std::max(spec.absolute_tolerance, 10 * spec.relative_tolerance);
    if (smooth_family(kernel.family)) {
        // Tensorized generalized Gauss-Laguerre, node count scaled with T; the
        // rule is trusted only where its marginal reproduces the adaptive
        // denominator (slowly decaying integrands fail this probe).
        const int n = std::max(24, spec.node_count_hint + 8 * T);
        const double gl_a4 = chi2_expect_gl(
            [&](double s) { return eval_h(unit, sigma_x * std::sqrt(4.0 * s)); }, T, n);
        if (std::fabs((1.0 - gl_a4) - den.value) <= tol) {
            const auto tensor = [&](int nodes) {
                const GaussLaguerreRule& rule = gauss_laguerre(nodes, 0.5 * T - 1.0);
                const double norm = std::exp(gamma_ln(0.5 * T));
                double acc = 0.0;
                for (size_t i = 0; i < rule.nodes.size(); ++i) {
                    double inner = 0.0;
                    for (size_t j = 0; j < rule.nodes.size(); ++j)
                        inner += rule.weights[j] * diff(2.0 * rule.nodes[j], 2.0 * rule.nodes[i]);
                    acc += rule.weights[i] * inner / norm;
                }
                return acc / norm;
            };
            const double lo = tensor(n);
            const double hi = tensor(n + n / 2);
            if (std::fabs(hi - lo) <= tol) {
                out.num = hi;
                out.error = den.error + std::fabs(hi - lo);
                out.converged = den.converged;
                return out;
            }
        }
    }
    // rough kernels (or an untrusted GL rule): iterated adaptive subdivision
    QuadratureSpec inner = spec;
    inner.relative_tolerance = std::max(spec.relative_tolerance * 0.1, 1e-13);
    inner.absolute_tolerance = std::max(spec.absolute_tolerance * 0.1, 1e-14);
    QuadResult num = chi2_expect_adaptive(
        [&](double s2) {
            return chi2_expect_adaptive([&](double s1) { return diff(s1, s2); }, T, inner).value;
        },
        T, spec);
    out.num = num.value;
    out.error = den.error + num.error;
    out.converged = den.converged && num.converged;
    return out;
}

} // namespace

CorrelationResult rho_sigma_chi2(const IsotropicKernel& kernel, double sigma_x, int T,
                                 const QuadratureSpec& spec) {
    kernel.validate();
    spec.validate();
    if (!(sigma_x >= 0) || T < 1)
        throw std::invalid_argument("rho_sigma_chi2: sigma_x >= 0 and T >= 1 required");
    CorrelationResult out;
    out.method = RhoMethod::chi2_quadrature;
    if (sigma_x == 0.0) {
        out.rho = 0.5;
        out.sigma2 = 0.0;
        out.degenerate = true;
        return out;
    }
    const Chi2Terms t = chi2_terms(kernel, sigma_x, T, spec);
    out.rho = t.num / t.den;
    out.sigma2 = 2.0 * kernel.amplitude * t.den;
    out.error_estimate = t.error / std::max(t.den, 1e-300) * (1.0 + std::fabs(out.rho));
    out.converged = t.converged;
    return out;
}

double sigma2_flow(const IsotropicKernel& kernel, double sigma_x, int T, const QuadratureSpec& spec,
                   double* error_estimate) {
    kernel.validate();
    if (sigma_x == 0.0) {
        if (error_estimate) *error_estimate = 0.0;
        return 0.0;
    }
    IsotropicKernel unit = kernel;
    unit.amplitude = 1.0;
    const auto g = [&](double s) { return eval_h(unit, sigma_x * std::sqrt(4.0 * s)); };
    if (smooth_family(kernel.family)) {
        const int n = std::max(24, spec.node_count_hint + 8 * T);
        const double lo = chi2_expect_gl(g, T, n);
        const double hi = chi2_expect_gl(g, T, n + n / 2);
        if (std::fabs(hi - lo) <= std::max(spec.absolute_tolerance, 10 * spec.relative_tolerance)) {
            if (error_estimate) *error_estimate = 2.0 * kernel.amplitude * std::fabs(hi - lo);
            return 2.0 * kernel.amplitude * (1.0 - hi);
        }
    }
    QuadResult r = chi2_expect_adaptive(g, T, spec);
    if (error_estimate) *error_estimate = 2.0 * kernel.amplitude * r.error;
    return 2.0 * kernel.amplitude * (1.0 - r.value);
}

namespace {

CorrelationResult mixture_ratio(const Density1D& law, int T, const QuadratureSpec& spec,
                                RhoMethod method, double hint, double amplitude) {
    const long double Tl = T;
    const ScalarFn numer = [Tl](double v) {
        return static_cast<double>(numer_term(static_cast<long double>(v), Tl));
    };
    const ScalarFn denom = [Tl](double v) {
        return static_cast<double>(one_minus_g(4.0L, static_cast<long double>(v), Tl));
    };
    QuadResult num = expect_1d(law, numer, spec, hint);
    QuadResult den = expect_1d(law, denom, spec, hint);
    CorrelationResult out;
    out.method = method;
    out.rho = num.value / den.value;
    out.sigma2 = 2.0 * amplitude * den.value;
    out.error_estimate =
        (num.error + std::fabs(out.rho) * den.error) / std::max(den.value, 1e-300);
    out.converged = num.converged && den.converged;
    return out;
}

} // namespace

CorrelationResult rho_mixture(const ScaleMixture& mixture, int T, const QuadratureSpec& spec) {
    spec.validate();
    if (T < 1) throw std::invalid_argument("rho_mixture: T >= 1 required");
    // the integrands turn over where the mixture variable is O(1)
    QuadratureSpec s = spec;
    if (mixture.slow_tail) s.max_subdivisions = std::max(spec.max_subdivisions, 800);
    CorrelationResult out = mixture_ratio(mixture.law, T, s, RhoMethod::mixture_quadrature, 1.0, 1.0);
    // absolute sigma2 under kernel-variance mixing is reported unnormalized
    return out;
}

CorrelationResult rho_mixture_anisotropic(const Density1D& law, const std::vector<double>& base_r2,
                                          const QuadratureSpec& spec) {
    spec.validate();
    if (base_r2.empty()) throw std::invalid_argument("rho_mixture_anisotropic: empty profile");
    const std::vector<double> cs = base_r2;
    const ScalarFn numer = [&cs](double v) {
        long double l2 = 0.0L, l13 = 0.0L;
        for (double c : cs) {
            const long double x = static_cast<long double>(c) * v;
            l2 += std::log1p(2.0L * x);
            l13 += std::log1p(x) + std::log1p(3.0L * x);
        }
        const long double g2 = std::exp(-0.5L * l2);
        return static_cast<double>(-g2 * std::expm1(-0.5L * (l13 - l2)));
    };
    const ScalarFn denom = [&cs](double v) {
        long double l4 = 0.0L;
        for (double c : cs) l4 += std::log1p(4.0L * static_cast<long double>(c) * v);
        return static_cast<double>(-std::expm1(-0.5L * l4));
    };
    QuadResult num = expect_1d(law, numer, spec, 1.0);
    QuadResult den = expect_1d(law, denom, spec, 1.0);
    CorrelationResult out;
    out.method = RhoMethod::mixture_quadrature;
    out.rho = num.value / den.value;
    out.sigma2 = 2.0 * den.value;
    out.error_estimate = (num.error + std::fabs(out.rho) * den.error) / std::max(den.value, 1e-300);
    out.converged = num.converged && den.converged;
    return out;
}

CorrelationResult rho_matern(double r, double nu, int T, const QuadratureSpec& spec,
                             double amplitude) {
    spec.validate();
    if (!(r >= 0) || !(nu > 0) || T < 1)
        throw std::invalid_argument("rho_matern: r >= 0, nu > 0, T >= 1 required");
    if (r == 0.0) {
        // nu > 1: the smoothness limit is exactly 1/2. nu <= 1: the limit has
        // no closed form (it sits between 1 - 2^-nu and 1); evaluate at small
        // r instead.
        CorrelationResult out;
        out.method = RhoMethod::matern_quadrature;
        out.rho = nu > 1.0 ? 0.5 : std::numeric_limits<double>::quiet_NaN();
        out.sigma2 = 0.0;
        out.degenerate = true;
        return out;
    }
    const double x = r * r;
    const long double Tl = T;
    const ScalarFn numer = [x, Tl](double v) {
        return static_cast<double>(numer_term(static_cast<long double>(x) * v, Tl));
    };
    const ScalarFn denom = [x, Tl](double v) {
        return static_cast<double>(one_minus_g(4.0L, static_cast<long double>(x) * v, Tl));
    };
    const Density1D law = InverseGammaDist{nu, nu};
    const double hint = 1.0 / x;
    QuadResult num = expect_1d(law, numer, spec, hint);
    QuadResult den = expect_1d(law, denom, spec, hint);
    CorrelationResult out;
    out.method = RhoMethod::matern_quadrature;
    out.rho = num.value / den.value;
    out.sigma2 = 2.0 * amplitude * den.value;
    out.error_estimate = (num.error + std::fabs(out.rho) * den.error) / std::max(den.value, 1e-300);
    out.converged = num.converged && den.converged;
    return out;
}

CorrelationResult rho_matern_lower_bound(double r, double nu, int T, const QuadratureSpec& spec) {
    spec.validate();
    if (!(r >= 0) || !(nu > 0) || T < 1)
        throw std::invalid_argument("rho_matern_lower_bound: r >= 0, nu > 0, T >= 1 required");
    CorrelationResult out;
    out.method = RhoMethod::matern_lower_bound;
    if (r == 0.0) {
        out.rho = nu < 1.0 ? 1.0 - std::pow(2.0, -nu) : 0.5;
        out.degenerate = true;
        return out;
    }
    const double x = r * r;
    const long double Tl = T;
    const ScalarFn numer = [x, Tl](double v) {
        return static_cast<double>(lb_numer_term(static_cast<long double>(x) * v, Tl));
    };
    const ScalarFn denom = [x, Tl](double v) {
        return static_cast<double>(one_minus_g(4.0L, static_cast<long double>(x) * v, Tl));
    };
    const Density1D law = InverseGammaDist{nu, nu};
    const double hint = 1.0 / x;
    QuadResult num = expect_1d(law, numer, spec, hint);
    QuadResult den = expect_1d(law, denom, spec, hint);
    out.rho = num.value / den.value;
    out.sigma2 = 2.0 * den.value;
    out.error_estimate = (num.error + std::fabs(out.rho) * den.error) / std::max(den.value, 1e-300);
    out.converged = num.converged && den.converged;
    return out;
}

QuadResult matern_lower_bound_half_gap(double r, double nu, int T, const QuadratureSpec& spec) {
    spec.validate();
    if (!(r > 0)) throw std::invalid_argument("matern_lower_bound_half_gap: r > 0 required");
    const double x = r * r;
    const long double Tl = T;
    const ScalarFn second = [x, Tl](double v) {
        return static_cast<double>(second_diff_term(static_cast<long double>(x) * v, Tl));
    };
    const ScalarFn denom = [x, Tl](double v) {
        return static_cast<double>(one_minus_g(4.0L, static_cast<long double>(x) * v, Tl));
    };
    const Density1D law = InverseGammaDist{nu, nu};
    const double hint = 1.0 / x;
    QuadResult num = expect_1d(law, second, spec, hint);
    QuadResult den = expect_1d(law, denom, spec, hint);
    // 1/2 - rho_tilde = (2 J(r) - J(sqrt2 r)) / (2 J(sqrt2 r))
    QuadResult out;
    out.value = num.value / (2.0 * den.value);
    out.error = (num.error + std::fabs(out.value) * 2.0 * den.error) / (2.0 * den.value);
    out.converged = num.converged && den.converged;
    return out;
}

} // namespace flowcorr
