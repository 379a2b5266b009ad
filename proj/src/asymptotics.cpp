#include "flowcorr/asymptotics.hpp"
#include "flowcorr/special.hpp"

#include <cmath>

namespace flowcorr {

RegimeTag classify_regime(double nu) {
    if (!(nu > 0)) throw std::invalid_argument("classify_regime: nu > 0 required");
    if (nu < 1.0) return RegimeTag::nu_below_1;
    if (nu == 1.0) return RegimeTag::nu_equal_1;
    if (nu <= 2.0) return RegimeTag::nu_1_to_2;
    return RegimeTag::nu_above_2;
}

std::string to_string(RegimeTag tag) {
    switch (tag) {
        case RegimeTag::nu_below_1: return "nu_below_1";
        case RegimeTag::nu_equal_1: return "nu_equal_1";
        case RegimeTag::nu_1_to_2: return "nu_1_to_2";
        case RegimeTag::nu_above_2: return "nu_above_2";
    }
    return "?";
}

LimitValue limit_se(const std::vector<double>& roughness, LimitKind which) {
    if (roughness.empty()) throw std::invalid_argument("limit_se: empty roughness list");
    const int T = static_cast<int>(roughness.size());
    LimitValue out;
    if (which == LimitKind::smooth) {
        double s1 = 0.0, s2 = 0.0, rmax = 0.0;
        for (int j = 0; j < T; ++j) {
            const double r = roughness[j];
            rmax = std::max(rmax, r);
            s1 += r * r;
            s2 += r * r * r * r;
            out.smooth_set.push_back(j);
        }
        if (rmax > kSmoothBand)
            throw std::domain_error("limit_se smooth: roughness above the validity band (r <= 0.25)");
        const double av = s1 / T;
        const double dis = av > 0 ? (s2 / T - av * av) / av : 0.0;
        out.rho = 0.5 - 0.25 * ((T - 1) * av - dis);
        return out;
    }
    // rough branch: partition into rough (r >= 2) and smooth (r <= 0.25)
    double log_rbar = 0.0;
    for (int j = 0; j < T; ++j) {
        const double r = roughness[j];
        if (r >= kRoughBand) {
            out.rough_set.push_back(j);
            log_rbar += std::log(r);
        } else if (r <= kSmoothBand) {
            out.smooth_set.push_back(j);
        } else {
            throw std::domain_error(
                "limit_se rough: roughness value in the excluded middle band (0.25, 2)");
        }
    }
    if (out.rough_set.empty())
        throw std::domain_error("limit_se rough: no roughness value reaches the rough band (r >= 2)");
    const double m = static_cast<double>(out.rough_set.size());
    const double rbar = std::exp(log_rbar / m);
    const double lead = std::pow(std::sqrt(2.0) * rbar, -m);
    const double corr = (std::pow(1.5, -0.5 * m) - std::pow(4.0, -0.5 * m)) * std::pow(rbar, -m);
    out.rho = lead * (1.0 - corr);
    return out;
}

double limit_se_isotropic(double r, int T, LimitKind which) {
    return limit_se(std::vector<double>(static_cast<size_t>(T), r), which).rho;
}

double limit_mixture_smooth(const ScaleMixture& mixture, int T) {
    if (T < 1) throw std::invalid_argument("limit_mixture_smooth: T >= 1 required");
    if (T == 1) return 0.5;
    double m1, m2;
    try {
        m1 = density_moment(mixture.law, 1);
        m2 = density_moment(mixture.law, 2);
    } catch (const std::domain_error& e) {
        throw std::domain_error(std::string("limit_mixture_smooth: the r^2 mixture needs finite "
                                            "E[r^2] and E[r^4]: ") +
                                e.what());
    }
    return 0.5 - 0.25 * (T - 1) * m2 / m1;
}

double matern_rough_constant(double nu, int T) {
    if (!(nu > 0.5 * T))
        throw std::domain_error("matern rough constant: requires nu > T/2");
    // Gamma(nu + T/2) / (Gamma(nu) nu^(T/2)): the large-r coefficient the
    // exact mixture and chi^2 routes converge to. It reduces to
    // Gamma(nu)/(Gamma(nu - T/2)(nu - T/2)^(T/2)) at T = 2 and as nu grows.
    return std::exp(gamma_ln(nu + 0.5 * T) - gamma_ln(nu) - 0.5 * T * std::log(nu));
}

namespace {

// Coefficient of the smoothness-limit correction term per regime; the nu = 1
// logarithmic case is handled separately.
double smooth_coefficient(double nu, int T, RegimeTag tag) {
    switch (tag) {
        case RegimeTag::nu_below_1:
            return (std::pow(2.0, 1.0 - nu) - 1.0) / (std::pow(2.0, nu) - 1.0) *
                   std::tgamma(nu) * std::pow(2.0 * nu, 1.0 - nu);
        case RegimeTag::nu_1_to_2:
            return std::pow(2.0 * nu, nu - 1.0) / std::tgamma(nu) * (std::pow(2.0, nu - 1.0) - 1.0) *
                   (nu * (T - 2.0) + 2.0) / T;
        case RegimeTag::nu_above_2:
            return 0.5 * (T - 1.0) * nu / (nu - 2.0);
        default:
            return 0.0;
    }
}

double smooth_exponent(double nu, RegimeTag tag) {
    switch (tag) {
        case RegimeTag::nu_below_1: return 2.0 * (1.0 - nu);
        case RegimeTag::nu_1_to_2: return 2.0 * (nu - 1.0);
        case RegimeTag::nu_above_2: return 2.0;
        default: return 0.0;
    }
}

} // namespace

double limit_matern(double r, double nu, int T, LimitKind which) {
    if (!(r >= 0) || !(nu > 0) || T < 1)
        throw std::invalid_argument("limit_matern: r >= 0, nu > 0, T >= 1 required");
    if (which == LimitKind::rough) {
        if (r < kRoughBand)
            throw std::domain_error("limit_matern rough: r below the validity band (r >= 2)");
        return matern_rough_constant(nu, T) * std::pow(std::sqrt(2.0) * r, -static_cast<double>(T));
    }
    if (r > kSmoothBand)
        throw std::domain_error("limit_matern smooth: r above the validity band (r <= 0.25)");
    const RegimeTag tag = classify_regime(nu);
    switch (tag) {
        case RegimeTag::nu_below_1: {
            const double limit = 1.0 - std::pow(2.0, -nu);
            return limit * (1.0 - smooth_coefficient(nu, T, tag) * std::pow(r, smooth_exponent(nu, tag)));
        }
        case RegimeTag::nu_equal_1:
            return 0.5 * (1.0 - 0.5 / std::fabs(std::log2(r)));
        default:
            return 0.5 * (1.0 - smooth_coefficient(nu, T, tag) * std::pow(r, smooth_exponent(nu, tag)));
    }
}

double pade_rho(PadeFamily family, double r, int T, double nu) {
    if (!(r >= 0) || T < 1) throw std::invalid_argument("pade_rho: r >= 0, T >= 1 required");
    const double Td = T;
    if (family == PadeFamily::SquaredExponential) {
        const double S = 0.5 * (Td - 1.0) * r * r;
        const double R = std::pow(2.0, 0.5 * Td - 1.0) * std::pow(r, Td);
        return 0.5 / (1.0 + S + R);
    }
    if (!(nu > 0)) throw std::invalid_argument("pade_rho: matern needs nu > 0");
    const double G = matern_rough_constant(nu, T);  // rejects nu <= T/2
    const RegimeTag tag = classify_regime(nu);
    double C, S;
    switch (tag) {
        case RegimeTag::nu_below_1:
            C = 1.0 - std::pow(2.0, -nu);
            S = smooth_coefficient(nu, T, tag) * std::pow(r, smooth_exponent(nu, tag));
            break;
        case RegimeTag::nu_equal_1:
            // The printed log_2 form is singular at r = 1 and breaks
            // monotonicity; the neighboring regimes both continue to S = 0
            // at nu = 1, so use that extension.
            C = 0.5;
            S = 0.0;
            break;
        default:
            C = 0.5;
            S = smooth_coefficient(nu, T, tag) * std::pow(r, smooth_exponent(nu, tag));
            break;
    }
    // R is pinned so C/R reproduces the roughness asymptote G (sqrt2 r)^-T.
    const double R = C * std::pow(2.0, 0.5 * Td) / G * std::pow(r, Td);
    return C / (1.0 + S + R);
}

} // namespace flowcorr
