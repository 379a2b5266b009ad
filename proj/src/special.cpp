#include "flowcorr/special.hpp"

#include <cmath>
#include <limits>

namespace flowcorr {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 20000;
constexpr double kLogRescale = 575.6462732485114; // ln(1e250)
constexpr double kRescale = 1e250;

// Coefficients of 1/Gamma(z) = sum c_k z^k (Abramowitz & Stegun 6.1.34).
constexpr double kInvGammaCoef[] = {
    0.0,
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
    -0.0000012504934821,
};

// gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu), gam2 = the even part.
// gam1 is a difference of near-equal quantities near mu = 0, so switch to
// the series there.
void temme_gammas(double mu, double& gam1, double& gam2) {
    const double gampl = 1.0 / std::tgamma(1.0 + mu);
    const double gammi = 1.0 / std::tgamma(1.0 - mu);
    gam2 = 0.5 * (gammi + gampl);
    if (std::fabs(mu) > 0.1) {
        gam1 = (gammi - gampl) / (2.0 * mu);
    } else {
        // 1/Gamma(1+z) = sum c_{k+1} z^k, so the odd part collects the
        // even-index coefficients.
        const double mu2 = mu * mu;
        double acc = 0.0;
        double p = 1.0;
        for (int k = 2; k < 14; k += 2) {
            acc += kInvGammaCoef[k] * p;
            p *= mu2;
        }
        gam1 = -acc;
    }
}

struct ScaledPair {
    double kmu;    // K_mu(x)    * exp(-log_scale)
    double kmup1;  // K_{mu+1}(x)* exp(-log_scale)
    double log_scale;
};

// Temme's series, valid for x <= 2, |mu| <= 1/2.
ScaledPair bessk_temme(double mu, double x) {
    const double x2 = 0.5 * x;
    const double mu2 = mu * mu;
    const double pimu = M_PI * mu;
    const double fact = (std::fabs(pimu) < kEps) ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = (std::fabs(e) < kEps) ? 1.0 : std::sinh(e) / e;
    double gam1, gam2;
    temme_gammas(mu, gam1, gam2);
    double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e * std::tgamma(1.0 + mu);        // 0.5 e / (1/Gamma(1+mu))
    double q = 0.5 / e * std::tgamma(1.0 - mu);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    int i = 1;
    for (; i <= kMaxIter; ++i) {
        ff = (i * ff + p + q) / (i * i - mu2);
        c *= d / i;
        p /= (i - mu);
        q /= (i + mu);
        const double del = c * ff;
        sum += del;
        const double del1 = c * (p - i * ff);
        sum1 += del1;
        if (std::fabs(del) < std::fabs(sum) * kEps) break;
    }
    return {sum, sum1 * 2.0 / x, 0.0};
}

// Steed's continued fraction (CF2), valid for x > 2, |mu| <= 1/2.
ScaledPair bessk_cf2(double mu, double x) {
    const double mu2 = mu * mu;
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d, delh = d;
    double q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1, c = a1, a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i <= kMaxIter; ++i) {
        a -= 2 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::fabs(dels / s) < kEps) break;
    }
    h = a1 * h;
    // K_mu = sqrt(pi/2x) e^{-x} / s ; carry e^{-x} in the log scale so
    // large x stays representable.
    const double kmu = std::sqrt(M_PI / (2.0 * x)) / s;
    return {kmu, kmu * (mu + x + 0.5 - h) / x, -x};
}

// Half-integer closed form: K_{n+1/2}(x) = sqrt(pi/2x) e^{-x} sum_k ...
ScaledPair bessk_half_integer_base(double x) {
    const double k12 = std::sqrt(M_PI / (2.0 * x));
    return {k12, k12 * (1.0 + 1.0 / x), -x};
}

// Order-uniform (Debye) expansion for large nu; returns log K_nu(x).
double log_bessk_uniform(double nu, double x) {
    const double z = x / nu;
    const double root = std::sqrt(1.0 + z * z);
    const double eta = root + std::log(z / (1.0 + root));
    const double t = 1.0 / root;
    const double t2 = t * t;
    const double u1 = (3.0 * t - 5.0 * t * t2) / 24.0;
    const double u2 = (81.0 * t2 - 462.0 * t2 * t2 + 385.0 * t2 * t2 * t2) / 1152.0;
    const double t3 = t * t2;
    const double u3 =
        (30375.0 * t3 - 369603.0 * t3 * t2 + 765765.0 * t3 * t2 * t2 - 425425.0 * t3 * t2 * t2 * t2) / 414720.0;
    const double t4 = t2 * t2;
    const double u4 = (4465125.0 * t4 - 94121676.0 * t4 * t2 + 349922430.0 * t4 * t4 -
                       446185740.0 * t4 * t4 * t2 + 185910725.0 * t4 * t4 * t4) /
                      39813120.0;
    const double series = 1.0 - u1 / nu + u2 / (nu * nu) - u3 / (nu * nu * nu) + u4 / (nu * nu * nu * nu);
    return 0.5 * std::log(M_PI / (2.0 * nu)) - nu * eta - 0.5 * std::log(root) + std::log(series);
}

// Shared driver: returns K_nu(x) as value * exp(log_scale).
ScaledPair bessk_scaled(double nu, double x) {
    nu = std::fabs(nu);
    if (!(x > 0.0)) throw std::domain_error("bessel_k: requires x > 0");
    if (std::isnan(nu) || std::isnan(x)) throw std::domain_error("bessel_k: nan argument");

    const double half_frac = nu - std::floor(nu);
    const bool half_integer = std::fabs(half_frac - 0.5) < 1e-13;

    int nl;
    double mu;
    ScaledPair base{};
    if (half_integer) {
        nl = static_cast<int>(std::floor(nu));
        mu = 0.5;
        base = bessk_half_integer_base(x);
    } else {
        nl = static_cast<int>(nu + 0.5);
        mu = nu - nl; // in [-1/2, 1/2]
        base = (x <= 2.0) ? bessk_temme(mu, x) : bessk_cf2(mu, x);
    }

    double kmu = base.kmu, kmup1 = base.kmup1, log_scale = base.log_scale;
    double order = mu;
    for (int i = 0; i < nl; ++i) {
        const double knext = kmu + (2.0 * (order + 1.0) / x) * kmup1;
        kmu = kmup1;
        kmup1 = knext;
        order += 1.0;
        if (kmup1 > kRescale) {
            kmu /= kRescale;
            kmup1 /= kRescale;
            log_scale += kLogRescale;
        }
    }
    return {kmu, kmup1, log_scale};
}

} // namespace

double gamma_ln(double x) { return std::lgamma(x); }

double log_bessel_k(double nu, double x) {
    nu = std::fabs(nu);
    if (nu >= 300.0) {
        const double frac = nu - std::floor(nu);
        if (std::fabs(frac - 0.5) >= 1e-13) return log_bessk_uniform(nu, x);
        // half-integer large order: fall through to the exact recurrence
    }
    const ScaledPair r = bessk_scaled(nu, x);
    return std::log(r.kmu) + r.log_scale;
}

double bessel_k(double nu, double x) {
    nu = std::fabs(nu);
    if (nu >= 300.0 && std::fabs(nu - std::floor(nu) - 0.5) >= 1e-13) {
        if (!(x > 0.0)) throw std::domain_error("bessel_k: requires x > 0");
        const double lk = log_bessk_uniform(nu, x);
        if (lk > 709.0) throw RangeError("bessel_k: overflow");
        if (lk < -745.0) throw RangeError("bessel_k: result below exp-underflow range");
        return std::exp(lk);
    }
    const ScaledPair r = bessk_scaled(nu, x);
    if (r.log_scale == 0.0) return r.kmu;
    const double lk = std::log(r.kmu) + r.log_scale;
    if (lk > 709.0) throw RangeError("bessel_k: overflow");
    if (lk < -745.0) throw RangeError("bessel_k: result below exp-underflow range");
    return std::exp(lk);
}

} // namespace flowcorr
