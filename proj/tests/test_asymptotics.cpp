#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "flowcorr/asymptotics.hpp"
#include "flowcorr/correlation.hpp"
#include "flowcorr/special.hpp"

#include <cmath>

using namespace flowcorr;

namespace {
const QuadratureSpec kSpec{};

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const int n = static_cast<int>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += xs[static_cast<size_t>(i)];
        sy += ys[static_cast<size_t>(i)];
        sxx += xs[static_cast<size_t>(i)] * xs[static_cast<size_t>(i)];
        sxy += xs[static_cast<size_t>(i)] * ys[static_cast<size_t>(i)];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}
} // namespace

TEST_CASE("regime classification, boundaries included") {
    CHECK(classify_regime(0.4) == RegimeTag::nu_below_1);
    CHECK(classify_regime(1.0) == RegimeTag::nu_equal_1);
    CHECK(classify_regime(1.5) == RegimeTag::nu_1_to_2);
    CHECK(classify_regime(2.0) == RegimeTag::nu_1_to_2);
    CHECK(classify_regime(2.0001) == RegimeTag::nu_above_2);
    CHECK_THROWS_AS(classify_regime(0.0), std::invalid_argument);
}

TEST_CASE("limit_se smooth branch") {
    // r = 0.01, T = 5: 1/2 (1 - 2e-4)
    CHECK(limit_se_isotropic(0.01, 5, LimitKind::smooth) ==
          doctest::Approx(0.5 * (1.0 - 2e-4)).epsilon(1e-12));
    // T = 1: exactly 1/2 at this order
    CHECK(limit_se_isotropic(0.01, 1, LimitKind::smooth) == 0.5);
    // validity band
    CHECK_THROWS_AS(limit_se_isotropic(0.3, 3, LimitKind::smooth), std::domain_error);
}

TEST_CASE("limit_se rough branch with partition") {
    // {1e3, 1e-3}: rough set of one coefficient
    const LimitValue v = limit_se({1e3, 1e-3}, LimitKind::rough);
    CHECK(v.rough_set.size() == 1);
    CHECK(v.smooth_set.size() == 1);
    const double lead = std::pow(2.0, -0.5) * 1e-3;
    const double corr = (std::pow(1.5, -0.5) - 0.5) * 1e-3;
    CHECK(v.rho == doctest::Approx(lead * (1.0 - corr)).epsilon(1e-12));
    // against the closed form: within the stated band the limit is sharp
    CHECK(v.rho == doctest::Approx(rho_se_anisotropic({1e3, 1e-3}).rho).epsilon(1e-4));

    // middle-band value rejected, empty rough set rejected
    CHECK_THROWS_AS(limit_se({1e3, 1.0}, LimitKind::rough), std::domain_error);
    CHECK_THROWS_AS(limit_se({0.1, 0.2}, LimitKind::rough), std::domain_error);
}

TEST_CASE("limit_se agrees with the exact route inside validity regions") {
    for (int T : {2, 5}) {
        const double smooth = limit_se_isotropic(0.05, T, LimitKind::smooth);
        const double exact_s = rho_se_isotropic(0.05, T);
        CHECK(std::fabs(smooth - exact_s) <= 0.05 * exact_s);
        const double rough = limit_se_isotropic(20.0, T, LimitKind::rough);
        const double exact_r = rho_se_isotropic(20.0, T);
        CHECK(std::fabs(rough - exact_r) <= 0.05 * exact_r);
    }
}

TEST_CASE("limit_mixture_smooth") {
    // exponential(rate lambda) over r^2: E[r^4]/E[r^2] = 2/lambda
    for (double lam : {40.0, 200.0}) {
        ScaleMixture m{MixingTarget::RoughnessSquared, ExponentialDist{lam}, false};
        CHECK(limit_mixture_smooth(m, 4) ==
              doctest::Approx(0.5 - 0.75 * (2.0 / lam)).epsilon(1e-12));
        CHECK(limit_mixture_smooth(m, 1) == 0.5);
    }
    // point mass reduces to the SE smooth limit with zero dispersion
    ScaleMixture pm{MixingTarget::RoughnessSquared, PointMassDist{0.01}, false};
    CHECK(limit_mixture_smooth(pm, 3) == doctest::Approx(0.5 - 0.5 * 0.01).epsilon(1e-12));
    // inverse-gamma with shape <= 2 has no finite fourth moment
    ScaleMixture ig{MixingTarget::RoughnessSquared, InverseGammaDist{2.0, 1.0}, false};
    CHECK_THROWS_AS(limit_mixture_smooth(ig, 3), std::domain_error);
    ScaleMixture hc{MixingTarget::RoughnessSquared, HalfCauchyDist{1.0}, true};
    CHECK_THROWS_AS(limit_mixture_smooth(hc, 3), std::domain_error);
}

TEST_CASE("limit_matern smooth regimes") {
    // nu = 3, r = 0.01, T = 2: 1/2 (1 - 1/2 * 3 * 1e-4)
    CHECK(limit_matern(0.01, 3.0, 2, LimitKind::smooth) ==
          doctest::Approx(0.5 * (1.0 - 0.5 * 3.0 * 1e-4)).epsilon(1e-12));
    // nu = 1, r = 2^-20: 1/2 (1 - 1/40)
    CHECK(limit_matern(std::pow(2.0, -20), 1.0, 3, LimitKind::smooth) ==
          doctest::Approx(0.5 * (1.0 - 1.0 / 40.0)).epsilon(1e-12));
    // nu = 0.5, r -> 0: 1 - 2^-1/2
    CHECK(limit_matern(1e-9, 0.5, 3, LimitKind::smooth) ==
          doctest::Approx(1.0 - std::pow(2.0, -0.5)).epsilon(1e-6));
    CHECK_THROWS_AS(limit_matern(0.5, 3.0, 2, LimitKind::smooth), std::domain_error);
}

TEST_CASE("limit_matern rough branch and domain") {
    const double G = matern_rough_constant(3.0, 2);
    CHECK(G == doctest::Approx(1.0).epsilon(1e-12));  // Gamma(3)/(Gamma(2) 2^1)
    CHECK(limit_matern(100.0, 3.0, 2, LimitKind::rough) ==
          doctest::Approx(std::pow(std::sqrt(2.0) * 100.0, -2.0)).epsilon(1e-12));
    // nu <= T/2 rejected
    CHECK_THROWS_AS(limit_matern(100.0, 1.0, 2, LimitKind::rough), std::domain_error);
    CHECK_THROWS_AS(limit_matern(100.0, 1.5, 3, LimitKind::rough), std::domain_error);
    // band
    CHECK_THROWS_AS(limit_matern(1.0, 3.0, 2, LimitKind::rough), std::domain_error);
}

TEST_CASE("limit_matern agrees with quadrature inside validity regions") {
    const double sm = limit_matern(0.05, 2.5, 3, LimitKind::smooth);
    const double ex_s = rho_matern(0.05, 2.5, 3, kSpec).rho;
    CHECK(std::fabs(sm - ex_s) <= 0.05 * ex_s);
    const double ro = limit_matern(20.0, 3.0, 2, LimitKind::rough);
    const double ex_r = rho_matern(20.0, 3.0, 2, kSpec).rho;
    CHECK(std::fabs(ro - ex_r) <= 0.05 * ex_r);
}

TEST_CASE("SE slope checks reproduce the quadratic and -T power laws") {
    // smooth side: log(1/2 - rho) vs log r on [1e-4, 1e-2], T = 5 -> slope 2
    std::vector<double> xs, ys;
    for (double r = 1e-4; r <= 1.0001e-2; r *= std::pow(10.0, 0.25)) {
        xs.push_back(std::log(r));
        ys.push_back(std::log(se_half_gap_isotropic(r, 5)));
    }
    CHECK(fit_slope(xs, ys) == doctest::Approx(2.0).epsilon(0.025));

    // rough side: log rho vs log r on [1e2, 1e4] -> slope -T
    for (int T : {2, 5}) {
        xs.clear();
        ys.clear();
        for (double r = 1e2; r <= 1.0001e4; r *= std::pow(10.0, 0.25)) {
            xs.push_back(std::log(r));
            ys.push_back(std::log(rho_se_isotropic(r, T)));
        }
        CHECK(fit_slope(xs, ys) == doctest::Approx(-T).epsilon(0.05 / T));
    }
}

TEST_CASE("Matern intermediate-regime slope: 2(nu-1) at nu = 1.5") {
    std::vector<double> xs, ys;
    for (double r = 1e-4; r <= 1.0001e-2; r *= std::pow(10.0, 0.5)) {
        xs.push_back(std::log(r));
        ys.push_back(std::log(matern_lower_bound_half_gap(r, 1.5, 3, kSpec).value));
    }
    CHECK(fit_slope(xs, ys) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("pade SE endpoints") {
    CHECK(pade_rho(PadeFamily::SquaredExponential, 1e-8, 3) == doctest::Approx(0.5).epsilon(1e-10));
    const double r = 1e4;
    const double tail = std::pow(std::sqrt(2.0) * r, -3.0);
    CHECK(pade_rho(PadeFamily::SquaredExponential, r, 3) == doctest::Approx(tail).epsilon(0.01));
}

TEST_CASE("pade matern matches the quadrature route at both ends (T = 3)") {
    const double nu = 3.0;
    for (double r : {1e-2, 1e3}) {
        const double p = pade_rho(PadeFamily::Matern, r, 3, nu);
        const double q = rho_matern(r, nu, 3, kSpec).rho;
        CHECK(std::fabs(p - q) <= 0.02 * q);
    }
}

TEST_CASE("pade matern converges to the SE pade as nu grows") {
    for (double r : {0.1, 1.0, 10.0}) {
        const double pm = pade_rho(PadeFamily::Matern, r, 2, 1e6);
        const double ps = pade_rho(PadeFamily::SquaredExponential, r, 2);
        CHECK(pm == doctest::Approx(ps).epsilon(1e-4));
    }
}

TEST_CASE("pade outputs are monotone decreasing in r") {
    for (double nu : {0.8, 1.0, 1.7, 2.0, 3.5}) {
        const int T = nu > 0.5 * 3 ? 3 : 1;
        if (!(nu > 0.5 * T)) continue;
        double prev = 1.0;
        for (double r = 1e-4; r <= 1e2 * 1.001; r *= std::pow(10.0, 0.125)) {
            const double p = pade_rho(PadeFamily::Matern, r, T, nu);
            CHECK(p < prev);
            prev = p;
        }
    }
    double prev = 1.0;
    for (double r = 1e-4; r <= 1e2 * 1.001; r *= std::pow(10.0, 0.125)) {
        const double p = pade_rho(PadeFamily::SquaredExponential, r, 4);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("pade bounded by its smoothness-limit constant") {
    for (double r = 1e-4; r < 1e3; r *= 10.0) {
        const double below1 = pade_rho(PadeFamily::Matern, r, 1, 0.8);
        CHECK(below1 > 0.0);
        CHECK(below1 <= 1.0 - std::pow(2.0, -0.8) + 1e-12);
        const double above = pade_rho(PadeFamily::Matern, r, 3, 2.5);
        CHECK(above > 0.0);
        CHECK(above <= 0.5 + 1e-12);
    }
}

TEST_CASE("pade domain rejection for nu <= T/2") {
    CHECK_THROWS_AS(pade_rho(PadeFamily::Matern, 1.0, 3, 1.5), std::domain_error);
    CHECK_THROWS_AS(pade_rho(PadeFamily::Matern, 1.0, 4, 2.0), std::domain_error);
}

TEST_CASE("nu = 2 uses the (1,2] branch continuously") {
    const double at2 = pade_rho(PadeFamily::Matern, 0.3, 2, 2.0);
    const double just_below = pade_rho(PadeFamily::Matern, 0.3, 2, 2.0 - 1e-9);
    CHECK(at2 == doctest::Approx(just_below).epsilon(1e-6));
}
