#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "flowcorr/correlation.hpp"
#include "flowcorr/montecarlo.hpp"

#include <cmath>

using namespace flowcorr;

namespace {
const QuadratureSpec kSpec{};
IsotropicKernel se(double l = 1.0, double amp = 1.0) {
    return IsotropicKernel{KernelFamily::SquaredExponential, l, 0.0, amp};
}
} // namespace

TEST_CASE("rho_se_isotropic smoothness and roughness endpoints") {
    CHECK(rho_se_isotropic(1e-9, 3) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rho_se_isotropic_ex(1e-9, 3).series_branch);
    CHECK_FALSE(rho_se_isotropic_ex(0.5, 3).series_branch);
    // (r=1, T=1): high-precision evaluation of the closed form
    CHECK(rho_se_isotropic(1.0, 1) == doctest::Approx(0.4048523566688677).epsilon(1e-12));
    CHECK(rho_se_isotropic(1.0, 2) == doctest::Approx(0.26041666666666667).epsilon(1e-12));
    // (r = 1e3, T = 3): within 1% of (sqrt2 r)^-T
    const double limit = std::pow(std::sqrt(2.0) * 1e3, -3.0);
    CHECK(std::fabs(rho_se_isotropic(1e3, 3) - limit) <= 0.01 * limit);
}

TEST_CASE("rho_se series/closed branches join continuously") {
    for (int T : {1, 2, 5}) {
        const double lo = rho_se_isotropic(0.999e-6, T);
        const double hi = rho_se_isotropic(1.001e-6, T);
        CHECK(std::fabs(lo - hi) < 1e-14);
    }
}

TEST_CASE("rho_se monotone decreasing in r, bounded in [0, 1/2]") {
    for (int T : {1, 2, 3, 5}) {
        double prev = 0.5 + 1e-15;
        for (double r = 1e-4; r < 1e4; r *= 2.0) {
            const double rho = rho_se_isotropic(r, T);
            CHECK(rho < prev);
            CHECK(rho > 0.0);
            CHECK(rho <= 0.5);
            prev = rho;
        }
    }
}

TEST_CASE("se_half_gap T=1 scales like r^4") {
    // Fact-style O(kappa^4) claim: fit exponent >= 3.9 over [1e-4, 1e-2]
    double xs = 0, ys = 0, xx = 0, xy = 0;
    int n = 0;
    for (double r = 1e-4; r <= 1.0001e-2; r *= std::pow(10.0, 0.25)) {
        const double gap = se_half_gap_isotropic(r, 1);
        CHECK(gap > 0.0);
        const double lx = std::log(r), ly = std::log(gap);
        xs += lx; ys += ly; xx += lx * lx; xy += lx * ly;
        ++n;
    }
    const double slope = (n * xy - xs * ys) / (n * xx - xs * xs);
    CHECK(slope >= 3.9);
    CHECK(slope <= 4.1);
}

TEST_CASE("rho_se_anisotropic reduces to the isotropic form") {
    for (double r : {0.2, 1.0, 7.0}) {
        const std::vector<double> rs(3, r);
        CHECK(rho_se_anisotropic(rs).rho == doctest::Approx(rho_se_isotropic(r, 3)).epsilon(1e-14));
    }
}

TEST_CASE("rho_se_anisotropic one-large-one-small roughness") {
    const CorrelationResult r = rho_se_anisotropic({1e3, 1e-3});
    const double approx = std::pow(2.0, -0.5) * 1e-3;  // geometric-average rough limit, |R| = 1
    CHECK(std::fabs(r.rho - approx) <= 0.01 * approx);
    CHECK(r.rho == doctest::Approx(0.0007068819888).epsilon(1e-8));
}

TEST_CASE("rho_se_anisotropic small-roughness dispersion expansion") {
    const std::vector<double> rs{0.1, 0.2};
    const double av = (0.01 + 0.04) / 2.0;
    const double dis = ((0.01 - av) * (0.01 - av) + (0.04 - av) * (0.04 - av)) / 2.0 / av;
    const double series = 0.5 - 0.25 * ((2 - 1) * av - dis);
    const double rmax4 = std::pow(0.2, 4);
    CHECK(std::fabs(rho_se_anisotropic(rs).rho - series) <= rmax4);
}

TEST_CASE("rho_se_anisotropic degenerate all-zero input") {
    const CorrelationResult r = rho_se_anisotropic({0.0, 0.0});
    CHECK(r.rho == 0.5);
    CHECK(r.degenerate);
}

TEST_CASE("route triangulation on random configurations") {
    // 20 random (r, T): closed vs chi2 within 1e-6, both within 3 MC stderr
    RngStream gen(555, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const double r = std::pow(10.0, -1.5 + 2.5 * gen.uniform01());
        const int T = 1 + gen.uniform_int(5);
        const double closed = rho_se_isotropic(r, T);
        const CorrelationResult quad = rho_sigma_chi2(se(), r, T, kSpec);
        CHECK(std::fabs(closed - quad.rho) <= 1e-6);

        RngStream rng(556, static_cast<std::uint64_t>(trial));
        RhoSigmaOptions opt;
        opt.replicates = 40000;
        const RhoSigmaEstimate mc =
            estimate_rho_sigma(se(), TraitDistribution::gaussian_iso(T, r), opt, rng);
        CHECK(std::fabs(mc.rho.mean - closed) <= 3.5 * mc.rho.stderr_);
        CHECK(std::fabs(mc.rho.mean - quad.rho) <= 3.5 * mc.rho.stderr_);
    }
}

TEST_CASE("chi2 route equals the SE closed form") {
    for (double r : {0.1, 1.0, 10.0}) {
        for (int T : {1, 2, 3, 5}) {
            const CorrelationResult q = rho_sigma_chi2(se(), r, T, kSpec);
            CHECK(std::fabs(q.rho - rho_se_isotropic(r, T)) <= 1e-8);
        }
    }
}

TEST_CASE("chi2 route concentration limit sigma_x -> 0") {
    const CorrelationResult q = rho_sigma_chi2(se(), 1e-3, 4, kSpec);
    CHECK(q.rho == doctest::Approx(0.5 * (1.0 - 1.5 * 1e-6)).epsilon(1e-7));
    CHECK(q.sigma2 == doctest::Approx(2.0 * (1.0 - std::pow(1.0 + 4e-6, -2.0))).epsilon(1e-6));
    const CorrelationResult zero = rho_sigma_chi2(se(), 0.0, 4, kSpec);
    CHECK(zero.sigma2 == 0.0);
    CHECK(zero.degenerate);
}

TEST_CASE("chi2 route triangulates the matern mixture route") {
    IsotropicKernel mat{KernelFamily::Matern, 1.0, 3.0, 1.0};
    const CorrelationResult q = rho_sigma_chi2(mat, 1.0, 3, kSpec);
    const CorrelationResult m = rho_matern(1.0, 3.0, 3, kSpec);
    CHECK(std::fabs(q.rho - m.rho) <= 1e-6);
    // frozen 25-digit quadrature reference
    CHECK(m.rho == doctest::Approx(0.14629743167907).epsilon(1e-9));
    CHECK(q.rho == doctest::Approx(0.14629743167907).epsilon(1e-7));
}

TEST_CASE("chi2 route handles the exponential kernel (rough integrand fallback)") {
    IsotropicKernel expk{KernelFamily::Exponential, 1.0, 0.0, 1.0};
    const CorrelationResult q = rho_sigma_chi2(expk, 1.0, 3, kSpec);
    const CorrelationResult m = rho_matern(1.0, 0.5, 3, kSpec);
    CHECK(q.rho == doctest::Approx(m.rho).epsilon(1e-6));
    CHECK(m.rho == doctest::Approx(0.10326435394231).epsilon(1e-9));
}

TEST_CASE("sigma2_flow endpoints and closed SE value") {
    CHECK(sigma2_flow(se(), 0.0, 2, kSpec) == 0.0);
    // r -> infinity: 2 sigma_u^2
    IsotropicKernel k = se(1.0, 1.7);
    CHECK(sigma2_flow(k, 1e5, 2, kSpec) == doctest::Approx(2.0 * 1.7).epsilon(1e-6));
    // SE r=1, T=2: 2 sigma_u^2 (1 - (1+4)^-1) = 1.6 sigma_u^2
    CHECK(sigma2_flow(k, 1.0, 2, kSpec) == doctest::Approx(1.6 * 1.7).epsilon(1e-9));
    CHECK(sigma2_se_anisotropic({1.0, 1.0}, 1.7) == doctest::Approx(1.6 * 1.7).epsilon(1e-12));
}

TEST_CASE("rho_mixture point mass reproduces the closed form") {
    for (double r : {0.3, 1.0, 4.0}) {
        for (int T : {1, 3}) {
            ScaleMixture pm{MixingTarget::RoughnessSquared, PointMassDist{r * r}, false};
            CHECK(rho_mixture(pm, T, kSpec).rho ==
                  doctest::Approx(rho_se_isotropic(r, T)).epsilon(1e-12));
        }
    }
}

TEST_CASE("rho_mixture inverse-gamma(nu,nu) over r^2-scale equals rho_matern") {
    // the Matern route is exactly this mixture; evaluate both paths
    for (double r : {0.25, 1.0}) {
        for (double nu : {0.7, 2.5}) {
            ScaleMixture ig{MixingTarget::RoughnessSquared, InverseGammaDist{nu, nu * r * r}, false};
            const double via_mixture = rho_mixture(ig, 3, kSpec).rho;
            const double via_matern = rho_matern(r, nu, 3, kSpec).rho;
            CHECK(via_mixture == doctest::Approx(via_matern).epsilon(1e-9));
        }
    }
}

TEST_CASE("rho_mixture anisotropic joint rescaling reduces correctly") {
    // point-mass scale reproduces the anisotropic closed form
    const std::vector<double> base{0.04, 0.25, 1.0};
    const CorrelationResult got =
        rho_mixture_anisotropic(PointMassDist{1.0}, base, kSpec);
    const CorrelationResult want = rho_se_anisotropic({0.2, 0.5, 1.0});
    CHECK(got.rho == doctest::Approx(want.rho).epsilon(1e-12));
}

TEST_CASE("rho_matern frozen references") {
    CHECK(rho_matern(1e-3, 0.2, 3, kSpec).rho == doctest::Approx(0.1530665435855).epsilon(1e-7));
    CHECK(rho_matern(0.1, 1.5, 2, kSpec).rho == doctest::Approx(0.47175677054737).epsilon(1e-9));
    CHECK(rho_matern(10.0, 2.5, 4, kSpec).rho == doctest::Approx(3.4374761956226e-5).epsilon(1e-8));
    CHECK(rho_matern(0.3, 1.0, 5, kSpec).rho == doctest::Approx(0.26833836593849).epsilon(1e-9));
}

TEST_CASE("rho_matern large nu approaches the SE curve") {
    for (double r : {0.1, 1.0, 10.0}) {
        const double m = rho_matern(r, 1e3, 2, kSpec).rho;
        CHECK(std::fabs(m - rho_se_isotropic(r, 2)) <= 1e-2);
    }
}

TEST_CASE("rho_matern roughness limit constant (nu=3, T=2)") {
    const double v = rho_matern(1e3, 3.0, 2, kSpec).rho * std::pow(std::sqrt(2.0) * 1e3, 2.0);
    CHECK(v == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("rho_matern monotone non-increasing in r") {
    for (double nu : {0.5, 1.0, 3.0}) {
        double prev = 1.0;
        for (double r = 1e-3; r < 1e3; r *= 4.0) {
            const double rho = rho_matern(r, nu, 3, kSpec).rho;
            CHECK(rho <= prev + 1e-10);
            CHECK(rho >= -1e-10);
            CHECK(rho <= 0.5 + 1e-10);
            prev = rho;
        }
    }
}

TEST_CASE("rho_matern_lower_bound stays below rho_matern") {
    for (double nu : {0.3, 0.7, 1.0, 2.0, 4.0}) {
        for (double r : {0.1, 1.0, 10.0}) {
            const double lb = rho_matern_lower_bound(r, nu, 3, kSpec).rho;
            const double ex = rho_matern(r, nu, 3, kSpec).rho;
            CHECK(lb <= ex + 1e-9);
        }
    }
}

TEST_CASE("rho_matern_lower_bound frozen references") {
    CHECK(rho_matern_lower_bound(1.0, 1.5, 3, kSpec).rho ==
          doctest::Approx(0.095520202591865).epsilon(1e-9));
    CHECK(rho_matern_lower_bound(0.01, 1.0, 3, kSpec).rho ==
          doctest::Approx(0.45041217377738).epsilon(1e-9));
    CHECK(rho_matern_lower_bound(1.0, 0.5, 2, kSpec).rho ==
          doctest::Approx(0.10070301357575).epsilon(1e-9));
}

TEST_CASE("rho_matern_lower_bound smoothness endpoint at nu = 1/2") {
    // r -> 0 with nu = 0.5 approaches 1 - 2^-1/2
    const double want = 1.0 - std::pow(2.0, -0.5);
    CHECK(rho_matern_lower_bound(1e-6, 0.5, 3, kSpec).rho == doctest::Approx(want).epsilon(1e-5));
}

TEST_CASE("rho_matern_lower_bound gap vanishes toward the smoothness limit, nu >= 1") {
    // rho and rho_tilde share limit and convergence exponent; the gap decays
    // like the leading term itself (logarithmically slowly at nu = 1).
    for (double nu : {1.0, 1.5, 3.0}) {
        double prev = 1.0;
        for (double r : {0.1, 1e-2, 1e-3}) {
            const double gap =
                rho_matern(r, nu, 3, kSpec).rho - rho_matern_lower_bound(r, nu, 3, kSpec).rho;
            CHECK(gap >= -1e-9);
            CHECK(gap < prev);
            prev = gap;
        }
    }
    // high-precision reference gaps
    const double gap15 = rho_matern(1e-3, 1.5, 3, kSpec).rho -
                         rho_matern_lower_bound(1e-3, 1.5, 3, kSpec).rho;
    CHECK(gap15 == doctest::Approx(0.000330225).epsilon(1e-3));
    const double gap1 =
        rho_matern(1e-3, 1.0, 3, kSpec).rho - rho_matern_lower_bound(1e-3, 1.0, 3, kSpec).rho;
    CHECK(gap1 == doctest::Approx(0.00935312).epsilon(1e-3));
}

TEST_CASE("rho_matern_lower_bound decays to zero below rho in the rough limit") {
    const double lb = rho_matern_lower_bound(100.0, 2.5, 2, kSpec).rho;
    const double ex = rho_matern(100.0, 2.5, 2, kSpec).rho;
    CHECK(lb > 0.0);
    CHECK(lb < 1e-3);
    CHECK(lb < ex);
}

TEST_CASE("matern_lower_bound_half_gap matches the direct difference at moderate r") {
    for (double nu : {1.5, 3.0}) {
        const double gap = matern_lower_bound_half_gap(0.1, nu, 3, kSpec).value;
        const double direct = 0.5 - rho_matern_lower_bound(0.1, nu, 3, kSpec).rho;
        CHECK(gap == doctest::Approx(direct).epsilon(1e-6));
    }
}

TEST_CASE("quadrature non-convergence propagates with partial estimate") {
    QuadratureSpec strict;
    strict.relative_tolerance = 1e-15;
    strict.absolute_tolerance = 1e-300;
    strict.max_subdivisions = 2;
    const CorrelationResult r = rho_matern(0.5, 0.3, 3, strict);
    CHECK_FALSE(r.converged);
    CHECK(r.error_estimate > 0.0);
    CHECK(std::isfinite(r.rho));
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(rho_se_isotropic(-1.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(rho_se_isotropic(1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(rho_matern(1.0, 0.0, 2, kSpec), std::invalid_argument);
    CHECK_THROWS_AS(rho_se_anisotropic({}), std::invalid_argument);
    CHECK_THROWS_AS(rho_sigma_chi2(se(), -1.0, 2, kSpec), std::invalid_argument);
}
