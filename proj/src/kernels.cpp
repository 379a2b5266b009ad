#include "flowcorr/kernels.hpp"
#include "flowcorr/special.hpp"

#include <cmath>

namespace flowcorr {

std::string to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::SquaredExponential: return "squared_exponential";
        case KernelFamily::Exponential: return "exponential";
        case KernelFamily::Matern: return "matern";
        case KernelFamily::RationalQuadratic: return "rational_quadratic";
    }
    return "?";
}

KernelFamily kernel_family_from_string(const std::string& s) {
    if (s == "squared_exponential" || s == "se") return KernelFamily::SquaredExponential;
    if (s == "exponential") return KernelFamily::Exponential;
    if (s == "matern") return KernelFamily::Matern;
    if (s == "rational_quadratic" || s == "rq") return KernelFamily::RationalQuadratic;
    throw std::invalid_argument("unknown kernel family: " + s);
}

std::string to_string(TraitFamily f) {
    switch (f) {
        case TraitFamily::Gaussian: return "gaussian";
        case TraitFamily::Laplace: return "laplace";
        case TraitFamily::StudentT: return "student_t";
    }
    return "?";
}

TraitFamily trait_family_from_string(const std::string& s) {
    if (s == "gaussian") return TraitFamily::Gaussian;
    if (s == "laplace") return TraitFamily::Laplace;
    if (s == "student_t") return TraitFamily::StudentT;
    throw std::invalid_argument("unknown trait family: " + s);
}

void IsotropicKernel::validate() const {
    if (!(length_scale > 0)) throw std::invalid_argument("kernel: length_scale must be > 0");
    if (!(amplitude > 0)) throw std::invalid_argument("kernel: amplitude must be > 0");
    if ((family == KernelFamily::Matern || family == KernelFamily::RationalQuadratic) && !(shape > 0))
        throw std::invalid_argument("kernel: shape must be > 0 for matern/rational_quadratic");
}

nlohmann::json to_json(const IsotropicKernel& k) {
    return {{"family", to_string(k.family)},
            {"l", k.length_scale},
            {"shape", k.shape},
            {"amplitude", k.amplitude}};
}

IsotropicKernel kernel_from_json(const nlohmann::json& j) {
    IsotropicKernel k;
    k.family = kernel_family_from_string(j.at("family").get<std::string>());
    k.length_scale = j.at("l").get<double>();
    k.shape = j.value("shape", 0.0);
    k.amplitude = j.value("amplitude", 1.0);
    k.validate();
    return k;
}

double eval_log_h(const IsotropicKernel& kernel, double d) {
    if (d < 0) throw std::domain_error("eval_h: distance must be >= 0");
    const double l = kernel.length_scale;
    switch (kernel.family) {
        case KernelFamily::SquaredExponential: {
            const double t = d / l;
            return -0.5 * t * t;
        }
        case KernelFamily::Exponential:
            return -d / l;
        case KernelFamily::RationalQuadratic: {
            const double a = kernel.shape;
            const double t = d / l;
            return -a * std::log1p(0.5 * t * t / a);
        }
        case KernelFamily::Matern: {
            const double nu = kernel.shape;
            if (d < 1e-12 * l) return 0.0;  // removable 0^nu * K_nu(0) limit
            const double s = std::sqrt(2.0 * nu) * d / l;
            return (1.0 - nu) * std::log(2.0) - gamma_ln(nu) + nu * std::log(s) +
                   log_bessel_k(nu, s);
        }
    }
    return 0.0;
}

double eval_h(const IsotropicKernel& kernel, double d) {
    const double logh = eval_log_h(kernel, d);
    return logh < -745.0 ? 0.0 : std::exp(logh);
}

double eval_one_minus_h(const IsotropicKernel& kernel, double d) {
    return -std::expm1(eval_log_h(kernel, d));
}

double eval_h_diff(const IsotropicKernel& kernel, double d1, double d2) {
    const double l1 = eval_log_h(kernel, d1);
    const double l2 = eval_log_h(kernel, d2);
    if (l1 < -745.0) return eval_h(kernel, d1) - eval_h(kernel, d2);
    return -std::exp(l1) * std::expm1(l2 - l1);
}

double matern_psd(double zeta_norm, double nu, double l, int dim) {
    if (!(nu > 0) || !(l > 0) || dim < 1) throw std::invalid_argument("matern_psd: bad parameters");
    const double d = dim;
    const double w = 2.0 * M_PI * zeta_norm;
    const double logval = gamma_ln(nu + 0.5 * d) - gamma_ln(nu) + d * std::log(2.0) +
                          0.5 * d * std::log(M_PI) + 0.5 * d * std::log(l * l / (2.0 * nu)) -
                          (nu + 0.5 * d) * std::log1p(l * l * w * w / (2.0 * nu));
    return std::exp(logval);
}

std::vector<double> roughness_coefficients(const RoughnessSpec& spec) {
    if (spec.coefficients) {
        std::vector<double> r = *spec.coefficients;
        for (double v : r)
            if (v < 0 || !std::isfinite(v))
                throw std::invalid_argument("roughness coefficients must be finite and >= 0");
        std::sort(r.begin(), r.end(), std::greater<double>());
        return r;
    }
    if (!spec.sigma_x || !spec.sigma_u)
        throw std::invalid_argument("roughness_coefficients: need coefficients or both matrices");
    const Eigen::MatrixXd& Sx = *spec.sigma_x;
    const Eigen::MatrixXd& Su = *spec.sigma_u;
    if (Sx.rows() != Sx.cols() || Su.rows() != Su.cols() || Sx.rows() != Su.rows())
        throw std::invalid_argument("roughness_coefficients: dimension mismatch");

    EigSymResult eu = eig_sym(Su);
    const double scale = eu.values(0);
    if (!(scale > 0) || eu.values(eu.values.size() - 1) <= 1e-14 * scale)
        throw std::invalid_argument("roughness_coefficients: Sigma_u is singular");
    // Sigma_u^{-1/2} Sigma_x Sigma_u^{-1/2}, symmetrized similar form of R
    Eigen::VectorXd inv_sqrt = eu.values.array().rsqrt();
    Eigen::MatrixXd W = eu.vectors * inv_sqrt.asDiagonal() * eu.vectors.transpose();
    Eigen::MatrixXd M = W * Sx * W;
    M = 0.5 * (M + M.transpose());
    EigSymResult em = eig_sym(M);
    std::vector<double> r(M.rows());
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        double lam = em.values(i);
        if (lam < -1e-10 * std::max(1.0, std::fabs(em.values(0))))
            throw std::invalid_argument("roughness_coefficients: Sigma_x is not PSD");
        r[static_cast<size_t>(i)] = std::sqrt(std::max(0.0, lam));
    }
    return r;
}

double ProductKernel::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& v, const Eigen::VectorXd& w) const {
    const double d2 = (x - v).squaredNorm() + (y - w).squaredNorm();
    return base.amplitude * eval_h(base, std::sqrt(d2));
}

double flow_kernel(const ProductKernel& ku, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
    return ku.eval(x, y, v, w) - ku.eval(x, y, w, v) - ku.eval(y, x, v, w) + ku.eval(y, x, w, v);
}

ScaleMixture mixture_rep(TraitFamily traits, KernelFamily kernel, double trait_scale,
                         double length_scale, double kernel_shape, double trait_dof) {
    const double l2 = length_scale * length_scale;
    const double s2 = trait_scale * trait_scale;
    switch (traits) {
        case TraitFamily::Gaussian:
            if (kernel == KernelFamily::SquaredExponential)
                return {MixingTarget::RoughnessSquared, PointMassDist{s2 / l2}, false};
            if (kernel == KernelFamily::RationalQuadratic)
                // sigma_u^2 ~ InvGamma(alpha, alpha l^2)  =>  r^2 ~ Gamma(alpha, rate alpha l^2/s^2)
                return {MixingTarget::KernelVariance, GammaDist{kernel_shape, kernel_shape * l2 / s2},
                        false};
            if (kernel == KernelFamily::Exponential)
                // sigma_u^2 ~ Exp  =>  r^2 ~ InvGamma(1, .)
                return {MixingTarget::KernelVariance, InverseGammaDist{1.0, s2 / (2.0 * l2)}, false};
            break;
        case TraitFamily::Laplace:
            if (kernel == KernelFamily::SquaredExponential)
                // sigma_x^2 ~ Exp(mean 2 b^2)  =>  r^2 ~ Exp(rate l^2 / 2 b^2)
                return {MixingTarget::TraitVariance, ExponentialDist{l2 / (2.0 * s2)}, false};
            if (kernel == KernelFamily::Exponential)
                return {MixingTarget::RoughnessSquared, HalfCauchyDist{2.0 * s2 / l2}, true};
            break;
        case TraitFamily::StudentT:
            if (kernel == KernelFamily::SquaredExponential)
                // sigma_x^2 ~ InvGamma(df/2, df s^2/2)
                return {MixingTarget::TraitVariance,
                        InverseGammaDist{0.5 * trait_dof, 0.5 * trait_dof * s2 / l2}, false};
            if (kernel == KernelFamily::RationalQuadratic)
                return {MixingTarget::RoughnessSquared, BetaPrimeDist{0.5 * trait_dof, kernel_shape},
                        true};
            break;
    }
    throw std::invalid_argument("mixture_rep: unsupported (trait, kernel) pair: " + to_string(traits) +
                                " x " + to_string(kernel));
}

} // namespace flowcorr
