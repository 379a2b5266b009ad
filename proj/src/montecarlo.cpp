#include "flowcorr/montecarlo.hpp"
#include <limits>
#include "flowcorr/linalg.hpp"
#include "flowcorr/parallel.hpp"

#include <cmath>
#include <numeric>

namespace flowcorr {

TraitDistribution TraitDistribution::gaussian_iso(int dim, double sigma) {
    TraitDistribution d;
    d.kind = Kind::Gaussian;
    d.dim = dim;
    d.sigma_x = sigma * sigma * Eigen::MatrixXd::Identity(dim, dim);
    return d;
}

TraitDistribution TraitDistribution::gaussian(const Eigen::MatrixXd& sigma_x) {
    TraitDistribution d;
    d.kind = Kind::Gaussian;
    d.dim = static_cast<int>(sigma_x.rows());
    d.sigma_x = sigma_x;
    return d;
}

TraitDistribution TraitDistribution::laplace(int dim, double b) {
    TraitDistribution d;
    d.kind = Kind::Laplace;
    d.dim = dim;
    d.scale = b;
    return d;
}

TraitDistribution TraitDistribution::student_t(int dim, double scale, double dof) {
    TraitDistribution d;
    d.kind = Kind::StudentT;
    d.dim = dim;
    d.scale = scale;
    d.dof = dof;
    return d;
}

namespace {

// Latent per-draw standard deviation of the Gaussian scale mixture; 1 for
// plain Gaussian traits.
double draw_latent_sd(const TraitDistribution& d, RngStream& rng) {
    switch (d.kind) {
        case TraitDistribution::Kind::Gaussian:
            return 1.0;
        case TraitDistribution::Kind::Laplace:
            // marginal variance 2 b^2 per coordinate
            return std::sqrt(rng.exponential(2.0 * d.scale * d.scale));
        case TraitDistribution::Kind::StudentT: {
            // sigma^2 ~ InvGamma(dof/2, dof scale^2 / 2)
            const double g = rng.gamma(0.5 * d.dof);
            return std::sqrt(0.5 * d.dof * d.scale * d.scale / g);
        }
    }
    return 1.0;
}

Eigen::VectorXd draw_row(const TraitDistribution& d, double latent_sd, const Eigen::MatrixXd* chol,
                         RngStream& rng) {
    Eigen::VectorXd z(d.dim);
    for (int j = 0; j < d.dim; ++j) z(j) = rng.normal();
    if (d.kind == TraitDistribution::Kind::Gaussian) return (*chol) * z;
    return latent_sd * z;
}

} // namespace

TraitSample sample_traits(int n, const TraitDistribution& dist, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("sample_traits: n >= 1 required");
    Eigen::MatrixXd chol;
    if (dist.kind == TraitDistribution::Kind::Gaussian) {
        if (dist.sigma_x.rows() != dist.dim) throw std::invalid_argument("sample_traits: bad Sigma_x");
        chol = cholesky_psd(dist.sigma_x).L;
    }
    TraitSample out;
    out.dist = dist;
    out.points.resize(n, dist.dim);
    for (int i = 0; i < n; ++i) {
        const double sd = draw_latent_sd(dist, rng);
        out.points.row(i) = draw_row(dist, sd, &chol, rng).transpose();
    }
    return out;
}

Eigen::MatrixXd flow_gram(const TraitSample& traits, const std::vector<std::pair<int, int>>& pairs,
                          const ProductKernel& ku) {
    const int m = static_cast<int>(pairs.size());
    Eigen::MatrixXd G(m, m);
    for (int a = 0; a < m; ++a) {
        const Eigen::VectorXd x = traits.points.row(pairs[a].first);
        const Eigen::VectorXd y = traits.points.row(pairs[a].second);
        for (int b = a; b < m; ++b) {
            const Eigen::VectorXd v = traits.points.row(pairs[b].first);
            const Eigen::VectorXd w = traits.points.row(pairs[b].second);
            const double val = flow_kernel(ku, x, y, v, w);
            G(a, b) = val;
            G(b, a) = val;
        }
    }
    return G;
}

double FlowSample::value(int i, int j) const {
    for (size_t e = 0; e < pair_index.size(); ++e) {
        if (pair_index[e].first == i && pair_index[e].second == j) return values(static_cast<Eigen::Index>(e));
        if (pair_index[e].first == j && pair_index[e].second == i) return -values(static_cast<Eigen::Index>(e));
    }
    throw std::out_of_range("FlowSample::value: pair not present");
}

FlowSample sample_flow(const Eigen::MatrixXd& gram, const std::vector<std::pair<int, int>>& pairs,
                       RngStream& rng) {
    if (gram.rows() != static_cast<Eigen::Index>(pairs.size()))
        throw std::invalid_argument("sample_flow: gram/pairs size mismatch");
    const CholeskyPsdResult ch = cholesky_psd(gram);
    Eigen::VectorXd z(gram.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    FlowSample out;
    out.pair_index = pairs;
    out.values = ch.L * z;
    out.covariance = gram;
    return out;
}

RhoSigmaEstimate estimate_rho_sigma(const IsotropicKernel& kernel, const TraitDistribution& traits,
                                    const RhoSigmaOptions& opt, RngStream& rng) {
    kernel.validate();
    if (opt.replicates < 2) throw std::invalid_argument("estimate_rho_sigma: replicates >= 2 required");
    const int B = std::max(1, opt.batches);
    const long per_batch = (opt.replicates + B - 1) / B;
    const long total = per_batch * B;

    const ProductKernel ku{kernel};
    Eigen::MatrixXd chol;
    if (traits.kind == TraitDistribution::Kind::Gaussian) chol = cholesky_psd(traits.sigma_x).L;

    struct Acc {
        double s11 = 0, s22 = 0, s12 = 0;
        long n = 0;
    };
    std::vector<Acc> acc(static_cast<size_t>(B));

    parallel_chunks(B, [&](int batch) {
        RngStream local = rng.substream(static_cast<std::uint64_t>(batch) + 1);
        Acc a;
        const int T = traits.dim;
        Eigen::VectorXd x(T), y(T), w(T);
        for (long k = 0; k < per_batch; ++k) {
            const double sd = draw_latent_sd(traits, local);
            x = draw_row(traits, sd, &chol, local);
            y = draw_row(traits, sd, &chol, local);
            w = draw_row(traits, sd, &chol, local);
            const double g11 = flow_kernel(ku, x, y, x, y);
            const double g22 = flow_kernel(ku, x, w, x, w);
            const double g12 = flow_kernel(ku, x, y, x, w);
            // 2x2 Cholesky by hand
            const double l11 = std::sqrt(std::max(g11, 0.0));
            const double l21 = l11 > 0 ? g12 / l11 : 0.0;
            const double l22 = std::sqrt(std::max(g22 - l21 * l21, 0.0));
            const double z1 = local.normal(), z2 = local.normal();
            double f1 = l11 * z1;
            double f2 = l21 * z1 + l22 * z2;
            if (opt.rademacher) {
                const double sign = (local.next_u64() & 1ULL) ? 1.0 : -1.0;
                f1 *= sign;
                f2 *= sign;
            }
            a.s11 += f1 * f1;
            a.s22 += f2 * f2;
            a.s12 += f1 * f2;
            ++a.n;
        }
        acc[static_cast<size_t>(batch)] = a;
    });

    double s11 = 0, s22 = 0, s12 = 0;
    std::vector<double> batch_rho, batch_sig;
    batch_rho.reserve(acc.size());
    batch_sig.reserve(acc.size());
    for (const Acc& a : acc) {
        s11 += a.s11;
        s22 += a.s22;
        s12 += a.s12;
        const double bs = 0.5 * (a.s11 + a.s22) / a.n;
        batch_sig.push_back(bs);
        batch_rho.push_back(bs > 0 ? (a.s12 / a.n) / bs : 0.0);
    }
    const double sig2 = 0.5 * (s11 + s22) / total;
    const double rho = sig2 > 0 ? (s12 / total) / sig2 : 0.0;

    const auto batch_stderr = [B](const std::vector<double>& v, double center) {
        if (B < 2) return 0.0;
        double ss = 0;
        for (double b : v) ss += (b - center) * (b - center);
        return std::sqrt(ss / (B - 1) / B);
    };
    const double rho_mean_b = std::accumulate(batch_rho.begin(), batch_rho.end(), 0.0) / B;
    const double sig_mean_b = std::accumulate(batch_sig.begin(), batch_sig.end(), 0.0) / B;

    RhoSigmaEstimate out;
    out.rho = {rho, batch_stderr(batch_rho, rho_mean_b), total, rng.seed(), rng.stream_id()};
    out.sigma2 = {sig2, batch_stderr(batch_sig, sig_mean_b), total, rng.seed(), rng.stream_id()};
    out.degenerate = !(sig2 > 3.0 * out.sigma2.stderr_) || sig2 <= 0.0;
    if (out.degenerate) out.rho.mean = std::numeric_limits<double>::quiet_NaN();
    return out;
}

Eigen::VectorXd sample_matern_path_1d(double nu, double l, const std::vector<double>& grid,
                                      RngStream& rng, double* jitter_out) {
    if (grid.size() > 10000) throw std::invalid_argument("sample_matern_path_1d: grid too large");
    IsotropicKernel kern{KernelFamily::Matern, l, nu, 1.0};
    const int n = static_cast<int>(grid.size());
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            K(i, j) = eval_h(kern, std::fabs(grid[static_cast<size_t>(i)] - grid[static_cast<size_t>(j)]));
            K(j, i) = K(i, j);
        }
    const CholeskyPsdResult ch = cholesky_psd(K);
    if (jitter_out) *jitter_out = ch.jitter;
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = rng.normal();
    return ch.L * z;
}

Eigen::VectorXd sample_matern_path_conditional(double nu, double l,
                                               const std::vector<double>& new_grid,
                                               const std::vector<double>& known_grid,
                                               const Eigen::VectorXd& known_values, RngStream& rng) {
    if (known_grid.empty()) {
        return sample_matern_path_1d(nu, l, new_grid, rng);
    }
    IsotropicKernel kern{KernelFamily::Matern, l, nu, 1.0};
    const int n = static_cast<int>(new_grid.size());
    const int m = static_cast<int>(known_grid.size());
    Eigen::MatrixXd Knn(n, n), Knm(n, m), Kmm(m, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            Knn(i, j) = eval_h(kern, std::fabs(new_grid[static_cast<size_t>(i)] - new_grid[static_cast<size_t>(j)]));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            Knm(i, j) = eval_h(kern, std::fabs(new_grid[static_cast<size_t>(i)] - known_grid[static_cast<size_t>(j)]));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            Kmm(i, j) = eval_h(kern, std::fabs(known_grid[static_cast<size_t>(i)] - known_grid[static_cast<size_t>(j)]));

    const CholeskyPsdResult chm = cholesky_psd(Kmm);
    // posterior mean and covariance of the new points given the old
    const Eigen::MatrixXd W =
        chm.L.triangularView<Eigen::Lower>().solve(Knm.transpose());  // m x n
    const Eigen::VectorXd alpha = chm.L.triangularView<Eigen::Lower>().solve(known_values);
    const Eigen::VectorXd mean = W.transpose() * alpha;
    Eigen::MatrixXd cov = Knn - W.transpose() * W;
    cov = 0.5 * (cov + cov.transpose());
    const CholeskyPsdResult chc = cholesky_psd(cov);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = rng.normal();
    return mean + chc.L * z;
}

} // namespace flowcorr
