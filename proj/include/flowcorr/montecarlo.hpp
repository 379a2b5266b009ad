#pragma once

#include "flowcorr/kernels.hpp"
#include "flowcorr/rng.hpp"

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace flowcorr {

// Trait distributions. Laplace and Student-t are Gaussian scale mixtures:
// each draw carries a latent variance. sample_traits draws the latent per
// row (rows i.i.d.); the rho/sigma estimator draws it once per replicate so
// the whole triple shares one trait spread, which is the population the
// mixture formulas integrate over.
struct TraitDistribution {
    enum class Kind { Gaussian, Laplace, StudentT } kind = Kind::Gaussian;
    int dim = 1;
    Eigen::MatrixXd sigma_x;  // Gaussian only; dim x dim
    double scale = 1.0;       // Laplace scale b / Student-t scale
    double dof = 3.0;         // Student-t

    static TraitDistribution gaussian_iso(int dim, double sigma);
    static TraitDistribution gaussian(const Eigen::MatrixXd& sigma_x);
    static TraitDistribution laplace(int dim, double b);
    static TraitDistribution student_t(int dim, double scale, double dof);
};

struct TraitSample {
    Eigen::MatrixXd points;  // n x T
    TraitDistribution dist;
};

TraitSample sample_traits(int n, const TraitDistribution& dist, RngStream& rng);

// Gram matrix of the flow kernel over ordered vertex pairs.
Eigen::MatrixXd flow_gram(const TraitSample& traits, const std::vector<std::pair<int, int>>& pairs,
                          const ProductKernel& ku);

struct FlowSample {
    std::vector<std::pair<int, int>> pair_index;
    Eigen::VectorXd values;
    Eigen::MatrixXd covariance;

    // f(i,j); the reversed pair is the exact negation.
    double value(int i, int j) const;
};

FlowSample sample_flow(const Eigen::MatrixXd& gram, const std::vector<std::pair<int, int>>& pairs,
                       RngStream& rng);

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    long replicates = 0;
    std::uint64_t rng_seed = 0;
    std::uint64_t rng_stream = 0;
};

struct RhoSigmaOptions {
    long replicates = 100000;
    int batches = 32;          // batch-means stderr
    bool rademacher = false;   // modulate each replicate by an independent sign
};

struct RhoSigmaEstimate {
    McEstimate rho;
    McEstimate sigma2;
    bool degenerate = false;  // sigma^2 indistinguishable from zero
};

// Shared-endpoint correlation and flow variance by direct simulation: per
// replicate draw (X, Y, W), sample (F(X,Y), F(X,W)) from the 2x2 flow Gram,
// and accumulate the ratio estimator. Batches own RNG substreams, so the
// result is identical for any thread count.
RhoSigmaEstimate estimate_rho_sigma(const IsotropicKernel& kernel, const TraitDistribution& traits,
                                    const RhoSigmaOptions& opt, RngStream& rng);

// Mean-zero Matern path on a sorted 1-D grid. Near-duplicate grid points are
// resolved by the Cholesky jitter ladder; the jitter used is reported through
// `jitter_out` when given.
Eigen::VectorXd sample_matern_path_1d(double nu, double l, const std::vector<double>& grid,
                                      RngStream& rng, double* jitter_out = nullptr);

// Conditional refinement: sample values on new_grid given observed values on
// known_grid (nested-zoom consistency for path figures).
Eigen::VectorXd sample_matern_path_conditional(double nu, double l,
                                               const std::vector<double>& new_grid,
                                               const std::vector<double>& known_grid,
                                               const Eigen::VectorXd& known_values, RngStream& rng);

} // namespace flowcorr
