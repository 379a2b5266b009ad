#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace flowcorr {

struct CholeskyPsdResult {
    Eigen::MatrixXd L;  // lower triangular, L L^T = A + jitter I
    double jitter = 0.0;
};

// Cholesky of a symmetric PSD matrix with a fixed jitter ladder
// {0, 1e-12, 1e-10, 1e-8} * trace/n. The jitter actually used is reported;
// exhausting the ladder throws (invalid covariance construction).
CholeskyPsdResult cholesky_psd(const Eigen::MatrixXd& A);

struct EigSymResult {
    Eigen::VectorXd values;   // sorted descending
    Eigen::MatrixXd vectors;  // columns match values
};

EigSymResult eig_sym(const Eigen::MatrixXd& A);

} // namespace flowcorr
