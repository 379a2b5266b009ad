#include "flowcorr/linalg.hpp"

namespace flowcorr {

CholeskyPsdResult cholesky_psd(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("cholesky_psd: matrix must be square");
    const Eigen::Index n = A.rows();
    if (n == 0) return {Eigen::MatrixXd(0, 0), 0.0};
    if (A.lpNorm<Eigen::Infinity>() == 0.0) {
        return {Eigen::MatrixXd::Zero(n, n), 0.0};
    }
    const double base = A.trace() / static_cast<double>(n);
    const double ladder[] = {0.0, 1e-12, 1e-10, 1e-8};
    for (double step : ladder) {
        const double eps = step * base;
        Eigen::MatrixXd M = A;
        M.diagonal().array() += eps;
        Eigen::LLT<Eigen::MatrixXd> llt(M);
        if (llt.info() == Eigen::Success) {
            return {Eigen::MatrixXd(llt.matrixL()), eps};
        }
    }
    throw std::runtime_error("cholesky_psd: jitter ladder exhausted (invalid covariance)");
}

EigSymResult eig_sym(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("eig_sym: matrix must be square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success) throw std::runtime_error("eig_sym: eigensolver failed");
    const Eigen::Index n = A.rows();
    EigSymResult out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = es.eigenvalues()(n - 1 - i);
        out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    return out;
}

} // namespace flowcorr
