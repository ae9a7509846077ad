#include "speq/matrix_core.hpp"

#include <algorithm>
#include <limits>

namespace speq {

MatrixXd sample_covariance(const MatrixXd& X) {
    const Eigen::Index p = X.rows(), n = X.cols();
    if (p < 1 || n < 1) throw std::invalid_argument("sample_covariance: empty matrix");
    if (!X.allFinite()) throw std::invalid_argument("sample_covariance: non-finite entries");
    if (static_cast<double>(p) * static_cast<double>(p) >
        static_cast<double>(std::numeric_limits<Eigen::Index>::max()))
        throw std::invalid_argument("sample_covariance: dimension overflow");
    MatrixXd K = (X * X.transpose()) / static_cast<double>(n);
    K = 0.5 * (K + K.transpose()).eval();
    return K;
}

ResolventView ResolventView::from_psd(const MatrixXd& K) {
    if (K.rows() != K.cols()) throw std::invalid_argument("ResolventView: matrix not square");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(K);
    if (es.info() != Eigen::Success)
        throw SolveError("ResolventView: eigendecomposition did not converge");
    ResolventView view;
    view.eigenvalues_ = es.eigenvalues();
    view.eigenvectors_ = es.eigenvectors();
    double scale = std::max(1.0, K.norm());
    double recon = (view.eigenvectors_ * view.eigenvalues_.asDiagonal() *
                        view.eigenvectors_.transpose() -
                    K).norm();
    if (recon > 1e-9 * scale)
        throw SolveError("ResolventView: eigendecomposition residual too large");
    for (Eigen::Index i = 0; i < view.eigenvalues_.size(); ++i) {
        double& lam = view.eigenvalues_[i];
        if (lam < 0.0) {
            if (lam < -1e-10) throw std::invalid_argument("ResolventView: matrix is not PSD");
            lam = 0.0;
        }
    }
    return view;
}

MatrixXcd ResolventView::materialize(const SpectralParameter& z) const {
    VectorXcd d(eigenvalues_.size());
    for (Eigen::Index i = 0; i < d.size(); ++i)
        d[i] = 1.0 / (cplx(eigenvalues_[i], 0.0) - z.value());
    return eigenvectors_ * d.asDiagonal() * eigenvectors_.transpose();
}

cplx ResolventView::trace_resolvent_over_p(const SpectralParameter& z) const {
    cplx acc = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i)
        acc += 1.0 / (cplx(eigenvalues_[i], 0.0) - z.value());
    return acc / static_cast<double>(eigenvalues_.size());
}

cplx ResolventView::quadratic_form(const VectorXd& u, const SpectralParameter& z) const {
    VectorXd w = eigenvectors_.transpose() * u;
    cplx acc = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i)
        acc += w[i] * w[i] / (cplx(eigenvalues_[i], 0.0) - z.value());
    return acc;
}

MatrixXcd resolvent(const MatrixXd& K, const SpectralParameter& z) {
    return ResolventView::from_psd(K).materialize(z);
}

MatrixXcd co_resolvent(const MatrixXd& X, const SpectralParameter& z) {
    const double n = static_cast<double>(X.cols());
    MatrixXd Kc = (X.transpose() * X) / n;
    Kc = 0.5 * (Kc + Kc.transpose()).eval();
    return resolvent(Kc, z);
}

MatrixXcd loo_resolvent(const MatrixXd& X, Eigen::Index column, const SpectralParameter& z) {
    if (column < 0 || column >= X.cols())
        throw std::out_of_range("loo_resolvent: column index out of range");
    const double n = static_cast<double>(X.cols());
    VectorXd x = X.col(column);
    MatrixXd Kminus = sample_covariance(X) - (x * x.transpose()) / n;
    Kminus = 0.5 * (Kminus + Kminus.transpose()).eval();
    return resolvent(Kminus, z);
}

double LooIdentityReport::max_residual() const {
    return std::max({quadform_residual, matrix_residual, vector_residual});
}

LooIdentityReport check_loo_identities(const MatrixXd& X, Eigen::Index column,
                                       const SpectralParameter& z) {
    if (column < 0 || column >= X.cols())
        throw std::out_of_range("check_loo_identities: column index out of range");
    const double n = static_cast<double>(X.cols());
    VectorXd x = X.col(column);

    MatrixXcd G = resolvent(sample_covariance(X), z);
    MatrixXcd Gm = loo_resolvent(X, column, z);
    MatrixXcd Gc = co_resolvent(X, z);
    cplx gc_jj = Gc(column, column);

    VectorXcd Gm_x = Gm * x.cast<cplx>();
    cplx denom = 1.0 + x.cast<cplx>().dot(Gm_x) / n;
    if (std::abs(denom) <= 1e-14)
        throw SolveError("check_loo_identities: degenerate denominator 1 + x^T G_- x / n");

    VectorXcd G_x = G * x.cast<cplx>();
    cplx lhs1 = x.cast<cplx>().dot(G_x) / n;
    cplx rhs1 = 1.0 + z.value() * gc_jj;
    double scale1 = std::max({1.0, std::abs(lhs1), std::abs(rhs1)});

    MatrixXcd rhs2 = Gm + (z.value() / n) * gc_jj * (Gm_x * Gm_x.transpose());
    double scale2 = std::max({1.0, G.norm(), rhs2.norm()});

    VectorXcd rhs3 = -z.value() * gc_jj * Gm_x;
    double scale3 = std::max({1.0, G_x.norm(), rhs3.norm()});

    LooIdentityReport report;
    report.quadform_residual = std::abs(lhs1 - rhs1) / scale1;
    report.matrix_residual = (G - rhs2).norm() / scale2;
    report.vector_residual = (G_x - rhs3).norm() / scale3;
    report.denominator_modulus = std::abs(denom);
    return report;
}

MatrixXcd sherman_morrison_update(const MatrixXcd& Minv, const VectorXcd& u,
                                  const VectorXcd& v) {
    cplx denom = 1.0 + (v.transpose() * (Minv * u))(0, 0);
    if (std::abs(denom) <= 1e-14)
        throw SolveError("sherman_morrison_update: singular rank-one update");
    VectorXcd Mu = Minv * u;
    VectorXcd Mtv = Minv.transpose() * v;
    return Minv - (Mu * Mtv.transpose()) / denom;
}

cplx vesd_transform(const MatrixXd& K, const VectorXd& u, const SpectralParameter& z) {
    if (std::abs(u.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("vesd_transform: direction is not unit-norm");
    return ResolventView::from_psd(K).quadratic_form(u, z);
}

}  // namespace speq
