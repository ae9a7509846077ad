#pragma once

#include "speq/types.hpp"

namespace speq {

/// K = X X^T / n, symmetrized. Throws if X has non-finite entries or the
/// output size would overflow.
MatrixXd sample_covariance(const MatrixXd& X);

/// Symmetric eigendecomposition of a PSD matrix, computed once per matrix and
/// reused for every spectral argument. Eigenvalues in [-1e-10, 0) are clamped
/// to 0; anything more negative is rejected.
class ResolventView {
public:
    static ResolventView from_psd(const MatrixXd& K);

    const VectorXd& eigenvalues() const { return eigenvalues_; }
    const MatrixXd& eigenvectors() const { return eigenvectors_; }
    Eigen::Index dim() const { return eigenvalues_.size(); }

    /// (K - zI)^{-1} materialized in the standard basis.
    MatrixXcd materialize(const SpectralParameter& z) const;

    /// (1/p) Tr (K - zI)^{-1} without materializing the matrix.
    cplx trace_resolvent_over_p(const SpectralParameter& z) const;

    /// u^T (K - zI)^{-1} u without materializing the matrix.
    cplx quadratic_form(const VectorXd& u, const SpectralParameter& z) const;

private:
    VectorXd eigenvalues_;
    MatrixXd eigenvectors_;
};

MatrixXcd resolvent(const MatrixXd& K, const SpectralParameter& z);

/// Resolvent of the co-sample covariance X^T X / n (an n x n matrix).
MatrixXcd co_resolvent(const MatrixXd& X, const SpectralParameter& z);

/// Resolvent of K - (1/n) x x^T where x is the removed column.
MatrixXcd loo_resolvent(const MatrixXd& X, Eigen::Index column, const SpectralParameter& z);

/// Residuals of the three leave-one-out identities, each scaled by the size
/// of the compared quantities.
struct LooIdentityReport {
    double quadform_residual;  // |(1/n) x^T G x - (1 + z Gc_jj)|, relative
    double matrix_residual;    // ||G - G_- - (z/n) Gc_jj G_- x x^T G_-||_F, relative
    double vector_residual;    // ||G x + z Gc_jj G_- x||, relative
    double denominator_modulus;  // |1 + (1/n) x^T G_- x|
    double max_residual() const;
};

LooIdentityReport check_loo_identities(const MatrixXd& X, Eigen::Index column,
                                       const SpectralParameter& z);

/// Rank-one update of an inverse: (M + u v^T)^{-1} from M^{-1}.
MatrixXcd sherman_morrison_update(const MatrixXcd& Minv, const VectorXcd& u,
                                  const VectorXcd& v);

/// Stieltjes transform of the VESD in direction u: u^T (K - zI)^{-1} u.
cplx vesd_transform(const MatrixXd& K, const VectorXd& u, const SpectralParameter& z);

}  // namespace speq
