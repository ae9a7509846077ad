#pragma once

#include "speq/types.hpp"

namespace speq {

/// Population description: spectrum of Sigma, aspect ratio gamma = p/n and a
/// bound on ||E[x]||. The solver consumes Sigma through its eigenvalues only.
struct CovarianceModel {
    VectorXd sigma_eigenvalues;  // descending, >= 0
    double gamma = 1.0;          // p / n
    double mean_norm = 0.0;

    CovarianceModel(VectorXd eigenvalues_desc, double gamma_, double mean_norm_ = 0.0);

    static CovarianceModel identity(Eigen::Index p, double gamma);

    Eigen::Index p() const { return sigma_eigenvalues.size(); }
    double n() const { return static_cast<double>(p()) / gamma; }
    double spectral_norm() const { return sigma_eigenvalues.size() ? sigma_eigenvalues[0] : 0.0; }
    double min_eigenvalue() const {
        return sigma_eigenvalues.size() ? sigma_eigenvalues[sigma_eigenvalues.size() - 1] : 0.0;
    }
    bool invertible() const { return min_eigenvalue() > 0.0; }
};

/// Membership in Omega: (-inf, z] on the real branch, the sector
/// { Im(l) >= Im(z), Im(l/z) >= 0 } on the complex branch.
bool omega_contains(cplx l, const SpectralParameter& z);

/// F(l) = z + (z/n) Tr(G^l Sigma), evaluated through Sigma's eigenvalues as
/// z + (1/n) sum_i lambda_i l / (lambda_i - l). Throws if l is outside Omega.
cplx functional_F(const CovarianceModel& model, double n, cplx l, const SpectralParameter& z);

/// d/dl of the functional: (1/n) sum_i lambda_i^2 / (lambda_i - l)^2.
cplx functional_F_prime(const CovarianceModel& model, double n, cplx l);

/// Branch-specific contraction constant of F, always < 1.
double contraction_constant(const CovarianceModel& model, const SpectralParameter& z);

struct FixedPointSolution {
    cplx c;
    double residual = 0.0;             // |F(c) - c|
    int iterations = 0;
    double contraction_estimate = 0.0;  // observed Picard step-size ratio
    double kF_theoretical = 0.0;
};

struct SolveOptions {
    double tol = 1e-12;
    int max_iter = 100000;
    /// Picard-only follows the plain iteration from the contraction proof;
    /// Auto switches to safeguarded Newton once warmed up, which is needed
    /// when kF approaches 1 near the real axis.
    enum class Scheme { Auto, PicardOnly } scheme = Scheme::Auto;
    bool has_start = false;
    cplx start;
};

/// Solves c = F(c) by Picard iteration from l0 = z (optionally Newton-
/// accelerated). The iterates stay in Omega; non-convergence throws a
/// SolveError carrying the last iterate and residual.
FixedPointSolution solve_fixed_point(const CovarianceModel& model, const SpectralParameter& z,
                                     const SolveOptions& options = {});

/// Diagonal of G(z) = (z/c Sigma - z I)^{-1} in Sigma's eigenbasis.
VectorXcd deterministic_equivalent_diag(const CovarianceModel& model,
                                        const FixedPointSolution& solution,
                                        const SpectralParameter& z);

/// Stieltjes transform of nu = MP(gamma) x mu_Sigma: (1/p) Tr G(z).
cplx g_nu(const CovarianceModel& model, const FixedPointSolution& solution,
          const SpectralParameter& z);

/// g of nu_check = (1-gamma) delta_0 + gamma nu, via the lemma formula
/// (gamma-1)/z + gamma g_nu; checked against -1/c to 1e-10.
cplx g_nu_check(const CovarianceModel& model, const FixedPointSolution& solution,
                const SpectralParameter& z);

/// Semi-metric d(w1, w2) = |w1 - w2| / sqrt(Im w1 Im w2) on the upper
/// half-plane.
double semi_metric(cplx w1, cplx w2);

/// Guaranteed bound |c - b| <= step_norm / (1 - kF (1 + delta)) from the
/// stability lemma; requires kF (1 + delta) < 1.
double stability_gap_bound(double kF, double delta, double step_norm);

}  // namespace speq
