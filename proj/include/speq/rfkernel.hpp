#pragma once

#include <cstdint>
#include <vector>

#include "speq/types.hpp"

namespace speq {

/// Kernel ridge regression problem: positive definite kernel matrix on the
/// training points, labels, ridge and the random-feature count P.
struct KernelProblem {
    MatrixXd K;            // N x N, symmetric positive definite
    VectorXd eigenvalues;  // descending, > 0
    VectorXd Y;
    double lambda = 1.0;
    int P = 1;

    KernelProblem(MatrixXd K_, VectorXd Y_, double lambda_, int P_);

    Eigen::Index N() const { return K.rows(); }
    double gamma() const { return static_cast<double>(N()) / P; }
};

/// KRR prediction k(x,.)^T (K + ridge I)^{-1} Y via an SPD solve.
double krr_predict(const KernelProblem& problem, const VectorXd& kernel_row, double ridge);

/// RF prediction P^{-1/2} phi_x^T F^T (F F^T + lambda I)^{-1} Y with F the
/// P^{-1/2}-scaled feature matrix. The primal and dual solves are both
/// evaluated and must agree to 1e-9.
double rf_predict(const MatrixXd& F, const VectorXd& phi_x, const VectorXd& Y, double lambda);

struct EffectiveRidge {
    double lambda_tilde = 0.0;  // > lambda
    double residual = 0.0;      // self-consistent equation residual
    int iterations = 0;
};

/// Solves lambda_tilde = lambda + (lambda_tilde/P) sum_i d_i/(lambda_tilde +
/// d_i) by safeguarded Newton on [lambda, lambda + sum d_i / P], then
/// cross-checks against the fixed-point characterization lambda_tilde = -c at
/// z = -lambda; disagreement beyond 1e-8 throws.
EffectiveRidge effective_ridge(const VectorXd& d, int N, int P, double lambda);

enum class FeatureKind { Gaussian, LipschitzGaussian };

struct DebiasReport {
    double lambda = 0.0;
    double lambda_tilde = 0.0;
    std::vector<double> mean_rf;     // per test point, averaged over feature draws
    std::vector<double> krr_tilde;   // KRR prediction at the effective ridge
    std::vector<double> krr_naive;   // KRR prediction at the nominal ridge
    std::vector<double> gap_tilde;   // |mean_rf - krr_tilde|
    std::vector<double> gap_naive;   // |mean_rf - krr_naive|
    std::vector<double> mc_stderr;
    bool underparametrized = false;  // P < N
    bool tilde_wins_all = false;     // gap_tilde < gap_naive at every test point
};

/// Debiasing experiment: K_joint is the kernel matrix over the N training
/// points followed by the test points; feature columns are sampled i.i.d.
/// with covariance K_joint (exactly, via its eigen square root).
DebiasReport debias_experiment(const MatrixXd& K_joint, int N, const VectorXd& Y, double lambda,
                               int P, FeatureKind kind, int replicas, std::uint64_t seed);

/// Picks the "count" test candidates where KRR(lambda_tilde) and KRR(lambda)
/// differ the most, so the debias comparison is resolvable above Monte Carlo
/// noise. Returns indices into the candidate block of K_joint.
std::vector<int> select_informative_test_points(const MatrixXd& K_joint, int N, const VectorXd& Y,
                                                double lambda, int P, int count);

/// RBF kernel matrix plus smooth labels on sorted uniform points in [0, 3];
/// candidates appended after the N training points.
struct RbfExperiment {
    MatrixXd K_joint;
    VectorXd Y;
    std::vector<double> train_points;
    std::vector<double> candidate_points;
};
RbfExperiment make_rbf_experiment(int N, int candidates, double length_scale,
                                  std::uint64_t seed);

}  // namespace speq
