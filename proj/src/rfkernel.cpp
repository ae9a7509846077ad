#include "speq/rfkernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "speq/equiv.hpp"
#include "speq/rng.hpp"
#include "speq/simulate.hpp"

namespace speq {

KernelProblem::KernelProblem(MatrixXd K_, VectorXd Y_, double lambda_, int P_)
    : K(std::move(K_)), Y(std::move(Y_)), lambda(lambda_), P(P_) {
    if (K.rows() != K.cols() || K.rows() == 0)
        throw std::invalid_argument("KernelProblem: kernel matrix must be square");
    if (Y.size() != K.rows()) throw std::invalid_argument("KernelProblem: label size mismatch");
    if (lambda <= 0.0) throw std::invalid_argument("KernelProblem: ridge must be positive");
    if (P <= 0) throw std::invalid_argument("KernelProblem: feature count must be positive");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(K);
    if (es.info() != Eigen::Success)
        throw SolveError("KernelProblem: eigendecomposition failed");
    eigenvalues = es.eigenvalues().reverse();
    if (eigenvalues[eigenvalues.size() - 1] <= 0.0)
        throw std::invalid_argument("KernelProblem: kernel matrix is not positive definite");
}

double krr_predict(const KernelProblem& problem, const VectorXd& kernel_row, double ridge) {
    if (ridge <= 0.0) throw std::invalid_argument("krr_predict: ridge must be positive");
    if (kernel_row.size() != problem.N())
        throw std::invalid_argument("krr_predict: kernel row size mismatch");
    MatrixXd A = problem.K;
    A.diagonal().array() += ridge;
    Eigen::LLT<MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) throw SolveError("krr_predict: SPD solve failed");
    return kernel_row.dot(llt.solve(problem.Y));
}

double rf_predict(const MatrixXd& F, const VectorXd& phi_x, const VectorXd& Y, double lambda) {
    if (lambda <= 0.0) throw std::invalid_argument("rf_predict: ridge must be positive");
    const Eigen::Index N = F.rows(), P = F.cols();
    if (phi_x.size() != P || Y.size() != N)
        throw std::invalid_argument("rf_predict: dimension mismatch");
    const double root_p = std::sqrt(static_cast<double>(P));

    MatrixXd primal = F * F.transpose();
    primal.diagonal().array() += lambda;
    Eigen::LLT<MatrixXd> llt_primal(primal);
    if (llt_primal.info() != Eigen::Success) throw SolveError("rf_predict: primal solve failed");
    double value = phi_x.dot(F.transpose() * llt_primal.solve(Y)) / root_p;

    MatrixXd dual = F.transpose() * F;
    dual.diagonal().array() += lambda;
    Eigen::LLT<MatrixXd> llt_dual(dual);
    if (llt_dual.info() != Eigen::Success) throw SolveError("rf_predict: dual solve failed");
    double value_dual = phi_x.dot(llt_dual.solve(F.transpose() * Y)) / root_p;

    if (std::abs(value - value_dual) > 1e-9 * std::max(1.0, std::abs(value)))
        throw SolveError("rf_predict: primal/dual solves disagree");
    return value;
}

EffectiveRidge effective_ridge(const VectorXd& d, int N, int P, double lambda) {
    if (lambda <= 0.0) throw std::invalid_argument("effective_ridge: lambda must be positive");
    if (d.size() != N) throw std::invalid_argument("effective_ridge: eigenvalue count != N");
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (d[i] <= 0.0) throw std::invalid_argument("effective_ridge: eigenvalues must be positive");

    auto phi = [&](double t) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < d.size(); ++i) s += d[i] / (t + d[i]);
        return lambda + t * s / P - t;
    };
    auto phi_prime = [&](double t) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            double q = t + d[i];
            s += d[i] * d[i] / (q * q);
        }
        return s / P - 1.0;
    };

    double lo = lambda, hi = lambda + d.sum() / P;
    double t = 0.5 * (lo + hi);
    EffectiveRidge out;
    for (int iter = 1; iter <= 200; ++iter) {
        out.iterations = iter;
        double f = phi(t);
        out.residual = std::abs(f) / std::max(1.0, t);
        if (out.residual <= 1e-14) break;
        if (f > 0.0) lo = t;
        else hi = t;
        double dp = phi_prime(t);
        double next = t - f / dp;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection safeguard
        if (std::abs(next - t) <= 1e-16 * std::max(1.0, t) && out.residual <= 1e-12) {
            t = next;
            break;
        }
        t = next;
    }
    out.lambda_tilde = t;

    // Cross-check against the fixed-point characterization: with Sigma given
    // by the kernel spectrum, n = P and z = -lambda, lambda_tilde = -c.
    VectorXd desc = d;
    std::sort(desc.data(), desc.data() + desc.size(), std::greater<double>());
    CovarianceModel model(desc, static_cast<double>(N) / P);
    FixedPointSolution sol = solve_fixed_point(model, SpectralParameter::real_negative(-lambda));
    double other = -sol.c.real();
    if (std::abs(other - out.lambda_tilde) > 1e-8 * std::max(1.0, out.lambda_tilde))
        throw SolveError("effective_ridge: self-consistent and fixed-point characterizations disagree");
    return out;
}

namespace {

// Feature block of i.i.d. columns with covariance factor A (eigen square
// root); Lipschitz kind pushes the Gaussian through a variance-normalized
// soft-threshold before recoloring.
MatrixXd sample_features(const MatrixXd& A, int P, FeatureKind kind, std::uint64_t seed,
                         int replica) {
    const Eigen::Index M = A.rows();
    const double kappa = 0.5;
    const double scale = 1.0 / std::sqrt(soft_threshold_variance(kappa));
    MatrixXd W(M, P);
    for (int j = 0; j < P; ++j) {
        StreamRng rng(seed, static_cast<std::uint64_t>(replica), static_cast<std::uint64_t>(j),
                      0xFEA7);
        for (Eigen::Index i = 0; i < M; ++i) {
            double g = rng.next_gaussian();
            if (kind == FeatureKind::LipschitzGaussian)
                g = std::copysign(std::max(std::abs(g) - kappa, 0.0), g) * scale;
            W(i, j) = g;
        }
    }
    return A * W;
}

MatrixXd psd_sqrt(const MatrixXd& K) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(K);
    VectorXd vals = es.eigenvalues();
    for (Eigen::Index i = 0; i < vals.size(); ++i) vals[i] = std::sqrt(std::max(vals[i], 0.0));
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

DebiasReport debias_experiment(const MatrixXd& K_joint, int N, const VectorXd& Y, double lambda,
                               int P, FeatureKind kind, int replicas, std::uint64_t seed) {
    const Eigen::Index M = K_joint.rows();
    if (M <= N) throw std::invalid_argument("debias_experiment: no test points in K_joint");
    const int m = static_cast<int>(M) - N;

    KernelProblem problem(K_joint.topLeftCorner(N, N), Y, lambda, P);
    EffectiveRidge er = effective_ridge(problem.eigenvalues, N, P, lambda);

    DebiasReport report;
    report.lambda = lambda;
    report.lambda_tilde = er.lambda_tilde;
    report.underparametrized = P < N;
    report.krr_tilde.resize(m);
    report.krr_naive.resize(m);
    for (int t = 0; t < m; ++t) {
        VectorXd row = K_joint.row(N + t).head(N);
        report.krr_tilde[t] = krr_predict(problem, row, er.lambda_tilde);
        report.krr_naive[t] = krr_predict(problem, row, lambda);
    }

    MatrixXd A = psd_sqrt(K_joint);
    const double root_p = std::sqrt(static_cast<double>(P));

    std::vector<double> sum(m, 0.0), sum_sq(m, 0.0);
    const int batch = 16;
    std::vector<std::vector<double>> slot(batch, std::vector<double>(m));
    for (int base = 0; base < replicas; base += batch) {
        const int count = std::min(batch, replicas - base);
#pragma omp parallel for schedule(dynamic)
        for (int k = 0; k < count; ++k) {
            MatrixXd Phi = sample_features(A, P, kind, seed, base + k);
            MatrixXd F = Phi.topRows(N) / root_p;
            MatrixXd G = F * F.transpose();
            G.diagonal().array() += lambda;
            Eigen::LLT<MatrixXd> llt(G);
            VectorXd alpha = F.transpose() * llt.solve(Y);
            for (int t = 0; t < m; ++t)
                slot[k][t] = Phi.row(N + t).dot(alpha) / root_p;
        }
        for (int k = 0; k < count; ++k)
            for (int t = 0; t < m; ++t) {
                sum[t] += slot[k][t];
                sum_sq[t] += slot[k][t] * slot[k][t];
            }
    }

    report.mean_rf.resize(m);
    report.mc_stderr.resize(m);
    report.gap_tilde.resize(m);
    report.gap_naive.resize(m);
    report.tilde_wins_all = true;
    for (int t = 0; t < m; ++t) {
        double mean = sum[t] / replicas;
        double var = std::max(sum_sq[t] / replicas - mean * mean, 0.0);
        report.mean_rf[t] = mean;
        report.mc_stderr[t] = std::sqrt(var / replicas);
        report.gap_tilde[t] = std::abs(mean - report.krr_tilde[t]);
        report.gap_naive[t] = std::abs(mean - report.krr_naive[t]);
        if (report.gap_tilde[t] >= report.gap_naive[t]) report.tilde_wins_all = false;
    }
    return report;
}

std::vector<int> select_informative_test_points(const MatrixXd& K_joint, int N, const VectorXd& Y,
                                                double lambda, int P, int count) {
    const int m = static_cast<int>(K_joint.rows()) - N;
    if (count > m) throw std::invalid_argument("select_informative_test_points: not enough candidates");
    KernelProblem problem(K_joint.topLeftCorner(N, N), Y, lambda, P);
    EffectiveRidge er = effective_ridge(problem.eigenvalues, N, P, lambda);
    std::vector<double> spread(m);
    for (int t = 0; t < m; ++t) {
        VectorXd row = K_joint.row(N + t).head(N);
        spread[t] = std::abs(krr_predict(problem, row, er.lambda_tilde) -
                             krr_predict(problem, row, lambda));
    }
    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return spread[a] > spread[b]; });
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

RbfExperiment make_rbf_experiment(int N, int candidates, double length_scale,
                                  std::uint64_t seed) {
    RbfExperiment exp;
    exp.train_points.resize(N);
    StreamRng rng(seed, 0x7E57);
    for (int i = 0; i < N; ++i) exp.train_points[i] = 3.0 * rng.next_uniform();
    std::sort(exp.train_points.begin(), exp.train_points.end());
    exp.candidate_points.resize(candidates);
    for (int t = 0; t < candidates; ++t)
        exp.candidate_points[t] = 0.1 + 2.8 * t / std::max(1, candidates - 1);

    std::vector<double> pts = exp.train_points;
    pts.insert(pts.end(), exp.candidate_points.begin(), exp.candidate_points.end());
    const int M = static_cast<int>(pts.size());
    exp.K_joint.resize(M, M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            double d = pts[i] - pts[j];
            exp.K_joint(i, j) = std::exp(-d * d / (2.0 * length_scale * length_scale));
        }
    exp.K_joint.diagonal().array() += 1e-8;

    exp.Y.resize(N);
    for (int i = 0; i < N; ++i)
        exp.Y[i] = std::sin(2.0 * exp.train_points[i]) + 0.7 * std::sin(7.0 * exp.train_points[i]);
    return exp;
}

}  // namespace speq
