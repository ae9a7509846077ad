#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "speq/types.hpp"

namespace speq {

enum class ColumnKind { GaussianLinear, RademacherLinear, LipschitzGaussianFeature };

const char* column_kind_name(ColumnKind kind);
ColumnKind parse_column_kind(const std::string& name);

/// Distribution of one i.i.d. column: mean + sigma_sqrt * w with w standard
/// Gaussian or Rademacher, or an entrywise 1-Lipschitz image of the Gaussian
/// case (scaled soft-threshold, variance renormalized).
struct ColumnDistribution {
    ColumnKind kind = ColumnKind::GaussianLinear;
    MatrixXd sigma_sqrt;  // p x p PSD factor
    VectorXd mean;        // p-vector
    double soft_threshold = 0.5;  // Lipschitz nonlinearity parameter

    Eigen::Index p() const { return sigma_sqrt.rows(); }
};

struct RunConfig {
    int p = 0;
    int n = 0;
    ColumnDistribution dist;
    std::uint64_t seed = 0;
    int replicas = 1;

    double gamma() const { return static_cast<double>(p) / n; }
};

/// Deterministic in (seed, replica_index): every column draws from its own
/// stream, so scheduling never changes the sample.
MatrixXd sample_matrix(const RunConfig& config, int replica_index);

/// g_K(z) = (1/p) Tr (K - zI)^{-1} for K built from X.
cplx empirical_g(const MatrixXd& X, const SpectralParameter& z);

struct SpectralNormReport {
    std::vector<double> norms;  // |||K||| per replica
    double max_norm = 0.0;
    double edge = 0.0;   // (1 + sqrt(gamma))^2 lambda_max(Sigma)
    double slack = 1.0;
    bool within_bound = true;
};

SpectralNormReport spectral_norm_check(const RunConfig& config);

/// Monte Carlo estimate of E[x x^T] for the configured distribution.
MatrixXd effective_sigma_mc(const ColumnDistribution& dist, int n_columns, std::uint64_t seed);

/// Variance of the scaled soft-threshold map applied to a standard Gaussian;
/// used to renormalize LipschitzGaussianFeature columns.
double soft_threshold_variance(double kappa);

// Flat key=value config file (documented keys: p, n, dist.kind,
// dist.sigma.eigenvalues, dist.mean_norm, seed, replicas).
RunConfig parse_run_config(std::istream& is);
RunConfig load_run_config(const std::string& path);

// Binary dump: magic "SPEQMAT1", little-endian u32 p and n, then row-major
// float64 entries.
void write_matrix_binary(std::ostream& os, const MatrixXd& X);
MatrixXd read_matrix_binary(std::istream& is);

}  // namespace speq
