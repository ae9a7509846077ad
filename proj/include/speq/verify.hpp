#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "speq/equiv.hpp"
#include "speq/simulate.hpp"
#include "speq/types.hpp"

namespace speq {

/// One CSV row of a harness report: name,n,value,stderr,bound,ratio.
struct ReportRow {
    std::string name;
    int n = 0;
    double value = 0.0;
    double stderr_ = 0.0;
    double bound = 0.0;
    double ratio = 0.0;
};

void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows);

/// Sweep over n at fixed gamma, Sigma = sigma_scale * I, centered columns.
struct SweepConfig {
    std::vector<int> n_values;  // ascending, >= 4 entries for slope fits
    double gamma = 0.5;
    double sigma_scale = 1.0;
    ColumnKind kind = ColumnKind::GaussianLinear;
    int replicas = 32;
    std::uint64_t seed = 1;

    RunConfig run_config(int n) const;
    void validate() const;
};

/// Least-squares slope of log(value) vs log(n) with a 2-sigma half-width.
struct SlopeFit {
    double slope = 0.0;
    double half_width = 0.0;
    double residual = 0.0;
};
SlopeFit fit_loglog_slope(const std::vector<int>& ns, const std::vector<double>& values);

/// Rate factor of the resolvent gap bound kappa/sqrt(n): |z|^{-11/2} on the
/// real branch, |z|^{5/2} eta^9 on the complex branch.
double resolvent_gap_kappa(const SpectralParameter& z);

/// Throws if (n_min, z) violate the theorem's validity region.
void check_validity_region(int n_min, const SpectralParameter& z);

struct MeanResolventGapResult {
    std::vector<ReportRow> rows;  // per n: gap, mc error, bound, ratio
    std::vector<int> n_values;
    std::vector<double> gap;            // ||mean resolvent - G||_F
    std::vector<double> mc_error;       // replica-split estimate of the estimator noise
    std::vector<double> gap_unbiased;   // cross-replica estimate of the true bias norm
    SlopeFit slope;
};

/// Monte Carlo estimate of ||E[G_K(z)] - G(z)||_F over a sweep in n. The
/// replica-split error is reported alongside: at desk-scale replica counts the
/// estimator noise usually dominates the raw gap.
MeanResolventGapResult mean_resolvent_gap(const SweepConfig& config, const SpectralParameter& z);

struct CorollaryBoundsResult {
    std::vector<ReportRow> rows;
    std::vector<int> n_values;
    std::vector<double> gk_gap_mean;        // |g_K - g_nu| per n (replica mean)
    std::vector<double> vesd_gap_mean;      // max_u |u^T G u - u^T G(z) u|
    std::vector<double> entry_gap_mean;     // max_ij |G - G(z)|
    std::vector<double> hierarchy_fraction; // fraction of replicas with gk gap < entry gap
    std::vector<double> var_gk;             // Var[g_K] per n
    SlopeFit var_slope;
};

CorollaryBoundsResult corollary_bounds(const SweepConfig& config, const SpectralParameter& z,
                                       int num_directions = 8);

struct QuadraticFormVariancesResult {
    double var_quadform = 0.0;       // Var[x^T G_- x]
    double var_bilinear = 0.0;       // Var[x^T B G_- x]
    double var_sandwich = 0.0;       // Var[x^T G_- B G_- x]
    double sigma_sq = 0.0;           // eta^2 (1 + eta^2 |z| / n)
    double ratio_first_second = 0.0; // var_quadform / (p * var_bilinear)
    bool order_pattern_ok = false;
    bool sandwich_bound_ok = false;
    bool bilinear_bound_ok = false;
    double recovery_residual = 0.0;  // B = p^{-1/2} I consistency
};

QuadraticFormVariancesResult quadratic_form_variances(const RunConfig& config,
                                                      const SpectralParameter& z);

struct IntermediateParameterBResult {
    std::vector<ReportRow> rows;
    std::vector<int> n_values;
    std::vector<double> b_gap;  // |b_hat - c| per n
    double omega_membership_fraction = 1.0;
    SlopeFit slope;
};

IntermediateParameterBResult intermediate_parameter_b(const SweepConfig& config,
                                                      const SpectralParameter& z);

struct KolmogorovRateResult {
    std::vector<ReportRow> rows;
    std::vector<int> n_values;
    std::vector<double> delta_mean;    // Kolmogorov distance per n, replica mean
    std::vector<double> delta_stderr;
    bool decays = false;               // mean at n_max < mean at n_min
};

/// Kolmogorov distance between the empirical spectrum and the recovered
/// free-convolution law, per n. Requires invertible Sigma with lambda_min
/// >= 0.1.
KolmogorovRateResult kolmogorov_rate(const SweepConfig& config);

struct KolmogorovReductionCheck {
    double delta_primal = 0.0;   // Delta(mu_K, nu)
    double delta_reduced = 0.0;  // gamma^{-1} Delta(mu_K_check, nu_check)
    double residual = 0.0;
};

/// Exercises the identity Delta(mu_K, nu) = gamma^{-1} Delta(mu_K_check,
/// nu_check) on one realization (meaningful for gamma > 1).
KolmogorovReductionCheck kolmogorov_reduction_check(const RunConfig& config);

}  // namespace speq
