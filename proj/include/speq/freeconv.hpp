#pragma once

#include <vector>

#include "speq/equiv.hpp"
#include "speq/measures.hpp"
#include "speq/types.hpp"

namespace speq {

/// nu = MP(gamma) x mu_Sigma recovered on a grid: continuous density, atom at
/// zero and support bracket.
struct FreeConvolutionResult {
    SampledDensity density;  // atom folded into density.atom_at_zero
    double gamma = 1.0;
    double support_lo = 0.0;
    double support_hi = 0.0;
    double atom_transform_estimate = 0.0;  // lim eps * Im g(i eps), diagnostic
    double max_clamp = 0.0;                // largest negative density clamped away

    double atom_at_zero() const { return density.atom_at_zero; }
    CdfFunction cdf() const { return CdfFunction::from_density(density); }
    /// Stieltjes transform of the recovered measure (atom + trapezoid).
    cplx transform(const SpectralParameter& z) const;
};

struct FreeConvOptions {
    int grid_size = 512;
    std::vector<double> eps_schedule = {1e-2, 5e-3, 2.5e-3};  // descending
};

/// Inverts the Stieltjes transform of nu along Im z = eps with Richardson
/// extrapolation over the two smallest schedule heights. Grid points are
/// independent fixed-point solves and run in parallel.
FreeConvolutionResult free_multiplicative_mp(const CovarianceModel& model,
                                             const FreeConvOptions& options = {});

/// nu_check = (1 - gamma) delta_0 + gamma nu.
FreeConvolutionResult nu_check_measure(const FreeConvolutionResult& nu, double gamma);

}  // namespace speq
