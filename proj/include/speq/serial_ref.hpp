#pragma once

#include <cstdint>

#include "speq/simulate.hpp"
#include "speq/types.hpp"

namespace speq::serial {

/// Entrywise triple-loop X X^T / n; reference for the Eigen product path.
MatrixXd sample_covariance(const MatrixXd& X);

/// (K - zI)^{-1} by hand-rolled Gaussian elimination with partial pivoting;
/// reference for the eigendecomposition path.
MatrixXcd resolvent(const MatrixXd& K, const SpectralParameter& z);

/// Replica mean of resolvents, single-threaded, built on the two serial
/// kernels above; reference for the OpenMP sweep in the verify harness.
MatrixXcd mean_resolvent(const RunConfig& config, const SpectralParameter& z);

/// Trapezoid quadrature of f(t)/(t - z) over a sampled grid; reference for
/// transform evaluations of recovered densities.
cplx stieltjes_quadrature(const std::vector<double>& grid, const std::vector<double>& values,
                          double atom_at_zero, const SpectralParameter& z);

}  // namespace speq::serial
