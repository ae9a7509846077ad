#include "speq/serial_ref.hpp"

#include <cmath>

namespace speq::serial {

MatrixXd sample_covariance(const MatrixXd& X) {
    const Eigen::Index p = X.rows(), n = X.cols();
    MatrixXd K = MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) {
            double acc = 0.0;
            for (Eigen::Index k = 0; k < n; ++k) acc += X(i, k) * X(j, k);
            K(i, j) = acc / static_cast<double>(n);
        }
    return K;
}

MatrixXcd resolvent(const MatrixXd& K, const SpectralParameter& z) {
    const Eigen::Index p = K.rows();
    MatrixXcd A = K.cast<cplx>();
    A.diagonal().array() -= z.value();
    MatrixXcd B = MatrixXcd::Identity(p, p);

    // Gaussian elimination with partial pivoting on [A | B].
    for (Eigen::Index col = 0; col < p; ++col) {
        Eigen::Index pivot = col;
        double best = std::abs(A(col, col));
        for (Eigen::Index r = col + 1; r < p; ++r) {
            double v = std::abs(A(r, col));
            if (v > best) {
                best = v;
                pivot = r;
            }
        }
        if (best == 0.0) throw SolveError("serial resolvent: singular shifted matrix");
        if (pivot != col) {
            A.row(pivot).swap(A.row(col));
            B.row(pivot).swap(B.row(col));
        }
        cplx inv = 1.0 / A(col, col);
        for (Eigen::Index r = 0; r < p; ++r) {
            if (r == col) continue;
            cplx factor = A(r, col) * inv;
            if (factor == cplx(0.0, 0.0)) continue;
            A.row(r) -= factor * A.row(col);
            B.row(r) -= factor * B.row(col);
        }
        A.row(col) *= inv;
        B.row(col) *= inv;
    }
    return B;
}

MatrixXcd mean_resolvent(const RunConfig& config, const SpectralParameter& z) {
    MatrixXcd acc = MatrixXcd::Zero(config.p, config.p);
    for (int r = 0; r < config.replicas; ++r) {
        MatrixXd X = sample_matrix(config, r);
        acc += resolvent(sample_covariance(X), z);
    }
    return acc / static_cast<double>(config.replicas);
}

cplx stieltjes_quadrature(const std::vector<double>& grid, const std::vector<double>& values,
                          double atom_at_zero, const SpectralParameter& z) {
    cplx acc = atom_at_zero / (cplx(0.0, 0.0) - z.value());
    for (std::size_t i = 1; i < grid.size(); ++i) {
        cplx a = values[i - 1] / (cplx(grid[i - 1], 0.0) - z.value());
        cplx b = values[i] / (cplx(grid[i], 0.0) - z.value());
        acc += 0.5 * (a + b) * (grid[i] - grid[i - 1]);
    }
    return acc;
}

}  // namespace speq::serial
