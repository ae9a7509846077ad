#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace speq {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Spectral arguments live either on the negative real axis or in the open
/// upper half-plane. Nothing in this library evaluates a resolvent on R+.
enum class Branch { RealNegative, UpperHalf };

inline const char* branch_name(Branch b) {
    return b == Branch::RealNegative ? "real-negative" : "upper-half";
}

/// A spectral argument z together with its branch and the scale
/// eta = 1/|z| (real branch) or eta = 1/Im(z) (complex branch).
class SpectralParameter {
public:
    explicit SpectralParameter(cplx value) : value_(value) {
        if (value.imag() > 0.0) {
            branch_ = Branch::UpperHalf;
            eta_ = 1.0 / value.imag();
        } else if (value.imag() == 0.0 && value.real() < 0.0) {
            branch_ = Branch::RealNegative;
            eta_ = 1.0 / std::abs(value.real());
        } else {
            throw std::invalid_argument("invalid spectral parameter: need Im(z) > 0 or z < 0 real");
        }
        if (eta_ * std::abs(value_) < 1.0 - 1e-12)
            throw std::logic_error("spectral parameter violates eta*|z| >= 1");
    }

    static SpectralParameter real_negative(double x) {
        return SpectralParameter(cplx(x, 0.0));
    }
    static SpectralParameter upper_half(double re, double im) {
        return SpectralParameter(cplx(re, im));
    }

    cplx value() const { return value_; }
    Branch branch() const { return branch_; }
    double eta() const { return eta_; }
    double abs() const { return std::abs(value_); }

private:
    cplx value_;
    Branch branch_;
    double eta_;
};

/// Thrown when an iterative solver fails to reach its tolerance.
struct SolveError : std::runtime_error {
    explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace speq
