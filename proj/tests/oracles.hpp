#pragma once

// Closed-form and brute-force oracles used by the test suites. These stay
// independent of the library implementation paths they check.

#include <complex>
#include <stdexcept>

#include "speq/equiv.hpp"
#include "speq/types.hpp"

namespace oracle {

using speq::cplx;

/// Fixed point of the Sigma = I functional: root of
/// c^2 - c(1 + z - gamma) + z = 0 selected by Omega membership.
inline cplx quadratic_fixed_point(double gamma, const speq::SpectralParameter& z) {
    cplx b = -(1.0 + z.value() - gamma);
    cplx disc = std::sqrt(b * b - 4.0 * z.value());
    cplx r1 = (-b + disc) / 2.0;
    cplx r2 = (-b - disc) / 2.0;
    bool ok1 = speq::omega_contains(r1, z);
    bool ok2 = speq::omega_contains(r2, z);
    if (ok1 == ok2) throw std::logic_error("quadratic oracle: ambiguous root selection");
    return ok1 ? r1 : r2;
}

/// Stieltjes transform of MP(gamma): root of gamma z g^2 + (z + gamma - 1) g
/// + 1 = 0 with the correct branch.
inline cplx mp_stieltjes(double gamma, const speq::SpectralParameter& z) {
    cplx a = gamma * z.value();
    cplx b = z.value() + gamma - 1.0;
    cplx disc = std::sqrt(b * b - 4.0 * a);
    cplx g1 = (-b + disc) / (2.0 * a);
    cplx g2 = (-b - disc) / (2.0 * a);
    if (z.branch() == speq::Branch::UpperHalf) return g1.imag() > 0.0 ? g1 : g2;
    // Real negative z: the transform of a measure on R+ is positive there.
    return g1.real() > 0.0 ? g1 : g2;
}

/// Continuous density of MP(gamma) at x (zero outside the bulk).
inline double mp_density(double gamma, double x) {
    double lo = (1.0 - std::sqrt(gamma)) * (1.0 - std::sqrt(gamma));
    double hi = (1.0 + std::sqrt(gamma)) * (1.0 + std::sqrt(gamma));
    if (x <= lo || x >= hi) return 0.0;
    return std::sqrt((hi - x) * (x - lo)) / (2.0 * M_PI * gamma * x);
}

}  // namespace oracle
