#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "speq/types.hpp"

namespace speq {

/// Finitely supported probability measure on R+. Atoms closer than 1e-10 are
/// merged; weights must sum to 1 within 1e-12.
class AtomicMeasure {
public:
    AtomicMeasure(std::vector<double> positions, std::vector<double> weights);

    static AtomicMeasure dirac(double position) { return AtomicMeasure({position}, {1.0}); }

    const std::vector<double>& positions() const { return positions_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t size() const { return positions_.size(); }

    double mean() const;
    double second_moment() const;
    double atom_at_zero() const;

    bool same_atoms(const AtomicMeasure& other, double tol = 0.0) const;

private:
    std::vector<double> positions_;  // strictly ascending, >= 0
    std::vector<double> weights_;    // positive, sum to 1
};

cplx stieltjes(const AtomicMeasure& mu, const SpectralParameter& z);

/// ESD of a PSD matrix: equal-weight atoms at the eigenvalues.
AtomicMeasure empirical_spectrum(const MatrixXd& K);

/// Density samples on an ascending grid plus a point mass at zero.
struct SampledDensity {
    std::vector<double> grid;
    std::vector<double> values;  // clamped to >= 0
    double atom_at_zero = 0.0;

    double trapezoid_mass() const;
    double total_mass() const { return atom_at_zero + trapezoid_mass(); }
    /// Clamps values in [-1e-12, 0) to zero, then checks the invariants.
    void validate();
};

/// CDF backed either by a step function (atomic measure) or by the cumulative
/// trapezoid of a sampled density.
class CdfFunction {
public:
    static CdfFunction from_atoms(const AtomicMeasure& mu);
    static CdfFunction from_density(const SampledDensity& density);

    double operator()(double t) const;
    double left_limit(double t) const;
    /// Candidate extremum locations: jump points or grid knots.
    const std::vector<double>& knots() const { return knots_; }
    bool is_step() const { return step_; }

private:
    bool step_ = true;
    std::vector<double> knots_;
    std::vector<double> cumulative_;  // value at and after knot i
    double atom_at_zero_ = 0.0;       // continuous representation only
};

/// sup_t |F1(t) - F2(t)|; exact on jump points for step functions, refined to
/// 1e-6 absolute accuracy otherwise.
double kolmogorov_distance(const CdfFunction& F1, const CdfFunction& F2);

/// Exponent bookkeeping for the Kolmogorov bound pipeline: given the Holder
/// exponent beta, rate exponents l and k, the moment bound sigma and the rate
/// epsilon, the height y and the window A balance the three error terms.
struct KolmogorovSchedule {
    double beta;
    double l;
    double k;
    double sigma;
    double epsilon;
    double y;  // derived
    double A;  // derived

    KolmogorovSchedule(double beta, double l, double k, double sigma, double epsilon);

    double segment_term(double max_gap) const;  // eps-side term A * max|g gap|
    double tail_term() const;                   // sigma^3 / (y^2 A)
    double holder_term() const;                 // y^beta
};

struct BaiTermsReport {
    double segment_term;
    double tail_term;
    double holder_term;
    /// Constant-free certificate: the unknown C' of the bound is reported as 1.
    double certificate() const { return segment_term + tail_term + holder_term; }
};

/// Evaluates the three terms of the fixed-measure Kolmogorov bound. g_gap must
/// return |g_nu - g_mu| at t + iy for the schedule's height y.
BaiTermsReport bai_bound_terms(const std::function<double(double)>& g_gap,
                               const KolmogorovSchedule& schedule);

/// |gamma - gamma'| / max(gamma, gamma'): Kolmogorov distance bound between
/// Marchenko-Pastur laws with different shape parameters.
double mp_shape_distance_bound(double gamma1, double gamma2);

// CSV serialization: measures as "t,w", densities as "x,f,atom0" with the
// atom written on the first row only.
void write_measure_csv(std::ostream& os, const AtomicMeasure& mu);
void write_density_csv(std::ostream& os, const SampledDensity& density);
SampledDensity read_density_csv(std::istream& is);

}  // namespace speq
