#include "speq/measures.hpp"

#include "speq/format.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "speq/matrix_core.hpp"

namespace speq {

namespace {
constexpr double kMergeTol = 1e-10;

double golden_max(const std::function<double(double)>& f, double a, double b, double tol) {
    const double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    return std::max(f1, f2);
}
}  // namespace

AtomicMeasure::AtomicMeasure(std::vector<double> positions, std::vector<double> weights) {
    if (positions.size() != weights.size() || positions.empty())
        throw std::invalid_argument("AtomicMeasure: positions/weights size mismatch or empty");
    std::vector<std::size_t> order(positions.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return positions[a] < positions[b]; });
    for (std::size_t idx : order) {
        double t = positions[idx], w = weights[idx];
        if (t < 0.0) {
            if (t < -kMergeTol) throw std::invalid_argument("AtomicMeasure: negative position");
            t = 0.0;
        }
        if (w <= 0.0) {
            if (w < 0.0) throw std::invalid_argument("AtomicMeasure: negative weight");
            continue;
        }
        if (!positions_.empty() && t - positions_.back() < kMergeTol) {
            weights_.back() += w;
        } else {
            positions_.push_back(t);
            weights_.push_back(w);
        }
    }
    if (positions_.empty()) throw std::invalid_argument("AtomicMeasure: zero total mass");
    double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("AtomicMeasure: weights sum to " + std::to_string(total));
}

double AtomicMeasure::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < positions_.size(); ++i) m += positions_[i] * weights_[i];
    return m;
}

double AtomicMeasure::second_moment() const {
    double m = 0.0;
    for (std::size_t i = 0; i < positions_.size(); ++i)
        m += positions_[i] * positions_[i] * weights_[i];
    return m;
}

double AtomicMeasure::atom_at_zero() const {
    return (!positions_.empty() && positions_.front() < kMergeTol) ? weights_.front() : 0.0;
}

bool AtomicMeasure::same_atoms(const AtomicMeasure& other, double tol) const {
    if (size() != other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
        if (std::abs(positions_[i] - other.positions_[i]) > tol) return false;
        if (std::abs(weights_[i] - other.weights_[i]) > tol) return false;
    }
    return true;
}

cplx stieltjes(const AtomicMeasure& mu, const SpectralParameter& z) {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        acc += mu.weights()[i] / (cplx(mu.positions()[i], 0.0) - z.value());
    return acc;
}

AtomicMeasure empirical_spectrum(const MatrixXd& K) {
    ResolventView view = ResolventView::from_psd(K);
    const Eigen::Index p = view.dim();
    std::vector<double> pos(view.eigenvalues().data(), view.eigenvalues().data() + p);
    std::vector<double> w(p, 1.0 / static_cast<double>(p));
    return AtomicMeasure(std::move(pos), std::move(w));
}

double SampledDensity::trapezoid_mass() const {
    double m = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        m += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
    return m;
}

void SampledDensity::validate() {
    if (grid.size() != values.size() || grid.size() < 2)
        throw std::invalid_argument("SampledDensity: bad grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1]) throw std::invalid_argument("SampledDensity: grid not ascending");
    for (double& v : values) {
        if (v < 0.0) {
            if (v < -1e-12) throw std::invalid_argument("SampledDensity: negative density value");
            v = 0.0;
        }
    }
    if (atom_at_zero < 0.0) throw std::invalid_argument("SampledDensity: negative atom");
    double mass = total_mass();
    if (mass < 1.0 - 5e-3 || mass > 1.0 + 5e-3)
        throw std::invalid_argument("SampledDensity: total mass " + std::to_string(mass) +
                                    " outside [0.995, 1.005]");
}

CdfFunction CdfFunction::from_atoms(const AtomicMeasure& mu) {
    CdfFunction f;
    f.step_ = true;
    f.knots_ = mu.positions();
    f.cumulative_.resize(mu.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        acc += mu.weights()[i];
        f.cumulative_[i] = acc;
    }
    return f;
}

CdfFunction CdfFunction::from_density(const SampledDensity& density) {
    CdfFunction f;
    f.step_ = false;
    f.atom_at_zero_ = density.atom_at_zero;
    f.knots_.reserve(density.grid.size() + 1);
    f.cumulative_.reserve(density.grid.size() + 1);
    if (density.grid.front() > 0.0 || density.atom_at_zero > 0.0) {
        f.knots_.push_back(0.0);
        f.cumulative_.push_back(density.atom_at_zero);
    }
    double acc = density.atom_at_zero;
    for (std::size_t i = 0; i < density.grid.size(); ++i) {
        if (i > 0)
            acc += 0.5 * (density.values[i] + density.values[i - 1]) *
                   (density.grid[i] - density.grid[i - 1]);
        if (!f.knots_.empty() && density.grid[i] <= f.knots_.back()) continue;
        f.knots_.push_back(density.grid[i]);
        f.cumulative_.push_back(acc);
    }
    return f;
}

double CdfFunction::operator()(double t) const {
    if (knots_.empty() || t < knots_.front()) return 0.0;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
    if (step_) return cumulative_[i];
    if (i + 1 >= knots_.size()) return cumulative_.back();
    double t0 = knots_[i], t1 = knots_[i + 1];
    double s = (t - t0) / (t1 - t0);
    return cumulative_[i] + s * (cumulative_[i + 1] - cumulative_[i]);
}

double CdfFunction::left_limit(double t) const {
    if (step_) {
        if (knots_.empty() || t <= knots_.front()) return 0.0;
        auto it = std::lower_bound(knots_.begin(), knots_.end(), t);
        if (it == knots_.begin()) return 0.0;
        return cumulative_[static_cast<std::size_t>(it - knots_.begin()) - 1];
    }
    // Continuous except for the possible atom at zero.
    if (t <= 0.0) return 0.0;
    if (!knots_.empty() && t == knots_.front()) return 0.0;
    return (*this)(t);
}

double kolmogorov_distance(const CdfFunction& F1, const CdfFunction& F2) {
    if (F1.knots().empty() || F2.knots().empty())
        throw std::invalid_argument("kolmogorov_distance: empty measure");
    std::vector<double> cand;
    cand.reserve(F1.knots().size() + F2.knots().size());
    cand.insert(cand.end(), F1.knots().begin(), F1.knots().end());
    cand.insert(cand.end(), F2.knots().begin(), F2.knots().end());
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    auto gap = [&](double t) { return std::abs(F1(t) - F2(t)); };
    double best = 0.0;
    for (double t : cand) {
        best = std::max(best, gap(t));
        best = std::max(best, std::abs(F1.left_limit(t) - F2.left_limit(t)));
    }
    if (!F1.is_step() || !F2.is_step()) {
        // The gap is piecewise smooth between candidates; refine each interval.
        for (std::size_t i = 0; i + 1 < cand.size(); ++i) {
            double a = cand[i], b = cand[i + 1];
            if (b - a < 1e-9) continue;
            best = std::max(best, golden_max(gap, a, b, std::max(1e-7 * (b - a), 1e-12)));
        }
    }
    return best;
}

KolmogorovSchedule::KolmogorovSchedule(double beta_, double l_, double k_, double sigma_,
                                       double epsilon_)
    : beta(beta_), l(l_), k(k_), sigma(sigma_), epsilon(epsilon_) {
    if (beta <= 0.0 || beta > 1.0) throw std::invalid_argument("KolmogorovSchedule: beta not in (0,1]");
    if (l <= 0.0 || k <= 0.0) throw std::invalid_argument("KolmogorovSchedule: exponents must be positive");
    if (sigma < 1.0) throw std::invalid_argument("KolmogorovSchedule: sigma must be >= 1");
    if (epsilon <= 0.0) throw std::invalid_argument("KolmogorovSchedule: epsilon must be positive");
    y = std::pow(std::pow(sigma, 3.0 * (1.0 + l)) * epsilon,
                 1.0 / (2.0 + 2.0 * l + k + (2.0 + l) * beta));
    A = std::pow(std::pow(sigma, 3.0) / epsilon, 1.0 / (2.0 + l)) *
        std::pow(y, (k - 2.0) / (2.0 + l));
    double t1 = epsilon * std::pow(A, 1.0 + l) / std::pow(y, k);
    double t2 = tail_term();
    double t3 = holder_term();
    double scale = std::max({t1, t2, t3});
    if (std::abs(t1 - t2) > 1e-9 * scale || std::abs(t2 - t3) > 1e-9 * scale ||
        std::abs(t1 - t3) > 1e-9 * scale)
        throw std::logic_error("KolmogorovSchedule: balance identity violated");
}

double KolmogorovSchedule::segment_term(double max_gap) const { return A * max_gap; }
double KolmogorovSchedule::tail_term() const { return std::pow(sigma, 3.0) / (y * y * A); }
double KolmogorovSchedule::holder_term() const { return std::pow(y, beta); }

BaiTermsReport bai_bound_terms(const std::function<double(double)>& g_gap,
                               const KolmogorovSchedule& schedule) {
    const int samples = 2001;
    const double A = schedule.A;
    double best = 0.0, best_t = -A;
    for (int i = 0; i < samples; ++i) {
        double t = -A + 2.0 * A * i / (samples - 1);
        double v = g_gap(t);
        if (v > best) {
            best = v;
            best_t = t;
        }
    }
    double h = 2.0 * A / (samples - 1);
    best = std::max(best, golden_max(g_gap, std::max(-A, best_t - h), std::min(A, best_t + h),
                                     1e-9 * A));
    BaiTermsReport report;
    report.segment_term = schedule.segment_term(best);
    report.tail_term = schedule.tail_term();
    report.holder_term = schedule.holder_term();
    return report;
}

double mp_shape_distance_bound(double gamma1, double gamma2) {
    if (gamma1 <= 0.0 || gamma2 <= 0.0)
        throw std::invalid_argument("mp_shape_distance_bound: shape parameters must be positive");
    return std::abs(gamma1 - gamma2) / std::max(gamma1, gamma2);
}

void write_measure_csv(std::ostream& os, const AtomicMeasure& mu) {
    os << "t,w\n";
    for (std::size_t i = 0; i < mu.size(); ++i)
        os << format_double(mu.positions()[i]) << ',' << format_double(mu.weights()[i]) << '\n';
}

void write_density_csv(std::ostream& os, const SampledDensity& density) {
    os << "x,f,atom0\n";
    for (std::size_t i = 0; i < density.grid.size(); ++i) {
        os << format_double(density.grid[i]) << ',' << format_double(density.values[i]) << ',';
        if (i == 0) os << format_double(density.atom_at_zero);
        os << '\n';
    }
}

SampledDensity read_density_csv(std::istream& is) {
    SampledDensity d;
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        std::istringstream row(line);
        std::string x, f, a;
        std::getline(row, x, ',');
        std::getline(row, f, ',');
        std::getline(row, a, ',');
        d.grid.push_back(std::stod(x));
        d.values.push_back(std::stod(f));
        if (d.grid.size() == 1 && !a.empty()) d.atom_at_zero = std::stod(a);
    }
    d.validate();
    return d;
}

}  // namespace speq
