#include "speq/freeconv.hpp"

#include <algorithm>
#include <cmath>

namespace speq {

namespace {

// Fixed-point solve warm-started from the previous grid point.
cplx solve_g(const CovarianceModel& model, const SpectralParameter& z, cplx* warm) {
    SolveOptions opt;
    if (warm && warm->imag() != 0.0 && omega_contains(*warm, z)) {
        opt.has_start = true;
        opt.start = *warm;
    }
    FixedPointSolution sol = solve_fixed_point(model, z, opt);
    if (warm) *warm = sol.c;
    return g_nu(model, sol, z);
}

std::vector<double> build_grid(double hi, int grid_size, bool refine_low) {
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(grid_size) + 96);
    // Geometric segment toward zero: integrable edge singularities of
    // MP-type laws need resolution near the origin.
    const double lo = hi * 1e-7;
    const int geo = 48;
    double step = hi / (grid_size - 1);
    for (int i = 0; i < geo; ++i) {
        double x = lo * std::pow(step / lo, static_cast<double>(i) / geo);
        grid.push_back(x);
    }
    for (int i = 1; i < grid_size; ++i) grid.push_back(step * i);
    if (refine_low) {
        for (int i = 1; i < grid_size; ++i) {
            double x = 0.35 * hi * i / (grid_size - 1);
            grid.push_back(x);
        }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [&](double a, double b) { return b - a < hi * 1e-12; }),
               grid.end());
    return grid;
}

}  // namespace

cplx FreeConvolutionResult::transform(const SpectralParameter& z) const {
    cplx acc = density.atom_at_zero / (cplx(0.0, 0.0) - z.value());
    const auto& g = density.grid;
    const auto& f = density.values;
    for (std::size_t i = 1; i < g.size(); ++i) {
        cplx a = f[i - 1] / (cplx(g[i - 1], 0.0) - z.value());
        cplx b = f[i] / (cplx(g[i], 0.0) - z.value());
        acc += 0.5 * (a + b) * (g[i] - g[i - 1]);
    }
    return acc;
}

FreeConvolutionResult free_multiplicative_mp(const CovarianceModel& model,
                                             const FreeConvOptions& options) {
    if (options.grid_size < 64)
        throw std::invalid_argument("free_multiplicative_mp: grid_size must be >= 64");
    if (options.eps_schedule.size() < 2)
        throw std::invalid_argument("free_multiplicative_mp: need at least two heights");
    for (std::size_t i = 1; i < options.eps_schedule.size(); ++i)
        if (options.eps_schedule[i] <= 0.0 ||
            options.eps_schedule[i] >= options.eps_schedule[i - 1])
            throw std::invalid_argument("free_multiplicative_mp: schedule must be descending positive");

    const double gamma = model.gamma;
    const double lam_max = model.spectral_norm();

    FreeConvolutionResult result;
    result.gamma = gamma;

    if (lam_max <= 0.0) {  // Sigma = 0: nu = delta_0
        result.density.grid = {0.0, 1.0};
        result.density.values = {0.0, 0.0};
        result.density.atom_at_zero = 1.0;
        result.atom_transform_estimate = 1.0;
        return result;
    }

    const double edge = (1.0 + std::sqrt(gamma)) * (1.0 + std::sqrt(gamma)) * lam_max;
    const double hi = 1.05 * edge;
    const bool refine_low = gamma < 1.0 && model.invertible();
    std::vector<double> grid = build_grid(hi, options.grid_size, refine_low);
    const std::size_t m = grid.size();

    const double e1 = options.eps_schedule[options.eps_schedule.size() - 2];
    const double e2 = options.eps_schedule.back();

    // Atom at zero from the transform on the imaginary axis:
    // eps * Im g(i eps) -> nu({0}), extrapolated in eps^2.
    double a1 = 0.0, a2 = 0.0;
    {
        cplx warm;
        for (double e : options.eps_schedule) {
            cplx g = solve_g(model, SpectralParameter::upper_half(0.0, e), &warm);
            if (e == e1) a1 = e * g.imag();
            if (e == e2) a2 = e * g.imag();
        }
    }
    double atom_hat = (e1 * e1 * a2 - e2 * e2 * a1) / (e1 * e1 - e2 * e2);
    atom_hat = std::clamp(atom_hat, 0.0, 1.0);
    result.atom_transform_estimate = atom_hat;

    // Independent solves per grid point; chunks keep warm-start continuation
    // deterministic for any thread count.
    std::vector<double> raw(m, 0.0);
    std::vector<int> failed(m, 0);
    const std::size_t chunk = 16;
    const std::size_t nchunks = (m + chunk - 1) / chunk;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(nchunks); ++ci) {
        std::size_t begin = static_cast<std::size_t>(ci) * chunk;
        std::size_t end = std::min(begin + chunk, m);
        std::vector<cplx> warm(options.eps_schedule.size(), cplx(0.0, 0.0));
        for (std::size_t i = begin; i < end; ++i) {
            double x = grid[i];
            double f1 = 0.0, f2 = 0.0;
            bool ok = true;
            for (std::size_t k = 0; k < options.eps_schedule.size(); ++k) {
                double e = options.eps_schedule[k];
                try {
                    SpectralParameter z = SpectralParameter::upper_half(x, e);
                    cplx g = solve_g(model, z, &warm[k]);
                    // remove the Poisson bleed of the zero atom
                    cplx g_cont = g + atom_hat / (cplx(x, e));
                    if (e == e1) f1 = g_cont.imag() / M_PI;
                    if (e == e2) f2 = g_cont.imag() / M_PI;
                } catch (const SolveError&) {
                    ok = false;
                    break;
                }
            }
            if (!ok) {
                failed[i] = 1;
                continue;
            }
            raw[i] = f2 + (f2 - f1) * e2 / (e1 - e2);  // two-point Richardson
        }
    }
    for (std::size_t i = 0; i < m; ++i)
        if (failed[i])
            throw SolveError("free_multiplicative_mp: fixed point did not converge at x = " +
                             std::to_string(grid[i]));

    double max_clamp = 0.0;
    for (double& v : raw) {
        if (v < 0.0) {
            max_clamp = std::max(max_clamp, -v);
            v = 0.0;
        }
    }
    result.max_clamp = max_clamp;

    result.density.grid = std::move(grid);
    result.density.values = std::move(raw);
    double mass = result.density.trapezoid_mass();
    double atom_floor = std::max(0.0, 1.0 - 1.0 / gamma) - 5e-3;
    result.density.atom_at_zero = std::clamp(1.0 - mass, std::max(0.0, atom_floor), 1.0);
    result.density.validate();

    // Support bracket: detected from the density, capped by the analytic
    // edge (1 + sqrt(gamma))^2 lambda_max; the smoothed density carries an
    // O(eps^3) tail past the edge that is an inversion artifact.
    double peak = *std::max_element(result.density.values.begin(), result.density.values.end());
    double tol = 1e-3 * peak;
    result.support_lo = result.density.grid.front();
    result.support_hi = result.density.grid.back();
    for (std::size_t i = 0; i < m; ++i)
        if (result.density.values[i] > tol) {
            result.support_lo = result.density.grid[i];
            break;
        }
    for (std::size_t i = m; i-- > 0;)
        if (result.density.values[i] > tol) {
            result.support_hi = result.density.grid[i];
            break;
        }
    result.support_hi = std::min(result.support_hi, edge);
    return result;
}

FreeConvolutionResult nu_check_measure(const FreeConvolutionResult& nu, double gamma) {
    if (gamma <= 0.0) throw std::invalid_argument("nu_check_measure: gamma must be positive");
    FreeConvolutionResult out = nu;
    out.gamma = gamma;
    for (double& v : out.density.values) v *= gamma;
    double atom = (1.0 - gamma) + gamma * nu.density.atom_at_zero;
    if (atom < 0.0) {
        if (atom < -5e-3)
            throw SolveError("nu_check_measure: negative zero atom beyond tolerance");
        atom = 0.0;
    }
    out.density.atom_at_zero = atom;
    out.atom_transform_estimate = (1.0 - gamma) + gamma * nu.atom_transform_estimate;
    out.density.validate();
    return out;
}

}  // namespace speq
