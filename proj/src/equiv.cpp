#include "speq/equiv.hpp"

#include <cmath>
#include <sstream>

namespace speq {

CovarianceModel::CovarianceModel(VectorXd eigenvalues_desc, double gamma_, double mean_norm_)
    : sigma_eigenvalues(std::move(eigenvalues_desc)), gamma(gamma_), mean_norm(mean_norm_) {
    if (sigma_eigenvalues.size() == 0)
        throw std::invalid_argument("CovarianceModel: empty spectrum");
    if (gamma <= 0.0) throw std::invalid_argument("CovarianceModel: gamma must be positive");
    if (mean_norm < 0.0) throw std::invalid_argument("CovarianceModel: negative mean norm");
    for (Eigen::Index i = 0; i < sigma_eigenvalues.size(); ++i) {
        if (sigma_eigenvalues[i] < 0.0)
            throw std::invalid_argument("CovarianceModel: negative eigenvalue");
        if (i > 0 && sigma_eigenvalues[i] > sigma_eigenvalues[i - 1] + 1e-12)
            throw std::invalid_argument("CovarianceModel: eigenvalues not descending");
    }
}

CovarianceModel CovarianceModel::identity(Eigen::Index p, double gamma) {
    return CovarianceModel(VectorXd::Ones(p), gamma);
}

bool omega_contains(cplx l, const SpectralParameter& z) {
    const double tol = 1e-12 * std::max(1.0, std::abs(l));
    if (z.branch() == Branch::RealNegative) {
        return std::abs(l.imag()) <= tol && l.real() <= z.value().real() + tol;
    }
    if (l.imag() < z.value().imag() - tol) return false;
    cplx ratio = l / z.value();
    return ratio.imag() >= -tol;
}

cplx functional_F(const CovarianceModel& model, double n, cplx l, const SpectralParameter& z) {
    if (!omega_contains(l, z)) {
        std::ostringstream msg;
        msg << "functional_F: l = " << l.real() << (l.imag() < 0 ? "" : "+") << l.imag()
            << "i is outside Omega";
        throw std::domain_error(msg.str());
    }
    // lambda_i / ((z/l) lambda_i - z) simplifies to lambda_i l / (z (lambda_i - l)),
    // so F(l) = z + (1/n) sum_i lambda_i l / (lambda_i - l).
    cplx acc = 0.0;
    for (Eigen::Index i = 0; i < model.sigma_eigenvalues.size(); ++i) {
        double lam = model.sigma_eigenvalues[i];
        if (lam == 0.0) continue;
        acc += lam * l / (lam - l);
    }
    return z.value() + acc / n;
}

cplx functional_F_prime(const CovarianceModel& model, double n, cplx l) {
    cplx acc = 0.0;
    for (Eigen::Index i = 0; i < model.sigma_eigenvalues.size(); ++i) {
        double lam = model.sigma_eigenvalues[i];
        if (lam == 0.0) continue;
        cplx d = lam - l;
        acc += lam * lam / (d * d);
    }
    return acc / n;
}

double contraction_constant(const CovarianceModel& model, const SpectralParameter& z) {
    const double g = model.gamma;
    const double az = z.abs();
    if (z.branch() == Branch::RealNegative) return g / ((1.0 + az) * (g + az));
    const double e = z.eta();
    return g * az * e * e / (1.0 + g * az * e * e);
}

namespace {

double step_size(cplx from, cplx to, Branch branch) {
    if (branch == Branch::UpperHalf && from.imag() > 0.0 && to.imag() > 0.0)
        return semi_metric(from, to);
    return std::abs(to - from);
}

}  // namespace

FixedPointSolution solve_fixed_point(const CovarianceModel& model, const SpectralParameter& z,
                                     const SolveOptions& options) {
    const double n = model.n();
    cplx l = options.has_start ? options.start : z.value();
    if (!omega_contains(l, z))
        throw std::domain_error("solve_fixed_point: starting point outside Omega");

    FixedPointSolution sol;
    sol.kF_theoretical = contraction_constant(model, z);

    const int warmup = options.scheme == SolveOptions::Scheme::PicardOnly ? options.max_iter : 12;
    double prev_step = -1.0;
    double residual = 0.0;

    for (int iter = 1; iter <= options.max_iter; ++iter) {
        cplx Fl = functional_F(model, n, l, z);
        cplx H = Fl - l;
        residual = std::abs(H);
        sol.iterations = iter;
        if (residual <= options.tol * std::max(1.0, std::abs(l))) {
            sol.c = l;
            sol.residual = residual;
            return sol;
        }

        cplx next;
        bool picard_step = true;
        if (iter > warmup) {
            cplx denom = functional_F_prime(model, n, l) - 1.0;
            if (std::abs(denom) > 1e-300) {
                cplx candidate = l - H / denom;
                if (omega_contains(candidate, z)) {
                    cplx Fc = functional_F(model, n, candidate, z);
                    if (std::abs(Fc - candidate) < residual) {
                        next = candidate;
                        picard_step = false;
                    }
                }
            }
            if (picard_step) next = l + 0.5 * H;  // damped fallback, stays in Omega by convexity
        } else {
            next = Fl;  // plain Picard, lands in Omega by the range property of F
        }

        if (picard_step) {
            double s = step_size(l, next, z.branch());
            if (prev_step > 0.0 && s > 0.0) sol.contraction_estimate = s / prev_step;
            prev_step = s;
        } else {
            prev_step = -1.0;
        }

        l = next;
        if (z.branch() == Branch::RealNegative) l = cplx(l.real(), 0.0);
    }

    std::ostringstream msg;
    msg << "solve_fixed_point: no convergence after " << options.max_iter
        << " iterations; last iterate " << l.real() << (l.imag() < 0 ? "" : "+") << l.imag()
        << "i, residual " << residual;
    throw SolveError(msg.str());
}

VectorXcd deterministic_equivalent_diag(const CovarianceModel& model,
                                        const FixedPointSolution& solution,
                                        const SpectralParameter& z) {
    VectorXcd diag(model.p());
    for (Eigen::Index i = 0; i < model.p(); ++i)
        diag[i] = 1.0 / ((z.value() / solution.c) * model.sigma_eigenvalues[i] - z.value());
    return diag;
}

cplx g_nu(const CovarianceModel& model, const FixedPointSolution& solution,
          const SpectralParameter& z) {
    cplx acc = 0.0;
    for (Eigen::Index i = 0; i < model.p(); ++i)
        acc += 1.0 / ((z.value() / solution.c) * model.sigma_eigenvalues[i] - z.value());
    return acc / static_cast<double>(model.p());
}

cplx g_nu_check(const CovarianceModel& model, const FixedPointSolution& solution,
                const SpectralParameter& z) {
    cplx g = g_nu(model, solution, z);
    cplx gc = (model.gamma - 1.0) / z.value() + model.gamma * g;
    cplx other = -1.0 / solution.c;
    if (std::abs(gc - other) > 1e-10 * std::max(1.0, std::abs(gc)))
        throw SolveError("g_nu_check: representations g_nu_check and -1/c disagree");
    return gc;
}

double semi_metric(cplx w1, cplx w2) {
    if (w1.imag() <= 0.0 || w2.imag() <= 0.0)
        throw std::invalid_argument("semi_metric: arguments must lie in the upper half-plane");
    return std::abs(w1 - w2) / std::sqrt(w1.imag() * w2.imag());
}

double stability_gap_bound(double kF, double delta, double step_norm) {
    double factor = kF * (1.0 + delta);
    if (factor >= 1.0)
        throw std::domain_error("stability_gap_bound: kF (1 + delta) >= 1, bound inapplicable");
    return step_norm / (1.0 - factor);
}

}  // namespace speq
