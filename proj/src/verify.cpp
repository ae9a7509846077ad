#include "speq/verify.hpp"

#include "speq/format.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "speq/freeconv.hpp"
#include "speq/matrix_core.hpp"
#include "speq/measures.hpp"
#include "speq/rng.hpp"

namespace speq {

void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
    os << "name,n,value,stderr,bound,ratio\n";
    for (const auto& r : rows)
        os << r.name << ',' << r.n << ',' << format_double(r.value) << ','
           << format_double(r.stderr_) << ',' << format_double(r.bound) << ','
           << format_double(r.ratio) << '\n';
}

RunConfig SweepConfig::run_config(int n) const {
    RunConfig rc;
    rc.n = n;
    rc.p = static_cast<int>(std::lround(gamma * n));
    rc.seed = seed;
    rc.replicas = replicas;
    rc.dist.kind = kind;
    rc.dist.sigma_sqrt = std::sqrt(sigma_scale) * MatrixXd::Identity(rc.p, rc.p);
    rc.dist.mean = VectorXd::Zero(rc.p);
    return rc;
}

void SweepConfig::validate() const {
    if (n_values.size() < 4)
        throw std::invalid_argument("SweepConfig: slope fits need at least 4 n-values");
    if (replicas < 8) throw std::invalid_argument("SweepConfig: need at least 8 replicas per n");
    for (std::size_t i = 1; i < n_values.size(); ++i)
        if (n_values[i] <= n_values[i - 1])
            throw std::invalid_argument("SweepConfig: n values must be ascending");
}

SlopeFit fit_loglog_slope(const std::vector<int>& ns, const std::vector<double>& values) {
    if (ns.size() != values.size() || ns.size() < 2)
        throw std::invalid_argument("fit_loglog_slope: need matching arrays, size >= 2");
    const std::size_t m = ns.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        double x = std::log(static_cast<double>(ns[i]));
        double y = std::log(std::max(values[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double denom = m * sxx - sx * sx;
    SlopeFit fit;
    fit.slope = (m * sxy - sx * sy) / denom;
    double intercept = (sy - fit.slope * sx) / m;
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double x = std::log(static_cast<double>(ns[i]));
        double y = std::log(std::max(values[i], 1e-300));
        double e = y - (intercept + fit.slope * x);
        ss += e * e;
    }
    fit.residual = std::sqrt(ss / m);
    if (m > 2) {
        double se = std::sqrt(ss / (m - 2) / (sxx - sx * sx / m));
        fit.half_width = 2.0 * se;
    }
    return fit;
}

double resolvent_gap_kappa(const SpectralParameter& z) {
    if (z.branch() == Branch::RealNegative) return std::pow(z.abs(), -5.5);
    return std::pow(z.abs(), 2.5) * std::pow(z.eta(), 9.0);
}

void check_validity_region(int n_min, const SpectralParameter& z) {
    if (z.branch() == Branch::RealNegative) {
        double lhs = std::pow(z.abs(), -7.0);
        if (lhs > 10.0 * n_min) {
            std::ostringstream msg;
            msg << "validity region violated: |z|^-7 = " << lhs << " > 10 n_min = " << 10.0 * n_min;
            throw std::invalid_argument(msg.str());
        }
    } else {
        double lhs = std::pow(z.eta(), 16.0) * std::pow(z.abs(), 7.0);
        if (lhs > n_min / 10.0) {
            std::ostringstream msg;
            msg << "validity region violated: Im(z)^-16 |z|^7 = " << lhs
                << " > n_min/10 = " << n_min / 10.0;
            throw std::invalid_argument(msg.str());
        }
    }
}

namespace {

// Deterministic equivalent for Sigma = s I: a multiple of the identity.
cplx deterministic_diag_value(double sigma_scale, double gamma_actual, const SpectralParameter& z) {
    CovarianceModel model(VectorXd::Constant(1, sigma_scale), gamma_actual);
    FixedPointSolution sol = solve_fixed_point(model, z);
    return 1.0 / ((z.value() / sol.c) * sigma_scale - z.value());
}

}  // namespace

MeanResolventGapResult mean_resolvent_gap(const SweepConfig& config, const SpectralParameter& z) {
    config.validate();
    check_validity_region(config.n_values.front(), z);

    MeanResolventGapResult result;
    result.n_values = config.n_values;
    const double kappa = resolvent_gap_kappa(z);

    for (int n : config.n_values) {
        RunConfig rc = config.run_config(n);
        const int p = rc.p;
        const double gamma_actual = static_cast<double>(p) / n;
        const int R = rc.replicas;
        cplx gdet = deterministic_diag_value(config.sigma_scale, gamma_actual, z);
        MatrixXcd G(p, p);

        MatrixXcd acc = MatrixXcd::Zero(p, p);
        MatrixXcd acc_first_half = MatrixXcd::Zero(p, p);
        MatrixXcd acc_second_half = MatrixXcd::Zero(p, p);
        std::vector<double> sq_norm(R, 0.0);

        const int batch = 8;
        std::vector<MatrixXcd> slot(batch);
        for (int base = 0; base < R; base += batch) {
            const int count = std::min(batch, R - base);
#pragma omp parallel for schedule(dynamic)
            for (int k = 0; k < count; ++k) {
                MatrixXd X = sample_matrix(rc, base + k);
                slot[k] = resolvent(sample_covariance(X), z);
            }
            for (int k = 0; k < count; ++k) {
                int r = base + k;
                acc += slot[k];
                (r < R / 2 ? acc_first_half : acc_second_half) += slot[k];
                MatrixXcd diff = slot[k];
                diff.diagonal().array() -= gdet;
                sq_norm[r] = diff.squaredNorm();
            }
        }

        MatrixXcd mean = acc / static_cast<double>(R);
        MatrixXcd gap_mat = mean;
        gap_mat.diagonal().array() -= gdet;
        double gap = gap_mat.norm();
        MatrixXcd half_diff =
            acc_first_half / static_cast<double>(R / 2) - acc_second_half / (R - R / 2);
        double mc = 0.5 * half_diff.norm();

        // Cross-replica U-statistic: E<G_r - G, G_s - G> = ||E[G] - G||^2 for
        // r != s, so the within-replica variance can be removed exactly.
        double sum_sq = 0.0;
        for (double v : sq_norm) sum_sq += v;
        double r2 = static_cast<double>(R) * R;
        double unbiased_sq = (r2 * gap * gap - sum_sq) / (r2 - R);
        double unbiased = std::sqrt(std::max(unbiased_sq, 0.0));

        result.gap.push_back(gap);
        result.mc_error.push_back(mc);
        result.gap_unbiased.push_back(unbiased);
        double bound = kappa / std::sqrt(static_cast<double>(n));
        result.rows.push_back({"mean_resolvent_gap", n, gap, mc, bound, gap / bound});
        result.rows.push_back({"resolvent_gap_unbiased", n, unbiased, mc, bound, unbiased / bound});
    }

    result.slope = fit_loglog_slope(result.n_values, result.gap);
    result.rows.push_back(
        {"mean_resolvent_gap_slope", 0, result.slope.slope, result.slope.half_width, -0.5, 0.0});
    return result;
}

CorollaryBoundsResult corollary_bounds(const SweepConfig& config, const SpectralParameter& z,
                                       int num_directions) {
    config.validate();
    check_validity_region(config.n_values.front(), z);

    CorollaryBoundsResult result;
    result.n_values = config.n_values;
    const double kappa = resolvent_gap_kappa(z);

    for (int n : config.n_values) {
        RunConfig rc = config.run_config(n);
        const int p = rc.p;
        const double gamma_actual = static_cast<double>(p) / n;
        const int R = rc.replicas;
        cplx gdet = deterministic_diag_value(config.sigma_scale, gamma_actual, z);
        cplx gnu = gdet;  // (1/p) Tr G for Sigma = s I

        // Seed-derived directions: e_1 plus random unit vectors.
        std::vector<VectorXd> dirs;
        dirs.push_back(VectorXd::Unit(p, 0));
        for (int d = 1; d < num_directions; ++d) {
            StreamRng rng(rc.seed, 0x5EED, static_cast<std::uint64_t>(n), d);
            VectorXd u(p);
            for (int i = 0; i < p; ++i) u[i] = rng.next_gaussian();
            dirs.push_back(u / u.norm());
        }

        std::vector<double> gk_gap(R), vesd_gap(R), entry_gap(R);
        std::vector<cplx> gk(R);
#pragma omp parallel for schedule(dynamic)
        for (int r = 0; r < R; ++r) {
            MatrixXd X = sample_matrix(rc, r);
            ResolventView view = ResolventView::from_psd(sample_covariance(X));
            cplx g = view.trace_resolvent_over_p(z);
            gk[r] = g;
            gk_gap[r] = std::abs(g - gnu);
            double vmax = 0.0;
            for (const auto& u : dirs)
                vmax = std::max(vmax, std::abs(view.quadratic_form(u, z) - gdet));
            vesd_gap[r] = vmax;
            MatrixXcd G = view.materialize(z);
            G.diagonal().array() -= gdet;
            entry_gap[r] = G.cwiseAbs().maxCoeff();
        }

        double hier = 0.0, gk_mean = 0.0, vesd_mean = 0.0, entry_mean = 0.0;
        cplx gk_sum = 0.0;
        for (int r = 0; r < R; ++r) {
            if (gk_gap[r] < entry_gap[r]) hier += 1.0;
            gk_mean += gk_gap[r];
            vesd_mean += vesd_gap[r];
            entry_mean += entry_gap[r];
            gk_sum += gk[r];
        }
        hier /= R;
        gk_mean /= R;
        vesd_mean /= R;
        entry_mean /= R;
        cplx gk_avg = gk_sum / static_cast<double>(R);
        double var = 0.0;
        for (int r = 0; r < R; ++r) var += std::norm(gk[r] - gk_avg);
        var /= (R - 1);

        result.gk_gap_mean.push_back(gk_mean);
        result.vesd_gap_mean.push_back(vesd_mean);
        result.entry_gap_mean.push_back(entry_mean);
        result.hierarchy_fraction.push_back(hier);
        result.var_gk.push_back(var);

        double logn = std::sqrt(std::log(static_cast<double>(n)));
        double sn = std::sqrt(static_cast<double>(n));
        result.rows.push_back(
            {"gk_gap", n, gk_mean, 0.0, kappa * logn / n, gk_mean / (kappa * logn / n)});
        result.rows.push_back(
            {"vesd_gap", n, vesd_mean, 0.0, kappa * logn / sn, vesd_mean / (kappa * logn / sn)});
        result.rows.push_back(
            {"entry_gap", n, entry_mean, 0.0, kappa * logn / sn, entry_mean / (kappa * logn / sn)});
        result.rows.push_back({"hierarchy_fraction", n, hier, 0.0, 0.9, hier / 0.9});
        result.rows.push_back({"var_gk", n, var, 0.0, kappa * kappa / (double(n) * n), 0.0});
    }

    result.var_slope = fit_loglog_slope(result.n_values, result.var_gk);
    result.rows.push_back(
        {"var_gk_slope", 0, result.var_slope.slope, result.var_slope.half_width, -2.0, 0.0});
    return result;
}

QuadraticFormVariancesResult quadratic_form_variances(const RunConfig& config,
                                                      const SpectralParameter& z) {
    const int p = config.p, R = config.replicas;
    const double n = config.n;

    MatrixXd B(p, p);
    {
        StreamRng rng(config.seed, 0xB0B0);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) B(i, j) = rng.next_gaussian();
        B /= B.norm();
    }

    std::vector<cplx> q1(R), q2(R), q3(R);
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < R; ++r) {
        MatrixXd X = sample_matrix(config, r);
        VectorXcd x = X.col(0).cast<cplx>();
        MatrixXcd Gm = loo_resolvent(X, 0, z);
        VectorXcd Gx = Gm * x;
        q1[r] = (x.transpose() * Gx)(0, 0);
        q2[r] = (x.transpose() * (B.cast<cplx>() * Gx))(0, 0);
        q3[r] = (Gx.transpose() * (B.cast<cplx>() * Gx))(0, 0);
    }

    auto variance = [R](const std::vector<cplx>& q) {
        cplx mean = 0.0;
        for (const cplx& v : q) mean += v;
        mean /= static_cast<double>(R);
        double var = 0.0;
        for (const cplx& v : q) var += std::norm(v - mean);
        return var / (R - 1);
    };

    QuadraticFormVariancesResult out;
    out.var_quadform = variance(q1);
    out.var_bilinear = variance(q2);
    out.var_sandwich = variance(q3);
    double eta = z.eta();
    out.sigma_sq = eta * eta * (1.0 + eta * eta * z.abs() / n);
    out.ratio_first_second = out.var_quadform / (p * out.var_bilinear);
    out.order_pattern_ok = out.ratio_first_second >= 0.1 && out.ratio_first_second <= 10.0;
    out.bilinear_bound_ok = out.var_bilinear <= 10.0 * out.sigma_sq;
    out.sandwich_bound_ok = out.var_sandwich <= 10.0 * eta * eta * out.sigma_sq;

    // B = p^{-1/2} I makes the bilinear form a rescaled quadratic form, so the
    // first variance must equal p times the second one exactly.
    double var_recovery = out.var_quadform / p;
    std::vector<cplx> q0(R);
    for (int r = 0; r < R; ++r) q0[r] = q1[r] / std::sqrt(static_cast<double>(p));
    out.recovery_residual = std::abs(variance(q0) - var_recovery) / std::max(1e-300, var_recovery);
    return out;
}

IntermediateParameterBResult intermediate_parameter_b(const SweepConfig& config,
                                                      const SpectralParameter& z) {
    config.validate();

    IntermediateParameterBResult result;
    result.n_values = config.n_values;
    int omega_total = 0, omega_in = 0;

    for (int n : config.n_values) {
        RunConfig rc = config.run_config(n);
        const int p = rc.p;
        const double gamma_actual = static_cast<double>(p) / n;
        const int R = rc.replicas;

        CovarianceModel model(VectorXd::Constant(p, config.sigma_scale), gamma_actual);
        FixedPointSolution sol = solve_fixed_point(model, z);

        std::vector<cplx> trace_term(R);
        std::vector<int> member(R, 0);
#pragma omp parallel for schedule(dynamic)
        for (int r = 0; r < R; ++r) {
            MatrixXd X = sample_matrix(rc, r);
            VectorXd x = X.col(0);
            ResolventView view = ResolventView::from_psd(
                sample_covariance(X) - (x * x.transpose()) / static_cast<double>(n));
            // Sigma = s I: Tr(Sigma G_-) = s Tr(G_-)
            cplx tr = view.trace_resolvent_over_p(z) * static_cast<double>(p);
            trace_term[r] = (z.value() / static_cast<double>(n)) * config.sigma_scale * tr;
            cplx a = z.value() +
                     (z.value() / static_cast<double>(n)) * view.quadratic_form(x, z);
            member[r] = omega_contains(a, z) ? 1 : 0;
        }
        cplx mean_term = 0.0;
        for (int r = 0; r < R; ++r) {
            mean_term += trace_term[r];
            omega_in += member[r];
        }
        omega_total += R;
        cplx b_hat = z.value() + mean_term / static_cast<double>(R);
        double gap = std::abs(b_hat - sol.c);
        result.b_gap.push_back(gap);
        double bound = z.branch() == Branch::RealNegative
                           ? std::pow(z.abs(), -3.5) / n
                           : std::pow(z.eta(), 7.0) * std::pow(z.abs(), 3.5) / n;
        result.rows.push_back({"b_minus_c", n, gap, 0.0, bound, gap / bound});
    }

    result.omega_membership_fraction =
        omega_total ? static_cast<double>(omega_in) / omega_total : 1.0;
    result.slope = fit_loglog_slope(result.n_values, result.b_gap);
    result.rows.push_back({"b_minus_c_slope", 0, result.slope.slope, result.slope.half_width,
                           -1.0, 0.0});
    result.rows.push_back(
        {"a_omega_membership", 0, result.omega_membership_fraction, 0.0, 1.0, 0.0});
    return result;
}

KolmogorovRateResult kolmogorov_rate(const SweepConfig& config) {
    config.validate();
    if (config.sigma_scale < 0.1)
        throw std::invalid_argument("kolmogorov_rate: Sigma must be invertible with lambda_min >= 0.1");

    KolmogorovRateResult result;
    result.n_values = config.n_values;

    for (int n : config.n_values) {
        RunConfig rc = config.run_config(n);
        const int p = rc.p;
        const double gamma_actual = static_cast<double>(p) / n;
        const int R = rc.replicas;

        CovarianceModel model(VectorXd::Constant(p, config.sigma_scale), gamma_actual);
        FreeConvolutionResult nu = free_multiplicative_mp(model);
        CdfFunction nu_cdf = nu.cdf();

        std::vector<double> deltas(R);
#pragma omp parallel for schedule(dynamic)
        for (int r = 0; r < R; ++r) {
            MatrixXd X = sample_matrix(rc, r);
            AtomicMeasure esd = empirical_spectrum(sample_covariance(X));
            deltas[r] = kolmogorov_distance(CdfFunction::from_atoms(esd), nu_cdf);
        }
        double mean = 0.0;
        for (double d : deltas) mean += d;
        mean /= R;
        double var = 0.0;
        for (double d : deltas) var += (d - mean) * (d - mean);
        double se = R > 1 ? std::sqrt(var / (R - 1) / R) : 0.0;

        result.delta_mean.push_back(mean);
        result.delta_stderr.push_back(se);
        double reference = std::pow(static_cast<double>(n), -1.0 / 70.0);
        result.rows.push_back({"kolmogorov_delta", n, mean, se, reference, mean / reference});
    }

    result.decays = result.delta_mean.back() < result.delta_mean.front();
    result.rows.push_back({"kolmogorov_decays", 0, result.decays ? 1.0 : 0.0, 0.0, 1.0, 0.0});
    return result;
}

KolmogorovReductionCheck kolmogorov_reduction_check(const RunConfig& config) {
    const double gamma_actual = config.gamma();
    CovarianceModel model(VectorXd::Constant(config.p, 1.0), gamma_actual);
    FreeConvolutionResult nu = free_multiplicative_mp(model);
    FreeConvolutionResult nu_check = nu_check_measure(nu, gamma_actual);

    MatrixXd X = sample_matrix(config, 0);
    MatrixXd K = sample_covariance(X);
    MatrixXd Kc = (X.transpose() * X) / static_cast<double>(config.n);
    Kc = 0.5 * (Kc + Kc.transpose()).eval();

    KolmogorovReductionCheck out;
    out.delta_primal = kolmogorov_distance(CdfFunction::from_atoms(empirical_spectrum(K)),
                                           nu.cdf());
    double delta_check = kolmogorov_distance(CdfFunction::from_atoms(empirical_spectrum(Kc)),
                                             nu_check.cdf());
    out.delta_reduced = delta_check / gamma_actual;
    out.residual = std::abs(out.delta_primal - out.delta_reduced);
    return out;
}

}  // namespace speq
