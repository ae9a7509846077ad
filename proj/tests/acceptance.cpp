// Acceptance suite: one pass/fail line per criterion, exit 0 only if all
// criteria hold. Each criterion pins its tolerances in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "oracles.hpp"
#include "speq/freeconv.hpp"
#include "speq/matrix_core.hpp"
#include "speq/parallel.hpp"
#include "speq/rfkernel.hpp"
#include "speq/rng.hpp"
#include "speq/serial_ref.hpp"
#include "speq/verify.hpp"

using namespace speq;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[%s] criterion %d: %s (%s) [%.1fs]\n", pass ? "PASS" : "FAIL", criterion,
                name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return std::string(buf);
}

MatrixXd random_matrix(int p, int n, std::uint64_t seed) {
    StreamRng rng(seed, 0xACCE);
    MatrixXd X(p, n);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < n; ++j) X(i, j) = rng.next_gaussian();
    return X;
}

SpectralParameter random_z(std::uint64_t seed) {
    StreamRng rng(seed, 0xACCF);
    if (rng.next_u64() & 1)
        return SpectralParameter::real_negative(-0.2 - 2.0 * rng.next_uniform());
    return SpectralParameter::upper_half(2.0 * rng.next_uniform() - 1.0,
                                         0.2 + rng.next_uniform());
}

// ---------------------------------------------------------------------------
// 1. Exact identities over 1000 randomized cases, both branches.
void criterion_1() {
    double t0 = now_seconds();
    double worst = 0.0;
    std::string worst_what = "none";
    const int trials = 1000;

    for (int trial = 0; trial < trials; ++trial) {
        StreamRng dims(trial, 0xD135);
        int p = 2 + static_cast<int>(dims.next_u64() % 7);
        int n = 2 + static_cast<int>(dims.next_u64() % 9);
        MatrixXd X = random_matrix(p, n, 10000 + trial);
        SpectralParameter z = random_z(20000 + trial);
        Eigen::Index col = static_cast<Eigen::Index>(dims.next_u64() % n);

        auto track = [&](double r, const char* what) {
            if (r > worst) {
                worst = r;
                worst_what = what;
            }
        };

        LooIdentityReport loo = check_loo_identities(X, col, z);
        track(loo.max_residual(), "loo");

        MatrixXcd G = resolvent(sample_covariance(X), z);
        MatrixXcd Gc = co_resolvent(X, z);

        // (1/n) X^T G X = I + z Gc
        MatrixXcd lhs = (X.transpose().cast<cplx>() * G * X.cast<cplx>()) / double(n);
        MatrixXcd rhs = MatrixXcd::Identity(n, n) + z.value() * Gc;
        track((lhs - rhs).norm() / std::max(1.0, rhs.norm()), "co-resolvent identity");

        // Sherman-Morrison against the shifted covariance.
        VectorXcd u = X.col(col).cast<cplx>() / std::sqrt(double(n));
        MatrixXcd updated = sherman_morrison_update(G, u, u);
        MatrixXcd target = sample_covariance(X).cast<cplx>() + u * u.transpose();
        target.diagonal().array() -= z.value();
        track((target * updated - MatrixXcd::Identity(p, p)).norm(), "sherman-morrison");

        // ||G|| <= eta
        double opnorm = G.operatorNorm();
        track(std::max(0.0, opnorm - z.eta()) / z.eta(), "norm bound");

        if (z.branch() == Branch::UpperHalf) {
            MatrixXcd GGdag = G * G.adjoint();
            MatrixXcd imG = (G - G.adjoint()) / cplx(0.0, 2.0);
            track((imG - z.value().imag() * GGdag).norm() / std::max(1.0, GGdag.norm()),
                  "Im G identity");
        }
    }
    report(1, "exact-identity suite", worst <= 1e-9,
           fmt("1000 cases, worst residual %.2e in %s", worst, worst_what.c_str()),
           now_seconds() - t0);
}

// ---------------------------------------------------------------------------
// 2. Fixed-point correctness against the quadratic oracle + uniqueness.
void criterion_2() {
    double t0 = now_seconds();
    double worst = 0.0;
    int pairs = 0;
    for (double gamma : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        for (int iz = 0; iz < 10; ++iz) {
            SpectralParameter z = iz < 5
                ? SpectralParameter::real_negative(-0.3 - 0.8 * iz)
                : SpectralParameter::upper_half(-1.0 + 0.5 * (iz - 5), 0.4 + 0.2 * (iz - 5));
            CovarianceModel model = CovarianceModel::identity(8, gamma);
            FixedPointSolution sol = solve_fixed_point(model, z);
            cplx expected = oracle::quadratic_fixed_point(gamma, z);
            worst = std::max(worst,
                             std::abs(sol.c - expected) / std::max(1.0, std::abs(expected)));
            ++pairs;
        }
    }

    double unique_spread = 0.0;
    for (auto z : {SpectralParameter::real_negative(-0.8),
                   SpectralParameter::upper_half(0.5, 0.6)}) {
        CovarianceModel model = CovarianceModel::identity(8, 0.7);
        FixedPointSolution base = solve_fixed_point(model, z);
        StreamRng rng(4242, 0xACED);
        for (int s = 0; s < 100; ++s) {
            SolveOptions opt;
            opt.has_start = true;
            if (z.branch() == Branch::RealNegative) {
                opt.start = cplx(z.value().real() - 3.0 * rng.next_uniform(), 0.0);
            } else {
                do {
                    opt.start = z.value() +
                                cplx(2.0 * rng.next_uniform() - 1.0, 2.0 * rng.next_uniform());
                } while (!omega_contains(opt.start, z));
            }
            FixedPointSolution sol = solve_fixed_point(model, z, opt);
            unique_spread = std::max(unique_spread, std::abs(sol.c - base.c));
        }
    }

    bool pass = worst <= 1e-10 && unique_spread <= 1e-9 && pairs == 50;
    report(2, "fixed-point correctness", pass,
           fmt("50 pairs worst rel err %.2e, uniqueness spread %.2e", worst, unique_spread),
           now_seconds() - t0);
}

// ---------------------------------------------------------------------------
// 3. Free-convolution oracle checks.
void criterion_3() {
    double t0 = now_seconds();

    FreeConvolutionResult mp1 = free_multiplicative_mp(CovarianceModel::identity(1, 1.0));
    double density_err = 0.0;
    for (double x : {1.0, 2.0, 3.0}) {
        const auto& g = mp1.density.grid;
        auto it = std::upper_bound(g.begin(), g.end(), x);
        std::size_t i = static_cast<std::size_t>(it - g.begin());
        double s = (x - g[i - 1]) / (g[i] - g[i - 1]);
        double f = mp1.density.values[i - 1] +
                   s * (mp1.density.values[i] - mp1.density.values[i - 1]);
        density_err = std::max(density_err, std::abs(f - oracle::mp_density(1.0, x)));
    }

    FreeConvolutionResult mp4 = free_multiplicative_mp(CovarianceModel::identity(1, 4.0));
    double atom_err = std::abs(mp4.atom_at_zero() - 0.75);

    double transform_err = 0.0;
    for (int i = 0; i < 20; ++i) {
        const FreeConvolutionResult& result = (i % 2 == 0) ? mp1 : mp4;
        double gamma = (i % 2 == 0) ? 1.0 : 4.0;
        SpectralParameter z = (i < 10)
            ? SpectralParameter::real_negative(-0.3 - 0.2 * i)
            : SpectralParameter::upper_half(-1.0 + 0.35 * (i - 10), 0.5 + 0.05 * i);
        cplx expected = oracle::mp_stieltjes(gamma, z);
        cplx got = result.transform(z);
        transform_err =
            std::max(transform_err, std::abs(got - expected) / std::max(1.0, std::abs(expected)));
    }

    bool pass = density_err <= 1e-3 && atom_err <= 5e-3 && transform_err <= 2e-3;
    report(3, "free-convolution oracle", pass,
           fmt("MP(1) density err %.2e, MP(4) atom err %.2e, transform rel err %.2e",
               density_err, atom_err, transform_err),
           now_seconds() - t0);
}

// ---------------------------------------------------------------------------
// 4. Desk-scale slope check of the mean-resolvent Frobenius gap.
void criterion_4() {
    double t0 = now_seconds();
    SweepConfig config;
    config.n_values = {64, 128, 256, 512};
    config.gamma = 0.5;
    config.replicas = 32;
    config.seed = 1;
    SpectralParameter z = SpectralParameter::real_negative(-1.0);
    MeanResolventGapResult result = mean_resolvent_gap(config, z);

    bool pass = result.slope.slope >= -0.8 && result.slope.slope <= -0.3;
    std::ostringstream detail;
    detail << fmt("slope %.3f vs window [-0.8,-0.3]; gap(64)=%.3f gap(512)=%.3f",
                  result.slope.slope, result.gap.front(), result.gap.back());
    detail << fmt("; replica-split MC noise %.3f..%.3f dominates the raw gap",
                  result.mc_error.front(), result.mc_error.back());
    report(4, "mean-resolvent gap slope", pass, detail.str(), now_seconds() - t0);
    if (!pass) {
        std::printf(
            "        note: ||Ehat[G] - G||_F at 32 replicas is estimator noise\n"
            "        (~ sqrt(n/R) per the concentration scale), which grows with n;\n"
            "        the bias norm ||E[G] - G||_F (cross-replica estimate %.4f..%.4f here)\n"
            "        does decay but needs O(n^2) replicas to dominate the estimator\n"
            "        noise. See the repository notes on this criterion.\n",
            result.gap_unbiased.front(), result.gap_unbiased.back());
    }
}

// ---------------------------------------------------------------------------
// 5. Corollary hierarchy and Var[g_K] decay.
void criterion_5() {
    double t0 = now_seconds();
    SweepConfig config;
    config.n_values = {64, 128, 256, 512};
    config.gamma = 0.5;
    config.replicas = 32;
    config.seed = 2;
    SpectralParameter z = SpectralParameter::real_negative(-1.0);
    CorollaryBoundsResult result = corollary_bounds(config, z);

    double hierarchy = result.hierarchy_fraction.back();
    double slope = result.var_slope.slope;
    bool pass = hierarchy >= 0.9 && slope >= -2.6 && slope <= -1.4;
    report(5, "corollary hierarchy + variance decay", pass,
           fmt("hierarchy %.0f%% at n=512, Var[g_K] slope %.2f", 100.0 * hierarchy, slope),
           now_seconds() - t0);
}

// ---------------------------------------------------------------------------
// 6. Kolmogorov rate at desk scale plus universality probe.
void criterion_6() {
    double t0 = now_seconds();
    SweepConfig config;
    config.n_values = {128, 256, 512, 1024};
    config.gamma = 0.5;
    config.replicas = 8;
    config.seed = 3;
    KolmogorovRateResult gauss = kolmogorov_rate(config);

    SweepConfig rad = config;
    rad.kind = ColumnKind::RademacherLinear;
    KolmogorovRateResult rademacher = kolmogorov_rate(rad);

    double delta_1024 = gauss.delta_mean.back();
    double delta_128 = gauss.delta_mean.front();
    double ratio = rademacher.delta_mean.back() / delta_1024;
    bool pass = delta_1024 <= 0.05 && delta_1024 < delta_128 && ratio <= 2.0 && ratio >= 0.5;
    report(6, "kolmogorov rate", pass,
           fmt("Delta(1024)=%.4f Delta(128)=%.4f rademacher/gaussian=%.2f", delta_1024, delta_128,
               ratio),
           now_seconds() - t0);
}

// ---------------------------------------------------------------------------
// 7. Effective ridge and the debias experiment.
void criterion_7() {
    double t0 = now_seconds();

    // Both characterizations on 500 random tuples (effective_ridge throws
    // beyond 1e-8 internally; recheck at 1e-10 here).
    StreamRng rng(777, 0x71D6E);
    double worst_pair = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        int N = 2 + static_cast<int>(rng.next_u64() % 12);
        int P = 1 + static_cast<int>(rng.next_u64() % 16);
        double lambda = 0.1 + 2.0 * rng.next_uniform();
        VectorXd d(N);
        for (int i = 0; i < N; ++i) d[i] = 0.05 + 3.0 * rng.next_uniform();
        EffectiveRidge er = effective_ridge(d, N, P, lambda);
        VectorXd desc = d;
        std::sort(desc.data(), desc.data() + N, std::greater<double>());
        CovarianceModel model(desc, static_cast<double>(N) / P);
        FixedPointSolution sol =
            solve_fixed_point(model, SpectralParameter::real_negative(-lambda));
        worst_pair = std::max(worst_pair, std::abs(er.lambda_tilde - (-sol.c.real())) /
                                              std::max(1.0, er.lambda_tilde));
    }

    double golden_err = std::abs(effective_ridge(VectorXd::Ones(8), 8, 8, 1.0).lambda_tilde -
                                 (1.0 + std::sqrt(5.0)) / 2.0);

    // Debias experiment: N=200, P=100, lambda=1, 400 feature replicas, ten
    // test points where the ridge effect is resolvable.
    const int N = 200, P = 100, replicas = 400;
    RbfExperiment exp = make_rbf_experiment(N, 30, 0.3, 20250809);
    std::vector<int> keep = select_informative_test_points(exp.K_joint, N, exp.Y, 1.0, P, 10);
    std::vector<int> cols(N);
    for (int i = 0; i < N; ++i) cols[i] = i;
    for (int idx : keep) cols.push_back(N + idx);
    MatrixXd K_sel(cols.size(), cols.size());
    for (std::size_t a = 0; a < cols.size(); ++a)
        for (std::size_t b = 0; b < cols.size(); ++b)
            K_sel(a, b) = exp.K_joint(cols[a], cols[b]);

    int wins_gauss = 0, wins_lip = 0;
    for (FeatureKind kind : {FeatureKind::Gaussian, FeatureKind::LipschitzGaussian}) {
        DebiasReport rep = debias_experiment(K_sel, N, exp.Y, 1.0, P, kind, replicas, 4242);
        int wins = 0;
        for (std::size_t t = 0; t < rep.gap_tilde.size(); ++t)
            if (rep.gap_tilde[t] < rep.gap_naive[t]) ++wins;
        (kind == FeatureKind::Gaussian ? wins_gauss : wins_lip) = wins;
    }

    bool pass = worst_pair <= 1e-10 && golden_err <= 1e-10 && wins_gauss == 10 && wins_lip == 10;
    report(7, "effective ridge + debias", pass,
           fmt("pairings %.1e, golden err %.1e, wins gauss %d/10 lipschitz %d/10", worst_pair,
               golden_err, wins_gauss, wins_lip),
           now_seconds() - t0);
}

// ---------------------------------------------------------------------------
// 8. Determinism: byte-identical artifacts for identical seeds, independent
// of the thread count.
void criterion_8() {
    double t0 = now_seconds();

    auto verify_csv = [&]() {
        SweepConfig config;
        config.n_values = {16, 24, 32, 48};
        config.gamma = 0.5;
        config.replicas = 8;
        config.seed = 99;
        std::ostringstream os;
        write_report_csv(os, mean_resolvent_gap(config, SpectralParameter::real_negative(-1.0)).rows);
        return os.str();
    };
    auto density_csv = [&]() {
        FreeConvOptions opt;
        opt.grid_size = 128;
        std::ostringstream os;
        write_density_csv(os, free_multiplicative_mp(CovarianceModel::identity(1, 0.5), opt).density);
        return os.str();
    };

    bool pass = true;
#ifdef _OPENMP
    omp_set_num_threads(2);
#endif
    std::string v1 = verify_csv(), d1 = density_csv();
#ifdef _OPENMP
    omp_set_num_threads(1);
#endif
    std::string v2 = verify_csv(), d2 = density_csv();
#ifdef _OPENMP
    omp_set_num_threads(2);
#endif
    std::string v3 = verify_csv(), d3 = density_csv();
    pass = v1 == v2 && v1 == v3 && d1 == d2 && d1 == d3;
    report(8, "determinism", pass,
           pass ? "verify + density artifacts byte-identical across reruns and thread counts"
                : "artifacts differ",
           now_seconds() - t0);
}

}  // namespace

int main(int argc, char** argv) {
    set_threads();
    int only = 0;
    for (int i = 1; i < argc; ++i)
        if (std::strncmp(argv[i], "--criterion=", 12) == 0) only = std::atoi(argv[i] + 12);

    using CriterionFn = void (*)();
    CriterionFn criteria[] = {criterion_1, criterion_2, criterion_3, criterion_4,
                              criterion_5, criterion_6, criterion_7, criterion_8};
    for (int i = 0; i < 8; ++i)
        if (only == 0 || only == i + 1) criteria[i]();

    if (failures) {
        std::printf("%d criterion(s) failed\n", failures);
        return 2;
    }
    std::printf("all criteria passed\n");
    return 0;
}
