#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "speq/matrix_core.hpp"
#include "speq/measures.hpp"
#include "speq/rng.hpp"

using namespace speq;

namespace {

AtomicMeasure random_measure(std::uint64_t seed, int max_atoms = 8) {
    StreamRng rng(seed, 20);
    int k = 1 + static_cast<int>(rng.next_u64() % max_atoms);
    std::vector<double> pos(k), w(k);
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
        pos[i] = 4.0 * rng.next_uniform();
        w[i] = 0.05 + rng.next_uniform();
        total += w[i];
    }
    for (double& x : w) x /= total;
    return AtomicMeasure(pos, w);
}

}  // namespace

TEST_CASE("atomic measure construction and merging") {
    AtomicMeasure mu({0.0, 1.0, 1.0 + 1e-12}, {0.25, 0.5, 0.25});
    CHECK(mu.size() == 2);  // the two atoms near 1 merge
    CHECK(mu.weights()[1] == doctest::Approx(0.75));
    CHECK(mu.atom_at_zero() == doctest::Approx(0.25));

    CHECK_THROWS_AS(AtomicMeasure({-1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(AtomicMeasure({1.0}, {0.9}), std::invalid_argument);
    CHECK_THROWS_AS(AtomicMeasure({1.0, 2.0}, {0.5, -0.5}), std::invalid_argument);
}

TEST_CASE("stieltjes transform of atomic measures") {
    SpectralParameter zm1 = SpectralParameter::real_negative(-1.0);
    CHECK(std::abs(stieltjes(AtomicMeasure::dirac(0.0), zm1) - cplx(1.0, 0.0)) < 1e-15);

    SpectralParameter zi = SpectralParameter::upper_half(0.0, 1.0);
    CHECK(std::abs(stieltjes(AtomicMeasure::dirac(1.0), zi) - cplx(0.5, 0.5)) < 1e-15);

    AtomicMeasure mix({0.0, 2.0}, {0.5, 0.5});
    CHECK(std::abs(stieltjes(mix, SpectralParameter::real_negative(-2.0)) - cplx(0.375, 0.0)) <
          1e-15);
}

TEST_CASE("stieltjes branch mapping and bound over random measures") {
    for (int trial = 0; trial < 1000; ++trial) {
        AtomicMeasure mu = random_measure(trial);
        StreamRng rng(5000 + trial, 21);
        SpectralParameter zc =
            SpectralParameter::upper_half(4.0 * rng.next_uniform() - 2.0, 0.1 + rng.next_uniform());
        cplx gc = stieltjes(mu, zc);
        CHECK(gc.imag() > 0.0);
        CHECK(std::abs(gc) <= zc.eta() * (1.0 + 1e-12));

        SpectralParameter zr = SpectralParameter::real_negative(-0.1 - 2.0 * rng.next_uniform());
        cplx gr = stieltjes(mu, zr);
        CHECK(gr.imag() == 0.0);
        CHECK(gr.real() > 0.0);
        CHECK(std::abs(gr) <= zr.eta() * (1.0 + 1e-12));
    }
}

TEST_CASE("empirical spectrum") {
    CHECK(empirical_spectrum(MatrixXd::Identity(3, 3)).same_atoms(AtomicMeasure::dirac(1.0), 1e-12));

    MatrixXd K = MatrixXd::Zero(3, 3);
    K(2, 2) = 3.0;
    AtomicMeasure mu = empirical_spectrum(K);
    CHECK(mu.size() == 2);
    CHECK(mu.positions()[0] == doctest::Approx(0.0));
    CHECK(mu.weights()[0] == doctest::Approx(2.0 / 3.0));
    CHECK(mu.positions()[1] == doctest::Approx(3.0));

    StreamRng rng(99, 22);
    MatrixXd X(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) X(i, j) = rng.next_gaussian();
    MatrixXd K2 = sample_covariance(X);
    AtomicMeasure esd = empirical_spectrum(K2);
    CHECK(esd.mean() == doctest::Approx(K2.trace() / 5.0).epsilon(1e-10));
}

TEST_CASE("kolmogorov distance on step functions") {
    AtomicMeasure d0 = AtomicMeasure::dirac(0.0);
    AtomicMeasure d1 = AtomicMeasure::dirac(1.0);
    CdfFunction F0 = CdfFunction::from_atoms(d0);
    CdfFunction F1 = CdfFunction::from_atoms(d1);
    CHECK(kolmogorov_distance(F0, F0) == 0.0);
    CHECK(kolmogorov_distance(F0, F1) == doctest::Approx(1.0));

    AtomicMeasure mix({0.0, 1.0}, {0.5, 0.5});
    CHECK(kolmogorov_distance(CdfFunction::from_atoms(mix), F0) == doctest::Approx(0.5));
}

TEST_CASE("kolmogorov distance is a metric on step functions") {
    for (int trial = 0; trial < 200; ++trial) {
        AtomicMeasure a = random_measure(20000 + trial);
        AtomicMeasure b = random_measure(21000 + trial);
        AtomicMeasure c = random_measure(22000 + trial);
        CdfFunction Fa = CdfFunction::from_atoms(a);
        CdfFunction Fb = CdfFunction::from_atoms(b);
        CdfFunction Fc = CdfFunction::from_atoms(c);
        double ab = kolmogorov_distance(Fa, Fb);
        double ba = kolmogorov_distance(Fb, Fa);
        CHECK(ab == ba);  // symmetry is exact
        double ac = kolmogorov_distance(Fa, Fc);
        double cb = kolmogorov_distance(Fc, Fb);
        CHECK(ab <= ac + cb + 1e-12);
        CHECK((kolmogorov_distance(Fa, Fa) == 0.0));
        if (ab == 0.0) CHECK(a.same_atoms(b, 1e-12));
    }
}

TEST_CASE("kolmogorov distance between continuous and step") {
    // Uniform density on [0, 1] against a dirac at 0.5: sup gap is 0.5 at t=0.5.
    SampledDensity uniform;
    const int m = 101;
    for (int i = 0; i < m; ++i) {
        uniform.grid.push_back(static_cast<double>(i) / (m - 1));
        uniform.values.push_back(1.0);
    }
    uniform.validate();
    CdfFunction Fu = CdfFunction::from_density(uniform);
    CdfFunction Fd = CdfFunction::from_atoms(AtomicMeasure::dirac(0.5));
    CHECK(kolmogorov_distance(Fu, Fd) == doctest::Approx(0.5).epsilon(1e-6));

    // Against itself shifted by an atom flip: distance to dirac at 0 is 1 - F(0) = 1... at 0+.
    CdfFunction F0 = CdfFunction::from_atoms(AtomicMeasure::dirac(0.0));
    CHECK(kolmogorov_distance(Fu, F0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sampled density validation") {
    SampledDensity d;
    d.grid = {0.0, 1.0};
    d.values = {1.0, 1.0};
    d.validate();
    CHECK(d.total_mass() == doctest::Approx(1.0));

    SampledDensity bad = d;
    bad.values = {2.0, 2.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    SampledDensity clamped;
    clamped.grid = {0.0, 0.5, 1.0};
    clamped.values = {1.0, 1.0, -5e-13};
    clamped.atom_at_zero = 0.25;
    clamped.validate();
    CHECK(clamped.values[2] == 0.0);

    SampledDensity too_negative = clamped;
    too_negative.values[2] = -1e-9;
    CHECK_THROWS_AS(too_negative.validate(), std::invalid_argument);
}

TEST_CASE("kolmogorov schedule derived quantities") {
    KolmogorovSchedule sched(0.5, 9.0, 9.0, 1.0, 1e-3);
    CHECK(sched.y == doctest::Approx(std::pow(1e-3, 2.0 / 69.0)).epsilon(1e-12));
    CHECK(sched.y == doctest::Approx(0.81868).epsilon(1e-4));
    CHECK(sched.A == doctest::Approx(std::pow(1e-3, -5.0 / 69.0)).epsilon(1e-12));
    CHECK(sched.A == doctest::Approx(1.64976).epsilon(1e-4));
    // Balanced terms.
    double t1 = sched.epsilon * std::pow(sched.A, 10.0) / std::pow(sched.y, 9.0);
    CHECK(t1 == doctest::Approx(sched.tail_term()).epsilon(1e-9));
    CHECK(sched.tail_term() == doctest::Approx(sched.holder_term()).epsilon(1e-9));

    CHECK_THROWS_AS(KolmogorovSchedule(1.5, 9, 9, 1, 1e-3), std::invalid_argument);
    CHECK_THROWS_AS(KolmogorovSchedule(0.5, 9, 9, 0.5, 1e-3), std::invalid_argument);
}

TEST_CASE("kolmogorov schedule balance over random parameters") {
    StreamRng rng(4242, 23);
    for (int trial = 0; trial < 200; ++trial) {
        double beta = 0.1 + 0.9 * rng.next_uniform();
        double l = 0.5 + 10.0 * rng.next_uniform();
        double k = 0.5 + 10.0 * rng.next_uniform();
        double sigma = 1.0 + 2.0 * rng.next_uniform();
        double eps = std::pow(10.0, -1.0 - 4.0 * rng.next_uniform());
        KolmogorovSchedule sched(beta, l, k, sigma, eps);
        double t1 = eps * std::pow(sched.A, 1.0 + l) / std::pow(sched.y, k);
        CHECK(t1 == doctest::Approx(sched.holder_term()).epsilon(1e-9));
    }
}

TEST_CASE("bai bound terms") {
    KolmogorovSchedule sched(0.5, 9.0, 9.0, 1.0, 1e-3);
    BaiTermsReport zero = bai_bound_terms([](double) { return 0.0; }, sched);
    CHECK(zero.segment_term == 0.0);
    CHECK(zero.tail_term == doctest::Approx(sched.tail_term()));
    CHECK(zero.holder_term == doctest::Approx(sched.holder_term()));

    // Peak away from the sample points is still found by refinement.
    auto bump = [&](double t) { return 1.0 / (1.0 + 1e4 * (t - 0.1234567) * (t - 0.1234567)); };
    BaiTermsReport peaked = bai_bound_terms(bump, sched);
    CHECK(peaked.segment_term == doctest::Approx(sched.A).epsilon(1e-6));
    CHECK(peaked.certificate() ==
          doctest::Approx(peaked.segment_term + peaked.tail_term + peaked.holder_term));
}

TEST_CASE("balanced schedule terms coincide for identical measures") {
    // With g_gap == 0 the certificate reduces to the two schedule terms, which
    // agree by the balance identity.
    KolmogorovSchedule sched(0.5, 9.0, 9.0, 1.0, 1e-4);
    BaiTermsReport r = bai_bound_terms([](double) { return 0.0; }, sched);
    CHECK(r.tail_term == doctest::Approx(r.holder_term).epsilon(1e-9));
}

TEST_CASE("tail integral bound for stieltjes transforms") {
    // Lemma-style check: integral of |g_nu - g_mu| over |t| > A at height y is
    // at most 4 sigma^3 / (y^2 A) when both second moments are <= sigma.
    for (int trial = 0; trial < 100; ++trial) {
        AtomicMeasure nu = random_measure(30000 + trial);
        AtomicMeasure mu = random_measure(31000 + trial);
        double sigma = std::max({1.0, nu.second_moment(), mu.second_moment()});
        StreamRng rng(32000 + trial, 24);
        double y = 0.1 + 0.8 * rng.next_uniform();
        double A = 6.0 + 4.0 * rng.next_uniform();

        // Quadrature over |t| > A via the substitution t = A/u, u in (0,1].
        auto gap = [&](double t) {
            SpectralParameter z = SpectralParameter::upper_half(t, y);
            return std::abs(stieltjes(nu, z) - stieltjes(mu, z));
        };
        const int m = 2000;
        double integral = 0.0;
        for (int side = 0; side < 2; ++side) {
            double prev_val = 0.0, prev_u = 0.0;
            for (int i = 1; i <= m; ++i) {
                double u = static_cast<double>(i) / m;
                double t = A / u;
                double val = gap(side == 0 ? t : -t) * A / (u * u);
                if (i > 1) integral += 0.5 * (val + prev_val) * (u - prev_u);
                prev_val = val;
                prev_u = u;
            }
        }
        CHECK(integral <= 4.0 * std::pow(sigma, 3.0) / (y * y * A) * (1.0 + 1e-6));
    }
}

TEST_CASE("mp shape distance bound") {
    CHECK(mp_shape_distance_bound(1.0, 1.0) == 0.0);
    CHECK(mp_shape_distance_bound(1.0, 2.0) == doctest::Approx(0.5));
    CHECK(mp_shape_distance_bound(0.5, 1.5) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(mp_shape_distance_bound(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("csv round trips") {
    AtomicMeasure mu({0.0, 1.5}, {0.25, 0.75});
    std::ostringstream os;
    write_measure_csv(os, mu);
    CHECK(os.str().substr(0, 4) == "t,w\n");

    SampledDensity d;
    d.grid = {0.0, 0.5, 1.0};
    d.values = {0.9, 1.0, 0.9};
    d.atom_at_zero = 1.0 - d.trapezoid_mass();
    d.validate();
    std::ostringstream ds;
    write_density_csv(ds, d);
    std::istringstream in(ds.str());
    SampledDensity back = read_density_csv(in);
    CHECK(back.grid.size() == 3);
    CHECK(back.atom_at_zero == doctest::Approx(d.atom_at_zero));
    CHECK(back.values[1] == doctest::Approx(1.0));
}
