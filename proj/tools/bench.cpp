// Benchmark: OpenMP kernels against the serial reference implementations.

#include <chrono>
#include <cstdio>

#include "speq/freeconv.hpp"
#include "speq/matrix_core.hpp"
#include "speq/parallel.hpp"
#include "speq/serial_ref.hpp"
#include "speq/verify.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace speq;

namespace {

double seconds(std::chrono::steady_clock::time_point a, std::chrono::steady_clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

template <typename F>
double time_it(F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    return seconds(t0, std::chrono::steady_clock::now());
}

}  // namespace

int main() {
    set_threads();
    int threads = resolve_threads();
    std::printf("threads: %d\n\n", threads);

    {
        RunConfig rc;
        rc.p = 256;
        rc.n = 512;
        rc.seed = 42;
        rc.replicas = 1;
        rc.dist.kind = ColumnKind::GaussianLinear;
        rc.dist.sigma_sqrt = MatrixXd::Identity(rc.p, rc.p);
        rc.dist.mean = VectorXd::Zero(rc.p);
        MatrixXd X = sample_matrix(rc, 0);

        double t_fast = time_it([&] { (void)sample_covariance(X); });
        double t_ref = time_it([&] { (void)serial::sample_covariance(X); });
        MatrixXd K = sample_covariance(X);
        double diff = (K - serial::sample_covariance(X)).norm();
        std::printf("sample_covariance   p=256 n=512      %8.4fs   serial  %8.4fs   |diff| %.2e\n",
                    t_fast, t_ref, diff);

        SpectralParameter z = SpectralParameter::real_negative(-1.0);
        double t_eig = time_it([&] { (void)resolvent(K, z); });
        double t_lu = time_it([&] { (void)serial::resolvent(K, z); });
        double rdiff = (resolvent(K, z) - serial::resolvent(K, z)).norm();
        std::printf("resolvent           p=256             %8.4fs   serial  %8.4fs   |diff| %.2e\n",
                    t_eig, t_lu, rdiff);
    }

    {
        SweepConfig config;
        config.n_values = {32, 64, 96, 128};
        config.gamma = 0.5;
        config.replicas = 16;
        config.seed = 42;
        SpectralParameter z = SpectralParameter::real_negative(-1.0);
        double t_omp = time_it([&] { (void)mean_resolvent_gap(config, z); });

        RunConfig rc = config.run_config(128);
        double t_ser = time_it([&] { (void)serial::mean_resolvent(rc, z); });
        std::printf("resolvent sweep     4n x 16 replicas  %8.4fs   serial(n=128 only) %8.4fs\n",
                    t_omp, t_ser);
    }

    {
        CovarianceModel model = CovarianceModel::identity(1, 0.5);
        FreeConvOptions opt;
        opt.grid_size = 1024;
        double t_par = time_it([&] { (void)free_multiplicative_mp(model, opt); });
#ifdef _OPENMP
        omp_set_num_threads(1);
#endif
        double t_one = time_it([&] { (void)free_multiplicative_mp(model, opt); });
#ifdef _OPENMP
        omp_set_num_threads(threads);
#endif
        std::printf("freeconv grid 1024  %d threads %8.4fs   1 thread %8.4fs\n", threads, t_par,
                    t_one);
    }
    return 0;
}
