#include "speq/simulate.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "speq/matrix_core.hpp"
#include "speq/rng.hpp"

namespace speq {

const char* column_kind_name(ColumnKind kind) {
    switch (kind) {
        case ColumnKind::GaussianLinear: return "gaussian";
        case ColumnKind::RademacherLinear: return "rademacher";
        case ColumnKind::LipschitzGaussianFeature: return "lipschitz-gaussian";
    }
    return "unknown";
}

ColumnKind parse_column_kind(const std::string& name) {
    if (name == "gaussian") return ColumnKind::GaussianLinear;
    if (name == "rademacher") return ColumnKind::RademacherLinear;
    if (name == "lipschitz-gaussian") return ColumnKind::LipschitzGaussianFeature;
    throw std::invalid_argument("unknown column distribution: " + name);
}

double soft_threshold_variance(double kappa) {
    // E[(|g| - kappa)_+^2] for standard Gaussian g.
    const double k = kappa;
    return (1.0 + k * k) * std::erfc(k / std::sqrt(2.0)) -
           k * std::sqrt(2.0 / M_PI) * std::exp(-0.5 * k * k);
}

MatrixXd sample_matrix(const RunConfig& config, int replica_index) {
    const Eigen::Index p = config.dist.p();
    if (p != config.p) throw std::invalid_argument("sample_matrix: p mismatch with distribution");
    MatrixXd X(p, config.n);
    const double st = config.dist.soft_threshold;
    const double scale =
        config.dist.kind == ColumnKind::LipschitzGaussianFeature
            ? 1.0 / std::sqrt(soft_threshold_variance(st))
            : 1.0;
    for (int j = 0; j < config.n; ++j) {
        StreamRng rng(config.seed, static_cast<std::uint64_t>(replica_index),
                      static_cast<std::uint64_t>(j));
        VectorXd w(p);
        switch (config.dist.kind) {
            case ColumnKind::GaussianLinear:
                for (Eigen::Index i = 0; i < p; ++i) w[i] = rng.next_gaussian();
                break;
            case ColumnKind::RademacherLinear:
                for (Eigen::Index i = 0; i < p; ++i) w[i] = rng.next_rademacher();
                break;
            case ColumnKind::LipschitzGaussianFeature:
                for (Eigen::Index i = 0; i < p; ++i) {
                    double g = rng.next_gaussian();
                    double soft = std::copysign(std::max(std::abs(g) - st, 0.0), g);
                    w[i] = soft * scale;
                }
                break;
        }
        X.col(j) = config.dist.sigma_sqrt * w;
        if (config.dist.mean.size() == p) X.col(j) += config.dist.mean;
    }
    return X;
}

cplx empirical_g(const MatrixXd& X, const SpectralParameter& z) {
    return ResolventView::from_psd(sample_covariance(X)).trace_resolvent_over_p(z);
}

SpectralNormReport spectral_norm_check(const RunConfig& config) {
    SpectralNormReport report;
    Eigen::SelfAdjointEigenSolver<MatrixXd> sigma_es(config.dist.sigma_sqrt *
                                                     config.dist.sigma_sqrt.transpose());
    double lam_max = sigma_es.eigenvalues().maxCoeff();
    double root = std::sqrt(config.gamma());
    report.edge = (1.0 + root) * (1.0 + root) * lam_max;
    report.norms.resize(config.replicas);
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < config.replicas; ++r) {
        MatrixXd K = sample_covariance(sample_matrix(config, r));
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(K);
        report.norms[r] = es.eigenvalues().maxCoeff();
    }
    report.max_norm = 0.0;
    for (double v : report.norms) report.max_norm = std::max(report.max_norm, v);
    report.within_bound = report.max_norm <= report.edge + report.slack;
    return report;
}

MatrixXd effective_sigma_mc(const ColumnDistribution& dist, int n_columns, std::uint64_t seed) {
    RunConfig probe;
    probe.p = static_cast<int>(dist.p());
    probe.n = n_columns;
    probe.dist = dist;
    probe.seed = seed;
    MatrixXd X = sample_matrix(probe, 0);
    if (dist.mean.size() == dist.p()) X.colwise() -= dist.mean;
    return sample_covariance(X);
}

RunConfig parse_run_config(std::istream& is) {
    RunConfig config;
    std::vector<double> eigenvalues;
    double mean_norm = 0.0;
    std::string kind = "gaussian";
    std::string line;
    while (std::getline(is, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            auto last = s.find_last_not_of(" \t\r");
            s.erase(last == std::string::npos ? 0 : last + 1);
            return s;
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key == "p") config.p = std::stoi(value);
        else if (key == "n") config.n = std::stoi(value);
        else if (key == "seed") config.seed = std::stoull(value);
        else if (key == "replicas") config.replicas = std::stoi(value);
        else if (key == "dist.kind") kind = value;
        else if (key == "dist.mean_norm") mean_norm = std::stod(value);
        else if (key == "dist.sigma.eigenvalues") {
            std::istringstream vs(value);
            std::string tok;
            while (std::getline(vs, tok, ',')) eigenvalues.push_back(std::stod(tok));
        } else {
            throw std::invalid_argument("unknown config key: " + key);
        }
    }
    if (config.p <= 0 || config.n <= 0)
        throw std::invalid_argument("config: p and n must be positive");
    config.dist.kind = parse_column_kind(kind);
    if (eigenvalues.empty()) eigenvalues.assign(config.p, 1.0);
    if (static_cast<int>(eigenvalues.size()) != config.p)
        throw std::invalid_argument("config: dist.sigma.eigenvalues length must equal p");
    VectorXd sqrt_eigs(config.p);
    for (int i = 0; i < config.p; ++i) {
        if (eigenvalues[i] < 0.0) throw std::invalid_argument("config: negative Sigma eigenvalue");
        sqrt_eigs[i] = std::sqrt(eigenvalues[i]);
    }
    config.dist.sigma_sqrt = sqrt_eigs.asDiagonal();
    config.dist.mean = VectorXd::Zero(config.p);
    if (mean_norm > 0.0) config.dist.mean = VectorXd::Constant(config.p, mean_norm / std::sqrt(config.p));
    return config;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config file: " + path);
    return parse_run_config(is);
}

namespace {
constexpr char kMagic[8] = {'S', 'P', 'E', 'Q', 'M', 'A', 'T', '1'};

void put_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace

void write_matrix_binary(std::ostream& os, const MatrixXd& X) {
    os.write(kMagic, 8);
    put_u32_le(os, static_cast<std::uint32_t>(X.rows()));
    put_u32_le(os, static_cast<std::uint32_t>(X.cols()));
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            double v = X(i, j);
            os.write(reinterpret_cast<const char*>(&v), sizeof(double));
        }
}

MatrixXd read_matrix_binary(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw std::invalid_argument("read_matrix_binary: bad magic");
    std::uint32_t p = get_u32_le(is), n = get_u32_le(is);
    MatrixXd X(p, n);
    for (std::uint32_t i = 0; i < p; ++i)
        for (std::uint32_t j = 0; j < n; ++j) {
            double v;
            is.read(reinterpret_cast<char*>(&v), sizeof(double));
            X(i, j) = v;
        }
    if (!is) throw std::invalid_argument("read_matrix_binary: truncated file");
    return X;
}

}  // namespace speq
