// speq: deterministic equivalents of sample covariance resolvents,
// free multiplicative convolution with MP laws, Monte Carlo verification
// sweeps and the random-features effective ridge.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "speq/format.hpp"
#include "speq/freeconv.hpp"
#include "speq/matrix_core.hpp"
#include "speq/parallel.hpp"
#include "speq/rfkernel.hpp"
#include "speq/verify.hpp"

using json = nlohmann::ordered_json;
using namespace speq;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitAssert = 2;

struct GlobalOptions {
    std::uint64_t seed = 1;
    std::string output = ".";
    int threads = 0;
    std::string config_path;
    bool gnuplot = false;
};

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
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
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

// The config file overrides flags: applied after CLI parsing.
void apply_config(const std::map<std::string, std::string>& kv,
                  const std::map<std::string, std::function<void(const std::string&)>>& setters) {
    for (const auto& [key, value] : kv) {
        auto it = setters.find(key);
        if (it == setters.end()) throw std::invalid_argument("unknown config key: " + key);
        it->second(value);
    }
}

VectorXd parse_sigma_spec(const std::string& spec, int p) {
    if (spec == "identity") {
        if (p <= 0) throw std::invalid_argument("--p must be positive for identity Sigma");
        return VectorXd::Ones(p);
    }
    std::vector<double> values;
    if (spec.find(',') != std::string::npos || spec.find_first_not_of("0123456789.eE+-") ==
                                                    std::string::npos) {
        std::istringstream ss(spec);
        std::string tok;
        while (std::getline(ss, tok, ',')) values.push_back(std::stod(tok));
    } else {
        std::ifstream is(spec);
        if (!is) throw std::invalid_argument("cannot open sigma file: " + spec);
        double v;
        while (is >> v) values.push_back(v);
    }
    if (values.empty()) throw std::invalid_argument("empty Sigma spectrum");
    VectorXd eigs(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) eigs[i] = values[i];
    std::sort(eigs.data(), eigs.data() + eigs.size(), std::greater<double>());
    return eigs;
}

SpectralParameter make_z(double re, double im) {
    try {
        return SpectralParameter(cplx(re, im));
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("invalid spectral parameter");
    }
}

std::filesystem::path out_path(const GlobalOptions& global, const std::string& name) {
    std::filesystem::create_directories(global.output);
    return std::filesystem::path(global.output) / name;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << content;
}

// ---------------------------------------------------------------- solve ----

int run_solve(const GlobalOptions& global, double gamma, const std::string& sigma_spec, int p,
              double z_re, double z_im) {
    SpectralParameter z = make_z(z_re, z_im);
    CovarianceModel model(parse_sigma_spec(sigma_spec, p), gamma);
    FixedPointSolution sol = solve_fixed_point(model, z);
    cplx g = g_nu(model, sol, z);
    json record;
    record["z_re"] = z.value().real();
    record["z_im"] = z.value().imag();
    record["branch"] = branch_name(z.branch());
    record["gamma"] = gamma;
    record["c_re"] = sol.c.real();
    record["c_im"] = sol.c.imag();
    record["g_nu_re"] = g.real();
    record["g_nu_im"] = g.imag();
    record["residual"] = sol.residual;
    record["iterations"] = sol.iterations;
    record["kF"] = sol.kF_theoretical;
    std::cout << record.dump() << "\n";
    (void)global;
    return kExitOk;
}

// ------------------------------------------------------------- freeconv ----

int run_freeconv(const GlobalOptions& global, double gamma, const std::string& sigma_spec, int p,
                 int grid_size, bool stieltjes_check) {
    CovarianceModel model(parse_sigma_spec(sigma_spec, p), gamma);
    FreeConvOptions opt;
    opt.grid_size = grid_size;
    FreeConvolutionResult result = free_multiplicative_mp(model, opt);

    std::ostringstream density;
    write_density_csv(density, result.density);
    write_file(out_path(global, "density.csv"), density.str());

    CdfFunction cdf = result.cdf();
    std::ostringstream cdf_csv;
    cdf_csv << "t,F\n";
    for (double t : cdf.knots()) cdf_csv << format_double(t) << ',' << format_double(cdf(t)) << '\n';
    write_file(out_path(global, "cdf.csv"), cdf_csv.str());

    if (global.gnuplot) {
        write_file(out_path(global, "density.gp"),
                   "set datafile separator ','\n"
                   "set key off\n"
                   "plot 'density.csv' using 1:2 with lines\n");
    }

    if (stieltjes_check) {
        // Held-out spectral points, both branches, away from the support.
        double hi = result.density.grid.back();
        for (int i = 0; i < 20; ++i) {
            SpectralParameter z = (i % 2 == 0)
                ? SpectralParameter::real_negative(-0.2 - 0.15 * i)
                : SpectralParameter::upper_half(hi * i / 20.0, 0.4 + 0.05 * i);
            FixedPointSolution sol = solve_fixed_point(model, z);
            cplx expected = g_nu(model, sol, z);
            cplx got = result.transform(z);
            if (std::abs(got - expected) > 2e-3 * std::max(1.0, std::abs(expected))) {
                std::cout << "stieltjes-check: FAIL at z index " << i << "\n";
                return kExitAssert;
            }
        }
        std::cout << "stieltjes-check: ok\n";
    }
    return kExitOk;
}

// ------------------------------------------------------------- simulate ----

int run_simulate(const GlobalOptions& global, RunConfig config, bool dump_matrix) {
    config.seed = config.seed ? config.seed : global.seed;
    for (int r = 0; r < config.replicas; ++r) {
        MatrixXd X = sample_matrix(config, r);
        AtomicMeasure esd = empirical_spectrum(sample_covariance(X));
        std::ostringstream csv;
        write_measure_csv(csv, esd);
        write_file(out_path(global, "spectrum_" + std::to_string(r) + ".csv"), csv.str());
        if (dump_matrix) {
            std::ofstream os(out_path(global, "matrix_" + std::to_string(r) + ".bin"),
                             std::ios::binary);
            write_matrix_binary(os, X);
        }
    }
    return kExitOk;
}

// --------------------------------------------------------------- verify ----

int run_verify(const GlobalOptions& global, const std::string& preset, int nmax, int replicas) {
    SweepConfig config;
    config.seed = global.seed;
    config.replicas = replicas;
    for (int n : {64, 128, 256, 512, 1024})
        if (n <= nmax) config.n_values.push_back(n);
    if (config.n_values.size() > 4)
        config.n_values.erase(config.n_values.begin(), config.n_values.end() - 4);
    if (config.n_values.size() < 4) {
        if (nmax < 16) throw std::invalid_argument("--nmax too small for a 4-point sweep");
        config.n_values = {nmax / 8, nmax / 4, nmax / 2, nmax};
    }

    if (preset == "rademacher-mp") config.kind = ColumnKind::RademacherLinear;
    else if (preset != "gaussian-mp") throw std::invalid_argument("unknown preset: " + preset);
    config.gamma = 0.5;

    SpectralParameter z = SpectralParameter::real_negative(-1.0);
    MeanResolventGapResult gap = mean_resolvent_gap(config, z);
    CorollaryBoundsResult cor = corollary_bounds(config, z);
    IntermediateParameterBResult b = intermediate_parameter_b(config, z);

    std::vector<ReportRow> rows = gap.rows;
    rows.insert(rows.end(), cor.rows.begin(), cor.rows.end());
    rows.insert(rows.end(), b.rows.begin(), b.rows.end());
    std::ostringstream csv;
    write_report_csv(csv, rows);
    write_file(out_path(global, "verify.csv"), csv.str());

    if (global.gnuplot) {
        write_file(out_path(global, "verify.gp"),
                   "set datafile separator ','\n"
                   "set logscale xy\n"
                   "plot '< grep mean_resolvent_gap, verify.csv' using 2:3 with linespoints\n");
    }

    bool ok = true;
    auto assert_log = [&](const std::string& name, bool pass) {
        std::cout << (pass ? "[pass] " : "[FAIL] ") << name << "\n";
        ok = ok && pass;
    };
    assert_log("mean_resolvent_gap slope in [-0.8,-0.3] (slope = " +
                   format_double(gap.slope.slope) + ")",
               gap.slope.slope >= -0.8 && gap.slope.slope <= -0.3);
    assert_log("gap trend monotone up to 2x MC noise",
               gap.gap.back() <= gap.gap.front() + 2.0 * gap.mc_error.back());
    assert_log("hierarchy fraction >= 0.9 at n_max",
               cor.hierarchy_fraction.back() >= 0.9);
    assert_log("Var[g_K] slope in [-2.6,-1.4] (slope = " +
                   format_double(cor.var_slope.slope) + ")",
               cor.var_slope.slope >= -2.6 && cor.var_slope.slope <= -1.4);
    assert_log("a in Omega for every replica", b.omega_membership_fraction == 1.0);
    assert_log("b->c slope in [-1.5,-0.6] (slope = " + format_double(b.slope.slope) + ")",
               b.slope.slope >= -1.5 && b.slope.slope <= -0.6);
    return ok ? kExitOk : kExitAssert;
}

// ----------------------------------------------------------- kolmogorov ----

int run_kolmogorov(const GlobalOptions& global, double gamma, int nmax, int replicas,
                   bool compare_rademacher) {
    SweepConfig config;
    config.seed = global.seed;
    config.replicas = replicas;
    config.gamma = gamma;
    for (int n : {128, 256, 512, 1024})
        if (n <= nmax) config.n_values.push_back(n);
    if (config.n_values.size() < 4) config.n_values = {nmax / 8, nmax / 4, nmax / 2, nmax};

    KolmogorovRateResult gauss = kolmogorov_rate(config);
    std::vector<ReportRow> rows = gauss.rows;

    bool ok = gauss.decays;
    std::cout << (gauss.decays ? "[pass] " : "[FAIL] ") << "Delta decays from n_min to n_max\n";

    if (compare_rademacher) {
        SweepConfig rad = config;
        rad.kind = ColumnKind::RademacherLinear;
        KolmogorovRateResult raw = kolmogorov_rate(rad);
        for (auto& row : raw.rows) row.name = "rademacher_" + row.name;
        rows.insert(rows.end(), raw.rows.begin(), raw.rows.end());
        double ratio = raw.delta_mean.back() / gauss.delta_mean.back();
        bool universal = ratio <= 2.0 && ratio >= 0.5;
        std::cout << (universal ? "[pass] " : "[FAIL] ")
                  << "Rademacher Delta within 2x of Gaussian (ratio = " << format_double(ratio)
                  << ")\n";
        ok = ok && universal;
    }

    std::ostringstream csv;
    write_report_csv(csv, rows);
    write_file(out_path(global, "kolmogorov.csv"), csv.str());
    if (global.gnuplot) {
        write_file(out_path(global, "kolmogorov.gp"),
                   "set datafile separator ','\n"
                   "set logscale xy\n"
                   "plot '< grep kolmogorov_delta kolmogorov.csv' using 2:3 with linespoints\n");
    }
    return ok ? kExitOk : kExitAssert;
}

// ---------------------------------------------------------------- ridge ----

MatrixXd read_csv_matrix(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                row.push_back(std::stod(tok));
            } catch (...) {
                row.clear();  // header line
                break;
            }
        }
        if (!row.empty()) rows.push_back(row);
    }
    if (rows.empty()) throw std::invalid_argument("no numeric rows in " + path);
    MatrixXd M(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size())
            throw std::invalid_argument("ragged rows in " + path);
        for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
    }
    return M;
}

int run_ridge(const GlobalOptions& global, const std::string& problem_path,
              const std::string& labels_path, double lambda, int features, int replicas,
              const std::string& feature_kind) {
    MatrixXd problem = read_csv_matrix(problem_path);
    MatrixXd labels = read_csv_matrix(labels_path);
    VectorXd Y = labels.col(0);
    const int N = static_cast<int>(Y.size());

    json out;
    out["lambda"] = lambda;

    if (problem.cols() == 1) {
        // Eigenvalues only: report the effective ridge, no debias experiment.
        VectorXd d = problem.col(0);
        std::sort(d.data(), d.data() + d.size(), std::greater<double>());
        EffectiveRidge er = effective_ridge(d, static_cast<int>(d.size()), features, lambda);
        out["lambda_tilde"] = er.lambda_tilde;
        out["gap_tilde"] = nullptr;
        out["gap_naive"] = nullptr;
        out["per_x"] = json::array();
    } else {
        if (problem.rows() != problem.cols())
            throw std::invalid_argument("kernel matrix must be square");
        if (problem.rows() <= N)
            throw std::invalid_argument("kernel matrix must include test rows beyond the labels");
        FeatureKind kind = feature_kind == "lipschitz-gaussian" ? FeatureKind::LipschitzGaussian
                                                                : FeatureKind::Gaussian;
        DebiasReport report =
            debias_experiment(problem, N, Y, lambda, features, kind, replicas, global.seed);
        out["lambda_tilde"] = report.lambda_tilde;
        double worst_tilde = 0.0, worst_naive = 0.0;
        json per_x = json::array();
        for (std::size_t t = 0; t < report.mean_rf.size(); ++t) {
            worst_tilde = std::max(worst_tilde, report.gap_tilde[t]);
            worst_naive = std::max(worst_naive, report.gap_naive[t]);
            per_x.push_back({{"mean_rf", report.mean_rf[t]},
                             {"krr_tilde", report.krr_tilde[t]},
                             {"krr_naive", report.krr_naive[t]},
                             {"gap_tilde", report.gap_tilde[t]},
                             {"gap_naive", report.gap_naive[t]},
                             {"mc_stderr", report.mc_stderr[t]}});
        }
        out["gap_tilde"] = worst_tilde;
        out["gap_naive"] = worst_naive;
        out["per_x"] = per_x;
    }
    std::cout << out.dump() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic equivalents of sample covariance resolvents"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may appear after the subcommand

    GlobalOptions global;
    app.add_option("--seed", global.seed, "global RNG seed");
    app.add_option("--output", global.output, "output directory");
    app.add_option("--threads", global.threads, "worker pool size (env SPEQ_THREADS as fallback)");
    app.add_option("--config", global.config_path, "key=value config file, overrides flags");
    app.add_flag("--gnuplot", global.gnuplot, "emit gnuplot scripts next to CSV outputs");

    // solve
    auto* solve = app.add_subcommand("solve", "one fixed-point solve, JSON to stdout");
    double gamma = 1.0, z_re = -1.0, z_im = 0.0;
    std::string sigma_spec = "identity";
    int p = 16;
    solve->add_option("--gamma", gamma);
    solve->add_option("--sigma", sigma_spec, "identity | comma list | file of eigenvalues");
    solve->add_option("--p", p, "eigenvalue count when --sigma identity");
    solve->add_option("--z", z_re, "real part of z");
    solve->add_option("--z-im", z_im, "imaginary part of z");

    // freeconv
    auto* freeconv = app.add_subcommand("freeconv", "density/CDF recovery CSVs");
    int grid_size = 512;
    bool stieltjes_check = false;
    freeconv->add_option("--gamma", gamma);
    freeconv->add_option("--sigma", sigma_spec);
    freeconv->add_option("--p", p);
    freeconv->add_option("--grid-size", grid_size);
    freeconv->add_flag("--stieltjes-check", stieltjes_check,
                       "verify the recovered transform against g_nu");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "spectrum dump for a run config");
    std::string run_config_path;
    bool dump_matrix = false;
    int sim_p = 64, sim_n = 128, sim_replicas = 1;
    std::string sim_kind = "gaussian";
    simulate->add_option("--run-config", run_config_path, "RunConfig key=value file");
    simulate->add_option("--p", sim_p);
    simulate->add_option("--n", sim_n);
    simulate->add_option("--replicas", sim_replicas);
    simulate->add_option("--dist", sim_kind, "gaussian | rademacher | lipschitz-gaussian");
    simulate->add_flag("--dump-matrix", dump_matrix, "write SPEQMAT1 binaries");

    // verify
    auto* verify = app.add_subcommand("verify", "harness sweeps, CSV + assertion exit code");
    std::string preset = "gaussian-mp";
    int nmax = 512, replicas = 32;
    verify->add_option("--preset", preset, "gaussian-mp | rademacher-mp");
    verify->add_option("--nmax", nmax);
    verify->add_option("--replicas", replicas);

    // kolmogorov
    auto* kolmogorov = app.add_subcommand("kolmogorov", "Kolmogorov rate study");
    double kgamma = 0.5;
    int knmax = 1024, kreplicas = 8;
    bool compare_rademacher = false;
    kolmogorov->add_option("--gamma", kgamma);
    kolmogorov->add_option("--nmax", knmax);
    kolmogorov->add_option("--replicas", kreplicas);
    kolmogorov->add_flag("--compare-rademacher", compare_rademacher);

    // ridge
    auto* ridge = app.add_subcommand("ridge", "effective-ridge / debias experiment");
    std::string problem_path, labels_path, feature_kind = "gaussian";
    double lambda = 1.0;
    int features = 100, ridge_replicas = 400;
    ridge->add_option("--problem", problem_path, "kernel eigenvalues or full matrix CSV")
        ->required();
    ridge->add_option("--labels", labels_path, "labels CSV")->required();
    ridge->add_option("--lambda", lambda);
    ridge->add_option("--features", features, "feature count P");
    ridge->add_option("--replicas", ridge_replicas);
    ridge->add_option("--feature-kind", feature_kind, "gaussian | lipschitz-gaussian");

    try {
        app.parse(argc, argv);

        if (!global.config_path.empty()) {
            auto kv = read_config_file(global.config_path);
            std::map<std::string, std::function<void(const std::string&)>> setters = {
                {"seed", [&](const std::string& v) { global.seed = std::stoull(v); }},
                {"output", [&](const std::string& v) { global.output = v; }},
                {"threads", [&](const std::string& v) { global.threads = std::stoi(v); }},
                {"gamma", [&](const std::string& v) { gamma = kgamma = std::stod(v); }},
                {"sigma", [&](const std::string& v) { sigma_spec = v; }},
                {"p", [&](const std::string& v) { p = sim_p = std::stoi(v); }},
                {"z", [&](const std::string& v) { z_re = std::stod(v); }},
                {"z-im", [&](const std::string& v) { z_im = std::stod(v); }},
                {"grid-size", [&](const std::string& v) { grid_size = std::stoi(v); }},
                {"nmax", [&](const std::string& v) { nmax = knmax = std::stoi(v); }},
                {"replicas",
                 [&](const std::string& v) {
                     replicas = kreplicas = sim_replicas = ridge_replicas = std::stoi(v);
                 }},
                {"lambda", [&](const std::string& v) { lambda = std::stod(v); }},
                {"features", [&](const std::string& v) { features = std::stoi(v); }},
            };
            apply_config(kv, setters);
        }
        set_threads(global.threads);

        if (solve->parsed()) return run_solve(global, gamma, sigma_spec, p, z_re, z_im);
        if (freeconv->parsed())
            return run_freeconv(global, gamma, sigma_spec, p, grid_size, stieltjes_check);
        if (simulate->parsed()) {
            RunConfig rc;
            if (!run_config_path.empty()) {
                rc = load_run_config(run_config_path);
            } else {
                rc.p = sim_p;
                rc.n = sim_n;
                rc.replicas = sim_replicas;
                rc.seed = global.seed;
                rc.dist.kind = parse_column_kind(sim_kind);
                rc.dist.sigma_sqrt = MatrixXd::Identity(sim_p, sim_p);
                rc.dist.mean = VectorXd::Zero(sim_p);
            }
            return run_simulate(global, rc, dump_matrix);
        }
        if (verify->parsed()) return run_verify(global, preset, nmax, replicas);
        if (kolmogorov->parsed())
            return run_kolmogorov(global, kgamma, knmax, kreplicas, compare_rademacher);
        if (ridge->parsed())
            return run_ridge(global, problem_path, labels_path, lambda, features, ridge_replicas,
                             feature_kind);
        std::cerr << "error: no subcommand\n";
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAssert;
    }
}
