#include "taylorpn/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "taylorpn/errors.hpp"
#include "taylorpn/gp.hpp"
#include "taylorpn/io.hpp"
#include "taylorpn/odesolve.hpp"

namespace taylorpn {

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
    const auto it = overrides.find(key);
    if (it == overrides.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ValidationError("override '" + key + "': not a number: " + it->second);
    }
}

int ExperimentConfig::get_int(const std::string& key, int fallback) const {
    const auto it = overrides.find(key);
    if (it == overrides.end()) return fallback;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw ValidationError("override '" + key + "': not an integer: " + it->second);
    }
}

// ------------------------------------------------------------------ models

StateSpaceModel tracking_model(double q, double gamma_std, double dt) {
    StateSpaceModel model;
    model.dim_state = 4;
    model.dim_obs = 2;

    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4, 4);
    A(0, 2) = dt;
    A(1, 3) = dt;
    model.linear_transition = A;

    Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(4, 4);
    const double dt3 = dt * dt * dt / 3.0, dt2 = dt * dt / 2.0;
    noise(0, 0) = q * dt3;
    noise(1, 1) = q * dt3;
    noise(0, 2) = noise(2, 0) = q * dt2;
    noise(1, 3) = noise(3, 1) = q * dt2;
    noise(2, 2) = q * dt;
    noise(3, 3) = q * dt;
    model.process_noise = [noise](int) { return noise; };

    const Eigen::MatrixXd gamma = gamma_std * gamma_std * Eigen::MatrixXd::Identity(2, 2);
    model.obs_noise = [gamma](int) { return gamma; };

    // bearings from sensors at (0, 5) and (0, -5): atan of the slope ratio
    model.observation = [](int, const std::vector<Dual2>& x) {
        std::vector<Dual2> y;
        y.reserve(2);
        y.push_back(atan((x[1] - 5.0) / x[0]));
        y.push_back(atan((x[1] + 5.0) / x[0]));
        return y;
    };
    return model;
}

Eigen::VectorXd tracking_initial_state() {
    Eigen::VectorXd x0(4);
    x0 << 0.0, 0.0, 0.1, 0.1;
    return x0;
}

namespace {

ODEProblem logistic_problem(double rate) {
    ODEProblem problem;
    problem.dim = 1;
    problem.t_end = 3.0;
    problem.y0 = Eigen::VectorXd::Constant(1, 0.1);
    problem.rhs = [rate](double, const std::vector<Dual2>& y) {
        return std::vector<Dual2>{rate * y[0] * (1.0 - y[0])};
    };
    return problem;
}

Eigen::VectorXd logistic_exact(double t, double rate, double y0) {
    const double e = std::exp(rate * t);
    return Eigen::VectorXd::Constant(1, y0 * e / (1.0 + y0 * (e - 1.0)));
}

ODEProblem fitzhugh_nagumo_problem() {
    ODEProblem problem;
    problem.dim = 2;
    problem.t_end = 20.0;
    problem.y0 = Eigen::VectorXd(2);
    problem.y0 << -1.0, 1.0;
    const double a = 0.2, b = 0.2, c = 3.0;
    problem.rhs = [a, b, c](double, const std::vector<Dual2>& y) {
        std::vector<Dual2> out;
        out.reserve(2);
        out.push_back(c * (y[0] - pow(y[0], 3) / 3.0 + y[1]));
        out.push_back(-1.0 / c * (y[0] - a + b * y[1]));
        return out;
    };
    return problem;
}

// ----------------------------------------------------------------- manifest

class ManifestWriter {
  public:
    explicit ManifestWriter(const ExperimentConfig& config)
        : config_(config), start_(std::chrono::steady_clock::now()) {}

    void finish(const std::vector<std::filesystem::path>& files) {
        nlohmann::json j;
        j["experiment"] = config_.experiment;
        j["seed"] = config_.seed;
        j["out_dir"] = config_.out_dir.string();
        j["overrides"] = config_.overrides;
        j["library_version"] = kLibraryVersion;
        const auto elapsed = std::chrono::steady_clock::now() - start_;
        j["runtime_seconds"] = std::chrono::duration<double>(elapsed).count();
        nlohmann::json outputs = nlohmann::json::array();
        for (const auto& f : files)
            outputs.push_back({{"file", f.filename().string()}, {"fnv1a64", fnv1a_hex(f)}});
        j["outputs"] = std::move(outputs);
        std::ofstream out(config_.out_dir / "manifest.json", std::ios::binary);
        out << j.dump(2) << '\n';
    }

  private:
    const ExperimentConfig& config_;
    std::chrono::steady_clock::time_point start_;
};

void ensure_out_dir(const ExperimentConfig& config) {
    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) throw ValidationError("cannot create output directory " + config.out_dir.string());
}

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<EulerState>& trajectory,
                          const std::string& mode) {
    const int d = static_cast<int>(trajectory.front().y.size());
    std::vector<std::string> header{"t"};
    for (int i = 0; i < d; ++i) header.push_back("y" + std::to_string(i));
    for (int i = 0; i < d; ++i) header.push_back("eps" + std::to_string(i));
    for (int i = 0; i < d; ++i) header.push_back("sigma2" + std::to_string(i));
    header.push_back("mode");
    CsvWriter csv(std::move(header));
    for (const auto& s : trajectory) {
        std::vector<double> row{s.t};
        for (int i = 0; i < d; ++i) row.push_back(s.y[i]);
        for (int i = 0; i < d; ++i) row.push_back(std::sqrt(s.eps2[i]));
        for (int i = 0; i < d; ++i) row.push_back(s.sigma2[i]);
        csv.add_row(row, {mode});
    }
    csv.write(path);
}

void write_filter_trace_csv(const std::filesystem::path& path, const std::vector<Eigen::VectorXd>& truth,
                            const FilterTrace& trace, const std::string& kind, double dt) {
    const int d = static_cast<int>(truth.front().size());
    std::vector<std::string> header{"t"};
    for (int i = 0; i < d; ++i) header.push_back("true" + std::to_string(i));
    for (int i = 0; i < d; ++i) header.push_back("mean" + std::to_string(i));
    for (int i = 0; i < d; ++i) header.push_back("cov" + std::to_string(i));
    header.push_back("filter_kind");
    header.push_back("converged");
    CsvWriter csv(std::move(header));
    for (std::size_t j = 0; j < truth.size(); ++j) {
        std::vector<double> row{static_cast<double>(j + 1) * dt};
        for (int i = 0; i < d; ++i) row.push_back(truth[j][i]);
        for (int i = 0; i < d; ++i) row.push_back(trace.posterior[j].mean[i]);
        for (int i = 0; i < d; ++i) row.push_back(trace.posterior[j].cov(i, i));
        const bool converged = trace.diagnostics[j].converged;
        csv.add_row(row, {kind, converged ? "1" : "0"});
    }
    csv.write(path);
}

}  // namespace

// ------------------------------------------------------------- experiments

std::vector<std::filesystem::path> run_posterior_demo(const ExperimentConfig& config) {
    ensure_out_dir(config);
    const double sigma2 = config.get_double("sigma2", 1.0);
    const double lambda = config.get_double("lambda", 1.0);
    const int grid_points = config.get_int("grid", 400);
    const KernelSpec spec = KernelSpec::exponential(sigma2, lambda, 1);
    const Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 0.5);
    const PriorMean prior;

    // derivative data of sin(3x) at the expansion point
    const double s = std::sin(3.0 * a[0]), c = std::cos(3.0 * a[0]);
    const std::vector<double> derivs{s, 3.0 * c, -9.0 * s, -27.0 * c};

    std::vector<std::filesystem::path> files;
    for (int n = 0; n <= 3; ++n) {
        std::vector<double> values(derivs.begin(), derivs.begin() + n + 1);
        const auto posterior = condition(spec, prior, DerivativeData(a, n, std::move(values)));
        CsvWriter csv({"x", "mean", "lower95", "upper95"});
        for (int k = 0; k < grid_points; ++k) {
            const double x = -1.5 + 4.0 * k / (grid_points - 1);
            const Eigen::VectorXd xv = Eigen::VectorXd::Constant(1, x);
            const double mean = posterior.mean(xv);
            const double band = 1.96 * std::sqrt(std::max(0.0, posterior.var(xv)));
            csv.add_row({x, mean, mean - band, mean + band});
        }
        const auto path = config.out_dir / ("posterior_demo_n" + std::to_string(n) + ".csv");
        csv.write(path);
        files.push_back(path);
    }
    return files;
}

namespace {

struct TrackingRunResult {
    std::vector<double> rmse;  // per state component
    double position_rmse = 0.0;
    double max_cov_trace = 0.0;
    int fallback_steps = 0;
};

TrackingRunResult tracking_single(const StateSpaceModel& model, FilterKind kind,
                                  const std::vector<Eigen::VectorXd>& truth,
                                  const std::vector<Eigen::VectorXd>& obs, const GaussianBelief& init,
                                  FilterTrace* trace_out) {
    FilterTrace trace = run_filter(model, kind, obs, init);
    TrackingRunResult result;
    const int d = model.dim_state;
    result.rmse.assign(static_cast<std::size_t>(d), 0.0);
    double pos_sq = 0.0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
        const Eigen::VectorXd err = trace.posterior[j].mean - truth[j];
        for (int i = 0; i < d; ++i) result.rmse[static_cast<std::size_t>(i)] += err[i] * err[i];
        pos_sq += err.head(2).squaredNorm();
        result.max_cov_trace = std::max(result.max_cov_trace, trace.posterior[j].cov.trace());
        if (trace.diagnostics[j].optimizer_fallback) ++result.fallback_steps;
    }
    const double inv_n = 1.0 / static_cast<double>(truth.size());
    for (double& v : result.rmse) v = std::sqrt(v * inv_n);
    result.position_rmse = std::sqrt(pos_sq * inv_n);
    if (trace_out) *trace_out = std::move(trace);
    return result;
}

}  // namespace

std::vector<std::filesystem::path> run_tracking(const ExperimentConfig& config) {
    ensure_out_dir(config);
    const double q = config.get_double("q", 0.1);
    const double gamma_std = config.get_double("gamma_std", 0.05);
    const double dt = config.get_double("dt", 1.0);
    const int steps = config.get_int("steps", 50);
    const int seeds = config.get_int("seeds", 1);
    const double lambda = config.get_double("lambda", 1.0);
    const double init_cov = config.get_double("init_cov", 0.1);

    const StateSpaceModel model = tracking_model(q, gamma_std, dt);
    const GaussianBelief init{tracking_initial_state(),
                              init_cov * Eigen::MatrixXd::Identity(4, 4)};
    TaylorEkfOptions options;
    options.lambda = lambda;

    const std::vector<std::pair<FilterKind, std::string>> kinds{
        {FilterKind::Ekf, "ekf"}, {FilterKind::Ukf, "ukf"}, {FilterKind::TaylorEkf, "taylor-ekf"}};

    std::vector<std::filesystem::path> files;
    if (seeds <= 1) {
        const auto [truth, obs] = simulate(model, tracking_initial_state(), steps, config.seed);
        CsvWriter summary({"rmse0", "rmse1", "rmse2", "rmse3", "position_rmse", "max_cov_trace",
                           "filter_kind"});
        for (const auto& [kind, name] : kinds) {
            FilterTrace trace;
            const auto result = tracking_single(model, kind, truth, obs, init, &trace);
            const auto path = config.out_dir / ("tracking_" + name + ".csv");
            write_filter_trace_csv(path, truth, trace, name, dt);
            files.push_back(path);
            summary.add_row({result.rmse[0], result.rmse[1], result.rmse[2], result.rmse[3],
                             result.position_rmse, result.max_cov_trace},
                            {name});
        }
        const auto path = config.out_dir / "tracking_rmse.csv";
        summary.write(path);
        files.push_back(path);
        return files;
    }

    CsvWriter aggregate({"seed", "ekf_position_rmse", "ukf_position_rmse", "taylor_ekf_position_rmse",
                         "taylor_ekf_max_cov_trace", "taylor_ekf_fallback_steps"});
    std::vector<double> med_ekf, med_ukf, med_tekf;
    for (int s = 0; s < seeds; ++s) {
        const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(s);
        const auto [truth, obs] = simulate(model, tracking_initial_state(), steps, seed);
        const auto ekf = tracking_single(model, FilterKind::Ekf, truth, obs, init, nullptr);
        const auto ukf = tracking_single(model, FilterKind::Ukf, truth, obs, init, nullptr);
        FilterTrace trace;
        auto tekf_result = [&]() {
            return tracking_single(model, FilterKind::TaylorEkf, truth, obs, init, &trace);
        }();
        aggregate.add_row({static_cast<double>(seed), ekf.position_rmse, ukf.position_rmse,
                           tekf_result.position_rmse, tekf_result.max_cov_trace,
                           static_cast<double>(tekf_result.fallback_steps)});
        med_ekf.push_back(ekf.position_rmse);
        med_ukf.push_back(ukf.position_rmse);
        med_tekf.push_back(tekf_result.position_rmse);
    }
    const auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    const auto agg_path = config.out_dir / "tracking_aggregate.csv";
    aggregate.write(agg_path);
    files.push_back(agg_path);

    CsvWriter medians({"ekf_median_position_rmse", "ukf_median_position_rmse",
                       "taylor_ekf_median_position_rmse"});
    medians.add_row({median(med_ekf), median(med_ukf), median(med_tekf)});
    const auto med_path = config.out_dir / "tracking_medians.csv";
    medians.write(med_path);
    files.push_back(med_path);
    return files;
}

std::vector<std::filesystem::path> run_ode(const ExperimentConfig& config) {
    ensure_out_dir(config);
    const bool logistic = config.experiment == "logistic";
    const double rate = config.get_double("r", 3.0);
    ODEProblem problem = logistic ? logistic_problem(rate) : fitzhugh_nagumo_problem();
    const int default_steps = logistic ? 10 : 1000;

    SolverConfig solver;
    solver.steps = config.get_int("N", default_steps);
    solver.kernel = KernelSpec::exponential(config.get_double("sigma2", 1.0),
                                            config.get_double("lambda", 1.0), 1);
    solver.sigma_min = config.get_double("sigma_min", 1e-6);

    const std::string stem = logistic ? "logistic" : "fitzhugh_nagumo";
    std::vector<std::filesystem::path> files;

    solver.mode = SolveMode::Classical;
    const auto classical = solve(problem, solver);
    const auto classical_path = config.out_dir / (stem + "_classical.csv");
    write_trajectory_csv(classical_path, classical, "classical");
    files.push_back(classical_path);

    solver.mode = SolveMode::Probabilistic;
    const auto probabilistic = solve(problem, solver);
    const auto prob_path = config.out_dir / (stem + "_probabilistic.csv");
    write_trajectory_csv(prob_path, probabilistic, "probabilistic");
    files.push_back(prob_path);

    if (logistic) {
        CsvWriter csv({"t", "y_exact"});
        for (const auto& s : probabilistic) csv.add_row({s.t, logistic_exact(s.t, rate, 0.1)[0]});
        const auto ref_path = config.out_dir / (stem + "_reference.csv");
        csv.write(ref_path);
        files.push_back(ref_path);
    }
    return files;
}

std::vector<std::filesystem::path> run_convergence(const ExperimentConfig& config) {
    ensure_out_dir(config);
    const double rate = config.get_double("r", 3.0);
    std::vector<int> step_counts{20, 40, 80, 160, 320};
    if (const auto it = config.overrides.find("N_list"); it != config.overrides.end()) {
        step_counts.clear();
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ':')) step_counts.push_back(std::stoi(item));
    }
    if (step_counts.size() < 2)
        throw ValidationError("convergence: need at least two step counts for ratios");

    SolverConfig base;
    base.kernel = KernelSpec::exponential(config.get_double("sigma2", 1.0),
                                          config.get_double("lambda", 1.0), 1);
    base.sigma_min = config.get_double("sigma_min", 1e-6);
    const ODEProblem problem = logistic_problem(rate);
    const auto study = convergence_study(
        problem, [rate](double t) { return logistic_exact(t, rate, 0.1); }, step_counts, base);

    CsvWriter csv({"N", "h", "max_mean_error", "max_eps", "error_order", "eps_order"});
    for (std::size_t i = 0; i < study.rows.size(); ++i) {
        const auto& row = study.rows[i];
        const double eo = i == 0 ? std::nan("") : study.error_orders[i - 1];
        const double xo = i == 0 ? std::nan("") : study.eps_orders[i - 1];
        csv.add_row({static_cast<double>(row.steps), row.h, row.max_mean_error, row.max_eps, eo, xo});
    }
    const auto path = config.out_dir / "convergence.csv";
    csv.write(path);

    CsvWriter orders({"mean_error_order", "eps_order"});
    orders.add_row({study.error_order, study.eps_order});
    const auto orders_path = config.out_dir / "convergence_orders.csv";
    orders.write(orders_path);
    return {path, orders_path};
}

std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& config) {
    ManifestWriter manifest(config);
    std::vector<std::filesystem::path> files;
    if (config.experiment == "posterior-demo") {
        files = run_posterior_demo(config);
    } else if (config.experiment == "tracking") {
        files = run_tracking(config);
    } else if (config.experiment == "logistic" || config.experiment == "fitzhugh-nagumo") {
        files = run_ode(config);
    } else if (config.experiment == "convergence") {
        files = run_convergence(config);
    } else {
        throw ValidationError("unknown experiment '" + config.experiment + "'");
    }
    manifest.finish(files);
    return files;
}

}  // namespace taylorpn
