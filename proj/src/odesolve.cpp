#include "taylorpn/odesolve.hpp"

#include <cmath>
#include <stdexcept>

#include "taylorpn/errors.hpp"
#include "taylorpn/estimate.hpp"

namespace taylorpn {

Eigen::VectorXd ODEProblem::eval(double t, const Eigen::VectorXd& y) const {
    return eval_vector([&](const std::vector<Dual2>& v) { return rhs(t, v); }, y);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> ODEProblem::eval_with_slopes(double t,
                                                                         const Eigen::VectorXd& y) const {
    const auto out = rhs(t, seed_variables(y));
    Eigen::VectorXd f(dim), slopes(dim);
    for (int i = 0; i < dim; ++i) {
        f[i] = out[static_cast<std::size_t>(i)].val;
        slopes[i] = out[static_cast<std::size_t>(i)].grad[i];  // df_i / dy_i only
    }
    return {f, slopes};
}

Eigen::VectorXd euler_step(const ODEProblem& problem, double t, const Eigen::VectorXd& y, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("euler_step: h must be > 0");
    const Eigen::VectorXd f = problem.eval(t, y);
    if (!f.allFinite()) throw NonFinite("euler_step: right-hand side not finite");
    return y + h * f;
}

EulerState prob_euler_step(const ODEProblem& problem, const EulerState& state, double h,
                           const SolverConfig& config) {
    if (!(h > 0.0)) throw std::invalid_argument("prob_euler_step: h must be > 0");
    const KernelSpec& kernel = config.kernel;
    if (kernel.dim() != 1) throw std::invalid_argument("prob_euler_step: univariate kernel required");
    const double c0 = kernel.coeff_total(0);
    const double c1 = kernel.coeff_total(1);
    if (!(c0 > 0.0) || !(c1 > 0.0))
        throw std::invalid_argument("prob_euler_step: kernel needs c_0, c_1 > 0");
    const double lambda = kernel.lambda()[0];
    const double r_h = series_tail(kernel, h, 1);

    const auto [f, slopes] = problem.eval_with_slopes(state.t, state.y);
    if (!f.allFinite() || !slopes.allFinite())
        throw NonFinite("prob_euler_step: right-hand side not finite");

    const int d = problem.dim;
    EulerState next;
    next.t = state.t + h;
    next.y.resize(d);
    next.eps2.resize(d);
    next.sigma2.resize(d);
    next.a.resize(d);
    next.b.resize(d);
    for (int i = 0; i < d; ++i) {
        const double eps2 = state.eps2[i];
        const double slope2 = slopes[i] * slopes[i];
        const double s2 = sigma_ml_noisy_n1(c0, c1, lambda, state.y[i], f[i], eps2, slope2 * eps2,
                                            config.sigma_min);
        // 1 - a and 1 - b in their cancellation-free ratio forms
        const double one_minus_a = eps2 / (s2 * c0 + eps2);
        const double one_minus_b = slope2 * eps2 / (s2 * c1 * lambda + slope2 * eps2);
        const double a = 1.0 - one_minus_a;
        const double b = 1.0 - one_minus_b;
        next.y[i] = a * state.y[i] + b * h * f[i];
        next.eps2[i] = s2 * (c0 * one_minus_a + c1 * lambda * one_minus_b * h * h + r_h);
        next.sigma2[i] = s2;
        next.a[i] = a;
        next.b[i] = b;
    }
    if (!next.y.allFinite()) throw NonFinite("prob_euler_step: state left the finite range");
    return next;
}

std::vector<EulerState> solve(const ODEProblem& problem, const SolverConfig& config) {
    if (config.steps < 1) throw std::invalid_argument("solve: step count must be >= 1");
    if (!(config.sigma_min > 0.0)) throw std::invalid_argument("solve: sigma_min must be > 0");
    if (!(problem.t_end > 0.0)) throw std::invalid_argument("solve: t_end must be > 0");
    const int N = config.steps;
    const double h = problem.t_end / N;

    std::vector<EulerState> trajectory;
    trajectory.reserve(static_cast<std::size_t>(N) + 1);
    EulerState state;
    state.t = 0.0;
    state.y = problem.y0;
    state.eps2 = Eigen::VectorXd::Zero(problem.dim);
    state.sigma2 = Eigen::VectorXd::Zero(problem.dim);
    state.a = Eigen::VectorXd::Ones(problem.dim);
    state.b = Eigen::VectorXd::Ones(problem.dim);
    trajectory.push_back(state);

    for (int n = 0; n < N; ++n) {
        try {
            if (config.mode == SolveMode::Classical) {
                EulerState next = state;
                next.y = euler_step(problem, state.t, state.y, h);
                next.t = state.t + h;
                state = std::move(next);
            } else {
                state = prob_euler_step(problem, state, h, config);
            }
            state.t = static_cast<double>(n + 1) * h;  // keep the grid exactly equispaced
            trajectory.push_back(state);
        } catch (const std::exception& e) {
            throw std::runtime_error("solve: step " + std::to_string(n) + ": " + e.what());
        }
    }
    return trajectory;
}

ConvergenceStudy convergence_study(const ODEProblem& problem,
                                   const std::function<Eigen::VectorXd(double)>& reference,
                                   const std::vector<int>& step_counts, const SolverConfig& base) {
    if (step_counts.size() < 2)
        throw ValidationError("convergence_study: need at least two step counts for ratios");
    ConvergenceStudy study;
    for (int N : step_counts) {
        SolverConfig config = base;
        config.steps = N;
        const auto trajectory = solve(problem, config);
        ConvergenceRow row;
        row.steps = N;
        row.h = problem.t_end / N;
        for (const EulerState& s : trajectory) {
            row.max_mean_error = std::max(row.max_mean_error, (s.y - reference(s.t)).lpNorm<Eigen::Infinity>());
            row.max_eps = std::max(row.max_eps, std::sqrt(s.eps2.maxCoeff()));
        }
        study.rows.push_back(row);
    }
    for (std::size_t i = 1; i < study.rows.size(); ++i) {
        const double ratio_n = std::log2(static_cast<double>(study.rows[i].steps) /
                                         static_cast<double>(study.rows[i - 1].steps));
        const auto order = [&](double coarse, double fine) {
            if (fine <= 0.0 || coarse <= 0.0) return 0.0;
            return std::log2(coarse / fine) / ratio_n;
        };
        study.error_orders.push_back(order(study.rows[i - 1].max_mean_error, study.rows[i].max_mean_error));
        study.eps_orders.push_back(order(study.rows[i - 1].max_eps, study.rows[i].max_eps));
    }
    const auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    study.error_order = mean_of(study.error_orders);
    study.eps_order = mean_of(study.eps_orders);
    return study;
}

}  // namespace taylorpn
