#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "taylorpn/autodiff.hpp"
#include "taylorpn/kernels.hpp"

namespace taylorpn {

// y'(t) = f(t, y(t)) on [0, T] with y(0) = y0. The right-hand side is
// written over Dual2 scalars so the solver can take the per-coordinate
// slopes df_i/dy_i it linearises with.
struct ODEProblem {
    int dim = 0;
    std::function<std::vector<Dual2>(double t, const std::vector<Dual2>& y)> rhs;
    double t_end = 0.0;
    Eigen::VectorXd y0;

    Eigen::VectorXd eval(double t, const Eigen::VectorXd& y) const;
    // (f(t, y), diag of df/dy)
    std::pair<Eigen::VectorXd, Eigen::VectorXd> eval_with_slopes(double t, const Eigen::VectorXd& y) const;
};

struct EulerState {
    double t = 0.0;
    Eigen::VectorXd y;
    Eigen::VectorXd eps2;    // posterior variance per coordinate
    Eigen::VectorXd sigma2;  // per-step scale MLE used to produce this state
    Eigen::VectorXd a;       // shrinkage on the previous value, in (0, 1]
    Eigen::VectorXd b;       // shrinkage on the slope term, in (0, 1]
};

enum class SolveMode { Classical, Probabilistic };

struct SolverConfig {
    int steps = 0;
    KernelSpec kernel = KernelSpec::exponential(1.0, 1.0, 1);  // univariate, applied per coordinate
    double sigma_min = 1e-6;
    SolveMode mode = SolveMode::Probabilistic;
};

// y + h f(t, y). Throws NonFinite when the right-hand side leaves the
// finite range.
Eigen::VectorXd euler_step(const ODEProblem& problem, double t, const Eigen::VectorXd& y, double h);

// One probabilistic update: per coordinate, the scale sigma_n^2 comes from
// the noisy-data cubic MLE with (y_n, f, eps_n^2, (df/dy)^2 eps_n^2), the
// mean contracts through the shrinkage pair (a_n, b_n) and the variance
// becomes sigma_n^2 [c_0 (1 - a_n) + c_1 lambda (1 - b_n) h^2 + r_h].
EulerState prob_euler_step(const ODEProblem& problem, const EulerState& state, double h,
                           const SolverConfig& config);

// Equispaced solve over [0, T]; trajectory of length steps + 1 with
// eps_0 = 0. Classical mode carries eps2 = 0 throughout.
std::vector<EulerState> solve(const ODEProblem& problem, const SolverConfig& config);

struct ConvergenceRow {
    int steps = 0;
    double h = 0.0;
    double max_mean_error = 0.0;
    double max_eps = 0.0;
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    std::vector<double> error_orders;  // log2 ratios between successive doublings
    std::vector<double> eps_orders;
    double error_order = 0.0;  // mean of the successive ratios
    double eps_order = 0.0;
};

// Runs the solver across the given step counts against a known reference
// solution and reports empirical convergence orders from log2 ratios
// between successive N doublings.
ConvergenceStudy convergence_study(const ODEProblem& problem,
                                   const std::function<Eigen::VectorXd(double)>& reference,
                                   const std::vector<int>& step_counts, const SolverConfig& base);

}  // namespace taylorpn
