#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "taylorpn/autodiff.hpp"
#include "taylorpn/kernels.hpp"

namespace taylorpn {

// Discrete-time system: x_{j+1} = Phi_j(x_j) + eta_j, y_j = f_j(x_j) + xi_j
// with eta_j ~ N(0, Lambda_j) and xi_j ~ N(0, Gamma_j). Observation (and
// nonlinear transition) functions are written over Dual2 scalars so the
// filters can take exact Jacobians.
struct StateSpaceModel {
    int dim_state = 0;
    int dim_obs = 0;
    // exactly one of the two transitions is set
    std::optional<Eigen::MatrixXd> linear_transition;           // constant A
    std::function<std::vector<Dual2>(int j, const std::vector<Dual2>&)> nonlinear_transition;
    std::function<std::vector<Dual2>(int j, const std::vector<Dual2>&)> observation;
    std::function<Eigen::MatrixXd(int j)> process_noise;  // Lambda_j
    std::function<Eigen::MatrixXd(int j)> obs_noise;      // Gamma_j

    bool linear() const { return linear_transition.has_value(); }
    Eigen::VectorXd transition_mean(int j, const Eigen::VectorXd& x) const;
    Eigen::MatrixXd transition_jacobian(int j, const Eigen::VectorXd& x) const;
    Eigen::VectorXd observe(int j, const Eigen::VectorXd& x) const;
    Eigen::MatrixXd observation_jacobian(int j, const Eigen::VectorXd& x) const;
};

struct GaussianBelief {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

enum class FilterKind { Ekf, Ukf, TaylorEkf };

std::string filter_kind_name(FilterKind kind);

struct TaylorEkfOptions {
    KernelFamily family = KernelFamily::Exponential;  // infinite-radius families only
    double lambda = 1.0;
    int max_iterations = 200;
    double grad_tolerance = 1e-8;
};

struct StepDiagnostics {
    int iterations = 0;
    bool converged = true;
    bool hessian_jittered = false;
    bool sigma_fallback = false;    // degenerate per-component MLE, sigma^2 = 1 used
    bool optimizer_fallback = false;  // non-convergence, EKF step substituted
    double grad_norm = 0.0;
};

struct FilterTrace {
    std::vector<GaussianBelief> predicted;
    std::vector<GaussianBelief> posterior;
    std::vector<StepDiagnostics> diagnostics;
    GaussianBelief initial;
};

// One predict/update sweep of the extended Kalman filter.
GaussianBelief ekf_step(const StateSpaceModel& model, int j, const GaussianBelief& belief,
                        const Eigen::VectorXd& y);

// One sweep of the unscented Kalman filter (alpha = 1, beta = 0,
// kappa = 3 - d).
GaussianBelief ukf_step(const StateSpaceModel& model, int j, const GaussianBelief& belief,
                        const Eigen::VectorXd& y);

// One sweep of the Taylor extended Kalman filter: linear predict, then a
// Laplace approximation of the posterior under the variance-widened
// likelihood, with the per-component scale set by maximum likelihood from
// (f_l(mu-), grad f_l(mu-)) at every step. Requires a linear transition and
// diagonal observation noise.
std::pair<GaussianBelief, StepDiagnostics> taylor_ekf_step(const StateSpaceModel& model, int j,
                                                           const GaussianBelief& belief,
                                                           const Eigen::VectorXd& y,
                                                           const TaylorEkfOptions& options = {});

FilterTrace run_filter(const StateSpaceModel& model, FilterKind kind,
                       const std::vector<Eigen::VectorXd>& observations, const GaussianBelief& initial,
                       const TaylorEkfOptions& options = {});

// Draws a trajectory and its noisy observations from the model, fully
// determined by the seed.
std::pair<std::vector<Eigen::VectorXd>, std::vector<Eigen::VectorXd>> simulate(
    const StateSpaceModel& model, const Eigen::VectorXd& x0, int steps, std::uint64_t seed);

}  // namespace taylorpn
