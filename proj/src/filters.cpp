#include "taylorpn/filters.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

#include "taylorpn/errors.hpp"
#include "taylorpn/estimate.hpp"
#include "taylorpn/gp.hpp"
#include "taylorpn/optimize.hpp"
#include "taylorpn/rng.hpp"

namespace taylorpn {

namespace {

void symmetrize(Eigen::MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const char* context) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt.info() != Eigen::Success)
        throw IllConditioned(std::string(context) + ": factorization failed");
    Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
    if (!inv.allFinite()) throw IllConditioned(std::string(context) + ": singular matrix");
    return inv;
}

}  // namespace

std::string filter_kind_name(FilterKind kind) {
    switch (kind) {
        case FilterKind::Ekf: return "ekf";
        case FilterKind::Ukf: return "ukf";
        case FilterKind::TaylorEkf: return "taylor-ekf";
    }
    return "unknown";
}

// ------------------------------------------------------------ model helpers

Eigen::VectorXd StateSpaceModel::transition_mean(int j, const Eigen::VectorXd& x) const {
    if (linear()) return (*linear_transition) * x;
    return eval_vector([&](const std::vector<Dual2>& v) { return nonlinear_transition(j, v); }, x);
}

Eigen::MatrixXd StateSpaceModel::transition_jacobian(int j, const Eigen::VectorXd& x) const {
    if (linear()) return *linear_transition;
    return jacobian([&](const std::vector<Dual2>& v) { return nonlinear_transition(j, v); }, x);
}

Eigen::VectorXd StateSpaceModel::observe(int j, const Eigen::VectorXd& x) const {
    return eval_vector([&](const std::vector<Dual2>& v) { return observation(j, v); }, x);
}

Eigen::MatrixXd StateSpaceModel::observation_jacobian(int j, const Eigen::VectorXd& x) const {
    return jacobian([&](const std::vector<Dual2>& v) { return observation(j, v); }, x);
}

// -------------------------------------------------------------------- EKF

GaussianBelief ekf_step(const StateSpaceModel& model, int j, const GaussianBelief& belief,
                        const Eigen::VectorXd& y) {
    const Eigen::MatrixXd P = model.transition_jacobian(j - 1, belief.mean);
    const Eigen::VectorXd mu_pred = model.transition_mean(j - 1, belief.mean);
    Eigen::MatrixXd cov_pred = P * belief.cov * P.transpose() + model.process_noise(j - 1);
    symmetrize(cov_pred);

    const Eigen::MatrixXd F = model.observation_jacobian(j, mu_pred);
    const Eigen::VectorXd innovation = y - model.observe(j, mu_pred);
    Eigen::MatrixXd S = F * cov_pred * F.transpose() + model.obs_noise(j);
    symmetrize(S);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    if (ldlt.info() != Eigen::Success) throw IllConditioned("ekf_step: innovation solve failed");
    const Eigen::MatrixXd gain = cov_pred * F.transpose() * spd_inverse(S, "ekf_step");

    GaussianBelief out;
    out.mean = mu_pred + gain * innovation;
    out.cov = cov_pred - gain * S * gain.transpose();
    symmetrize(out.cov);
    if (!out.mean.allFinite() || !out.cov.allFinite())
        throw IllConditioned("ekf_step: non-finite update");
    return out;
}

// -------------------------------------------------------------------- UKF

namespace {

// Sigma points of (mean, cov) for the alpha = 1, beta = 0, kappa = 3 - d
// parameterization; (d + kappa) = 3 regardless of d.
struct SigmaPoints {
    std::vector<Eigen::VectorXd> points;
    Eigen::VectorXd weights;  // identical mean/cov weights for this choice
};

SigmaPoints draw_sigma_points(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    const int d = static_cast<int>(mean.size());
    const double scale = 3.0;  // d + kappa with kappa = 3 - d
    Eigen::MatrixXd scaled = scale * cov;
    Eigen::LLT<Eigen::MatrixXd> llt(scaled);
    if (llt.info() != Eigen::Success) {
        double jitter = 1e-12 * std::max(1.0, scaled.trace());
        for (int attempt = 0; attempt < 12 && llt.info() != Eigen::Success; ++attempt) {
            scaled.diagonal().array() += jitter;
            jitter *= 10.0;
            llt.compute(scaled);
        }
        if (llt.info() != Eigen::Success)
            throw CholeskyFailure("ukf_step: covariance not factorizable after jitter");
    }
    const Eigen::MatrixXd root = llt.matrixL();

    SigmaPoints sp;
    sp.points.reserve(static_cast<std::size_t>(2 * d + 1));
    sp.weights.resize(2 * d + 1);
    sp.points.push_back(mean);
    sp.weights[0] = (3.0 - d) / 3.0;
    for (int i = 0; i < d; ++i) {
        sp.points.push_back(mean + root.col(i));
        sp.points.push_back(mean - root.col(i));
        sp.weights[1 + 2 * i] = 1.0 / 6.0;
        sp.weights[2 + 2 * i] = 1.0 / 6.0;
    }
    return sp;
}

}  // namespace

GaussianBelief ukf_step(const StateSpaceModel& model, int j, const GaussianBelief& belief,
                        const Eigen::VectorXd& y) {
    const int d = model.dim_state;
    // predict through the transition
    SigmaPoints sp = draw_sigma_points(belief.mean, belief.cov);
    std::vector<Eigen::VectorXd> propagated;
    propagated.reserve(sp.points.size());
    for (const auto& p : sp.points) propagated.push_back(model.transition_mean(j - 1, p));
    Eigen::VectorXd mu_pred = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < propagated.size(); ++i)
        mu_pred += sp.weights[static_cast<Eigen::Index>(i)] * propagated[i];
    Eigen::MatrixXd cov_pred = model.process_noise(j - 1);
    for (std::size_t i = 0; i < propagated.size(); ++i) {
        const Eigen::VectorXd dx = propagated[i] - mu_pred;
        cov_pred += sp.weights[static_cast<Eigen::Index>(i)] * (dx * dx.transpose());
    }
    symmetrize(cov_pred);

    // update from sigma points redrawn at the predictive distribution
    SigmaPoints spu = draw_sigma_points(mu_pred, cov_pred);
    std::vector<Eigen::VectorXd> obs;
    obs.reserve(spu.points.size());
    for (const auto& p : spu.points) obs.push_back(model.observe(j, p));
    Eigen::VectorXd y_pred = Eigen::VectorXd::Zero(model.dim_obs);
    for (std::size_t i = 0; i < obs.size(); ++i)
        y_pred += spu.weights[static_cast<Eigen::Index>(i)] * obs[i];
    Eigen::MatrixXd S = model.obs_noise(j);
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(d, model.dim_obs);
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const Eigen::VectorXd dy = obs[i] - y_pred;
        const Eigen::VectorXd dx = spu.points[i] - mu_pred;
        S += spu.weights[static_cast<Eigen::Index>(i)] * (dy * dy.transpose());
        cross += spu.weights[static_cast<Eigen::Index>(i)] * (dx * dy.transpose());
    }
    symmetrize(S);

    const Eigen::MatrixXd gain = cross * spd_inverse(S, "ukf_step");
    GaussianBelief out;
    out.mean = mu_pred + gain * (y - y_pred);
    out.cov = cov_pred - gain * S * gain.transpose();
    symmetrize(out.cov);
    return out;
}

// --------------------------------------------------------------- Taylor EKF

namespace {

DerivativeData order1_data(const Eigen::VectorXd& a, double value, const Eigen::VectorXd& grad) {
    const int d = static_cast<int>(a.size());
    const auto idx = enumerate_upto(d, 1);
    std::vector<double> values(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i].order() == 0) {
            values[i] = value;
        } else {
            for (int j = 0; j < d; ++j)
                if (idx[i][j] == 1) values[i] = grad[j];
        }
    }
    return DerivativeData(a, 1, std::move(values));
}

}  // namespace

std::pair<GaussianBelief, StepDiagnostics> taylor_ekf_step(const StateSpaceModel& model, int j,
                                                           const GaussianBelief& belief,
                                                           const Eigen::VectorXd& y,
                                                           const TaylorEkfOptions& options) {
    if (!model.linear())
        throw std::invalid_argument("taylor_ekf_step: linear transition required");
    if (options.family != KernelFamily::Exponential)
        throw std::invalid_argument("taylor_ekf_step: infinite-radius (Exponential) kernel required");
    const Eigen::MatrixXd gamma_full = model.obs_noise(j);
    if (!gamma_full.isDiagonal(1e-14))
        throw std::invalid_argument("taylor_ekf_step: diagonal observation noise required");

    const int d = model.dim_state;
    const int q = model.dim_obs;
    const double lambda = options.lambda;

    const Eigen::MatrixXd& A = *model.linear_transition;
    const Eigen::VectorXd mu_pred = A * belief.mean;
    Eigen::MatrixXd cov_pred = A * belief.cov * A.transpose() + model.process_noise(j - 1);
    symmetrize(cov_pred);
    const Eigen::MatrixXd precision_pred = spd_inverse(cov_pred, "taylor_ekf_step");

    StepDiagnostics diag;

    // component-wise expansions of the observation function at mu_pred
    const auto obs_duals = model.observation(j, seed_variables(mu_pred));
    Eigen::VectorXd f_vals(q);
    Eigen::MatrixXd f_grads(q, d);
    Eigen::VectorXd sigma2(q);
    const KernelSpec coeff_spec = KernelSpec::exponential(1.0, lambda, d);
    const PriorMean zero_mean;
    for (int l = 0; l < q; ++l) {
        f_vals[l] = obs_duals[static_cast<std::size_t>(l)].val;
        f_grads.row(l) = obs_duals[static_cast<std::size_t>(l)].grad.transpose();
        try {
            sigma2[l] = sigma_ml(coeff_spec, zero_mean, order1_data(mu_pred, f_vals[l], f_grads.row(l)));
        } catch (const DegenerateData&) {
            sigma2[l] = 1.0;
            diag.sigma_fallback = true;
        }
    }
    const Eigen::VectorXd gamma = gamma_full.diagonal();

    // negative log posterior under the widened likelihoods
    //   var_l(x) = gamma_l + sigma2_l (expm1(lambda r^2) - lambda r^2)
    const auto target = [&](const std::vector<Dual2>& x) -> Dual2 {
        Dual2 quad = Dual2::constant(0.0, d);
        std::vector<Dual2> dx;
        dx.reserve(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) dx.push_back(x[static_cast<std::size_t>(i)] - mu_pred[i]);
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k) quad = quad + dx[static_cast<std::size_t>(i)] *
                                                        (0.5 * precision_pred(i, k)) *
                                                        dx[static_cast<std::size_t>(k)];
        Dual2 r2 = Dual2::constant(0.0, d);
        for (int i = 0; i < d; ++i)
            r2 = r2 + dx[static_cast<std::size_t>(i)] * dx[static_cast<std::size_t>(i)];
        const Dual2 arg = lambda * r2;

        Dual2 total = quad;
        for (int l = 0; l < q; ++l) {
            Dual2 resid = Dual2::constant(y[l] - f_vals[l], d);
            for (int i = 0; i < d; ++i)
                resid = resid - f_grads(l, i) * dx[static_cast<std::size_t>(i)];
            if (arg.val > 500.0) {
                // the widening has exploded: log-var is affine in arg to
                // machine precision and the residual term vanishes
                total = total + 0.5 * (std::log(sigma2[l]) + arg);
            } else {
                const Dual2 var = gamma[l] + sigma2[l] * (expm1(arg) - arg) + 1e-300;
                total = total + 0.5 * (log(var) + resid * resid / var);
            }
        }
        return total;
    };

    const auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        const Dual2 out = target(seed_variables(x));
        grad = out.grad;
        return out.val;
    };

    const BfgsResult opt = minimize_bfgs(objective, mu_pred, options.max_iterations, options.grad_tolerance);
    diag.iterations = opt.iterations;
    diag.grad_norm = opt.grad_norm;
    // first-order optimality at the quoted tolerance is what the Laplace
    // approximation needs; a stall below it still counts as a MAP point
    diag.converged = opt.converged || opt.grad_norm <= 1e-6 * (1.0 + std::abs(opt.value));
    if (!diag.converged) {
        diag.optimizer_fallback = true;
        return {ekf_step(model, j, belief, y), diag};
    }

    // Laplace precision at the MAP point
    Eigen::MatrixXd hess = target(seed_variables(opt.x)).hess;
    symmetrize(hess);
    Eigen::LLT<Eigen::MatrixXd> llt(hess);
    if (llt.info() != Eigen::Success) {
        diag.hessian_jittered = true;
        double tau = 1e-10 * std::max(hess.trace(), 1e-8);
        for (int attempt = 0; attempt < 80 && llt.info() != Eigen::Success; ++attempt) {
            hess.diagonal().array() += tau;
            tau *= 2.0;
            llt.compute(hess);
        }
        if (llt.info() != Eigen::Success)
            throw CholeskyFailure("taylor_ekf_step: Laplace precision not PD after jitter");
    }

    GaussianBelief out;
    out.mean = opt.x;
    out.cov = llt.solve(Eigen::MatrixXd::Identity(d, d));
    symmetrize(out.cov);
    return {out, diag};
}

// ----------------------------------------------------------------- driver

FilterTrace run_filter(const StateSpaceModel& model, FilterKind kind,
                       const std::vector<Eigen::VectorXd>& observations, const GaussianBelief& initial,
                       const TaylorEkfOptions& options) {
    FilterTrace trace;
    trace.initial = initial;
    GaussianBelief belief = initial;
    int j = 0;
    for (const Eigen::VectorXd& y : observations) {
        ++j;
        try {
            const Eigen::VectorXd mu_pred = model.transition_mean(j - 1, belief.mean);
            const Eigen::MatrixXd P = model.transition_jacobian(j - 1, belief.mean);
            GaussianBelief predicted{mu_pred, P * belief.cov * P.transpose() + model.process_noise(j - 1)};
            symmetrize(predicted.cov);
            trace.predicted.push_back(std::move(predicted));

            StepDiagnostics diag;
            switch (kind) {
                case FilterKind::Ekf: belief = ekf_step(model, j, belief, y); break;
                case FilterKind::Ukf: belief = ukf_step(model, j, belief, y); break;
                case FilterKind::TaylorEkf: {
                    auto [b, dg] = taylor_ekf_step(model, j, belief, y, options);
                    belief = std::move(b);
                    diag = dg;
                    break;
                }
            }
            trace.posterior.push_back(belief);
            trace.diagnostics.push_back(diag);
        } catch (const std::exception& e) {
            throw std::runtime_error("run_filter: step " + std::to_string(j) + ": " + e.what());
        }
    }
    return trace;
}

std::pair<std::vector<Eigen::VectorXd>, std::vector<Eigen::VectorXd>> simulate(
    const StateSpaceModel& model, const Eigen::VectorXd& x0, int steps, std::uint64_t seed) {
    GaussianRng rng(seed);
    std::vector<Eigen::VectorXd> states, observations;
    states.reserve(static_cast<std::size_t>(steps));
    observations.reserve(static_cast<std::size_t>(steps));
    Eigen::VectorXd x = x0;
    for (int j = 1; j <= steps; ++j) {
        const Eigen::MatrixXd proc_root = psd_sqrt(model.process_noise(j - 1));
        const Eigen::MatrixXd obs_root = psd_sqrt(model.obs_noise(j));
        x = model.transition_mean(j - 1, x) + proc_root * rng.gaussian_vector(model.dim_state);
        Eigen::VectorXd y = model.observe(j, x) + obs_root * rng.gaussian_vector(model.dim_obs);
        if (!x.allFinite() || !y.allFinite()) throw NonFinite("simulate: trajectory left the finite range");
        states.push_back(x);
        observations.push_back(y);
    }
    return {states, observations};
}

}  // namespace taylorpn
