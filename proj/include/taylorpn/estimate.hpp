#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "taylorpn/gp.hpp"
#include "taylorpn/kernels.hpp"

namespace taylorpn {

// a3 s^3 + a2 s^2 + a1 s + a0 = 0 in the unknown s = sigma^2.
struct CubicCoefficients {
    double a3 = 0.0, a2 = 0.0, a1 = 0.0, a0 = 0.0;
};

// All real roots of the cubic (a3 != 0), ascending, each polished by two
// Newton steps; roots closer than 1e-9 relative spacing collapse to one.
std::vector<double> solve_cubic_real(const CubicCoefficients& c);

// sigma^2_ML = (1/N_n^d) sum_{|alpha| <= n} (D^alpha f_m(a))^2 / (c_alpha lambda^alpha)
// for noiseless data and fixed lambda. Throws DegenerateData when every
// residual derivative vanishes (the likelihood is then unbounded in log sigma).
double sigma_ml(const KernelSpec& spec, const PriorMean& prior, const DerivativeData& data);

// Joint closed-form MLE for n = 1:
//   sigma^2 = f_m(a)^2 / c_0,  lambda_i = (c_0/c_1) (d_i f_m(a) / f_m(a))^2.
// Throws Unstable when |f_m(a)| sits below the instability floor or some
// partial derivative vanishes (lambda must stay positive).
std::pair<double, Eigen::VectorXd> lambda_ml_n1(const KernelSpec& spec, const PriorMean& prior,
                                                const DerivativeData& data);

// Joint closed-form MLE for n = 2 under the uniform constraint
// lambda = (l, ..., l); returns (sigma^2, l). Throws Unstable when the
// Hessian norm is below the floor (the quadratic degenerates).
std::pair<double, double> lambda_ml_n2_uniform(const KernelSpec& spec, const PriorMean& prior,
                                               const DerivativeData& data);

// Anisotropic n = 2 MLE of lambda: each coordinate solves its own quadratic
// stationarity condition that couples to the others, so the vector is found
// by cyclic coordinate updates from (1, ..., 1) until the largest relative
// change drops below 1e-10 (at most 200 sweeps). Throws NoConvergence past
// the sweep cap and Unstable on degenerate diagonal curvature.
Eigen::VectorXd lambda_ml_n2_aniso(const KernelSpec& spec, const PriorMean& prior,
                                   const DerivativeData& data);

// Noisy-data MLE of sigma^2 for d = n = 1 data (y0, y1) with noise variances
// (eps0sq, eps1sq): builds the cubic, evaluates the exact negative
// log-likelihood at every positive root and returns the argmin; returns
// sigma_min^2 when no positive root exists. Total: never throws.
double sigma_ml_noisy_n1(double c0, double c1, double lambda, double y0, double y1, double eps0sq,
                         double eps1sq, double sigma_min);

// The cubic whose positive roots are the stationary points of the noisy
// n = 1 likelihood in sigma^2.
CubicCoefficients noisy_mle_cubic(double c0, double c1, double lambda, double y0, double y1,
                                  double eps0sq, double eps1sq);

}  // namespace taylorpn
