#pragma once

#include <Eigen/Core>
#include <functional>

namespace taylorpn {

struct BfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Unconstrained minimiser over (objective, gradient) callbacks: BFGS updates
// of the inverse Hessian with Armijo backtracking. Non-finite trial values
// are treated as +infinity so the line search backs away from them.
BfgsResult minimize_bfgs(const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd& grad)>& fn,
                         Eigen::VectorXd x0, int max_iterations = 200, double grad_tolerance = 1e-8);

}  // namespace taylorpn
