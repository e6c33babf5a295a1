#include "taylorpn/optimize.hpp"

#include <cmath>

namespace taylorpn {

BfgsResult minimize_bfgs(const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd& grad)>& fn,
                         Eigen::VectorXd x0, int max_iterations, double grad_tolerance) {
    const Eigen::Index d = x0.size();
    Eigen::MatrixXd inv_hess = Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd x = std::move(x0);
    Eigen::VectorXd grad(d);
    double value = fn(x, grad);

    BfgsResult result;
    for (int it = 0; it < max_iterations; ++it) {
        result.iterations = it;
        result.grad_norm = grad.lpNorm<Eigen::Infinity>();
        if (result.grad_norm <= grad_tolerance) {
            result.converged = true;
            break;
        }
        Eigen::VectorXd direction = -(inv_hess * grad);
        double slope = grad.dot(direction);
        if (!(slope < 0.0)) {  // reset on a non-descent direction
            inv_hess.setIdentity();
            direction = -grad;
            slope = grad.dot(direction);
        }

        // Armijo backtracking
        double step = 1.0;
        Eigen::VectorXd x_new(d), grad_new(d);
        double value_new = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * direction;
            value_new = fn(x_new, grad_new);
            if (std::isfinite(value_new) && value_new <= value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // retry once along steepest descent before giving up
            if (inv_hess.isIdentity(0.0)) break;
            inv_hess.setIdentity();
            continue;
        }

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = grad_new - grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd proj =
                Eigen::MatrixXd::Identity(d, d) - rho * (s * y.transpose());
            inv_hess = proj * inv_hess * proj.transpose() + rho * (s * s.transpose());
        }
        x = x_new;
        grad = grad_new;
        value = value_new;
    }
    result.grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (result.grad_norm <= grad_tolerance) result.converged = true;
    result.x = std::move(x);
    result.value = value;
    return result;
}

}  // namespace taylorpn
