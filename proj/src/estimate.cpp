#include "taylorpn/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "taylorpn/errors.hpp"

namespace taylorpn {

namespace {

double cubic_value(const CubicCoefficients& c, double s) {
    return ((c.a3 * s + c.a2) * s + c.a1) * s + c.a0;
}

double cubic_derivative(const CubicCoefficients& c, double s) {
    return (3.0 * c.a3 * s + 2.0 * c.a2) * s + c.a1;
}

// Residuals of the data against the prior mean, in enumeration order.
std::vector<double> residuals(const PriorMean& prior, const DerivativeData& data) {
    const auto& idx = data.index_set();
    std::vector<double> r(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        r[i] = data.values[i] - prior.derivative_at(idx[i], data.a);
    return r;
}

// f_m(a), gradient and Hessian entries pulled out of n >= 2 residual data.
struct ResidualJet {
    double value = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
};

ResidualJet residual_jet(const KernelSpec& spec, const PriorMean& prior, const DerivativeData& data) {
    const int d = spec.dim();
    ResidualJet jet;
    jet.grad = Eigen::VectorXd::Zero(d);
    jet.hess = Eigen::MatrixXd::Zero(d, d);
    const auto res = residuals(prior, data);
    const auto& idx = data.index_set();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const MultiIndex& alpha = idx[i];
        if (alpha.order() == 0) {
            jet.value = res[i];
        } else if (alpha.order() == 1) {
            for (int j = 0; j < d; ++j)
                if (alpha[j] == 1) jet.grad[j] = res[i];
        } else if (alpha.order() == 2) {
            for (int j = 0; j < d; ++j) {
                if (alpha[j] == 2) jet.hess(j, j) = res[i];
                for (int k = j + 1; k < d; ++k)
                    if (alpha[j] == 1 && alpha[k] == 1) jet.hess(j, k) = jet.hess(k, j) = res[i];
            }
        }
    }
    return jet;
}

double data_sup_norm(const DerivativeData& data) {
    double m = 0.0;
    for (double v : data.values) m = std::max(m, std::abs(v));
    return m;
}

double instability_floor(const DerivativeData& data) { return 1e-8 * (1.0 + data_sup_norm(data)); }

}  // namespace

// ------------------------------------------------------------- cubic solver

std::vector<double> solve_cubic_real(const CubicCoefficients& c) {
    if (c.a3 == 0.0) throw std::invalid_argument("solve_cubic_real: leading coefficient must be nonzero");
    // monic x^3 + p x^2 + q x + r, depressed t^3 + at + b with x = t - p/3
    const double p = c.a2 / c.a3;
    const double q = c.a1 / c.a3;
    const double r = c.a0 / c.a3;
    const double a = q - p * p / 3.0;
    const double b = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
    const double shift = -p / 3.0;

    std::vector<double> roots;
    const double disc = -4.0 * a * a * a - 27.0 * b * b;
    if (disc > 0.0) {
        // three distinct real roots, trigonometric form
        const double m = 2.0 * std::sqrt(-a / 3.0);
        const double theta = std::acos(std::clamp(3.0 * b / (a * m), -1.0, 1.0)) / 3.0;
        for (int k = 0; k < 3; ++k)
            roots.push_back(shift + m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0));
    } else if (disc < 0.0) {
        // one real root, Cardano with a cancellation-safe branch
        if (a == 0.0) {
            roots.push_back(shift + std::cbrt(-b));
        } else {
            const double d2 = b * b / 4.0 + a * a * a / 27.0;  // > 0 here
            const double sq = std::sqrt(d2);
            const double u = std::cbrt(-b / 2.0 + (b > 0.0 ? -sq : sq));
            roots.push_back(shift + u - a / (3.0 * u));
        }
    } else {
        // repeated roots
        if (a == 0.0) {
            roots.push_back(shift);  // triple root
        } else {
            const double t1 = 3.0 * b / a;  // simple root
            roots.push_back(shift + t1);
            roots.push_back(shift - t1 / 2.0);  // double root
        }
    }

    for (double& x : roots) {
        for (int it = 0; it < 2; ++it) {
            const double der = cubic_derivative(c, x);
            if (der != 0.0) x -= cubic_value(c, x) / der;
        }
    }
    std::sort(roots.begin(), roots.end());
    std::vector<double> out;
    for (double x : roots) {
        if (!out.empty() && std::abs(x - out.back()) <= 1e-9 * std::max({1.0, std::abs(x), std::abs(out.back())}))
            continue;
        out.push_back(x);
    }
    return out;
}

// ------------------------------------------------------------ noiseless MLEs

double sigma_ml(const KernelSpec& spec, const PriorMean& prior, const DerivativeData& data) {
    if (data.noisy()) throw std::invalid_argument("sigma_ml: noiseless data required");
    const auto res = residuals(prior, data);
    const auto& idx = data.index_set();
    bool all_zero = true;
    double sum = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (res[i] != 0.0) all_zero = false;
        const double c = spec.coefficient(idx[i]);
        if (c <= 0.0) throw SingularModel("sigma_ml: zero kernel coefficient in the data range");
        sum += res[i] * res[i] / (c * spec.lambda_pow(idx[i]));
    }
    if (all_zero) throw DegenerateData("sigma_ml: all residual derivatives vanish");
    return sum / static_cast<double>(idx.size());
}

std::pair<double, Eigen::VectorXd> lambda_ml_n1(const KernelSpec& spec, const PriorMean& prior,
                                                const DerivativeData& data) {
    if (data.order != 1) throw std::invalid_argument("lambda_ml_n1: order-1 data required");
    if (!spec.is_inner_product()) throw std::invalid_argument("lambda_ml_n1: inner-product kernel required");
    const auto jet = residual_jet(spec, prior, data);
    if (std::abs(jet.value) < instability_floor(data))
        throw Unstable("lambda_ml_n1: |f_m(a)| below the instability floor");
    const double c0 = spec.coeff_total(0);
    const double c1 = spec.coeff_total(1);
    const double sigma2 = jet.value * jet.value / c0;
    Eigen::VectorXd lambda(spec.dim());
    for (int i = 0; i < spec.dim(); ++i) {
        const double ratio = jet.grad[i] / jet.value;
        lambda[i] = (c0 / c1) * ratio * ratio;
        if (!(lambda[i] > 0.0)) throw Unstable("lambda_ml_n1: vanishing partial derivative gives lambda = 0");
    }
    return {sigma2, lambda};
}

std::pair<double, double> lambda_ml_n2_uniform(const KernelSpec& spec, const PriorMean& prior,
                                               const DerivativeData& data) {
    if (data.order != 2) throw std::invalid_argument("lambda_ml_n2_uniform: order-2 data required");
    if (!spec.is_inner_product())
        throw std::invalid_argument("lambda_ml_n2_uniform: inner-product kernel required");
    const auto jet = residual_jet(spec, prior, data);
    const int d = spec.dim();
    const double c0 = spec.coeff_total(0);
    const double c1 = spec.coeff_total(1);
    const double c2 = spec.coeff_total(2);
    const double hess_norm2 = jet.hess.squaredNorm();  // entrywise 2-norm squared
    if (std::sqrt(hess_norm2) < instability_floor(data))
        throw Unstable("lambda_ml_n2_uniform: Hessian norm below the instability floor");

    const double dd = static_cast<double>(d);
    const double M = 2.0 * dd * (dd + 2.0) / (dd * dd + 3.0 * dd + 2.0);  // in [1, 2)
    const double qa = (2.0 - M) * hess_norm2 / c2;
    const double qb = (1.0 - M) * jet.grad.squaredNorm() / c1;
    const double qc = -M * jet.value * jet.value / c0;
    // qa > 0 and qc <= 0, so the discriminant is nonnegative and the root
    // below is the positive one (qb <= 0 keeps the formula cancellation-free)
    const double u = (-qb + std::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa);
    if (!(u > 0.0)) throw Unstable("lambda_ml_n2_uniform: no positive stationary point");
    const double lambda = 1.0 / u;

    const double n_data = static_cast<double>(count_upto(d, 2));
    const double sigma2 = (jet.value * jet.value / c0 + jet.grad.squaredNorm() / (c1 * lambda) +
                           hess_norm2 / (c2 * lambda * lambda)) /
                          n_data;
    return {sigma2, lambda};
}

Eigen::VectorXd lambda_ml_n2_aniso(const KernelSpec& spec, const PriorMean& prior,
                                   const DerivativeData& data) {
    if (data.order != 2) throw std::invalid_argument("lambda_ml_n2_aniso: order-2 data required");
    if (!spec.is_inner_product())
        throw std::invalid_argument("lambda_ml_n2_aniso: inner-product kernel required");
    const auto jet = residual_jet(spec, prior, data);
    const int d = spec.dim();
    const double c0 = spec.coeff_total(0);
    const double c1 = spec.coeff_total(1);
    const double c2 = spec.coeff_total(2);
    const double floor = instability_floor(data);
    for (int i = 0; i < d; ++i)
        if (std::abs(jet.hess(i, i)) < floor)
            throw Unstable("lambda_ml_n2_aniso: vanishing diagonal curvature degenerates the quadratic");

    // M = (1/N_2^d) sum_{|alpha| <= 2} alpha(i) = 2 / (d + 1), the same for
    // every coordinate
    const double M = 2.0 / (static_cast<double>(d) + 1.0);

    Eigen::VectorXd lambda = Eigen::VectorXd::Ones(d);
    for (int sweep = 0; sweep < 200; ++sweep) {
        double max_rel_change = 0.0;
        for (int i = 0; i < d; ++i) {
            double cross_i = 0.0;  // sum_{j != i} (d_i d_j f_m)^2 / lambda_j
            for (int j = 0; j < d; ++j)
                if (j != i) cross_i += jet.hess(i, j) * jet.hess(i, j) / lambda[j];
            const double qa = (2.0 - M) * jet.hess(i, i) * jet.hess(i, i) / c2;
            const double qb = (1.0 - M) * (jet.grad[i] * jet.grad[i] / c1 + 2.0 / c2 * cross_i);
            double rest = jet.value * jet.value / c0;
            for (int j = 0; j < d; ++j) {
                if (j == i) continue;
                rest += jet.grad[j] * jet.grad[j] / (c1 * lambda[j]);
                for (int k = 0; k < d; ++k)
                    if (k != i) rest += jet.hess(j, k) * jet.hess(j, k) / (c2 * lambda[j] * lambda[k]);
            }
            const double qc = -M * rest;
            const double u = (-qb + std::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa);
            if (!(u > 0.0)) throw Unstable("lambda_ml_n2_aniso: no positive coordinate update");
            const double next = 1.0 / u;
            max_rel_change = std::max(max_rel_change, std::abs(next - lambda[i]) / std::abs(next));
            lambda[i] = next;
        }
        if (max_rel_change < 1e-10) return lambda;
    }
    throw NoConvergence("lambda_ml_n2_aniso: no fixed point within 200 sweeps");
}

// ------------------------------------------------------------- noisy sigma^2

CubicCoefficients noisy_mle_cubic(double c0, double c1, double lambda, double y0, double y1,
                                  double eps0sq, double eps1sq) {
    const double A = c0;
    const double B = c1 * lambda;
    const double F0 = y0 * y0;
    const double F1 = y1 * y1;
    CubicCoefficients c;
    c.a3 = 2.0 * A * A * B * B;
    c.a2 = -F0 * A * B * B - F1 * A * A * B + 3.0 * A * B * B * eps0sq + 3.0 * A * A * B * eps1sq;
    c.a1 = -2.0 * F0 * A * B * eps1sq - 2.0 * F1 * A * B * eps0sq + 4.0 * A * B * eps0sq * eps1sq +
           A * A * eps1sq * eps1sq + B * B * eps0sq * eps0sq;
    c.a0 = -F0 * A * eps1sq * eps1sq - F1 * B * eps0sq * eps0sq + A * eps0sq * eps1sq * eps1sq +
           B * eps0sq * eps0sq * eps1sq;
    return c;
}

double sigma_ml_noisy_n1(double c0, double c1, double lambda, double y0, double y1, double eps0sq,
                         double eps1sq, double sigma_min) {
    if (!(c0 > 0.0) || !(c1 > 0.0) || !(lambda > 0.0))
        throw std::invalid_argument("sigma_ml_noisy_n1: c0, c1, lambda must be > 0");
    if (eps0sq < 0.0 || eps1sq < 0.0)
        throw std::invalid_argument("sigma_ml_noisy_n1: noise variances must be >= 0");
    if (!(sigma_min > 0.0)) throw std::invalid_argument("sigma_ml_noisy_n1: sigma_min must be > 0");

    if (eps0sq == 0.0 && eps1sq == 0.0) {
        const double s = 0.5 * (y0 * y0 / c0 + y1 * y1 / (c1 * lambda));
        return s > 0.0 ? s : sigma_min * sigma_min;
    }

    const auto roots = solve_cubic_real(noisy_mle_cubic(c0, c1, lambda, y0, y1, eps0sq, eps1sq));
    const double B = c1 * lambda;
    const auto nll = [&](double s) {
        const double v0 = s * c0 + eps0sq;
        const double v1 = s * B + eps1sq;
        return 0.5 * (y0 * y0 / v0 + y1 * y1 / v1 + std::log(v0) + std::log(v1));
    };
    double best = -1.0;
    double best_nll = std::numeric_limits<double>::infinity();
    for (double s : roots) {
        if (!(s > 0.0)) continue;
        const double v = nll(s);
        if (v < best_nll) {
            best_nll = v;
            best = s;
        }
    }
    return best > 0.0 ? best : sigma_min * sigma_min;
}

}  // namespace taylorpn
