#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace taylorpn {

// Forward-mode scalar carrying value, gradient and dense Hessian tangents.
// Dimensions stay tiny (d <= ~10) so dense second-order propagation is the
// whole story; no tape.
class Dual2 {
  public:
    double val = 0.0;
    Eigen::VectorXd grad;  // length d
    Eigen::MatrixXd hess;  // d x d, symmetric by construction

    Dual2() : grad(0), hess(0, 0) {}
    Dual2(double v, int dim)
        : val(v), grad(Eigen::VectorXd::Zero(dim)), hess(Eigen::MatrixXd::Zero(dim, dim)) {}

    static Dual2 constant(double v, int dim) { return Dual2(v, dim); }
    static Dual2 variable(double v, int axis, int dim) {
        Dual2 d(v, dim);
        d.grad[axis] = 1.0;
        return d;
    }

    int dim() const { return static_cast<int>(grad.size()); }
};

namespace detail {

// w = f(u) with f' and f'' at u.val
inline Dual2 chain(const Dual2& u, double f, double df, double ddf) {
    Dual2 w(f, u.dim());
    w.grad = df * u.grad;
    w.hess = df * u.hess + ddf * (u.grad * u.grad.transpose());
    return w;
}

}  // namespace detail

inline Dual2 operator+(const Dual2& a, const Dual2& b) {
    Dual2 w(a.val + b.val, a.dim());
    w.grad = a.grad + b.grad;
    w.hess = a.hess + b.hess;
    return w;
}
inline Dual2 operator+(const Dual2& a, double b) {
    Dual2 w = a;
    w.val += b;
    return w;
}
inline Dual2 operator+(double a, const Dual2& b) { return b + a; }

inline Dual2 operator-(const Dual2& a) {
    Dual2 w(-a.val, a.dim());
    w.grad = -a.grad;
    w.hess = -a.hess;
    return w;
}
inline Dual2 operator-(const Dual2& a, const Dual2& b) { return a + (-b); }
inline Dual2 operator-(const Dual2& a, double b) { return a + (-b); }
inline Dual2 operator-(double a, const Dual2& b) { return (-b) + a; }

inline Dual2 operator*(const Dual2& a, const Dual2& b) {
    Dual2 w(a.val * b.val, a.dim());
    w.grad = a.grad * b.val + b.grad * a.val;
    w.hess = a.hess * b.val + b.hess * a.val + a.grad * b.grad.transpose() + b.grad * a.grad.transpose();
    return w;
}
inline Dual2 operator*(const Dual2& a, double b) {
    Dual2 w(a.val * b, a.dim());
    w.grad = a.grad * b;
    w.hess = a.hess * b;
    return w;
}
inline Dual2 operator*(double a, const Dual2& b) { return b * a; }

inline Dual2 inverse(const Dual2& a) {
    const double iv = 1.0 / a.val;
    return detail::chain(a, iv, -iv * iv, 2.0 * iv * iv * iv);
}
inline Dual2 operator/(const Dual2& a, const Dual2& b) { return a * inverse(b); }
inline Dual2 operator/(const Dual2& a, double b) { return a * (1.0 / b); }
inline Dual2 operator/(double a, const Dual2& b) { return inverse(b) * a; }

inline bool operator<(const Dual2& a, const Dual2& b) { return a.val < b.val; }
inline bool operator<(const Dual2& a, double b) { return a.val < b; }
inline bool operator>(const Dual2& a, double b) { return a.val > b; }

inline Dual2 exp(const Dual2& u) {
    const double e = std::exp(u.val);
    return detail::chain(u, e, e, e);
}
inline Dual2 expm1(const Dual2& u) {
    const double e = std::exp(u.val);
    return detail::chain(u, std::expm1(u.val), e, e);
}
inline Dual2 log(const Dual2& u) {
    if (u.val <= 0.0) throw std::domain_error("Dual2 log: non-positive argument");
    const double iv = 1.0 / u.val;
    return detail::chain(u, std::log(u.val), iv, -iv * iv);
}
inline Dual2 sqrt(const Dual2& u) {
    if (u.val < 0.0) throw std::domain_error("Dual2 sqrt: negative argument");
    const double s = std::sqrt(u.val);
    return detail::chain(u, s, 0.5 / s, -0.25 / (s * u.val));
}
inline Dual2 sin(const Dual2& u) {
    const double s = std::sin(u.val), c = std::cos(u.val);
    return detail::chain(u, s, c, -s);
}
inline Dual2 cos(const Dual2& u) {
    const double s = std::sin(u.val), c = std::cos(u.val);
    return detail::chain(u, c, -s, -c);
}
inline Dual2 tan(const Dual2& u) {
    const double t = std::tan(u.val);
    const double sec2 = 1.0 + t * t;
    return detail::chain(u, t, sec2, 2.0 * t * sec2);
}
inline Dual2 atan(const Dual2& u) {
    const double q = 1.0 + u.val * u.val;
    return detail::chain(u, std::atan(u.val), 1.0 / q, -2.0 * u.val / (q * q));
}

// atan2(y, x) as a two-argument primitive so bearing models differentiate
// correctly across all quadrants.
inline Dual2 atan2(const Dual2& y, const Dual2& x) {
    const double r2 = x.val * x.val + y.val * y.val;
    if (r2 == 0.0) throw std::domain_error("Dual2 atan2: both arguments zero");
    const double fy = x.val / r2;
    const double fx = -y.val / r2;
    const double r4 = r2 * r2;
    const double fyy = -2.0 * x.val * y.val / r4;
    const double fxx = 2.0 * x.val * y.val / r4;
    const double fxy = (y.val * y.val - x.val * x.val) / r4;
    Dual2 w(std::atan2(y.val, x.val), y.dim());
    w.grad = fy * y.grad + fx * x.grad;
    w.hess = fy * y.hess + fx * x.hess + fyy * (y.grad * y.grad.transpose()) +
             fxx * (x.grad * x.grad.transpose()) +
             fxy * (x.grad * y.grad.transpose() + y.grad * x.grad.transpose());
    return w;
}
inline Dual2 atan2(const Dual2& y, double x) { return atan2(y, Dual2::constant(x, y.dim())); }
inline Dual2 atan2(double y, const Dual2& x) { return atan2(Dual2::constant(y, x.dim()), x); }

inline Dual2 pow(const Dual2& u, int p) {
    if (p == 0) return Dual2::constant(1.0, u.dim());
    if (p < 0) return inverse(pow(u, -p));
    Dual2 w = u;
    for (int k = 1; k < p; ++k) w = w * u;
    return w;
}
inline Dual2 pow(const Dual2& u, double p) {
    if (u.val <= 0.0) throw std::domain_error("Dual2 pow: non-integer power of non-positive base");
    const double f = std::pow(u.val, p);
    return detail::chain(u, f, p * f / u.val, p * (p - 1.0) * f / (u.val * u.val));
}

using ScalarFn = std::function<Dual2(const std::vector<Dual2>&)>;
using VectorFn = std::function<std::vector<Dual2>(const std::vector<Dual2>&)>;

inline std::vector<Dual2> seed_variables(const Eigen::VectorXd& x) {
    const int d = static_cast<int>(x.size());
    std::vector<Dual2> vars;
    vars.reserve(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) vars.push_back(Dual2::variable(x[i], i, d));
    return vars;
}

inline double value(const ScalarFn& fn, const Eigen::VectorXd& x) { return fn(seed_variables(x)).val; }

inline Eigen::VectorXd gradient(const ScalarFn& fn, const Eigen::VectorXd& x) {
    return fn(seed_variables(x)).grad;
}

inline Eigen::MatrixXd hessian(const ScalarFn& fn, const Eigen::VectorXd& x) {
    return fn(seed_variables(x)).hess;
}

// Row i is the gradient of component i; q x d.
inline Eigen::MatrixXd jacobian(const VectorFn& fn, const Eigen::VectorXd& x) {
    const auto out = fn(seed_variables(x));
    Eigen::MatrixXd J(out.size(), x.size());
    for (std::size_t i = 0; i < out.size(); ++i) J.row(static_cast<Eigen::Index>(i)) = out[i].grad.transpose();
    return J;
}

inline Eigen::VectorXd eval_vector(const VectorFn& fn, const Eigen::VectorXd& x) {
    const auto out = fn(seed_variables(x));
    Eigen::VectorXd v(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) v[static_cast<Eigen::Index>(i)] = out[i].val;
    return v;
}

}  // namespace taylorpn
