#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "taylorpn/autodiff.hpp"

using namespace taylorpn;

namespace {

Eigen::VectorXd fd_gradient(const ScalarFn& fn, const Eigen::VectorXd& x, double step = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd hi = x, lo = x;
        hi[i] += step;
        lo[i] -= step;
        g[i] = (value(fn, hi) - value(fn, lo)) / (2.0 * step);
    }
    return g;
}

Eigen::MatrixXd fd_hessian(const ScalarFn& fn, const Eigen::VectorXd& x, double step = 1e-4) {
    Eigen::MatrixXd h(x.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
            pp[i] += step; pp[j] += step;
            pm[i] += step; pm[j] -= step;
            mp[i] -= step; mp[j] += step;
            mm[i] -= step; mm[j] -= step;
            h(i, j) = (value(fn, pp) - value(fn, pm) - value(fn, mp) + value(fn, mm)) /
                      (4.0 * step * step);
        }
    return h;
}

void check_close(const Eigen::MatrixXd& got, const Eigen::MatrixXd& expected, double tol) {
    const double scale = 1.0 + expected.cwiseAbs().maxCoeff();
    CHECK((got - expected).cwiseAbs().maxCoeff() <= tol * scale);
}

}  // namespace

TEST_CASE("gradient basics") {
    const ScalarFn product = [](const std::vector<Dual2>& x) { return x[0] * x[1]; };
    Eigen::VectorXd p(2);
    p << 2.0, 3.0;
    const Eigen::VectorXd g = gradient(product, p);
    CHECK(g[0] == 3.0);
    CHECK(g[1] == 2.0);

    const ScalarFn constant = [](const std::vector<Dual2>& x) { return Dual2::constant(7.0, x[0].dim()); };
    CHECK(gradient(constant, p).norm() == 0.0);
}

TEST_CASE("bearing gradient matches finite differences") {
    const ScalarFn bearing = [](const std::vector<Dual2>& x) { return atan((x[1] - 5.0) / x[0]); };
    Eigen::VectorXd p(2);
    p << 1.0, 1.0;
    const Eigen::VectorXd g = gradient(bearing, p);
    const Eigen::VectorXd fd = fd_gradient(bearing, p);
    CHECK((g - fd).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("hessian basics") {
    Eigen::VectorXd p(2);
    p << 1.3, -0.4;
    const ScalarFn square = [](const std::vector<Dual2>& x) { return x[0] * x[0]; };
    Eigen::MatrixXd h = hessian(square, p);
    CHECK(h(0, 0) == 2.0);
    CHECK(h(0, 1) == 0.0);
    CHECK(h(1, 1) == 0.0);

    const ScalarFn product = [](const std::vector<Dual2>& x) { return x[0] * x[1]; };
    h = hessian(product, p);
    CHECK(h(0, 0) == 0.0);
    CHECK(h(0, 1) == 1.0);
    CHECK(h(1, 0) == 1.0);
}

TEST_CASE("hessian of a Gaussian log-density") {
    const ScalarFn logpdf = [](const std::vector<Dual2>& x) {
        // N(mean (1, -2), diag(0.5, 2.0)) up to the constant
        const Dual2 d0 = x[0] - 1.0;
        const Dual2 d1 = x[1] + 2.0;
        return -0.5 * (d0 * d0 / 0.5 + d1 * d1 / 2.0);
    };
    Eigen::VectorXd p(2);
    p << 0.3, 0.9;
    check_close(hessian(logpdf, p), fd_hessian(logpdf, p), 1e-5);
}

TEST_CASE("jacobian") {
    Eigen::MatrixXd A(2, 3);
    A << 1, 2, 3, 4, 5, 6;
    const VectorFn linear = [&A](const std::vector<Dual2>& x) {
        std::vector<Dual2> out;
        for (int r = 0; r < 2; ++r) {
            Dual2 acc = Dual2::constant(0.0, x[0].dim());
            for (int c = 0; c < 3; ++c) acc = acc + A(r, c) * x[static_cast<std::size_t>(c)];
            out.push_back(acc);
        }
        return out;
    };
    Eigen::VectorXd p(3);
    p << 0.1, -0.2, 0.3;
    CHECK((jacobian(linear, p) - A).cwiseAbs().maxCoeff() == 0.0);

    // bearings observation at (1, 1, 0, 0); velocity entries do not feed it
    const VectorFn bearings = [](const std::vector<Dual2>& x) {
        return std::vector<Dual2>{atan((x[1] - 5.0) / x[0]), atan((x[1] + 5.0) / x[0])};
    };
    Eigen::VectorXd s(4);
    s << 1.0, 1.0, 0.0, 0.0;
    const Eigen::MatrixXd J = jacobian(bearings, s);
    for (int r = 0; r < 2; ++r) {
        const ScalarFn comp = [&bearings, r](const std::vector<Dual2>& x) { return bearings(x)[r]; };
        const Eigen::VectorXd fd = fd_gradient(comp, s);
        CHECK((J.row(r).transpose() - fd).cwiseAbs().maxCoeff() <= 1e-7);
    }

    const VectorFn scalar_as_vector = [](const std::vector<Dual2>& x) {
        return std::vector<Dual2>{sin(x[0]) * x[1]};
    };
    Eigen::VectorXd q(2);
    q << 0.3, 1.7;
    CHECK(jacobian(scalar_as_vector, q).rows() == 1);
}

TEST_CASE("composed function suite against finite differences") {
    using F = ScalarFn;
    const std::vector<F> suite = {
        [](const std::vector<Dual2>& x) { return exp(x[0]) * sin(x[1]); },
        [](const std::vector<Dual2>& x) { return log(1.0 + x[0] * x[0] + x[1] * x[1]); },
        [](const std::vector<Dual2>& x) { return sqrt(1.0 + x[0] * x[0]) / x[1]; },
        [](const std::vector<Dual2>& x) { return atan2(x[1], x[0]); },
        [](const std::vector<Dual2>& x) { return atan2(x[0] * x[1], 1.0 + x[1] * x[1]); },
        [](const std::vector<Dual2>& x) { return tan(0.3 * x[0]) + cos(x[1] * x[0]); },
        [](const std::vector<Dual2>& x) { return pow(x[0] * x[0] + 1.0, 3) * x[1]; },
        [](const std::vector<Dual2>& x) { return pow(2.0 + sin(x[0]), 1.7) + x[1]; },
        [](const std::vector<Dual2>& x) { return expm1(x[0] * x[1]) - x[0] * x[1]; },
        [](const std::vector<Dual2>& x) { return x[0] / (x[1] + 3.0) + x[1] / (x[0] + 2.0); },
        [](const std::vector<Dual2>& x) { return atan((x[1] - 5.0) / x[0]); },
        [](const std::vector<Dual2>& x) { return atan((x[1] + 5.0) / x[0]); },
        [](const std::vector<Dual2>& x) { return sin(x[0]) * sin(x[0]) + cos(x[0]) * cos(x[0]) + x[1]; },
        [](const std::vector<Dual2>& x) { return exp(-0.5 * (x[0] * x[0] + x[1] * x[1])); },
        [](const std::vector<Dual2>& x) { return log(exp(x[0]) + exp(x[1])); },
        [](const std::vector<Dual2>& x) { return sqrt(x[0] * x[0] + x[1] * x[1] + 0.1); },
        [](const std::vector<Dual2>& x) { return (x[0] - x[1]) * (x[0] - x[1]) * atan(x[0]); },
        [](const std::vector<Dual2>& x) { return 1.0 / (1.0 + exp(-x[0] * x[1])); },
        [](const std::vector<Dual2>& x) { return atan2(sin(x[0]), cos(x[1])); },
        [](const std::vector<Dual2>& x) { return x[0] * x[0] * x[0] / 6.0 - x[1] * x[0] + 2.0; },
    };
    const std::vector<Eigen::Vector2d> points = {{1.2, 0.7}, {-0.8, 1.5}, {0.4, -1.1}};
    for (std::size_t k = 0; k < suite.size(); ++k) {
        for (const auto& p2 : points) {
            CAPTURE(k);
            const Eigen::VectorXd p = p2;
            const Eigen::VectorXd g = gradient(suite[k], p);
            const Eigen::VectorXd gfd = fd_gradient(suite[k], p);
            const double gscale = 1.0 + gfd.cwiseAbs().maxCoeff();
            CHECK((g - gfd).cwiseAbs().maxCoeff() <= 1e-6 * gscale);

            const Eigen::MatrixXd h = hessian(suite[k], p);
            CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);  // symmetric by construction
            check_close(h, fd_hessian(suite[k], p), 1e-4);
        }
    }
}

TEST_CASE("atan2 agrees with atan of the ratio across quadrants up to branch") {
    for (double yv : {1.0, -1.0})
        for (double xv : {2.0, -2.0}) {
            const ScalarFn two_arg = [](const std::vector<Dual2>& x) { return atan2(x[1], x[0]); };
            Eigen::VectorXd p(2);
            p << xv, yv;
            const Eigen::VectorXd g = gradient(two_arg, p);
            const Eigen::VectorXd fd = fd_gradient(two_arg, p);
            CHECK((g - fd).cwiseAbs().maxCoeff() <= 1e-7);
            check_close(hessian(two_arg, p), fd_hessian(two_arg, p), 1e-4);
        }
}
