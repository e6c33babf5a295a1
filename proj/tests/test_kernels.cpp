#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "taylorpn/errors.hpp"
#include "taylorpn/kernels.hpp"
#include "taylorpn/rng.hpp"

using namespace taylorpn;

namespace {

Eigen::VectorXd vec1(double x) { return Eigen::VectorXd::Constant(1, x); }

// test-side truncated series for K(u, v), independent of the library path
double series_oracle(const KernelSpec& spec, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                     int terms) {
    double sum = 0.0;
    for (int p = 0; p < terms; ++p) {
        for (const auto& alpha : enumerate_exact(spec.dim(), p)) {
            const double fa = factorial_multi(alpha);
            sum += spec.coefficient(alpha) * spec.lambda_pow(alpha) / (fa * fa) *
                   monomial_centred(u, alpha) * monomial_centred(v, alpha);
        }
    }
    return spec.sigma2() * sum;
}

double fd_mixed_derivative(const KernelSpec& spec, const Eigen::VectorXd& a, const MultiIndex& beta,
                           const MultiIndex& gamma, Eigen::VectorXd x, Eigen::VectorXd y, double step) {
    // peel one derivative at a time by central differences
    for (int j = 0; j < gamma.dim(); ++j)
        if (gamma[j] > 0) {
            MultiIndex reduced = gamma - MultiIndex::unit(gamma.dim(), j);
            Eigen::VectorXd hi = x, lo = x;
            hi[j] += step;
            lo[j] -= step;
            return (fd_mixed_derivative(spec, a, beta, reduced, hi, y, step) -
                    fd_mixed_derivative(spec, a, beta, reduced, lo, y, step)) /
                   (2.0 * step);
        }
    for (int j = 0; j < beta.dim(); ++j)
        if (beta[j] > 0) {
            MultiIndex reduced = beta - MultiIndex::unit(beta.dim(), j);
            Eigen::VectorXd hi = y, lo = y;
            hi[j] += step;
            lo[j] -= step;
            return (fd_mixed_derivative(spec, a, reduced, gamma, x, hi, step) -
                    fd_mixed_derivative(spec, a, reduced, gamma, x, lo, step)) /
                   (2.0 * step);
        }
    return kernel_eval(spec, a, x, y);
}

}  // namespace

TEST_CASE("inner-product coefficients") {
    const auto exp1 = KernelSpec::exponential(1.0, 1.0, 1);
    CHECK(exp1.coefficient(MultiIndex({0})) == 1.0);
    CHECK(exp1.coefficient(MultiIndex({3})) == 6.0);

    const auto exp2 = KernelSpec::exponential(1.0, 1.0, 2);
    CHECK(exp2.coefficient(MultiIndex({0, 0})) == 1.0);
    // c_2 * alpha! / |alpha|! = 2 * 1 / 2
    CHECK(exp2.coefficient(MultiIndex({1, 1})) == 1.0);

    const auto szego = KernelSpec::szego(1.0, 1.0, 1);
    CHECK(szego.coeff_total(3) == 36.0);

    const auto bergman = KernelSpec::bergman(1.0, 1.0, 1);
    CHECK(bergman.coeff_total(1) == 0.0);
    CHECK(bergman.coeff_total(4) == 4.0);
    CHECK(bergman.coefficient(MultiIndex({1})) == 0.0);
}

TEST_CASE("closed-form evaluation") {
    const auto expk = KernelSpec::exponential(1.0, 1.0, 1);
    CHECK(kernel_eval(expk, vec1(0.0), vec1(0.0), vec1(0.0)) == 1.0);

    const auto exp2 = KernelSpec::exponential(2.0, 1.0, 1);
    CHECK(kernel_eval(exp2, vec1(0.0), vec1(1.0), vec1(1.0)) ==
          doctest::Approx(2.0 * std::exp(1.0)).epsilon(1e-14));

    const auto szego = KernelSpec::szego(1.0, 1.0, 1);
    CHECK(kernel_eval(szego, vec1(0.0), vec1(0.5), vec1(0.5)) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("closed form matches the truncated series on a grid") {
    const auto expk = KernelSpec::exponential(1.3, 0.8, 1);
    const auto szego = KernelSpec::szego(0.7, 0.9, 1);
    const Eigen::VectorXd a = vec1(0.1);
    int checked = 0;
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) {
            const Eigen::VectorXd x = vec1(0.1 + (i - 4.5) / 6.0);
            const Eigen::VectorXd y = vec1(0.1 + (j - 4.5) / 6.0);
            for (const auto* spec : {&expk, &szego}) {
                const double closed = kernel_eval(*spec, a, x, y);
                const double series = series_oracle(*spec, x - a, y - a, 30);
                CHECK(std::abs(closed - series) <= 1e-10 * (1.0 + std::abs(closed)));
            }
            ++checked;
        }
    CHECK(checked == 100);
}

TEST_CASE("symmetry") {
    const auto expk = KernelSpec::exponential(1.0, Eigen::Vector2d(0.7, 1.4));
    const Eigen::VectorXd a = Eigen::Vector2d(0.2, -0.1);
    GaussianRng rng(3);
    for (int k = 0; k < 20; ++k) {
        const Eigen::VectorXd x = a + 0.8 * rng.gaussian_vector(2);
        const Eigen::VectorXd y = a + 0.8 * rng.gaussian_vector(2);
        CHECK(kernel_eval(expk, a, x, y) == kernel_eval(expk, a, y, x));
    }
}

TEST_CASE("gram matrices are positive semi-definite") {
    const auto expk = KernelSpec::exponential(1.0, 1.0, 2);
    const auto szego = KernelSpec::szego(1.0, 1.0, 2, 1.0);
    const auto bergman = KernelSpec::bergman(1.0, 1.0, 1);
    GaussianRng rng(11);

    const auto check_pd = [&](const KernelSpec& spec, double spread) {
        const Eigen::VectorXd a = Eigen::VectorXd::Zero(spec.dim());
        std::vector<Eigen::VectorXd> pts;
        for (int i = 0; i < 8; ++i) {
            Eigen::VectorXd p = spread * rng.gaussian_vector(spec.dim());
            while (!std::isinf(spec.radius()) && p.norm() >= 0.95 * spec.radius()) p *= 0.5;
            pts.push_back(p);
        }
        Eigen::MatrixXd gram(8, 8);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) gram(i, j) = kernel_eval(spec, a, pts[i], pts[j]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * gram.trace());
    };
    check_pd(expk, 1.0);
    check_pd(szego, 0.4);
    check_pd(bergman, 0.4);
}

TEST_CASE("mixed derivatives") {
    const auto expk = KernelSpec::exponential(1.0, 1.0, 1);
    const Eigen::VectorXd a = vec1(0.0);

    SUBCASE("zeroth derivative is the kernel") {
        const MultiIndex zero({0});
        CHECK(kernel_mixed_derivative(expk, a, zero, zero, vec1(0.3), vec1(0.2)) ==
              doctest::Approx(kernel_eval(expk, a, vec1(0.3), vec1(0.2))).epsilon(1e-14));
    }
    SUBCASE("diagonal collapse at the expansion point") {
        const MultiIndex one({1});
        CHECK(kernel_mixed_derivative(expk, a, one, one, vec1(0.0), vec1(0.0)) ==
              doctest::Approx(1.0).epsilon(1e-14));
        // off-diagonal entries vanish
        CHECK(kernel_mixed_derivative(expk, a, one, MultiIndex({0}), vec1(0.0), vec1(0.0)) == 0.0);
        CHECK(kernel_mixed_derivative(expk, a, MultiIndex({2}), one, vec1(0.0), vec1(0.0)) == 0.0);
    }
    SUBCASE("finite-difference consistency up to order 2 per argument") {
        // the FD step grows with the total differentiation order: nesting
        // four central differences at 1e-4 would drown in roundoff
        const auto exp2 = KernelSpec::exponential(0.9, Eigen::Vector2d(1.1, 0.6));
        const Eigen::VectorXd a2 = Eigen::Vector2d(0.1, -0.2);
        const Eigen::VectorXd x = Eigen::Vector2d(0.4, 0.1);
        const Eigen::VectorXd y = Eigen::Vector2d(-0.1, 0.3);
        for (const auto& beta : enumerate_upto(2, 2))
            for (const auto& gamma : enumerate_upto(2, 2)) {
                const int total = beta.order() + gamma.order();
                const double step = total <= 2 ? 1e-4 : 1e-2;
                const double rtol = total <= 2 ? 1e-5 : 1e-3;
                const double exact = kernel_mixed_derivative(exp2, a2, beta, gamma, x, y);
                const double approx = fd_mixed_derivative(exp2, a2, beta, gamma, x, y, step);
                CHECK(std::abs(exact - approx) <= rtol * (1.0 + std::abs(exact)));
            }
    }
}

TEST_CASE("series tails") {
    const auto expk = KernelSpec::exponential(1.0, 1.0, 1);
    CHECK(series_tail(expk, 0.0, 1) == 0.0);

    // 20-term partial sum oracle for the order-1 tail at h = 0.1
    double oracle = 0.0;
    double term = 1.0;  // q^p / p! running
    const double q = 0.01;
    for (int p = 1; p <= 20; ++p) {
        term *= q / p;
        if (p >= 2) oracle += term;
    }
    CHECK(series_tail(expk, 0.1, 1) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(series_tail(expk, 0.1, 1) == doctest::Approx(5.0167084e-5).epsilon(1e-6));

    const auto szego = KernelSpec::szego(1.0, 1.0, 1);
    CHECK(series_tail(szego, 0.5, 1) == doctest::Approx(1.0 / 12.0).epsilon(1e-14));

    const auto bergman = KernelSpec::bergman(1.0, 1.0, 1);
    // only even orders contribute: sum_{p >= 2} c_p h^{2p} / (p!)^2 at h = 0.5
    double btail = 0.0;
    for (int p = 2; p <= 30; ++p) {
        const double c = bergman.coeff_total(p);
        const double f = factorial(p);
        btail += c * std::pow(0.5, 2 * p) / (f * f);
    }
    CHECK(series_tail(bergman, 0.5, 1) == doctest::Approx(btail).epsilon(1e-12));

    CHECK_THROWS_AS(series_tail(szego, 1.0, 1), DomainError);
}

TEST_CASE("domain checks") {
    const auto szego = KernelSpec::szego(1.0, 1.0, 1);
    CHECK_THROWS_AS(kernel_eval(szego, vec1(0.0), vec1(1.0), vec1(0.0)), DomainError);
    CHECK_NOTHROW(kernel_eval(szego, vec1(0.0), vec1(0.99), vec1(0.0)));
    CHECK_THROWS(KernelSpec::exponential(-1.0, 1.0, 1));
    CHECK_THROWS(KernelSpec::exponential(1.0, 0.0, 1));
    CHECK_THROWS(KernelSpec::szego(1.0, 2.0, 1, 1.0));  // lambda r^2 > 1
}

TEST_CASE("generic families evaluate through the series") {
    // reproduce the exponential family as a generic inner-product kernel
    const auto generic = KernelSpec::inner_product(
        1.5, Eigen::VectorXd::Constant(1, 0.7), KernelSpec::kInfiniteRadius,
        [](int p) { return factorial(p); }, true);
    const auto expk = KernelSpec::exponential(1.5, 0.7, 1);
    for (double x : {-0.5, 0.2, 1.1})
        CHECK(kernel_eval(generic, vec1(0.0), vec1(x), vec1(0.8)) ==
              doctest::Approx(kernel_eval(expk, vec1(0.0), vec1(x), vec1(0.8))).epsilon(1e-12));

    // and as a fully generic power-series kernel in two dimensions
    const auto power = KernelSpec::power_series(
        1.0, Eigen::VectorXd::Ones(2), KernelSpec::kInfiniteRadius,
        [](const MultiIndex& alpha) { return factorial_multi(alpha); }, true);
    const auto exp2 = KernelSpec::exponential(1.0, 1.0, 2);
    const Eigen::VectorXd a = Eigen::VectorXd::Zero(2);
    const Eigen::VectorXd x = Eigen::Vector2d(0.3, -0.4);
    const Eigen::VectorXd y = Eigen::Vector2d(0.5, 0.2);
    CHECK(kernel_eval(power, a, x, y) == doctest::Approx(kernel_eval(exp2, a, x, y)).epsilon(1e-12));
}
