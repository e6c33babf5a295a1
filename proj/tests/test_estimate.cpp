#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "taylorpn/errors.hpp"
#include "taylorpn/estimate.hpp"
#include "taylorpn/rng.hpp"

using namespace taylorpn;

namespace {

Eigen::VectorXd vec1(double x) { return Eigen::VectorXd::Constant(1, x); }

// Exact noiseless negative log-likelihood over the diagonal model, written
// from scratch as the oracle for every closed-form estimate below.
double nll(const KernelSpec& spec, const DerivativeData& data, double sigma2,
           const Eigen::VectorXd& lambda) {
    double value = 0.0;
    const auto& idx = data.index_set();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        double lam_pow = 1.0;
        for (int j = 0; j < idx[i].dim(); ++j)
            for (int k = 0; k < idx[i][j]; ++k) lam_pow *= lambda[j];
        const double diag = sigma2 * spec.coefficient(idx[i]) * lam_pow;
        value += 0.5 * (data.values[i] * data.values[i] / diag + std::log(diag));
    }
    return value;
}

double nll_uniform(const KernelSpec& spec, const DerivativeData& data, double sigma2, double lambda) {
    return nll(spec, data, sigma2, Eigen::VectorXd::Constant(spec.dim(), lambda));
}

// Noisy d = n = 1 negative log-likelihood (up to its constant term).
double nll_noisy(double c0, double c1, double lambda, double y0, double y1, double e0, double e1,
                 double sigma2) {
    const double v0 = sigma2 * c0 + e0;
    const double v1 = sigma2 * c1 * lambda + e1;
    return 0.5 * (y0 * y0 / v0 + y1 * y1 / v1 + std::log(v0) + std::log(v1));
}

double golden_section(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    for (int i = 0; i < iters; ++i) {
        if (f(c) < f(d)) b = d; else a = c;
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    return 0.5 * (a + b);
}

DerivativeData order1(double value, const Eigen::VectorXd& grad) {
    const int d = static_cast<int>(grad.size());
    const auto idx = enumerate_upto(d, 1);
    std::vector<double> values(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i].order() == 0) values[i] = value;
        else
            for (int j = 0; j < d; ++j)
                if (idx[i][j] == 1) values[i] = grad[j];
    }
    return DerivativeData(Eigen::VectorXd::Zero(d), 1, std::move(values));
}

DerivativeData order2(double value, const Eigen::VectorXd& grad, const Eigen::MatrixXd& hess) {
    const int d = static_cast<int>(grad.size());
    const auto idx = enumerate_upto(d, 2);
    std::vector<double> values(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& alpha = idx[i];
        if (alpha.order() == 0) {
            values[i] = value;
        } else if (alpha.order() == 1) {
            for (int j = 0; j < d; ++j)
                if (alpha[j] == 1) values[i] = grad[j];
        } else {
            for (int j = 0; j < d; ++j) {
                if (alpha[j] == 2) values[i] = hess(j, j);
                for (int k = j + 1; k < d; ++k)
                    if (alpha[j] == 1 && alpha[k] == 1) values[i] = hess(j, k);
            }
        }
    }
    return DerivativeData(Eigen::VectorXd::Zero(d), 2, std::move(values));
}

}  // namespace

TEST_CASE("cubic root solver") {
    const auto check_roots = [](const CubicCoefficients& c, const std::vector<double>& expected) {
        const auto roots = solve_cubic_real(c);
        REQUIRE(roots.size() == expected.size());
        for (std::size_t i = 0; i < roots.size(); ++i)
            CHECK(roots[i] == doctest::Approx(expected[i]).epsilon(1e-9));
    };
    check_roots({1, -6, 11, -6}, {1, 2, 3});
    check_roots({1, 0, 0, -8}, {2});
    check_roots({1, -3, 3, -1}, {1});
    CHECK_THROWS(solve_cubic_real({0, 1, 1, 1}));
}

TEST_CASE("cubic roots on random coefficients: residuals and count") {
    GaussianRng rng(5);
    int three_root_cases = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        CubicCoefficients c{rng.gaussian(), rng.gaussian(), rng.gaussian(), rng.gaussian()};
        if (std::abs(c.a3) < 1e-3) c.a3 += std::copysign(1.0, c.a3 == 0.0 ? 1.0 : c.a3);
        const auto roots = solve_cubic_real(c);
        const double coeff_scale =
            std::max({std::abs(c.a3), std::abs(c.a2), std::abs(c.a1), std::abs(c.a0)});
        for (double r : roots) {
            const double resid = ((c.a3 * r + c.a2) * r + c.a1) * r + c.a0;
            CHECK(std::abs(resid) <= 1e-9 * coeff_scale * std::max(1.0, r * r * r));
        }
        // discriminant sign analysis of a x^3 + b x^2 + c x + d
        const double a = c.a3, b = c.a2, cc = c.a1, d = c.a0;
        const double disc = 18 * a * b * cc * d - 4 * b * b * b * d + b * b * cc * cc -
                            4 * a * cc * cc * cc - 27 * a * a * d * d;
        if (disc > 1e-8) {
            CHECK(roots.size() == 3);
            ++three_root_cases;
        } else if (disc < -1e-8) {
            CHECK(roots.size() == 1);
        }
    }
    CHECK(three_root_cases > 50);  // the sample genuinely exercises both branches
}

TEST_CASE("sigma MLE for noiseless data") {
    const auto spec = KernelSpec::exponential(1.0, 1.0, 1);

    SUBCASE("worked example") {
        // (1/2)(2^2/1 + 4^2/1) = 10
        const DerivativeData data(vec1(0.0), 1, {2.0, 4.0});
        const double estimate = sigma_ml(spec, PriorMean{}, data);
        CHECK(estimate == doctest::Approx(10.0).epsilon(1e-14));
        // and it minimises the exact likelihood
        const double oracle = golden_section(
            [&](double s) { return nll(spec, data, s, vec1(1.0)); }, 1e-3, 100.0);
        CHECK(estimate == doctest::Approx(oracle).epsilon(1e-6));
    }
    SUBCASE("zero residuals are degenerate") {
        PriorMean prior;
        prior.set_term(MultiIndex({1}), 3.0);
        CHECK_THROWS_AS(sigma_ml(spec, prior, DerivativeData(vec1(0.0), 1, {0.0, 3.0})), DegenerateData);
    }
    SUBCASE("order 0 reduces to f_m(a)^2 / c_0") {
        CHECK(sigma_ml(spec, PriorMean{}, DerivativeData(vec1(0.0), 0, {-3.0})) == 9.0);
    }
    SUBCASE("random multivariate instances match the numeric maximiser") {
        GaussianRng rng(7);
        const auto spec2 = KernelSpec::exponential(1.0, Eigen::Vector2d(0.8, 1.7));
        for (int rep = 0; rep < 10; ++rep) {
            const auto data = order1(1.0 + rng.uniform(), rng.gaussian_vector(2));
            const double estimate = sigma_ml(spec2, PriorMean{}, data);
            const double oracle = golden_section(
                [&](double s) { return nll(spec2, data, s, spec2.lambda()); }, 1e-4, 100.0);
            CHECK(estimate == doctest::Approx(oracle).epsilon(1e-6));
        }
    }
}

TEST_CASE("joint sigma/lambda MLE at order 1") {
    const auto spec = KernelSpec::exponential(1.0, 1.0, 1);

    SUBCASE("univariate worked example") {
        const auto [sigma2, lambda] = lambda_ml_n1(spec, PriorMean{}, order1(1.0, vec1(2.0)));
        CHECK(sigma2 == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(lambda[0] == doctest::Approx(4.0).epsilon(1e-14));
        // grid + refine over (sigma^2, lambda) as an independent maximiser
        const DerivativeData data = order1(1.0, vec1(2.0));
        double best_s = 1.0, best_l = 1.0, best = 1e300;
        for (double s = 0.05; s <= 4.0; s += 0.05)
            for (double l = 0.2; l <= 8.0; l += 0.05) {
                const double v = nll_uniform(spec, data, s, l);
                if (v < best) { best = v; best_s = s; best_l = l; }
            }
        CHECK(std::abs(best_s - sigma2) <= 0.051);
        CHECK(std::abs(best_l - lambda[0]) <= 0.051);
    }
    SUBCASE("vanishing gradient is flagged") {
        CHECK_THROWS_AS(lambda_ml_n1(spec, PriorMean{}, order1(1.0, vec1(0.0))), Unstable);
    }
    SUBCASE("small f_m(a) is flagged") {
        CHECK_THROWS_AS(lambda_ml_n1(spec, PriorMean{}, order1(1e-12, vec1(2.0))), Unstable);
    }
    SUBCASE("bivariate worked example") {
        const auto spec2 = KernelSpec::exponential(1.0, 1.0, 2);
        const auto [sigma2, lambda] = lambda_ml_n1(spec2, PriorMean{}, order1(1.0, Eigen::Vector2d(1.0, 3.0)));
        CHECK(sigma2 == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(lambda[0] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(lambda[1] == doctest::Approx(9.0).epsilon(1e-14));
    }
    SUBCASE("stationarity across random instances") {
        GaussianRng rng(13);
        const auto spec3 = KernelSpec::exponential(1.0, 1.0, 3);
        for (int rep = 0; rep < 20; ++rep) {
            Eigen::VectorXd grad = rng.gaussian_vector(3);
            for (int j = 0; j < 3; ++j)
                if (std::abs(grad[j]) < 0.1) grad[j] = 0.5;
            const auto data = order1(1.0 + rng.uniform(), grad);
            const auto [sigma2, lambda] = lambda_ml_n1(spec3, PriorMean{}, data);
            const double base = nll(spec3, data, sigma2, lambda);
            const double hs = 1e-6 * sigma2;
            const double fd_s = (nll(spec3, data, sigma2 + hs, lambda) -
                                 nll(spec3, data, sigma2 - hs, lambda)) / (2.0 * hs);
            CHECK(std::abs(fd_s) * sigma2 <= 1e-5 * (1.0 + std::abs(base)));
            for (int j = 0; j < 3; ++j) {
                Eigen::VectorXd hi = lambda, lo = lambda;
                const double hl = 1e-6 * lambda[j];
                hi[j] += hl;
                lo[j] -= hl;
                const double fd_l = (nll(spec3, data, sigma2, hi) - nll(spec3, data, sigma2, lo)) / (2.0 * hl);
                CHECK(std::abs(fd_l) * lambda[j] <= 1e-5 * (1.0 + std::abs(base)));
            }
        }
    }
}

TEST_CASE("uniform-lambda MLE at order 2") {
    const auto spec = KernelSpec::exponential(1.0, 1.0, 1);

    SUBCASE("univariate worked example") {
        const auto data = order2(1.0, vec1(0.0), Eigen::MatrixXd::Constant(1, 1, 2.0));
        const auto [sigma2, lambda] = lambda_ml_n2_uniform(spec, PriorMean{}, data);
        // lambda = sqrt(c0/c2) |f''/f| with c0 = 1, c2 = 2 for this family
        CHECK(lambda == doctest::Approx(std::sqrt(0.5) * 2.0).epsilon(1e-12));
        const double expected_sigma2 =
            (1.0 + 0.0 + 4.0 / (2.0 * lambda * lambda)) / 3.0;
        CHECK(sigma2 == doctest::Approx(expected_sigma2).epsilon(1e-12));
    }
    SUBCASE("spec'd coefficients c0 = c1 = c2 = 1") {
        const auto unit = KernelSpec::inner_product(1.0, Eigen::VectorXd::Ones(1), 2.0,
                                                    [](int) { return 1.0; }, true);
        const auto data = order2(1.0, vec1(0.0), Eigen::MatrixXd::Constant(1, 1, 2.0));
        const auto [sigma2, lambda] = lambda_ml_n2_uniform(unit, PriorMean{}, data);
        CHECK(lambda == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(sigma2 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        // numeric maximisation cross-check
        double best_s = 1, best_l = 1, best = 1e300;
        for (double s = 0.05; s <= 3.0; s += 0.02)
            for (double l = 0.5; l <= 4.0; l += 0.02) {
                const double v = nll_uniform(unit, data, s, l);
                if (v < best) { best = v; best_s = s; best_l = l; }
            }
        CHECK(std::abs(best_s - sigma2) <= 0.021);
        CHECK(std::abs(best_l - lambda) <= 0.021);
    }
    SUBCASE("zero Hessian is flagged") {
        const auto data = order2(1.0, vec1(0.5), Eigen::MatrixXd::Zero(1, 1));
        CHECK_THROWS_AS(lambda_ml_n2_uniform(spec, PriorMean{}, data), Unstable);
    }
    SUBCASE("bivariate stationarity by finite differences") {
        GaussianRng rng(19);
        const auto spec2 = KernelSpec::exponential(1.0, 1.0, 2);
        for (int rep = 0; rep < 20; ++rep) {
            Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(2, 2);
            hess(0, 0) = 1.0 + rng.uniform();
            hess(1, 1) = -1.0 - rng.uniform();
            hess(0, 1) = hess(1, 0) = rng.gaussian();
            const auto data = order2(1.0 + rng.uniform(), rng.gaussian_vector(2), hess);
            const auto [sigma2, lambda] = lambda_ml_n2_uniform(spec2, PriorMean{}, data);
            const double base = nll_uniform(spec2, data, sigma2, lambda);
            const double hl = 1e-6 * lambda;
            const double fd_l = (nll_uniform(spec2, data, sigma2, lambda + hl) -
                                 nll_uniform(spec2, data, sigma2, lambda - hl)) / (2.0 * hl);
            CHECK(std::abs(fd_l) * lambda <= 1e-6 * (1.0 + std::abs(base)) * 10.0);
            const double hs = 1e-6 * sigma2;
            const double fd_s = (nll_uniform(spec2, data, sigma2 + hs, lambda) -
                                 nll_uniform(spec2, data, sigma2 - hs, lambda)) / (2.0 * hs);
            CHECK(std::abs(fd_s) * sigma2 <= 1e-6 * (1.0 + std::abs(base)) * 10.0);
        }
    }
}

TEST_CASE("anisotropic lambda MLE at order 2") {
    SUBCASE("univariate case reduces to the uniform result") {
        const auto spec = KernelSpec::exponential(1.0, 1.0, 1);
        const auto data = order2(0.8, vec1(0.4), Eigen::MatrixXd::Constant(1, 1, 1.7));
        const auto [sigma2_u, lambda_u] = lambda_ml_n2_uniform(spec, PriorMean{}, data);
        const Eigen::VectorXd lambda = lambda_ml_n2_aniso(spec, PriorMean{}, data);
        CHECK(lambda[0] == doctest::Approx(lambda_u).epsilon(1e-9));
        (void)sigma2_u;
    }
    SUBCASE("stationarity of the coupled system") {
        GaussianRng rng(29);
        const auto spec2 = KernelSpec::exponential(1.0, 1.0, 2);
        for (int rep = 0; rep < 10; ++rep) {
            Eigen::MatrixXd hess(2, 2);
            hess(0, 0) = 1.0 + rng.uniform();
            hess(1, 1) = 2.0 + rng.uniform();
            hess(0, 1) = hess(1, 0) = rep % 2 ? 0.0 : 0.5 * rng.gaussian();  // separable half the time
            const auto data = order2(1.0 + rng.uniform(), rng.gaussian_vector(2), hess);
            const Eigen::VectorXd lambda = lambda_ml_n2_aniso(spec2, PriorMean{}, data);
            const double sigma2 = [&] {
                // profile sigma^2 at the returned lambda via the general MLE
                double sum = 0.0;
                const auto& idx = data.index_set();
                for (std::size_t i = 0; i < idx.size(); ++i) {
                    double lam_pow = 1.0;
                    for (int j = 0; j < 2; ++j)
                        for (int k = 0; k < idx[i][j]; ++k) lam_pow *= lambda[j];
                    sum += data.values[i] * data.values[i] / (spec2.coefficient(idx[i]) * lam_pow);
                }
                return sum / static_cast<double>(idx.size());
            }();
            const double base = nll(spec2, data, sigma2, lambda);
            for (int j = 0; j < 2; ++j) {
                Eigen::VectorXd hi = lambda, lo = lambda;
                const double hl = 1e-5 * lambda[j];
                hi[j] += hl;
                lo[j] -= hl;
                const double fd = (nll(spec2, data, sigma2, hi) - nll(spec2, data, sigma2, lo)) / (2.0 * hl);
                CHECK(std::abs(fd) * lambda[j] <= 1e-5 * (1.0 + std::abs(base)));
            }
        }
    }
    SUBCASE("degenerate diagonal curvature is flagged") {
        const auto spec2 = KernelSpec::exponential(1.0, 1.0, 2);
        Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(2, 2);
        hess(0, 0) = 1.0;  // second coordinate has no curvature
        const auto data = order2(1.0, Eigen::Vector2d(0.5, 0.5), hess);
        CHECK_THROWS_AS(lambda_ml_n2_aniso(spec2, PriorMean{}, data), Unstable);
    }
}

TEST_CASE("noisy sigma MLE via the cubic") {
    SUBCASE("noiseless input uses the exact closed form") {
        CHECK(sigma_ml_noisy_n1(1.0, 1.0, 1.0, 2.0, 4.0, 0.0, 0.0, 1e-6) ==
              doctest::Approx(10.0).epsilon(1e-14));
    }
    SUBCASE("worked noisy example against a likelihood grid search") {
        const double estimate = sigma_ml_noisy_n1(1.0, 1.0, 1.0, 2.0, 0.0, 1.0, 1.0, 1e-6);
        double best = 1e300, best_s = 0.0;
        for (double s = 1e-4; s <= 20.0; s += 1e-4) {
            const double v = nll_noisy(1.0, 1.0, 1.0, 2.0, 0.0, 1.0, 1.0, s);
            if (v < best) { best = v; best_s = s; }
        }
        CHECK(std::abs(estimate - best_s) <= 1e-4);
    }
    SUBCASE("all-zero data falls back to sigma_min^2") {
        CHECK(sigma_ml_noisy_n1(1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.25) == doctest::Approx(0.0625));
        // confirm the cubic really has no positive root there
        const auto roots = solve_cubic_real(noisy_mle_cubic(1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0));
        for (double r : roots) CHECK(r <= 0.0);
    }
    SUBCASE("stationarity of the returned root") {
        GaussianRng rng(37);
        for (int rep = 0; rep < 50; ++rep) {
            const double y0 = rng.gaussian(), y1 = rng.gaussian();
            const double e0 = 0.01 + 0.5 * rng.uniform(), e1 = 0.01 + 0.5 * rng.uniform();
            const double estimate = sigma_ml_noisy_n1(1.0, 1.0, 0.7, y0, y1, e0, e1, 1e-3);
            if (estimate == 1e-6) continue;  // fallback, nothing to check
            const double base = nll_noisy(1.0, 1.0, 0.7, y0, y1, e0, e1, estimate);
            const double hs = 1e-6 * estimate;
            const double fd = (nll_noisy(1.0, 1.0, 0.7, y0, y1, e0, e1, estimate + hs) -
                               nll_noisy(1.0, 1.0, 0.7, y0, y1, e0, e1, estimate - hs)) / (2.0 * hs);
            CHECK(std::abs(fd) * estimate <= 1e-5 * (1.0 + std::abs(base)));
        }
    }
}
