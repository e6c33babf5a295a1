#include "taylorpn/kernels.hpp"

#include <cmath>
#include <stdexcept>

#include "taylorpn/errors.hpp"

namespace taylorpn {

namespace {

constexpr int kMaxSeriesTerms = 60;
constexpr double kSeriesRelTol = 1e-15;

void require_positive_lambda(const Eigen::VectorXd& lambda) {
    if (lambda.size() == 0) throw std::invalid_argument("KernelSpec: lambda must have length >= 1");
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
        if (!(lambda[i] > 0.0)) throw std::invalid_argument("KernelSpec: every lambda_i must be > 0");
}

Eigen::VectorXd broadcast(double lambda, int dim) { return Eigen::VectorXd::Constant(dim, lambda); }

}  // namespace

std::string family_name(KernelFamily family) {
    switch (family) {
        case KernelFamily::Exponential: return "exponential";
        case KernelFamily::Szego: return "szego";
        case KernelFamily::Bergman: return "bergman";
        case KernelFamily::GenericInnerProduct: return "generic-inner-product";
        case KernelFamily::GenericPowerSeries: return "generic-power-series";
    }
    return "unknown";
}

KernelSpec::KernelSpec(KernelFamily family, double sigma2, Eigen::VectorXd lambda, double radius)
    : family_(family), sigma2_(sigma2), lambda_(std::move(lambda)), radius_(radius) {
    if (!(sigma2_ > 0.0)) throw std::invalid_argument("KernelSpec: sigma2 must be > 0");
    require_positive_lambda(lambda_);
    if (!(radius_ > 0.0)) throw std::invalid_argument("KernelSpec: radius must be > 0");
}

KernelSpec KernelSpec::exponential(double sigma2, Eigen::VectorXd lambda) {
    return KernelSpec(KernelFamily::Exponential, sigma2, std::move(lambda), kInfiniteRadius);
}

KernelSpec KernelSpec::exponential(double sigma2, double lambda, int dim) {
    return exponential(sigma2, broadcast(lambda, dim));
}

KernelSpec KernelSpec::szego(double sigma2, Eigen::VectorXd lambda, double radius) {
    if (!(radius <= 1.0)) throw std::invalid_argument("KernelSpec: Szego radius must be <= 1");
    KernelSpec spec(KernelFamily::Szego, sigma2, std::move(lambda), radius);
    // |<u,v>_lambda| < max(lambda) r^2 must stay below 1 for the geometric series
    if (!(spec.lambda_.maxCoeff() * radius * radius <= 1.0))
        throw std::invalid_argument("KernelSpec: Szego requires max(lambda) * radius^2 <= 1");
    return spec;
}

KernelSpec KernelSpec::szego(double sigma2, double lambda, int dim, double radius) {
    return szego(sigma2, broadcast(lambda, dim), radius);
}

KernelSpec KernelSpec::bergman(double sigma2, Eigen::VectorXd lambda, double radius) {
    if (!(radius <= 1.0)) throw std::invalid_argument("KernelSpec: Bergman radius must be <= 1");
    KernelSpec spec(KernelFamily::Bergman, sigma2, std::move(lambda), radius);
    if (!(spec.lambda_.maxCoeff() * radius * radius <= 1.0))
        throw std::invalid_argument("KernelSpec: Bergman requires max(lambda) * radius^2 <= 1");
    return spec;
}

KernelSpec KernelSpec::bergman(double sigma2, double lambda, int dim, double radius) {
    return bergman(sigma2, broadcast(lambda, dim), radius);
}

KernelSpec KernelSpec::inner_product(double sigma2, Eigen::VectorXd lambda, double radius,
                                     std::function<double(int)> coeff_seq, bool summability_asserted) {
    if (!summability_asserted)
        throw std::invalid_argument("KernelSpec: generic families require the caller to assert summability");
    KernelSpec spec(KernelFamily::GenericInnerProduct, sigma2, std::move(lambda), radius);
    spec.coeff_seq_ = std::move(coeff_seq);
    return spec;
}

KernelSpec KernelSpec::power_series(double sigma2, Eigen::VectorXd lambda, double radius,
                                    std::function<double(const MultiIndex&)> coeff_map,
                                    bool summability_asserted) {
    if (!summability_asserted)
        throw std::invalid_argument("KernelSpec: generic families require the caller to assert summability");
    KernelSpec spec(KernelFamily::GenericPowerSeries, sigma2, std::move(lambda), radius);
    spec.coeff_map_ = std::move(coeff_map);
    return spec;
}

bool KernelSpec::is_inner_product() const { return family_ != KernelFamily::GenericPowerSeries; }

double KernelSpec::coeff_total(int p) const {
    if (p < 0) throw std::invalid_argument("coeff_total: order must be >= 0");
    switch (family_) {
        case KernelFamily::Exponential: return factorial(p);
        case KernelFamily::Szego: {
            const double f = factorial(p);
            return f * f;
        }
        case KernelFamily::Bergman: {
            if (p % 2 != 0) return 0.0;
            const double f = factorial(p / 2);
            return f * f;
        }
        case KernelFamily::GenericInnerProduct: return coeff_seq_(p);
        case KernelFamily::GenericPowerSeries:
            throw std::invalid_argument("coeff_total: not defined for a generic power-series kernel");
    }
    return 0.0;
}

double KernelSpec::coefficient(const MultiIndex& alpha) const {
    if (alpha.dim() != dim()) throw std::invalid_argument("coefficient: dimension mismatch");
    if (family_ == KernelFamily::GenericPowerSeries) return coeff_map_(alpha);
    // c_alpha = c_|alpha| alpha! / |alpha|! via the multinomial expansion
    return coeff_total(alpha.order()) * factorial_multi(alpha) / factorial(alpha.order());
}

double KernelSpec::lambda_pow(const MultiIndex& alpha) const {
    double prod = 1.0;
    for (int j = 0; j < alpha.dim(); ++j)
        for (int k = 0; k < alpha[j]; ++k) prod *= lambda_[j];
    return prod;
}

void KernelSpec::check_in_domain(const Eigen::VectorXd& a, const Eigen::VectorXd& point) const {
    if (point.size() != dim() || a.size() != dim())
        throw std::invalid_argument("kernel: point dimension mismatch");
    if (std::isinf(radius_)) return;
    if ((point - a).norm() >= radius_)
        throw DomainError("kernel: point outside the domain ball of radius " + std::to_string(radius_));
}

namespace {

// Scalar series sigma^2 sum_p c_p q^p / (p!)^2 for inner-product families
// without a closed form, with the term recurrences kept overflow-free.
double inner_product_series(const KernelSpec& spec, double q) {
    double sum = 0.0;
    double qpow = 1.0;       // q^p
    double invfact2 = 1.0;   // 1 / (p!)^2
    for (int p = 0; p < kMaxSeriesTerms; ++p) {
        if (p > 0) {
            qpow *= q;
            invfact2 /= static_cast<double>(p) * static_cast<double>(p);
        }
        const double term = spec.coeff_total(p) * qpow * invfact2;
        sum += term;
        if (p > 0 && std::abs(term) < kSeriesRelTol * std::abs(sum)) break;
    }
    return spec.sigma2() * sum;
}

// Degree-block summation of the full multivariate series for generic
// power-series kernels.
double power_series_eval(const KernelSpec& spec, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    double sum = 0.0;
    int quiet_blocks = 0;
    for (int p = 0; p < kMaxSeriesTerms; ++p) {
        double block = 0.0;
        for (const MultiIndex& alpha : enumerate_exact(spec.dim(), p)) {
            const double fa = factorial_multi(alpha);
            block += spec.coefficient(alpha) * spec.lambda_pow(alpha) / (fa * fa) *
                     monomial_centred(u, alpha) * monomial_centred(v, alpha);
        }
        sum += block;
        if (p > 0 && std::abs(block) < kSeriesRelTol * (std::abs(sum) + 1e-300)) {
            if (++quiet_blocks >= 2) break;
        } else {
            quiet_blocks = 0;
        }
    }
    return spec.sigma2() * sum;
}

}  // namespace

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) {
    spec.check_in_domain(a, x);
    spec.check_in_domain(a, y);
    const Eigen::VectorXd u = x - a;
    const Eigen::VectorXd v = y - a;
    const double q = (spec.lambda().array() * u.array() * v.array()).sum();
    switch (spec.family()) {
        case KernelFamily::Exponential: return spec.sigma2() * std::exp(q);
        case KernelFamily::Szego: return spec.sigma2() / (1.0 - q);
        case KernelFamily::Bergman:
        case KernelFamily::GenericInnerProduct: return inner_product_series(spec, q);
        case KernelFamily::GenericPowerSeries: return power_series_eval(spec, u, v);
    }
    return 0.0;
}

double kernel_mixed_derivative(const KernelSpec& spec, const Eigen::VectorXd& a, const MultiIndex& beta,
                               const MultiIndex& gamma, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    spec.check_in_domain(a, x);
    spec.check_in_domain(a, y);
    if (beta.dim() != spec.dim() || gamma.dim() != spec.dim())
        throw std::invalid_argument("kernel_mixed_derivative: multi-index dimension mismatch");
    const Eigen::VectorXd u = x - a;  // gamma differentiates in x
    const Eigen::VectorXd v = y - a;  // beta differentiates in y
    const MultiIndex base = beta.cwise_max(gamma);

    // sum over alpha >= max(beta, gamma) of
    //   c_alpha lambda^alpha u^(alpha-gamma) v^(alpha-beta) / ((alpha-gamma)! (alpha-beta)!)
    double sum = 0.0;
    int quiet_blocks = 0;
    for (int extra = 0; extra < kMaxSeriesTerms; ++extra) {
        double block = 0.0;
        for (const MultiIndex& delta : enumerate_exact(spec.dim(), extra)) {
            std::vector<int> av(static_cast<std::size_t>(spec.dim()));
            for (int j = 0; j < spec.dim(); ++j) av[static_cast<std::size_t>(j)] = base[j] + delta[j];
            const MultiIndex alpha(std::move(av));
            const double c = spec.coefficient(alpha);
            if (c == 0.0) continue;
            block += c * spec.lambda_pow(alpha) * monomial_centred(u, alpha - gamma) *
                     monomial_centred(v, alpha - beta) /
                     (factorial_multi(alpha - gamma) * factorial_multi(alpha - beta));
        }
        sum += block;
        if (extra > 0 && std::abs(block) < kSeriesRelTol * (std::abs(sum) + 1e-300)) {
            if (++quiet_blocks >= 2) break;
        } else {
            quiet_blocks = 0;
        }
    }
    return spec.sigma2() * sum;
}

double series_tail(const KernelSpec& spec, double h, int n) {
    if (spec.dim() != 1) throw std::invalid_argument("series_tail: univariate kernels only");
    if (h < 0.0) throw std::invalid_argument("series_tail: h must be >= 0");
    if (n < 0) throw std::invalid_argument("series_tail: n must be >= 0");
    if (!std::isinf(spec.radius()) && h >= spec.radius())
        throw DomainError("series_tail: h outside the domain radius");
    if (h == 0.0) return 0.0;
    const double q = spec.lambda()[0] * h * h;

    if (spec.family() == KernelFamily::Exponential) {
        // tail of exp(q): for n = 1 use expm1(q) - q, otherwise subtract the
        // leading partial sum term by term (n stays small in practice)
        if (n == 0) return spec.sigma2() * std::expm1(q);
        if (n == 1) return spec.sigma2() * (std::expm1(q) - q);
        double partial = 0.0;
        double term = 1.0;
        for (int p = 1; p <= n; ++p) {
            term *= q / static_cast<double>(p);
            partial += term;
        }
        return spec.sigma2() * (std::expm1(q) - partial);
    }
    if (spec.family() == KernelFamily::Szego) {
        // geometric tail: q^{n+1} / (1 - q)
        double qpow = 1.0;
        for (int p = 0; p <= n; ++p) qpow *= q;
        return spec.sigma2() * qpow / (1.0 - q);
    }
    // direct ascending summation from p = n + 1; cancellation-free
    double sum = 0.0;
    double qpow = 1.0;
    double invfact2 = 1.0;
    for (int p = 1; p <= n; ++p) {
        qpow *= q;
        invfact2 /= static_cast<double>(p) * static_cast<double>(p);
    }
    for (int p = n + 1; p < n + 1 + kMaxSeriesTerms; ++p) {
        qpow *= q;
        invfact2 /= static_cast<double>(p) * static_cast<double>(p);
        const double term = spec.coeff_total(p) * qpow * invfact2;
        sum += term;
        if (term != 0.0 && std::abs(term) < kSeriesRelTol * std::abs(sum)) break;
    }
    return spec.sigma2() * sum;
}

}  // namespace taylorpn
