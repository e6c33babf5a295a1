#pragma once

#include <Eigen/Core>
#include <functional>
#include <limits>
#include <string>

#include "taylorpn/multiindex.hpp"

namespace taylorpn {

enum class KernelFamily {
    Exponential,         // c_p = p!, closed form sigma^2 exp(<u,v>_lambda), radius = inf
    Szego,               // c_p = (p!)^2, closed form sigma^2 / (1 - <u,v>_lambda), radius <= 1
    Bergman,             // c_{2p} = (p!)^2, zero odd coefficients, radius <= 1
    GenericInnerProduct,  // caller-supplied c_p sequence
    GenericPowerSeries,   // caller-supplied c_alpha map
};

std::string family_name(KernelFamily family);

// A power-series (Taylor) kernel
//   K(u, v) = sigma^2 sum_alpha c_alpha lambda^alpha / (alpha!)^2 u^alpha v^alpha
// on the ball of the configured radius, shifted to an expansion point a via
// K_a(x, y) = K(x - a, y - a). Inner-product families have
// c_alpha = c_|alpha| alpha! / |alpha|! and collapse to a scalar series in
// <u, v>_lambda = sum_i lambda_i u_i v_i.
//
// Immutable after construction; all evaluation entry points are pure.
class KernelSpec {
  public:
    static constexpr double kInfiniteRadius = std::numeric_limits<double>::infinity();

    static KernelSpec exponential(double sigma2, Eigen::VectorXd lambda);
    static KernelSpec exponential(double sigma2, double lambda, int dim);
    static KernelSpec szego(double sigma2, Eigen::VectorXd lambda, double radius = 1.0);
    static KernelSpec szego(double sigma2, double lambda, int dim, double radius = 1.0);
    static KernelSpec bergman(double sigma2, Eigen::VectorXd lambda, double radius = 1.0);
    static KernelSpec bergman(double sigma2, double lambda, int dim, double radius = 1.0);
    // Arbitrary inner-product coefficient sequence c_p. The caller asserts the
    // summability of its series at the given radius; it is not verified.
    static KernelSpec inner_product(double sigma2, Eigen::VectorXd lambda, double radius,
                                    std::function<double(int)> coeff_seq, bool summability_asserted);
    // Fully general coefficient map c_alpha, same caller-side contract.
    static KernelSpec power_series(double sigma2, Eigen::VectorXd lambda, double radius,
                                   std::function<double(const MultiIndex&)> coeff_map,
                                   bool summability_asserted);

    KernelFamily family() const { return family_; }
    int dim() const { return static_cast<int>(lambda_.size()); }
    double sigma2() const { return sigma2_; }
    const Eigen::VectorXd& lambda() const { return lambda_; }
    double radius() const { return radius_; }
    bool is_inner_product() const;

    // c_p of the scalar series; inner-product families only.
    double coeff_total(int p) const;
    // c_alpha of the multivariate series (2); zero for Bergman odd orders.
    double coefficient(const MultiIndex& alpha) const;
    // lambda^alpha
    double lambda_pow(const MultiIndex& alpha) const;

    void check_in_domain(const Eigen::VectorXd& a, const Eigen::VectorXd& point) const;

  private:
    KernelSpec(KernelFamily family, double sigma2, Eigen::VectorXd lambda, double radius);

    KernelFamily family_;
    double sigma2_;
    Eigen::VectorXd lambda_;
    double radius_;
    std::function<double(int)> coeff_seq_;
    std::function<double(const MultiIndex&)> coeff_map_;
};

// K_a(x, y). Closed form for Exponential and Szego; adaptive partial
// summation (stop when the next term falls below 1e-15 of the partial sum,
// cap 60 terms) otherwise. Throws DomainError outside the radius.
double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y);

// D_y^beta D_x^gamma K_a(x, y), summed from the termwise-differentiated
// series. At x = y = a this collapses to the diagonal sigma^2 c_beta
// lambda^beta delta_{beta gamma}.
double kernel_mixed_derivative(const KernelSpec& spec, const Eigen::VectorXd& a, const MultiIndex& beta,
                               const MultiIndex& gamma, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// sum_{p > n} c_p lambda^p h^{2p} / (p!)^2 for a univariate kernel. For the
// Exponential family with n = 1 this is the closed form exp(lambda h^2) - 1
// - lambda h^2, evaluated cancellation-free via expm1.
double series_tail(const KernelSpec& spec, double h, int n);

}  // namespace taylorpn
