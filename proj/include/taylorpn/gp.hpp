#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <optional>
#include <vector>

#include "taylorpn/kernels.hpp"
#include "taylorpn/multiindex.hpp"

namespace taylorpn {

// Polynomial prior mean, stored as a coefficient map over monomials x^alpha
// in absolute coordinates. The zero polynomial by default.
class PriorMean {
  public:
    PriorMean() = default;
    explicit PriorMean(int dim) : dim_(dim) {}
    static PriorMean zero(int dim) { return PriorMean(dim); }

    PriorMean& set_term(const MultiIndex& alpha, double coeff);
    double operator()(const Eigen::VectorXd& x) const;
    // D^alpha m evaluated at a, exact from the coefficient map.
    double derivative_at(const MultiIndex& alpha, const Eigen::VectorXd& a) const;
    int degree() const;
    int dim() const { return dim_; }

  private:
    int dim_ = 0;  // 0 means "zero polynomial of any dimension"
    std::vector<std::pair<MultiIndex, double>> terms_;
};

// Derivative data D^alpha f(a) for all |alpha| <= order, laid out in the
// enumerate_upto order. noise, when present, holds eps_alpha^2 per index;
// absent means noiseless.
struct DerivativeData {
    Eigen::VectorXd a;
    int order = 0;
    std::vector<double> values;
    std::optional<std::vector<double>> noise;

    DerivativeData(Eigen::VectorXd point, int n, std::vector<double> vals,
                   std::optional<std::vector<double>> noise_vars = std::nullopt);

    int dim() const { return static_cast<int>(a.size()); }
    std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
    bool noisy() const { return noise.has_value(); }
    const std::vector<MultiIndex>& index_set() const { return indices_; }

    double value_at(const MultiIndex& alpha) const;
    double noise_at(const MultiIndex& alpha) const;

  private:
    std::vector<MultiIndex> indices_;
    std::size_t position(const MultiIndex& alpha) const;
};

// Posterior process of a Taylor-kernel GP conditioned on derivative data at
// a single expansion point. Closed-form instances carry diagonal weights; the
// generic instances carry a factorized Gram solve (the oracle path).
// Immutable; mean/cov are pure.
class TaylorPosterior {
  public:
    double mean(const Eigen::VectorXd& x) const;
    double cov(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
    double var(const Eigen::VectorXd& x) const;

    const KernelSpec& kernel() const { return spec_; }
    const DerivativeData& data() const { return data_; }
    int order() const { return data_.order; }

  private:
    friend TaylorPosterior condition(const KernelSpec&, const PriorMean&, const DerivativeData&);
    friend TaylorPosterior condition_generic(const KernelSpec&, const PriorMean&, const DerivativeData&);

    TaylorPosterior(KernelSpec spec, PriorMean prior, DerivativeData data);

    double partial_sum_cov(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double* abs_sum) const;
    double tail_by_summation(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

    KernelSpec spec_;
    PriorMean prior_;
    DerivativeData data_;

    bool closed_form_ = true;
    // closed-form path: per-index shrinkage weights and coefficients
    std::vector<double> mean_coeff_;   // w_i (y_i - D^alpha_i m(a)) / alpha_i!
    std::vector<double> cov_coeff_;    // sigma^2 c_i lambda^alpha_i / (alpha_i!)^2
    std::vector<double> infl_coeff_;   // noisy inflation per index
    // generic path: factorized R_a + E and precomputed weights
    Eigen::LDLT<Eigen::MatrixXd> gram_;
    Eigen::VectorXd gen_weights_;
};

// Closed-form conditioning (no matrix solve): the posterior mean is the
// (shrunk) Taylor polynomial, the covariance the kernel tail plus noisy
// inflation terms. Throws SingularModel if some c_alpha = 0 carries zero
// noise.
TaylorPosterior condition(const KernelSpec& spec, const PriorMean& prior, const DerivativeData& data);

// Matrix-form conditioning through the generic GP regression equations:
// builds R_a and r_a(x) by termwise kernel differentiation and solves the
// linear system. Numerically equal to condition(); kept as the independent
// route for cross-checks. Throws IllConditioned if the solve fails.
TaylorPosterior condition_generic(const KernelSpec& spec, const PriorMean& prior, const DerivativeData& data);

// C_{n,r} = sum_{|alpha| = n+1} c_alpha lambda^alpha / (alpha!)^2
//         + r^{-2(n+1)} sum_{|alpha| > n+1} c_alpha lambda^alpha r^{2|alpha|} / (alpha!)^2,
// by truncated summation. Uses the kernel radius unless an explicit
// evaluation radius is supplied (required for infinite-radius kernels).
// Throws Diverges if the series keeps growing within the budget.
double variance_bound_constant(const KernelSpec& spec, int n, double evaluation_radius = -1.0);

}  // namespace taylorpn
