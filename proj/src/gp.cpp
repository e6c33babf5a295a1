#include "taylorpn/gp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "taylorpn/errors.hpp"

namespace taylorpn {

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();
}

// ---------------------------------------------------------------- PriorMean

PriorMean& PriorMean::set_term(const MultiIndex& alpha, double coeff) {
    if (dim_ == 0) dim_ = alpha.dim();
    if (alpha.dim() != dim_) throw std::invalid_argument("PriorMean: term dimension mismatch");
    for (auto& [idx, c] : terms_) {
        if (idx == alpha) {
            c = coeff;
            return *this;
        }
    }
    terms_.emplace_back(alpha, coeff);
    return *this;
}

double PriorMean::operator()(const Eigen::VectorXd& x) const {
    double sum = 0.0;
    const Eigen::VectorXd origin = Eigen::VectorXd::Zero(x.size());
    for (const auto& [alpha, c] : terms_) sum += c * monomial_centred(x, alpha);
    return sum;
}

double PriorMean::derivative_at(const MultiIndex& alpha, const Eigen::VectorXd& a) const {
    // D^alpha x^beta = beta!/(beta-alpha)! x^(beta-alpha) when beta >= alpha
    double sum = 0.0;
    for (const auto& [beta, c] : terms_) {
        if (!beta.dominates(alpha)) continue;
        const MultiIndex rem = beta - alpha;
        sum += c * factorial_multi(beta) / factorial_multi(rem) * monomial_centred(a, rem);
    }
    return sum;
}

int PriorMean::degree() const {
    int deg = 0;
    for (const auto& [alpha, c] : terms_)
        if (c != 0.0) deg = std::max(deg, alpha.order());
    return deg;
}

// ----------------------------------------------------------- DerivativeData

DerivativeData::DerivativeData(Eigen::VectorXd point, int n, std::vector<double> vals,
                               std::optional<std::vector<double>> noise_vars)
    : a(std::move(point)), order(n), values(std::move(vals)), noise(std::move(noise_vars)) {
    if (a.size() < 1) throw std::invalid_argument("DerivativeData: dimension must be >= 1");
    if (order < 0) throw std::invalid_argument("DerivativeData: order must be >= 0");
    indices_ = enumerate_upto(dim(), order);
    if (values.size() != indices_.size())
        throw std::invalid_argument("DerivativeData: expected exactly N_n^d values");
    if (noise) {
        if (noise->size() != indices_.size())
            throw std::invalid_argument("DerivativeData: noise must match the value layout");
        for (double e : *noise)
            if (e < 0.0) throw std::invalid_argument("DerivativeData: noise variances must be >= 0");
    }
}

std::size_t DerivativeData::position(const MultiIndex& alpha) const {
    for (std::size_t i = 0; i < indices_.size(); ++i)
        if (indices_[i] == alpha) return i;
    throw std::invalid_argument("DerivativeData: multi-index not in the data set");
}

double DerivativeData::value_at(const MultiIndex& alpha) const { return values[position(alpha)]; }

double DerivativeData::noise_at(const MultiIndex& alpha) const {
    return noise ? (*noise)[position(alpha)] : 0.0;
}

// ----------------------------------------------------------- TaylorPosterior

TaylorPosterior::TaylorPosterior(KernelSpec spec, PriorMean prior, DerivativeData data)
    : spec_(std::move(spec)), prior_(std::move(prior)), data_(std::move(data)) {
    if (data_.dim() != spec_.dim()) throw std::invalid_argument("condition: data/kernel dimension mismatch");
    spec_.check_in_domain(data_.a, data_.a);
}

double TaylorPosterior::mean(const Eigen::VectorXd& x) const {
    spec_.check_in_domain(data_.a, x);
    const Eigen::VectorXd u = x - data_.a;
    const auto& idx = data_.index_set();
    double sum = prior_(x);
    if (closed_form_) {
        for (std::size_t i = 0; i < idx.size(); ++i) sum += mean_coeff_[i] * monomial_centred(u, idx[i]);
    } else {
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const double r_i = kernel_mixed_derivative(spec_, data_.a, idx[i], MultiIndex::zeros(spec_.dim()),
                                                       x, data_.a);
            sum += r_i * gen_weights_[static_cast<Eigen::Index>(i)];
        }
    }
    return sum;
}

double TaylorPosterior::partial_sum_cov(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                        double* abs_sum) const {
    const auto& idx = data_.index_set();
    double sum = 0.0, abss = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const double term = cov_coeff_[i] * monomial_centred(u, idx[i]) * monomial_centred(v, idx[i]);
        sum += term;
        abss += std::abs(term);
    }
    if (abs_sum) *abs_sum = abss;
    return sum;
}

double TaylorPosterior::tail_by_summation(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    // first 10 degree blocks past the conditioning order
    double sum = 0.0;
    for (int p = data_.order + 1; p <= data_.order + 10; ++p) {
        for (const MultiIndex& alpha : enumerate_exact(spec_.dim(), p)) {
            const double fa = factorial_multi(alpha);
            sum += spec_.coefficient(alpha) * spec_.lambda_pow(alpha) / (fa * fa) *
                   monomial_centred(u, alpha) * monomial_centred(v, alpha);
        }
    }
    return spec_.sigma2() * sum;
}

double TaylorPosterior::cov(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    spec_.check_in_domain(data_.a, x);
    spec_.check_in_domain(data_.a, y);
    const double k = kernel_eval(spec_, data_.a, x, y);
    if (!closed_form_) {
        const auto& idx = data_.index_set();
        const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
        Eigen::VectorXd rx(n), ry(n);
        const MultiIndex zero = MultiIndex::zeros(spec_.dim());
        for (Eigen::Index i = 0; i < n; ++i) {
            rx[i] = kernel_mixed_derivative(spec_, data_.a, idx[static_cast<std::size_t>(i)], zero, x, data_.a);
            ry[i] = kernel_mixed_derivative(spec_, data_.a, idx[static_cast<std::size_t>(i)], zero, y, data_.a);
        }
        return k - rx.dot(gram_.solve(ry));
    }

    const Eigen::VectorXd u = x - data_.a;
    const Eigen::VectorXd v = y - data_.a;
    double abs_partial = 0.0;
    const double partial = partial_sum_cov(u, v, &abs_partial);
    double tail = k - partial;
    // the subtraction cancels catastrophically near the expansion point;
    // switch to direct tail summation there so variances stay reliable
    const double scale = std::max(std::abs(k), abs_partial);
    if (std::abs(tail) < 1e3 * kEps * scale) tail = tail_by_summation(u, v);

    double inflation = 0.0;
    if (data_.noisy()) {
        const auto& idx = data_.index_set();
        for (std::size_t i = 0; i < idx.size(); ++i)
            inflation += infl_coeff_[i] * monomial_centred(u, idx[i]) * monomial_centred(v, idx[i]);
    }
    double result = tail + inflation;
    if (u == v && result < 0.0) result = 0.0;
    return result;
}

double TaylorPosterior::var(const Eigen::VectorXd& x) const { return cov(x, x); }

// ------------------------------------------------------------- conditioning

TaylorPosterior condition(const KernelSpec& spec, const PriorMean& prior, const DerivativeData& data) {
    TaylorPosterior post(spec, prior, data);
    const auto& idx = post.data_.index_set();
    post.closed_form_ = true;
    post.mean_coeff_.resize(idx.size());
    post.cov_coeff_.resize(idx.size());
    post.infl_coeff_.assign(idx.size(), 0.0);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const MultiIndex& alpha = idx[i];
        const double c = spec.coefficient(alpha);
        const double diag = spec.sigma2() * c * spec.lambda_pow(alpha);  // (R_a)_ii
        const double eps2 = post.data_.noise_at(alpha);
        if (diag == 0.0 && eps2 == 0.0)
            throw SingularModel("condition: zero kernel coefficient with zero noise at some index");
        const double weight = diag / (diag + eps2);  // 1 in the noiseless case
        const double resid = post.data_.values[i] - prior.derivative_at(alpha, post.data_.a);
        const double fa = factorial_multi(alpha);
        post.mean_coeff_[i] = weight * resid / fa;
        post.cov_coeff_[i] = diag / (fa * fa);
        post.infl_coeff_[i] = diag * (1.0 - weight) / (fa * fa);
    }
    return post;
}

TaylorPosterior condition_generic(const KernelSpec& spec, const PriorMean& prior, const DerivativeData& data) {
    TaylorPosterior post(spec, prior, data);
    const auto& idx = post.data_.index_set();
    const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd gram(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            gram(i, j) = kernel_mixed_derivative(spec, post.data_.a, idx[static_cast<std::size_t>(j)],
                                                 idx[static_cast<std::size_t>(i)], post.data_.a, post.data_.a);
    for (Eigen::Index i = 0; i < n; ++i)
        gram(i, i) += post.data_.noise_at(idx[static_cast<std::size_t>(i)]);

    Eigen::VectorXd resid(n);
    for (Eigen::Index i = 0; i < n; ++i)
        resid[i] = post.data_.values[static_cast<std::size_t>(i)] -
                   prior.derivative_at(idx[static_cast<std::size_t>(i)], post.data_.a);

    post.closed_form_ = false;
    post.gram_.compute(gram);
    if (post.gram_.info() != Eigen::Success || !post.gram_.isPositive()) {
        gram.diagonal().array() += 1e-12 * gram.trace();
        post.gram_.compute(gram);
        if (post.gram_.info() != Eigen::Success || !post.gram_.isPositive())
            throw IllConditioned("condition_generic: Gram matrix solve failed after jitter");
    }
    post.gen_weights_ = post.gram_.solve(resid);
    return post;
}

// ---------------------------------------------------- variance bound C_{n,r}

namespace {

// Streams sum over |alpha| = p of c_alpha lambda^alpha / (alpha!)^2 for
// p = 0, 1, 2, ... For inner-product families the block collapses to
// c_p L^p / (p!)^2 with L = sum_i lambda_i, advanced by a per-family
// recurrence so that factorials never overflow.
class DegreeBlocks {
  public:
    explicit DegreeBlocks(const KernelSpec& spec) : spec_(spec), L_(spec.lambda().sum()) {}

    // block at degree p; must be called with p = 0, 1, 2, ... in order
    double next() {
        const int p = p_++;
        switch (spec_.family()) {
            case KernelFamily::Exponential:  // L^p / p!
                if (p > 0) state_ *= L_ / static_cast<double>(p);
                return state_;
            case KernelFamily::Szego:  // L^p
                if (p > 0) state_ *= L_;
                return state_;
            case KernelFamily::Bergman: {  // ((p/2)!)^2 L^p / (p!)^2, odd blocks zero
                if (p == 0) return 1.0;
                if (p % 2 != 0) return 0.0;
                const int k = p / 2;
                state_ *= static_cast<double>(k) * static_cast<double>(k) * L_ * L_ /
                          (static_cast<double>(2 * k - 1) * static_cast<double>(2 * k - 1) *
                           static_cast<double>(2 * k) * static_cast<double>(2 * k));
                return state_;
            }
            case KernelFamily::GenericInnerProduct: {
                if (p > 0) {
                    lpow_ *= L_;
                    invfact2_ /= static_cast<double>(p) * static_cast<double>(p);
                }
                return spec_.coeff_total(p) * lpow_ * invfact2_;
            }
            case KernelFamily::GenericPowerSeries: {
                double block = 0.0;
                for (const MultiIndex& alpha : enumerate_exact(spec_.dim(), p)) {
                    const double fa = factorial_multi(alpha);
                    block += spec_.coefficient(alpha) * spec_.lambda_pow(alpha) / (fa * fa);
                }
                return block;
            }
        }
        return 0.0;
    }

  private:
    const KernelSpec& spec_;
    double L_;
    int p_ = 0;
    double state_ = 1.0;
    double lpow_ = 1.0;
    double invfact2_ = 1.0;
};

}  // namespace

double variance_bound_constant(const KernelSpec& spec, int n, double evaluation_radius) {
    double r = evaluation_radius > 0.0 ? evaluation_radius : spec.radius();
    if (std::isinf(r))
        throw std::invalid_argument(
            "variance_bound_constant: infinite-radius kernels need an explicit evaluation radius");
    if (n < 0) throw std::invalid_argument("variance_bound_constant: n must be >= 0");

    DegreeBlocks blocks(spec);
    for (int p = 0; p <= n; ++p) (void)blocks.next();
    const double first = blocks.next();  // degree n + 1, no radius weight

    // r^{-2(n+1)} sum_{p >= n+2} block_p r^{2p}, summed with the shifted
    // weights r^{2(p - n - 1)} to stay in range
    const double r2 = r * r;
    double second = 0.0;
    double weight = r2;  // r^{2(p-n-1)} at p = n+2
    double prev_term = std::numeric_limits<double>::infinity();
    int growing = 0;
    constexpr int kCap = 500;
    for (int p = n + 2; p < n + 2 + kCap; ++p) {
        const double term = blocks.next() * weight;
        if (!std::isfinite(term) || !std::isfinite(second))
            throw Diverges("variance_bound_constant: series overflowed the summation budget");
        second += term;
        if (term != 0.0) {
            if (term >= prev_term) {
                if (++growing > 50) throw Diverges("variance_bound_constant: series terms keep growing");
            } else {
                growing = 0;
            }
            if (term < 1e-16 * second) break;
            prev_term = term;
        }
        weight *= r2;
    }
    return first + second;
}

}  // namespace taylorpn
