#include "taylorpn/multiindex.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace taylorpn {

MultiIndex::MultiIndex(std::vector<int> indices) : idx_(std::move(indices)) {
    if (idx_.empty()) throw std::invalid_argument("MultiIndex: dimension must be >= 1");
    for (int v : idx_) {
        if (v < 0) throw std::invalid_argument("MultiIndex: entries must be non-negative");
        order_ += v;
    }
}

MultiIndex MultiIndex::zeros(int dim) { return MultiIndex(std::vector<int>(static_cast<std::size_t>(dim), 0)); }

MultiIndex MultiIndex::unit(int dim, int axis) {
    std::vector<int> v(static_cast<std::size_t>(dim), 0);
    v.at(static_cast<std::size_t>(axis)) = 1;
    return MultiIndex(std::move(v));
}

bool MultiIndex::dominates(const MultiIndex& beta) const {
    if (dim() != beta.dim()) throw std::invalid_argument("MultiIndex: dimension mismatch");
    for (int j = 0; j < dim(); ++j)
        if (idx_[static_cast<std::size_t>(j)] < beta[j]) return false;
    return true;
}

MultiIndex MultiIndex::cwise_max(const MultiIndex& other) const {
    if (dim() != other.dim()) throw std::invalid_argument("MultiIndex: dimension mismatch");
    std::vector<int> v(idx_);
    for (int j = 0; j < dim(); ++j) v[static_cast<std::size_t>(j)] = std::max(v[static_cast<std::size_t>(j)], other[j]);
    return MultiIndex(std::move(v));
}

MultiIndex MultiIndex::operator-(const MultiIndex& other) const {
    if (!dominates(other)) throw std::invalid_argument("MultiIndex: subtraction would go negative");
    std::vector<int> v(idx_);
    for (int j = 0; j < dim(); ++j) v[static_cast<std::size_t>(j)] -= other[j];
    return MultiIndex(std::move(v));
}

namespace {

void fill_exact(int dim, int order, std::vector<int>& prefix, std::vector<MultiIndex>& out) {
    if (static_cast<int>(prefix.size()) == dim - 1) {
        prefix.push_back(order);
        out.emplace_back(prefix);
        prefix.pop_back();
        return;
    }
    for (int v = 0; v <= order; ++v) {
        prefix.push_back(v);
        fill_exact(dim, order - v, prefix, out);
        prefix.pop_back();
    }
}

}  // namespace

std::vector<MultiIndex> enumerate_exact(int dim, int order) {
    if (dim < 1) throw std::invalid_argument("enumerate_exact: dim must be >= 1");
    if (order < 0) throw std::invalid_argument("enumerate_exact: order must be >= 0");
    std::vector<MultiIndex> out;
    std::vector<int> prefix;
    fill_exact(dim, order, prefix, out);
    return out;
}

std::vector<MultiIndex> enumerate_upto(int dim, int order) {
    if (dim < 1) throw std::invalid_argument("enumerate_upto: dim must be >= 1");
    if (order < 0) throw std::invalid_argument("enumerate_upto: order must be >= 0");
    std::vector<MultiIndex> out;
    out.reserve(static_cast<std::size_t>(count_upto(dim, order)));
    for (int m = 0; m <= order; ++m) {
        auto level = enumerate_exact(dim, m);
        out.insert(out.end(), level.begin(), level.end());
    }
    return out;
}

std::int64_t count_upto(int dim, int order) {
    // binomial(order + dim, dim), exact for the small dims/orders in scope
    std::int64_t num = 1;
    for (int k = 1; k <= dim; ++k) {
        num = num * (order + k);
        num /= k;  // product of k consecutive integers is divisible by k!
    }
    return num;
}

double factorial(int n) {
    if (n < 0) throw std::invalid_argument("factorial: negative argument");
    std::uint64_t acc = 1;
    int k = 1;
    for (; k <= n; ++k) {
        if (acc > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(k)) break;
        acc *= static_cast<std::uint64_t>(k);
    }
    double result = static_cast<double>(acc);
    for (; k <= n; ++k) result *= static_cast<double>(k);
    return result;
}

double factorial_multi(const MultiIndex& alpha) {
    double prod = 1.0;
    for (int j = 0; j < alpha.dim(); ++j) prod *= factorial(alpha[j]);
    return prod;
}

double monomial_centred(const Eigen::VectorXd& u, const MultiIndex& alpha) {
    if (u.size() != alpha.dim()) throw std::invalid_argument("monomial: dimension mismatch");
    double prod = 1.0;
    for (int j = 0; j < alpha.dim(); ++j) {
        const double base = u[j];
        for (int k = 0; k < alpha[j]; ++k) prod *= base;
    }
    return prod;
}

double monomial(const Eigen::VectorXd& x, const Eigen::VectorXd& a, const MultiIndex& alpha) {
    if (x.size() != a.size()) throw std::invalid_argument("monomial: x and a dimension mismatch");
    return monomial_centred(x - a, alpha);
}

}  // namespace taylorpn
