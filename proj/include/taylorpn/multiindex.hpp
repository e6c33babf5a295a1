#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace taylorpn {

// A d-dimensional multi-index: a tuple of non-negative integers indexing
// mixed partial derivatives and monomials.
class MultiIndex {
  public:
    explicit MultiIndex(std::vector<int> indices);
    static MultiIndex zeros(int dim);
    static MultiIndex unit(int dim, int axis);

    int dim() const { return static_cast<int>(idx_.size()); }
    int order() const { return order_; }  // |alpha|
    int operator[](int j) const { return idx_[static_cast<std::size_t>(j)]; }
    const std::vector<int>& indices() const { return idx_; }

    bool operator==(const MultiIndex& other) const { return idx_ == other.idx_; }
    bool operator!=(const MultiIndex& other) const { return idx_ != other.idx_; }

    // Componentwise alpha >= beta.
    bool dominates(const MultiIndex& beta) const;
    // Componentwise maximum.
    MultiIndex cwise_max(const MultiIndex& other) const;
    // Componentwise difference; caller must ensure this dominates other.
    MultiIndex operator-(const MultiIndex& other) const;

  private:
    std::vector<int> idx_;
    int order_ = 0;
};

// Every alpha with |alpha| <= n in graded lexicographic order: ascending by
// total degree, ties broken by lexicographic comparison of the tuple. The
// order is deterministic and fixes the layout of data vectors everywhere.
std::vector<MultiIndex> enumerate_upto(int dim, int order);

// All alpha with |alpha| == order, lexicographic ascending.
std::vector<MultiIndex> enumerate_exact(int dim, int order);

// N_n^d = binomial(n + d, d).
std::int64_t count_upto(int dim, int order);

// alpha! = prod_j alpha(j)!. Exact in 64-bit integer arithmetic while it
// fits, continued in floating point beyond.
double factorial_multi(const MultiIndex& alpha);

double factorial(int n);

// (x - a)^alpha with the 0^0 = 1 convention.
double monomial(const Eigen::VectorXd& x, const Eigen::VectorXd& a, const MultiIndex& alpha);

// (u)^alpha for a centred displacement u = x - a.
double monomial_centred(const Eigen::VectorXd& u, const MultiIndex& alpha);

}  // namespace taylorpn
