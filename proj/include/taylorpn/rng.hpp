#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace taylorpn {

// Seedable, portable Gaussian generator: mt19937_64 for the bit stream,
// uniforms formed as (x >> 11) * 2^-53, Gaussians via Box-Muller with the
// sine partner cached. Every draw is fully determined by the seed and the
// call sequence, independently of the standard library's distributions.
class GaussianRng {
  public:
    explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

    // uniform on [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    Eigen::VectorXd gaussian_vector(int dim) {
        Eigen::VectorXd v(dim);
        for (int i = 0; i < dim; ++i) v[i] = gaussian();
        return v;
    }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Symmetric PSD square root via eigendecomposition; tolerates zero and
// rank-deficient matrices (negative eigenvalues from roundoff clamp to 0).
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

}  // namespace taylorpn
