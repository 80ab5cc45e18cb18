#pragma once

#include <cmath>
#include <vector>

#include "mmbm/matrix_kernels.hpp"
#include "mmbm/model.hpp"
#include "mmbm/rng.hpp"

namespace mmbm::test {

// m = 1, mu = -1, sigma2 = 1, b = 1: scalar reflected Brownian motion,
// stationary density 2 e^{-2x} / (1 - e^{-2}).
inline MmbmModel make_m1(double mu = -1.0) {
    MmbmModel model;
    model.m = 1;
    model.Q = Matrix::Zero(1, 1);
    model.mu = Vector::Constant(1, mu);
    model.sigma2 = Vector::Ones(1);
    model.b = 1.0;
    return validate_model(model);
}

inline MmbmModel make_m2() {
    MmbmModel model;
    model.m = 2;
    model.Q = Matrix(2, 2);
    model.Q << -1.0, 1.0, 1.0, -1.0;
    model.mu = Vector(2);
    model.mu << 1.0, -2.0;
    model.sigma2 = Vector::Ones(2);
    model.b = 1.0;
    return validate_model(model);
}

inline double m1_density(double x, double b = 1.0) {
    return 2.0 * std::exp(-2.0 * x) / (1.0 - std::exp(-2.0 * b));
}

inline double m1_cdf(double x, double b = 1.0) {
    return (1.0 - std::exp(-2.0 * x)) / (1.0 - std::exp(-2.0 * b));
}

// Random valid models with |alpha D 1| >= drift_floor (resampled until so).
inline std::vector<MmbmModel> random_model_set(int count, std::uint64_t seed,
                                               double drift_floor = 0.1) {
    std::vector<MmbmModel> models;
    CounterRng rng(seed, 7);
    const int sizes[3] = {2, 3, 4};
    int si = 0;
    while (static_cast<int>(models.size()) < count) {
        const int m = sizes[si % 3];
        MmbmModel model;
        model.m = m;
        model.Q = Matrix::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                if (i != j) model.Q(i, j) = 0.2 + rng.next_uniform();
            }
            model.Q(i, i) = -model.Q.row(i).sum();
        }
        model.mu = Vector(m);
        model.sigma2 = Vector(m);
        for (int i = 0; i < m; ++i) {
            model.mu(i) = -2.0 + 4.0 * rng.next_uniform();
            model.sigma2(i) = 0.5 + 1.5 * rng.next_uniform();
        }
        model.b = 1.0;
        const PhaseDistribution dist = stationary_phase_distribution(model.Q);
        if (std::abs(dist.alpha.dot(model.mu.transpose())) < drift_floor) continue;
        models.push_back(validate_model(model));
        ++si;
    }
    return models;
}

// Composite-Simpson quadrature of e^{Kx} over [0, b]; independent of
// expm_integral's block-exponential route.
inline Matrix simpson_expm_integral(const Matrix& K, double b, int intervals = 512) {
    if (intervals % 2 == 1) ++intervals;
    const double h = b / intervals;
    Matrix acc = matrix_exponential(K * 0.0) + matrix_exponential(K * b);
    for (int k = 1; k < intervals; ++k) {
        acc += (k % 2 == 1 ? 4.0 : 2.0) * matrix_exponential(K * (k * h));
    }
    return acc * (h / 3.0);
}

inline double max_abs(const Matrix& A) { return A.cwiseAbs().maxCoeff(); }

}  // namespace mmbm::test
