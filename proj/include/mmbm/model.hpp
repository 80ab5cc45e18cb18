#pragma once

#include <Eigen/Dense>

#include "mmbm/errors.hpp"

namespace mmbm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Markov-modulated Brownian motion on [0, b]: the phase is a CTMC with
/// generator Q; while the phase is i the level is a Brownian motion with
/// drift mu[i] and variance sigma2[i], reflected at 0 and at b.
struct MmbmModel {
    int m = 0;       ///< phase count
    Matrix Q;        ///< m x m irreducible generator
    Vector mu;       ///< per-phase drift
    Vector sigma2;   ///< per-phase variance, all entries > 0
    double b = 0.0;  ///< buffer height (upper reflecting boundary)

    Matrix drift_matrix() const { return mu.asDiagonal(); }
    Matrix variance_matrix() const { return sigma2.asDiagonal(); }
    /// Theta = sqrt(V), the per-phase standard deviations.
    Vector theta() const { return sigma2.cwiseSqrt(); }
};

/// Stationary distribution of the phase process: alpha Q = 0, alpha 1 = 1.
struct PhaseDistribution {
    RowVector alpha;
    double mean_drift = 0.0;  ///< alpha D 1
};

/// One member of the fluid family approximating an MmbmModel.
///
/// The phase space is doubled: copies {1,2} x {1..m}, with generator
/// T = [[Q - lambda I, lambda I], [lambda I, Q - lambda I]] and rates
/// C = diag(D + Theta/eps, D - Theta/eps), lambda = 1/eps^2. The first m
/// phases carry strictly positive rates, the last m strictly negative ones.
struct FluidModel {
    int m = 0;        ///< original phase count (fluid has 2m phases)
    double eps = 0.0; ///< eps, with lambda = 1/eps^2
    double lambda = 0.0;
    Matrix T;         ///< 2m x 2m generator
    Vector c_diag;    ///< diagonal of C, length 2m

    // partition blocks; + phases are 0..m-1, - phases are m..2m-1
    Matrix Tpp, Tpm, Tmp, Tmm;
    Vector Cp;        ///< positive rates (length m)
    Vector Cm;        ///< negative rates (length m)

    Vector cm_abs() const { return Cm.cwiseAbs(); }
};

/// Checks all MmbmModel invariants (generator structure, irreducibility,
/// positive variances, finite positive buffer, nonzero mean drift) and
/// returns the model unchanged. Throws SolverError otherwise.
MmbmModel validate_model(const MmbmModel& raw);

/// Unique stationary distribution of an irreducible generator Q.
PhaseDistribution stationary_phase_distribution(const Matrix& Q);

/// Builds the doubled-phase fluid model for a given eps.
/// Requires 0 < eps < min_i sigma_i/|mu_i| so the rate signs split cleanly.
FluidModel build_fluid_approximation(const MmbmModel& model, double eps);

/// Largest admissible eps for build_fluid_approximation (may be +inf).
double eps_threshold(const MmbmModel& model);

/// Relative tolerance on |alpha D 1| below which the model is rejected as
/// zero-mean-drift; the limit formulas divide by spectral gaps that close
/// as the mean drift vanishes.
inline constexpr double kDriftTol = 1e-9;

namespace detail {
/// Strong connectivity of the off-diagonal sparsity pattern.
bool pattern_irreducible(const Matrix& A);
}  // namespace detail

}  // namespace mmbm
