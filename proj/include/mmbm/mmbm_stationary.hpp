#pragma once

#include <vector>

#include "mmbm/matrix_kernels.hpp"
#include "mmbm/model.hpp"

namespace mmbm {

/// eps-independent matrices of the two-sided MMBM limit:
///   K0  = Psi1 Theta^{-1} + 2 V^{-1} D,   K0* = Psi1* Theta^{-1} - 2 V^{-1} D,
/// the first-order buffer-exit blocks L1, P1, P1~, L1~, and
/// N0 = [[I, e^{K0 b}], [e^{K0* b}, I]].
struct LimitMatrices {
    int m = 0;
    double b = 0.0;
    SolventPair solvents;
    Matrix K0, K0star;
    Matrix L1, P1;    ///< top block row of G1^(b)
    Matrix P1t, L1t;  ///< bottom block row of G1^(b)
    Matrix N0;

    Matrix G1b() const {
        Matrix G(2 * m, 2 * m);
        G << L1, P1, P1t, L1t;
        return G;
    }
    /// [[P1~, L1~], [L1, P1]] — an irreducible generator.
    Matrix JG1b() const {
        Matrix G(2 * m, 2 * m);
        G << P1t, L1t, L1, P1;
        return G;
    }
};

/// Stationary law of the two-sided reflected MMBM: zero boundary masses and
/// density c* nu0 N0^{-1} [e^{K0 x} Theta^{-1}; e^{K0*(b-x)} Theta^{-1}].
struct MmbmSolution {
    MmbmModel model;
    LimitMatrices lm;
    RowVector nu0;
    double cstar = 0.0;
    RowVector coeff;  ///< c* nu0 N0^{-1}
    double cond_N0 = 0.0;

    RowVector density(double x) const;  ///< per-phase density, x in (0, b)
    RowVector cdf(double x) const;      ///< per-phase P[level <= x, phase]
};

/// The density of the time-reversed representation, built from K0 and K0*
/// by the diagonal similarity rather than by solving a second quadratic.
struct TimeReversedForm {
    double b = 0.0;
    RowVector alpha;
    Matrix OmegaPlus, OmegaMinus;

    RowVector conditional_density(double x) const;  ///< f(x)
    RowVector joint_density(double x) const;        ///< f(x) Delta_alpha
};

LimitMatrices limit_matrices(const MmbmModel& model);

/// Unique probability vector with nu0 G1^(b) = 0 (via the stationary vector
/// of the generator J G1^(b)).
RowVector nu0(const LimitMatrices& lm);

MmbmSolution stationary_density(const MmbmModel& model);

TimeReversedForm time_reversed_density(const MmbmModel& model);

/// Max-abs discrepancy between the time-reversed joint density and the
/// closed-form density over a 1000-point interior grid.
double cross_check(const MmbmModel& model);

/// The interior evaluation grid used by checks: 1000 uniform points leaving
/// a margin of b/2000 at each boundary.
std::vector<double> interior_grid(double b, int points = 1000);

}  // namespace mmbm
