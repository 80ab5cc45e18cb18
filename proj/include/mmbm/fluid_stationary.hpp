#pragma once

#include "mmbm/matrix_kernels.hpp"
#include "mmbm/model.hpp"

namespace mmbm {

/// First-return and first-passage matrices of a doubled fluid model:
///   U  = |Cm|^{-1} Tmm + |Cm|^{-1} Tmp Psi,
///   U* = Cp^{-1} Tpp + Cp^{-1} Tpm Psi*,
///   K  = Cp^{-1} Tpp + Psi |Cm|^{-1} Tmp,
///   K* = |Cm|^{-1} Tmm + Psi* Cp^{-1} Tpm.
struct FirstPassageSet {
    Matrix Psi;      ///< first return from above, minimal nonnegative
    Matrix PsiStar;  ///< first return from below
    Matrix U, Ustar;
    Matrix K, Kstar;
};

/// Two-sided exit probabilities of the finite-buffer fluid: with taboo of the
/// opposite boundary, Lpp records up-crossings 0 -> b, Lmm down-crossings
/// b -> 0, Ppm returns 0 -> 0 from above, Pmp returns b -> b from below.
struct GbMatrix {
    Matrix Lpp, Ppm;  ///< top block row    [ Lambda_{++}  Psi_{+-} ]
    Matrix Pmp, Lmm;  ///< bottom block row [ Psi~_{-+}    Lambda~_{--} ]

    Matrix full() const {
        const int m = static_cast<int>(Lpp.rows());
        Matrix G(2 * m, 2 * m);
        G << Lpp, Ppm, Pmp, Lmm;
        return G;
    }
};

/// Stationary law of the finite-buffer fluid on [0, b]: boundary masses and
/// a matrix-exponential density represented by its coefficient row vector.
struct FiniteBufferSolution {
    FluidModel fluid;
    double b = 0.0;
    FirstPassageSet fp;
    GbMatrix Gb;
    RowVector nu;        ///< stationary vector of the censored matrix H
    RowVector y;         ///< boundary-route coefficient (= c nu N^{-1})
    Matrix Ninv;         ///< inverse of N = [[I, e^{Kb} Psi], [e^{K*b} Psi*, I]]
    double c = 0.0;      ///< normalizing constant
    RowVector pb_plus;   ///< mass at b, + phases
    RowVector p0_minus;  ///< mass at 0, - phases
    RowVector coeff;     ///< density coefficient used by density_at
    Matrix last_factor;  ///< [[Cp^{-1}, Psi |Cm|^{-1}], [Psi* Cp^{-1}, |Cm|^{-1}]]
    double cond_N = 0.0;
    bool alt_route = false;

    double mass0() const { return p0_minus.sum(); }
    double massb() const { return pb_plus.sum(); }
};

struct DensityValue {
    RowVector full;       ///< 2m doubled phases
    RowVector collapsed;  ///< summed over the two copies, m phases
};

FirstPassageSet first_passage_set(const FluidModel& fluid);

/// Solves G^(b) [[I, Psi e^{Ub}], [Psi* e^{U*b}, I]] = [[e^{U*b}, Psi], [Psi*, e^{Ub}]].
GbMatrix solve_Gb(const FirstPassageSet& fp, double b);

/// Stationary vector of H = G^(b) diag(-Tpp^{-1}, -Tmm^{-1}) [[0, Tpm], [Tmp, 0]].
RowVector censored_nu(const GbMatrix& Gb, const FluidModel& fluid);

/// Full solution via the censored-process representation.
FiniteBufferSolution finite_buffer_solution(const FluidModel& fluid, double b);

/// Same law via the boundary-mass null-space route; the returned object is
/// flagged alt_route and must agree with finite_buffer_solution.
FiniteBufferSolution solve_via_boundary_masses(const FluidModel& fluid, double b);

/// Stationary density at interior x.
DensityValue density_at(const FiniteBufferSolution& sol, double x);

/// Per original phase P[level <= x, phase], boundary atoms included
/// (the mass at b enters only at x = b).
RowVector fluid_cdf_collapsed(const FiniteBufferSolution& sol, double x);

}  // namespace mmbm
