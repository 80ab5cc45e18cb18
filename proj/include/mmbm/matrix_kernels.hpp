#pragma once

#include "mmbm/model.hpp"

namespace mmbm {

/// The two subgenerator solvents of the matrix quadratic
/// (1/2) V X^2 + D X + Q = 0.
///
/// LamMinus governs downward first passage of the free MMBM and LamPlus
/// upward first passage (X = LamMinus and X = -LamPlus both solve the
/// quadratic). Exactly one of them is conservative: LamMinus when the mean
/// drift is negative, LamPlus when it is positive.
struct SolventPair {
    Matrix LamMinus;  ///< Theta^{-1} Psi1
    Matrix LamPlus;   ///< Theta^{-1} Psi1Star
    Matrix Psi1;      ///< Theta * LamMinus
    Matrix Psi1Star;  ///< Theta * LamPlus
};

enum class RiccatiDirection { Down, Up };

struct RiccatiOptions {
    double tol = 1e-13;
    int max_iterations = 200;
    bool use_newton = true;  ///< false: plain fixed-point iteration from 0
};

/// e^A by scaling-and-squaring with the degree-13 Pade approximant.
Matrix matrix_exponential(const Matrix& A);

/// int_0^b e^{Kx} dx, computed as the upper-right block of
/// exp([[K, I], [0, 0]] b); valid for singular K.
Matrix expm_integral(const Matrix& K, double b);

/// Solves A X + X B = F (Bartels-Stewart on real Schur forms).
Matrix solve_sylvester(const Matrix& A, const Matrix& B, const Matrix& F);

/// Minimal nonnegative solution of the first-return Riccati equation of a
/// fluid model. Down solves
///   Cp^{-1} Tpm + Cp^{-1} Tpp Psi + Psi |Cm|^{-1} Tmm + Psi |Cm|^{-1} Tmp Psi = 0,
/// Up the starred mirror equation. Newton from 0 (each step one Sylvester
/// solve); fixed-point iteration from 0 retained as a fallback and as the
/// minimality oracle.
Matrix solve_riccati_min_nonneg(const FluidModel& fluid, RiccatiDirection direction,
                                const RiccatiOptions& opts = {});

/// Extracts LamMinus / LamPlus from the ordered real Schur form of the
/// linearization [[0, I], [-2 V^{-1} Q, -2 V^{-1} D]]. The structurally
/// guaranteed zero latent root is assigned to LamMinus when alpha D 1 < 0
/// and to -LamPlus otherwise.
SolventPair solvent_pair(const MmbmModel& model);

/// Stationary probability row vector of an irreducible generator (zero row
/// sums) or stochastic matrix (row sums one; solved with G - I).
RowVector stationary_vector(const Matrix& G);

}  // namespace mmbm
