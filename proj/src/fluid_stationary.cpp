#include "mmbm/fluid_stationary.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace mmbm {

namespace {

Matrix condition_svd(const Matrix& A, double* cond) {
    Eigen::JacobiSVD<Matrix> svd(A);
    const auto& s = svd.singularValues();
    *cond = s(0) / std::max(s(s.size() - 1), 1e-300);
    return A;
}

// [[0, Tpm], [Tmp, 0]]
Matrix anti_block(const FluidModel& fluid) {
    const int m = fluid.m;
    Matrix A = Matrix::Zero(2 * m, 2 * m);
    A.topRightCorner(m, m) = fluid.Tpm;
    A.bottomLeftCorner(m, m) = fluid.Tmp;
    return A;
}

// diag(-Tpp^{-1}, -Tmm^{-1})
Matrix neg_inv_diag_block(const FluidModel& fluid) {
    const int m = fluid.m;
    Matrix B = Matrix::Zero(2 * m, 2 * m);
    B.topLeftCorner(m, m) = (-fluid.Tpp).partialPivLu().inverse();
    B.bottomRightCorner(m, m) = (-fluid.Tmm).partialPivLu().inverse();
    return B;
}

Matrix build_last_factor(const FluidModel& fluid, const FirstPassageSet& fp) {
    const int m = fluid.m;
    const Vector cp_inv = fluid.Cp.cwiseInverse();
    const Vector cm_inv = fluid.cm_abs().cwiseInverse();
    Matrix F(2 * m, 2 * m);
    F.topLeftCorner(m, m) = Matrix(cp_inv.asDiagonal());
    F.topRightCorner(m, m) = fp.Psi * cm_inv.asDiagonal();
    F.bottomLeftCorner(m, m) = fp.PsiStar * cp_inv.asDiagonal();
    F.bottomRightCorner(m, m) = Matrix(cm_inv.asDiagonal());
    return F;
}

// N = [[I, e^{Kb} Psi], [e^{K*b} Psi*, I]]
Matrix build_N(const FirstPassageSet& fp, double b) {
    const int m = static_cast<int>(fp.Psi.rows());
    Matrix N(2 * m, 2 * m);
    N.topLeftCorner(m, m) = Matrix::Identity(m, m);
    N.topRightCorner(m, m) = matrix_exponential(fp.K * b) * fp.Psi;
    N.bottomLeftCorner(m, m) = matrix_exponential(fp.Kstar * b) * fp.PsiStar;
    N.bottomRightCorner(m, m) = Matrix::Identity(m, m);
    return N;
}

// blkdiag(int_0^b e^{Kx} dx, int_0^b e^{K*x} dx)
Matrix density_integral_block(const FirstPassageSet& fp, double b) {
    const int m = static_cast<int>(fp.Psi.rows());
    Matrix B = Matrix::Zero(2 * m, 2 * m);
    B.topLeftCorner(m, m) = expm_integral(fp.K, b);
    B.bottomRightCorner(m, m) = expm_integral(fp.Kstar, b);
    return B;
}

void finish_solution(FiniteBufferSolution& sol) {
    if (sol.pb_plus.minCoeff() < -1e-9 || sol.p0_minus.minCoeff() < -1e-9) {
        throw SolverError(ErrorCode::SingularSystem, "negative boundary mass");
    }
    // clip roundoff-level negatives; supports are structural
    sol.pb_plus = sol.pb_plus.cwiseMax(0.0);
    sol.p0_minus = sol.p0_minus.cwiseMax(0.0);
}

}  // namespace

FirstPassageSet first_passage_set(const FluidModel& fluid) {
    FirstPassageSet fp;
    fp.Psi = solve_riccati_min_nonneg(fluid, RiccatiDirection::Down);
    fp.PsiStar = solve_riccati_min_nonneg(fluid, RiccatiDirection::Up);

    const Vector cp_inv = fluid.Cp.cwiseInverse();
    const Vector cm_inv = fluid.cm_abs().cwiseInverse();
    fp.U = cm_inv.asDiagonal() * fluid.Tmm + cm_inv.asDiagonal() * (fluid.Tmp * fp.Psi);
    fp.Ustar = cp_inv.asDiagonal() * fluid.Tpp + cp_inv.asDiagonal() * (fluid.Tpm * fp.PsiStar);
    fp.K = cp_inv.asDiagonal() * fluid.Tpp + fp.Psi * cm_inv.asDiagonal() * fluid.Tmp;
    fp.Kstar = cm_inv.asDiagonal() * fluid.Tmm + fp.PsiStar * cp_inv.asDiagonal() * fluid.Tpm;
    return fp;
}

GbMatrix solve_Gb(const FirstPassageSet& fp, double b) {
    if (!(b > 0.0)) throw SolverError(ErrorCode::BadInput, "solve_Gb needs b > 0");
    const int m = static_cast<int>(fp.Psi.rows());

    const Matrix eUb = matrix_exponential(fp.U * b);
    const Matrix eUsb = matrix_exponential(fp.Ustar * b);

    Matrix A(2 * m, 2 * m);  // [[I, Psi e^{Ub}], [Psi* e^{U*b}, I]]
    A.topLeftCorner(m, m) = Matrix::Identity(m, m);
    A.topRightCorner(m, m) = fp.Psi * eUb;
    A.bottomLeftCorner(m, m) = fp.PsiStar * eUsb;
    A.bottomRightCorner(m, m) = Matrix::Identity(m, m);

    Matrix B(2 * m, 2 * m);  // [[e^{U*b}, Psi], [Psi*, e^{Ub}]]
    B.topLeftCorner(m, m) = eUsb;
    B.topRightCorner(m, m) = fp.Psi;
    B.bottomLeftCorner(m, m) = fp.PsiStar;
    B.bottomRightCorner(m, m) = eUb;

    {
        Eigen::JacobiSVD<Matrix> svd(A);
        const auto& s = svd.singularValues();
        if (s(s.size() - 1) <= 1e-13 * s(0)) {
            throw SolverError(ErrorCode::SingularSystem, "G^(b) system is singular");
        }
    }
    // G A = B  =>  A' G' = B'
    Eigen::PartialPivLU<Matrix> lu(A.transpose());
    const Matrix G = lu.solve(B.transpose()).transpose();
    if (!G.allFinite() || (G * A - B).cwiseAbs().maxCoeff() > 1e-7) {
        throw SolverError(ErrorCode::SingularSystem, "G^(b) system is singular");
    }

    GbMatrix gb;
    gb.Lpp = G.topLeftCorner(m, m);
    gb.Ppm = G.topRightCorner(m, m);
    gb.Pmp = G.bottomLeftCorner(m, m);
    gb.Lmm = G.bottomRightCorner(m, m);

    const double rowdev = (G.rowwise().sum().array() - 1.0).abs().maxCoeff();
    if (rowdev > 1e-6) {
        throw SolverError(ErrorCode::SingularSystem,
                          "G^(b) rows deviate from 1 by " + std::to_string(rowdev));
    }
    return gb;
}

RowVector censored_nu(const GbMatrix& Gb, const FluidModel& fluid) {
    const Matrix H = Gb.full() * neg_inv_diag_block(fluid) * anti_block(fluid);
    return stationary_vector(H);
}

FiniteBufferSolution finite_buffer_solution(const FluidModel& fluid, double b) {
    FiniteBufferSolution sol;
    sol.fluid = fluid;
    sol.b = b;
    sol.fp = first_passage_set(fluid);
    sol.Gb = solve_Gb(sol.fp, b);
    sol.nu = censored_nu(sol.Gb, fluid);
    sol.last_factor = build_last_factor(fluid, sol.fp);

    const Matrix N = condition_svd(build_N(sol.fp, b), &sol.cond_N);
    Eigen::PartialPivLU<Matrix> lu(N);
    sol.Ninv = lu.inverse();
    if (!sol.Ninv.allFinite()) {
        throw SolverError(ErrorCode::SingularN, "N is singular");
    }

    const RowVector coeff_raw = sol.nu * sol.Ninv;
    const RowVector masses_raw = sol.nu * sol.Gb.full() * neg_inv_diag_block(fluid);
    const double interior_raw =
        (coeff_raw * density_integral_block(sol.fp, b) * sol.last_factor).sum();
    const double total = masses_raw.sum() + interior_raw;
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw SolverError(ErrorCode::SingularN, "normalization failed");
    }
    sol.c = 1.0 / total;
    sol.coeff = sol.c * coeff_raw;
    sol.y = sol.coeff;
    const int m = fluid.m;
    sol.pb_plus = sol.c * masses_raw.head(m);
    sol.p0_minus = sol.c * masses_raw.tail(m);
    finish_solution(sol);
    return sol;
}

FiniteBufferSolution solve_via_boundary_masses(const FluidModel& fluid, double b) {
    FiniteBufferSolution sol;
    sol.fluid = fluid;
    sol.b = b;
    sol.fp = first_passage_set(fluid);
    sol.Gb = solve_Gb(sol.fp, b);
    sol.nu = censored_nu(sol.Gb, fluid);
    sol.last_factor = build_last_factor(fluid, sol.fp);
    sol.alt_route = true;

    const int m = fluid.m;
    Matrix W = Matrix::Zero(2 * m, 2 * m);
    W.topLeftCorner(m, m) = fluid.Tpp;
    W.bottomRightCorner(m, m) = fluid.Tmm;
    W += anti_block(fluid) * sol.Gb.full();

    // left null vector of W, required one-dimensional
    Eigen::JacobiSVD<Matrix> svd(W.transpose(), Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const int n = static_cast<int>(sv.size());
    if (n >= 2 && sv(n - 2) <= 1e-10 * sv(0)) {
        throw SolverError(ErrorCode::SingularSystem, "null space of W is not one-dimensional");
    }
    RowVector masses_raw = svd.matrixV().col(n - 1).transpose();
    if (masses_raw.sum() < 0.0) masses_raw = -masses_raw;
    if (masses_raw.minCoeff() < -1e-9) {
        throw SolverError(ErrorCode::SingularSystem, "null vector of W is not sign-definite");
    }
    masses_raw = masses_raw.cwiseMax(0.0);

    const Matrix N = condition_svd(build_N(sol.fp, b), &sol.cond_N);
    sol.Ninv = N.partialPivLu().inverse();
    if (!sol.Ninv.allFinite()) {
        throw SolverError(ErrorCode::SingularN, "N is singular");
    }

    const RowVector y_raw = masses_raw * anti_block(fluid) * sol.Ninv;
    const double interior_raw =
        (y_raw * density_integral_block(sol.fp, b) * sol.last_factor).sum();
    const double total = masses_raw.sum() + interior_raw;
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw SolverError(ErrorCode::SingularN, "normalization failed");
    }
    const double scale = 1.0 / total;
    sol.y = scale * y_raw;
    sol.coeff = sol.y;
    sol.pb_plus = scale * masses_raw.head(m);
    sol.p0_minus = scale * masses_raw.tail(m);
    sol.c = scale;  // scaling applied to the null vector; kept for reporting
    finish_solution(sol);
    return sol;
}

DensityValue density_at(const FiniteBufferSolution& sol, double x) {
    if (!(x > 0.0) || !(x < sol.b)) {
        throw SolverError(ErrorCode::OutOfRange, "density is defined on (0, b)");
    }
    const int m = sol.fluid.m;
    RowVector parts(2 * m);
    parts.head(m) = sol.coeff.head(m) * matrix_exponential(sol.fp.K * x);
    parts.tail(m) = sol.coeff.tail(m) * matrix_exponential(sol.fp.Kstar * (sol.b - x));

    DensityValue out;
    out.full = parts * sol.last_factor;
    out.collapsed = out.full.head(m) + out.full.tail(m);
    return out;
}

RowVector fluid_cdf_collapsed(const FiniteBufferSolution& sol, double x) {
    const int m = sol.fluid.m;
    if (x < 0.0 || x > sol.b) {
        throw SolverError(ErrorCode::OutOfRange, "cdf argument outside [0, b]");
    }
    RowVector cdf = sol.p0_minus;  // atom at zero lives on - phases
    if (x > 0.0) {
        RowVector parts(2 * m);
        parts.head(m) = sol.coeff.head(m) * expm_integral(sol.fp.K, x);
        const Matrix full_star = expm_integral(sol.fp.Kstar, sol.b);
        const Matrix tail_star =
            (x < sol.b) ? Matrix(full_star - expm_integral(sol.fp.Kstar, sol.b - x))
                        : full_star;
        parts.tail(m) = sol.coeff.tail(m) * tail_star;
        const RowVector interior = parts * sol.last_factor;
        cdf += interior.head(m) + interior.tail(m);
    }
    if (x >= sol.b) cdf += sol.pb_plus;
    return cdf;
}

}  // namespace mmbm
