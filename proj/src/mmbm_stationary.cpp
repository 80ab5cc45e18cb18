#include "mmbm/mmbm_stationary.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace mmbm {

std::vector<double> interior_grid(double b, int points) {
    std::vector<double> xs(points);
    for (int k = 0; k < points; ++k) xs[k] = b * (k + 0.5) / points;
    return xs;
}

LimitMatrices limit_matrices(const MmbmModel& model) {
    LimitMatrices lm;
    lm.m = model.m;
    lm.b = model.b;
    lm.solvents = solvent_pair(model);

    const Vector theta = model.theta();
    const Vector theta_inv = theta.cwiseInverse();
    const Vector vinv = model.sigma2.cwiseInverse();
    const Matrix VinvD = vinv.asDiagonal() * model.drift_matrix();

    lm.K0 = lm.solvents.Psi1 * theta_inv.asDiagonal() + 2.0 * VinvD;
    lm.K0star = lm.solvents.Psi1Star * theta_inv.asDiagonal() - 2.0 * VinvD;

    const Matrix eLm = matrix_exponential(lm.solvents.LamMinus * model.b);
    const Matrix eLp = matrix_exponential(lm.solvents.LamPlus * model.b);
    const Matrix& Psi1 = lm.solvents.Psi1;
    const Matrix& Psi1s = lm.solvents.Psi1Star;
    const int m = model.m;

    Eigen::PartialPivLU<Matrix> lu_pm(Matrix::Identity(m, m) - eLp * eLm);
    Eigen::PartialPivLU<Matrix> lu_mp(Matrix::Identity(m, m) - eLm * eLp);
    lm.P1 = (Psi1s * eLp * eLm + Psi1) * lu_pm.inverse();
    lm.P1t = (Psi1 * eLm * eLp + Psi1s) * lu_mp.inverse();
    if (!lm.P1.allFinite() || !lm.P1t.allFinite()) {
        throw SolverError(ErrorCode::SingularBlock,
                          "I - e^{Lam+ b} e^{Lam- b} is numerically singular");
    }
    // L1 = (Psi1 - P1) e^{-Lam- b}, L1~ = (Psi1* - P1~) e^{-Lam+ b}
    lm.L1 = (Psi1 - lm.P1) * matrix_exponential(-lm.solvents.LamMinus * model.b);
    lm.L1t = (Psi1s - lm.P1t) * matrix_exponential(-lm.solvents.LamPlus * model.b);

    lm.N0 = Matrix(2 * m, 2 * m);
    lm.N0.topLeftCorner(m, m) = Matrix::Identity(m, m);
    lm.N0.topRightCorner(m, m) = matrix_exponential(lm.K0 * model.b);
    lm.N0.bottomLeftCorner(m, m) = matrix_exponential(lm.K0star * model.b);
    lm.N0.bottomRightCorner(m, m) = Matrix::Identity(m, m);
    return lm;
}

RowVector nu0(const LimitMatrices& lm) {
    const RowVector x = stationary_vector(lm.JG1b());
    const int m = lm.m;
    RowVector out(2 * m);  // nu0 = x J swaps the two halves
    out.head(m) = x.tail(m);
    out.tail(m) = x.head(m);
    return out;
}

RowVector MmbmSolution::density(double x) const {
    if (!(x > 0.0) || !(x < model.b)) {
        throw SolverError(ErrorCode::OutOfRange, "density is defined on (0, b)");
    }
    const int m = model.m;
    const Vector theta_inv = model.theta().cwiseInverse();
    RowVector d = coeff.head(m) * matrix_exponential(lm.K0 * x) * theta_inv.asDiagonal();
    d += coeff.tail(m) * matrix_exponential(lm.K0star * (model.b - x)) * theta_inv.asDiagonal();
    return d;
}

RowVector MmbmSolution::cdf(double x) const {
    const int m = model.m;
    if (x < 0.0 || x > model.b) {
        throw SolverError(ErrorCode::OutOfRange, "cdf argument outside [0, b]");
    }
    if (x == 0.0) return RowVector::Zero(m);
    const Vector theta_inv = model.theta().cwiseInverse();
    const Matrix full_star = expm_integral(lm.K0star, model.b);
    const Matrix tail_star = (x < model.b)
                                 ? Matrix(full_star - expm_integral(lm.K0star, model.b - x))
                                 : full_star;
    RowVector c = coeff.head(m) * expm_integral(lm.K0, x) * theta_inv.asDiagonal();
    c += coeff.tail(m) * tail_star * theta_inv.asDiagonal();
    return c;
}

MmbmSolution stationary_density(const MmbmModel& model) {
    MmbmSolution sol;
    sol.model = model;
    sol.lm = limit_matrices(model);
    sol.nu0 = nu0(sol.lm);

    {
        Eigen::JacobiSVD<Matrix> svd(sol.lm.N0);
        const auto& s = svd.singularValues();
        sol.cond_N0 = s(0) / std::max(s(s.size() - 1), 1e-300);
    }
    // nu0 N0^{-1}: solve N0' z' = nu0'
    const RowVector coeff_raw =
        sol.lm.N0.transpose().partialPivLu().solve(sol.nu0.transpose()).transpose();
    if (!coeff_raw.allFinite()) {
        throw SolverError(ErrorCode::SingularN, "N0 is singular");
    }

    const int m = model.m;
    const Vector theta_inv = model.theta().cwiseInverse();
    const double total =
        (coeff_raw.head(m) * expm_integral(sol.lm.K0, model.b) * theta_inv.asDiagonal()).sum() +
        (coeff_raw.tail(m) * expm_integral(sol.lm.K0star, model.b) * theta_inv.asDiagonal()).sum();
    if (total == 0.0 || !std::isfinite(total)) {
        throw SolverError(ErrorCode::SingularN, "limit normalization failed");
    }
    sol.cstar = 1.0 / total;
    sol.coeff = sol.cstar * coeff_raw;
    return sol;
}

RowVector TimeReversedForm::conditional_density(double x) const {
    if (!(x > 0.0) || !(x < b)) {
        throw SolverError(ErrorCode::OutOfRange, "density is defined on (0, b)");
    }
    const int m = static_cast<int>(alpha.size());
    const Matrix ebp = matrix_exponential(b * OmegaPlus);
    const Matrix ebm = matrix_exponential(b * OmegaMinus);
    const Matrix core = matrix_exponential(x * OmegaPlus) * OmegaPlus +
                        matrix_exponential((b - x) * OmegaMinus) * OmegaMinus * ebp;
    const Vector f =
        -core * (Matrix::Identity(m, m) - ebm * ebp).partialPivLu().solve(Vector::Ones(m));
    return f.transpose();
}

RowVector TimeReversedForm::joint_density(double x) const {
    return conditional_density(x).cwiseProduct(alpha);
}

TimeReversedForm time_reversed_density(const MmbmModel& model) {
    const PhaseDistribution dist = stationary_phase_distribution(model.Q);
    const LimitMatrices lm = limit_matrices(model);

    TimeReversedForm form;
    form.b = model.b;
    form.alpha = dist.alpha;

    const Vector theta = model.theta();
    const Vector a = dist.alpha.transpose();
    const Vector left = a.cwiseProduct(theta);        // Delta_alpha Theta
    const Vector right = left.cwiseInverse();         // Theta^{-1} Delta_{1/alpha}

    // Omega+' = D_alpha Theta K0 Theta^{-1} D_{1/alpha}, likewise Omega- from K0*
    form.OmegaPlus =
        (left.asDiagonal() * lm.K0 * right.asDiagonal()).transpose();
    form.OmegaMinus =
        (left.asDiagonal() * lm.K0star * right.asDiagonal()).transpose();
    return form;
}

double cross_check(const MmbmModel& model) {
    const MmbmSolution sol = stationary_density(model);
    const TimeReversedForm form = time_reversed_density(model);
    double sup = 0.0;
    for (double x : interior_grid(model.b)) {
        const RowVector d1 = sol.density(x);
        const RowVector d2 = form.joint_density(x);
        sup = std::max(sup, (d1 - d2).cwiseAbs().maxCoeff());
    }
    return sup;
}

}  // namespace mmbm
