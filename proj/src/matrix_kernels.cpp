#include "mmbm/matrix_kernels.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

#include "mmbm/schur.hpp"

namespace mmbm {

Matrix matrix_exponential(const Matrix& A) {
    if (!A.allFinite()) {
        throw SolverError(ErrorCode::NonFinite, "matrix exponential of non-finite input");
    }
    const int n = static_cast<int>(A.rows());
    const Matrix I = Matrix::Identity(n, n);

    // degree-13 Pade coefficients
    static const double b[14] = {64764752532480000.0, 32382376266240000.0,
                                 7771770303897600.0,  1187353796428800.0,
                                 129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,
                                 1323241920.0,        40840800.0,
                                 960960.0,            16380.0,
                                 182.0,               1.0};
    const double theta13 = 5.371920351148152;

    const double norm = A.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
    if (norm == 0.0) return I;
    int squarings = 0;
    if (norm > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
    }
    const Matrix As = A / std::ldexp(1.0, squarings);

    const Matrix A2 = As * As;
    const Matrix A4 = A2 * A2;
    const Matrix A6 = A2 * A4;
    const Matrix U =
        As * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 +
              b[3] * A2 + b[1] * I);
    const Matrix V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 +
                     b[4] * A4 + b[2] * A2 + b[0] * I;

    Matrix E = (V - U).partialPivLu().solve(V + U);
    for (int s = 0; s < squarings; ++s) E = E * E;
    return E;
}

Matrix expm_integral(const Matrix& K, double b) {
    if (!(b > 0.0)) {
        throw SolverError(ErrorCode::BadInput, "expm_integral needs b > 0");
    }
    const int n = static_cast<int>(K.rows());
    Matrix block = Matrix::Zero(2 * n, 2 * n);
    block.topLeftCorner(n, n) = K;
    block.topRightCorner(n, n) = Matrix::Identity(n, n);
    const Matrix E = matrix_exponential(block * b);
    return E.topRightCorner(n, n);
}

namespace {

// Solves S Y + Y R = G with S, R quasi upper triangular, by block
// back-substitution over the diagonal blocks (sizes 1 or 2).
Matrix solve_quasi_triangular_sylvester(const Matrix& S, const Matrix& R, Matrix G) {
    const auto sblocks = schur_blocks(S);
    const auto rblocks = schur_blocks(R);
    const int n = static_cast<int>(S.rows());
    Matrix Y = Matrix::Zero(n, R.rows());

    for (const auto& rb : rblocks) {
        const int j = rb.start, q = rb.size;
        // right-hand side for this block column: G_j - Y_{<j} R_{<j,j}
        Matrix rhs_col = G.middleCols(j, q);
        if (j > 0) rhs_col -= Y.leftCols(j) * R.block(0, j, j, q);

        const Matrix Rjj = R.block(j, j, q, q);
        for (auto it = sblocks.rbegin(); it != sblocks.rend(); ++it) {
            const int i = it->start, p = it->size;
            Matrix rhs = rhs_col.middleRows(i, p);
            const int below = n - (i + p);
            if (below > 0) {
                rhs -= S.block(i, i + p, p, below) * Y.block(i + p, j, below, q);
            }
            // tiny Kronecker system (I_q (x) S_ii + R_jj' (x) I_p) vec(Z) = vec(rhs)
            Matrix M = Matrix::Zero(p * q, p * q);
            Vector v(p * q);
            const Matrix Sii = S.block(i, i, p, p);
            for (int col = 0; col < q; ++col) {
                for (int row = 0; row < p; ++row) {
                    const int k = col * p + row;
                    v(k) = rhs(row, col);
                    for (int r2 = 0; r2 < p; ++r2) M(k, col * p + r2) += Sii(row, r2);
                    for (int c2 = 0; c2 < q; ++c2) M(k, c2 * p + row) += Rjj(c2, col);
                }
            }
            Eigen::FullPivLU<Matrix> lu(M);
            if (!lu.isInvertible()) {
                throw SolverError(ErrorCode::SingularSystem,
                                  "Sylvester spectra overlap (A and -B share an eigenvalue)");
            }
            Vector z = lu.solve(v);
            for (int col = 0; col < q; ++col)
                for (int row = 0; row < p; ++row) Y(i + row, j + col) = z(col * p + row);
        }
    }
    return Y;
}

}  // namespace

Matrix solve_sylvester(const Matrix& A, const Matrix& B, const Matrix& F) {
    Eigen::RealSchur<Matrix> sa(A);
    Eigen::RealSchur<Matrix> sb(B);
    const Matrix& S = sa.matrixT();
    const Matrix& U = sa.matrixU();
    const Matrix& R = sb.matrixT();
    const Matrix& W = sb.matrixU();

    const Matrix G = U.transpose() * F * W;
    const Matrix Y = solve_quasi_triangular_sylvester(S, R, G);
    return U * Y * W.transpose();
}

Matrix solve_riccati_min_nonneg(const FluidModel& fluid, RiccatiDirection direction,
                                const RiccatiOptions& opts) {
    const int m = fluid.m;
    const Vector cp_inv = fluid.Cp.cwiseInverse();
    const Vector cm_inv = fluid.cm_abs().cwiseInverse();

    // residual form: Cc + A X + X B + X Dd X = 0
    Matrix A, B, Cc, Dd;
    if (direction == RiccatiDirection::Down) {
        A = cp_inv.asDiagonal() * fluid.Tpp;
        B = cm_inv.asDiagonal() * fluid.Tmm;
        Cc = cp_inv.asDiagonal() * fluid.Tpm;
        Dd = cm_inv.asDiagonal() * fluid.Tmp;
    } else {
        A = cm_inv.asDiagonal() * fluid.Tmm;
        B = cp_inv.asDiagonal() * fluid.Tpp;
        Cc = cm_inv.asDiagonal() * fluid.Tmp;
        Dd = cp_inv.asDiagonal() * fluid.Tpm;
    }

    const double scale = std::max({1.0, Cc.cwiseAbs().maxCoeff(),
                                   A.cwiseAbs().maxCoeff(), B.cwiseAbs().maxCoeff(),
                                   Dd.cwiseAbs().maxCoeff()});
    auto residual = [&](const Matrix& X) -> Matrix {
        return Cc + A * X + X * B + X * Dd * X;
    };

    Matrix X = Matrix::Zero(m, m);
    double res = residual(X).cwiseAbs().maxCoeff();
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        if (res <= opts.tol * scale) return X;
        if (opts.use_newton) {
            // Newton step: (A + X Dd) H + H (B + Dd X) = -R(X)
            const Matrix H = solve_sylvester(A + X * Dd, B + Dd * X, -residual(X));
            X += H;
        } else {
            // linear fixed point: A X' + X' B = -(Cc + X Dd X)
            X = solve_sylvester(A, B, -(Cc + X * Dd * X));
        }
        res = residual(X).cwiseAbs().maxCoeff();
    }
    if (res <= opts.tol * scale * 10.0) return X;  // stagnated at roundoff
    throw SolverError(ErrorCode::NoConvergence,
                      "Riccati iteration stalled at residual " + std::to_string(res) +
                          " after " + std::to_string(opts.max_iterations) + " iterations");
}

SolventPair solvent_pair(const MmbmModel& model) {
    const int m = model.m;
    const PhaseDistribution dist = stationary_phase_distribution(model.Q);
    const double drift = dist.alpha.dot(model.mu.transpose());
    if (std::abs(drift) <= kDriftTol * model.mu.cwiseAbs().maxCoeff()) {
        throw SolverError(ErrorCode::ZeroMeanDrift, "solvent pair needs alpha D 1 != 0");
    }

    Matrix lin = Matrix::Zero(2 * m, 2 * m);
    lin.topRightCorner(m, m) = Matrix::Identity(m, m);
    const Vector vinv = model.sigma2.cwiseInverse();
    lin.bottomLeftCorner(m, m) = -2.0 * (vinv.asDiagonal() * model.Q);
    lin.bottomRightCorner(m, m) = -2.0 * (vinv.asDiagonal() * model.drift_matrix());

    Eigen::RealSchur<Matrix> schur(lin);
    const double ztol =
        1e-8 * lin.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm of linearization

    // Assembles the solvent whose invariant subspace collects the selected
    // latent roots: strictly negative (take_negative) or strictly positive
    // real parts, plus the zero root when with_zero_root.
    auto extract = [&](bool take_negative, bool with_zero_root) -> Matrix {
        Matrix T = schur.matrixT();
        Matrix U = schur.matrixU();
        auto blocks = schur_blocks(T);
        std::vector<bool> select(blocks.size(), false);
        int dim = 0;
        for (size_t k = 0; k < blocks.size(); ++k) {
            const double re = blocks[k].eig.real();
            const bool is_zero = std::abs(blocks[k].eig) <= ztol;
            bool keep;
            if (is_zero) {
                keep = with_zero_root;
            } else {
                keep = take_negative ? (re < 0.0) : (re > 0.0);
            }
            if (keep) {
                select[k] = true;
                dim += blocks[k].size;
            }
        }
        if (dim != m) {
            throw SolverError(ErrorCode::SubspaceIllConditioned,
                              "latent root split gave subspace dimension " +
                                  std::to_string(dim) + ", expected " + std::to_string(m));
        }
        reorder_schur(T, U, select);

        const Matrix W1 = U.topLeftCorner(m, m);
        const Matrix W2 = U.bottomLeftCorner(m, m);
        Eigen::FullPivLU<Matrix> lu(W1.transpose());
        const double dmin = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
        const double dmax = lu.matrixLU().diagonal().cwiseAbs().maxCoeff();
        if (!lu.isInvertible() || dmin < 1e-13 * dmax) {
            throw SolverError(ErrorCode::SubspaceIllConditioned,
                              "subspace basis W1 is numerically singular");
        }
        // X = W2 W1^{-1}, via W1' X' = W2'
        return lu.solve(W2.transpose()).transpose();
    };

    const bool zero_to_minus = drift < 0.0;
    SolventPair pair;
    pair.LamMinus = extract(true, zero_to_minus);
    pair.LamPlus = -extract(false, !zero_to_minus);

    const Vector theta = model.theta();
    pair.Psi1 = theta.asDiagonal() * pair.LamMinus;
    pair.Psi1Star = theta.asDiagonal() * pair.LamPlus;
    return pair;
}

RowVector stationary_vector(const Matrix& G) {
    const int n = static_cast<int>(G.rows());
    if (n == 0 || G.cols() != n || !G.allFinite()) {
        throw SolverError(ErrorCode::BadInput, "stationary_vector needs a finite square matrix");
    }
    const double scale = std::max(1.0, G.cwiseAbs().maxCoeff());
    const Vector rs = G.rowwise().sum();
    const double dev0 = rs.cwiseAbs().maxCoeff();
    const double dev1 = (rs.array() - 1.0).abs().maxCoeff();

    Matrix A;
    if (dev0 <= 1e-6 * scale) {
        A = G;  // generator
    } else if (dev1 <= 1e-6 * scale) {
        A = G - Matrix::Identity(n, n);  // stochastic
    } else {
        throw SolverError(ErrorCode::NotBalanced,
                          "row sums are neither ~0 (generator) nor ~1 (stochastic)");
    }

    // irreducibility on the off-diagonal pattern (ignore roundoff-level noise)
    Matrix pattern = A;
    pattern.diagonal().setZero();
    const double ptol = 1e-14 * scale;
    pattern = (pattern.cwiseAbs().array() > ptol).cast<double>().matrix();
    if (!detail::pattern_irreducible(pattern)) {
        throw SolverError(ErrorCode::NotIrreducible, "matrix is not irreducible");
    }

    Matrix Ahat = A;
    Ahat.col(n - 1).setOnes();
    Vector e = Vector::Zero(n);
    e(n - 1) = 1.0;
    Eigen::PartialPivLU<Matrix> lu(Ahat.transpose());
    Vector nu = lu.solve(e);
    nu += lu.solve(e - Ahat.transpose() * nu);

    RowVector out = nu.transpose().cwiseMax(0.0);
    out /= out.sum();
    return out;
}

}  // namespace mmbm
