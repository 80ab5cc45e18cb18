#include "mmbm/schur.hpp"

#include <Eigen/QR>

#include <cmath>

namespace mmbm {

std::vector<SchurBlock> schur_blocks(const Matrix& T) {
    const int n = static_cast<int>(T.rows());
    std::vector<SchurBlock> blocks;
    int row = 0;
    while (row < n) {
        SchurBlock blk;
        blk.start = row;
        if (row + 1 < n && T(row + 1, row) != 0.0) {
            blk.size = 2;
            // eigenvalues of [[a,b],[c,d]]: trace/2 +- sqrt(disc)
            const double a = T(row, row), b = T(row, row + 1);
            const double c = T(row + 1, row), d = T(row + 1, row + 1);
            const double tr2 = 0.5 * (a + d);
            const double disc = tr2 * tr2 - (a * d - b * c);
            if (disc >= 0.0) {
                blk.eig = {tr2 + std::sqrt(disc), 0.0};
            } else {
                blk.eig = {tr2, std::sqrt(-disc)};
            }
        } else {
            blk.size = 1;
            blk.eig = {T(row, row), 0.0};
        }
        blocks.push_back(blk);
        row += blk.size;
    }
    return blocks;
}

bool swap_schur_blocks(Matrix& T, Matrix& Q, int i, int p, int q) {
    const int n = static_cast<int>(T.rows());
    const int w = p + q;  // window size
    const Matrix A11 = T.block(i, i, p, p);
    const Matrix A12 = T.block(i, i + p, p, q);
    const Matrix A22 = T.block(i + p, i + p, q, q);

    // Solve A11 X - X A22 = A12 via the (tiny) Kronecker system.
    Matrix S = Matrix::Zero(p * q, p * q);
    Vector rhs(p * q);
    for (int col = 0; col < q; ++col) {
        for (int row = 0; row < p; ++row) {
            const int k = col * p + row;
            rhs(k) = A12(row, col);
            for (int r2 = 0; r2 < p; ++r2) S(k, col * p + r2) += A11(row, r2);
            for (int c2 = 0; c2 < q; ++c2) S(k, c2 * p + row) -= A22(c2, col);
        }
    }
    Eigen::FullPivLU<Matrix> lu(S);
    const double smin = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    const double smax = lu.matrixLU().diagonal().cwiseAbs().maxCoeff();
    if (!lu.isInvertible() || smin < 1e-14 * smax) return false;
    Vector xv = lu.solve(rhs);

    Matrix X(p, q);
    for (int col = 0; col < q; ++col)
        for (int row = 0; row < p; ++row) X(row, col) = xv(col * p + row);

    // [ -X ; I ] spans the invariant subspace of the window belonging to A22;
    // a full QR of it yields the orthogonal swap transform.
    Matrix Z(w, q);
    Z.topRows(p) = -X;
    Z.bottomRows(q) = Matrix::Identity(q, q);
    Eigen::HouseholderQR<Matrix> qr(Z);
    Matrix Qw = qr.householderQ();

    T.block(i, 0, w, n) = Qw.transpose() * T.block(i, 0, w, n);
    T.block(0, i, n, w) = T.block(0, i, n, w) * Qw;
    Q.block(0, i, n, w) = Q.block(0, i, n, w) * Qw;

    // restore exact quasi-triangular zeros in the window
    T.block(i + q, i, p, q).setZero();
    if (q == 2 && std::abs(T(i + 1, i)) < 1e-14 * (std::abs(T(i, i)) + std::abs(T(i + 1, i + 1)))) {
        T(i + 1, i) = 0.0;
    }
    if (p == 2) {
        const int j = i + q;
        if (std::abs(T(j + 1, j)) < 1e-14 * (std::abs(T(j, j)) + std::abs(T(j + 1, j + 1)))) {
            T(j + 1, j) = 0.0;
        }
    }
    return true;
}

int reorder_schur(Matrix& T, Matrix& Q, const std::vector<bool>& select) {
    auto blocks = schur_blocks(T);
    if (select.size() != blocks.size()) {
        throw SolverError(ErrorCode::BadInput, "selection size mismatch");
    }

    std::vector<int> selected;
    int dim = 0;
    for (int k = 0; k < static_cast<int>(blocks.size()); ++k) {
        if (select[k]) {
            selected.push_back(k);
            dim += blocks[k].size;
        }
    }

    int top = 0;
    for (int idx : selected) {
        for (int i = idx; i > top; --i) {
            // bubble block i past block i-1
            if (!swap_schur_blocks(T, Q, blocks[i - 1].start, blocks[i - 1].size,
                                   blocks[i].size)) {
                throw SolverError(ErrorCode::SubspaceIllConditioned,
                                  "Schur block swap failed: eigenvalues too close");
            }
            const int psz = blocks[i - 1].size;
            blocks[i - 1].size = blocks[i].size;
            blocks[i].start = blocks[i - 1].start + blocks[i].size;
            blocks[i].size = psz;
            std::swap(blocks[i - 1].eig, blocks[i].eig);
        }
        ++top;
    }
    return dim;
}

}  // namespace mmbm
