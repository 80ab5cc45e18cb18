#pragma once

#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include "mmbm/model.hpp"

namespace mmbm {

/// Diagonal block of a real Schur form: start row and size (1 or 2).
struct SchurBlock {
    int start = 0;
    int size = 1;
    std::complex<double> eig;  ///< one representative eigenvalue
};

/// Scans a quasi-upper-triangular T and lists its diagonal blocks with their
/// eigenvalues (2x2 blocks report one member of the conjugate pair).
std::vector<SchurBlock> schur_blocks(const Matrix& T);

/// Swaps two adjacent diagonal blocks of the real Schur form T = Q' A Q,
/// updating T and Q in place. `i` is the start row of the first block,
/// p and q the block sizes. Fails (returns false) when the blocks share an
/// eigenvalue to working precision.
bool swap_schur_blocks(Matrix& T, Matrix& Q, int i, int p, int q);

/// Reorders the real Schur form so the blocks flagged in `select` (indexed
/// as in schur_blocks) occupy the leading rows, preserving relative order.
/// Returns the dimension of the leading invariant subspace.
int reorder_schur(Matrix& T, Matrix& Q, const std::vector<bool>& select);

}  // namespace mmbm
