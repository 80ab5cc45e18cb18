#include "mmbm/model.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace mmbm {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotAGenerator: return "NotAGenerator";
        case ErrorCode::NotIrreducible: return "NotIrreducible";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::ZeroMeanDrift: return "ZeroMeanDrift";
        case ErrorCode::BadBuffer: return "BadBuffer";
        case ErrorCode::BadInput: return "BadInput";
        case ErrorCode::EpsTooLarge: return "EpsTooLarge";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::EmptySample: return "EmptySample";
        case ErrorCode::NegativeRate: return "NegativeRate";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::SubspaceIllConditioned: return "SubspaceIllConditioned";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::SingularN: return "SingularN";
        case ErrorCode::SingularBlock: return "SingularBlock";
        case ErrorCode::NotBalanced: return "NotBalanced";
    }
    return "Unknown";
}

bool is_input_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotAGenerator:
        case ErrorCode::NotIrreducible:
        case ErrorCode::ZeroVariance:
        case ErrorCode::ZeroMeanDrift:
        case ErrorCode::BadBuffer:
        case ErrorCode::BadInput:
        case ErrorCode::EpsTooLarge:
        case ErrorCode::OutOfRange:
        case ErrorCode::EmptySample:
        case ErrorCode::NegativeRate:
            return true;
        default:
            return false;
    }
}

namespace detail {

bool pattern_irreducible(const Matrix& A) {
    const int n = static_cast<int>(A.rows());
    if (n == 1) return true;

    // strong connectivity = every node reachable from 0 in the graph and in
    // its transpose
    auto reaches_all = [&](bool transpose) {
        std::vector<char> seen(n, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < n; ++v) {
                if (v == u || seen[v]) continue;
                double w = transpose ? A(v, u) : A(u, v);
                if (w != 0.0) {
                    seen[v] = 1;
                    ++count;
                    stack.push_back(v);
                }
            }
        }
        return count == n;
    };
    return reaches_all(false) && reaches_all(true);
}

}  // namespace detail

static void check_generator(const Matrix& Q) {
    const int n = static_cast<int>(Q.rows());
    if (n == 0 || Q.cols() != n) {
        throw SolverError(ErrorCode::NotAGenerator, "Q must be square and nonempty");
    }
    if (!Q.allFinite()) {
        throw SolverError(ErrorCode::NotAGenerator, "Q has non-finite entries");
    }
    const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i != j && Q(i, j) < 0.0) {
                throw SolverError(ErrorCode::NotAGenerator,
                                  "Q has a negative off-diagonal entry");
            }
        }
        if (std::abs(Q.row(i).sum()) > 1e-12 * scale) {
            throw SolverError(ErrorCode::NotAGenerator, "Q row sums are not zero");
        }
    }
    if (!detail::pattern_irreducible(Q)) {
        throw SolverError(ErrorCode::NotIrreducible, "Q is not irreducible");
    }
}

PhaseDistribution stationary_phase_distribution(const Matrix& Q) {
    check_generator(Q);
    const int n = static_cast<int>(Q.rows());

    // alpha Q = 0, alpha 1 = 1: replace the last column of Q by ones and
    // solve the transposed square system.
    Matrix A = Q;
    A.col(n - 1).setOnes();
    Vector e = Vector::Zero(n);
    e(n - 1) = 1.0;
    Eigen::PartialPivLU<Matrix> lu(A.transpose());
    Vector alpha = lu.solve(e);
    // one step of iterative refinement keeps the residual near machine level
    alpha += lu.solve(e - A.transpose() * alpha);

    PhaseDistribution dist;
    dist.alpha = alpha.transpose();
    dist.alpha = dist.alpha.cwiseMax(0.0);
    dist.alpha /= dist.alpha.sum();
    return dist;
}

MmbmModel validate_model(const MmbmModel& raw) {
    MmbmModel model = raw;
    if (model.m == 0) model.m = static_cast<int>(model.Q.rows());
    if (model.Q.rows() != model.m || model.Q.cols() != model.m ||
        model.mu.size() != model.m || model.sigma2.size() != model.m) {
        throw SolverError(ErrorCode::BadInput, "Q, mu, sigma2 sizes disagree");
    }
    check_generator(model.Q);
    if (!model.mu.allFinite() || !model.sigma2.allFinite()) {
        throw SolverError(ErrorCode::BadInput, "mu or sigma2 has non-finite entries");
    }
    if ((model.sigma2.array() <= 0.0).any()) {
        throw SolverError(ErrorCode::ZeroVariance,
                          "every phase variance must be strictly positive");
    }
    if (!(model.b > 0.0) || !std::isfinite(model.b)) {
        throw SolverError(ErrorCode::BadBuffer, "buffer height b must be positive and finite");
    }

    PhaseDistribution dist = stationary_phase_distribution(model.Q);
    const double drift = dist.alpha.dot(model.mu.transpose());
    if (std::abs(drift) <= kDriftTol * model.mu.cwiseAbs().maxCoeff()) {
        throw SolverError(ErrorCode::ZeroMeanDrift,
                          "mean drift alpha D 1 is (numerically) zero");
    }
    return model;
}

double eps_threshold(const MmbmModel& model) {
    double thr = std::numeric_limits<double>::infinity();
    for (int i = 0; i < model.m; ++i) {
        const double mu = model.mu(i);
        if (mu == 0.0) continue;
        thr = std::min(thr, std::sqrt(model.sigma2(i)) / std::abs(mu));
    }
    return thr;
}

FluidModel build_fluid_approximation(const MmbmModel& model, double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) {
        throw SolverError(ErrorCode::BadInput, "eps must be positive and finite");
    }
    const double thr = eps_threshold(model);
    if (eps >= thr) {
        throw SolverError(ErrorCode::EpsTooLarge,
                          "eps = " + std::to_string(eps) +
                              " breaks the +/- rate partition (threshold " +
                              std::to_string(thr) + ")");
    }

    const int m = model.m;
    FluidModel fluid;
    fluid.m = m;
    fluid.eps = eps;
    fluid.lambda = 1.0 / (eps * eps);

    fluid.T = Matrix::Zero(2 * m, 2 * m);
    fluid.T.topLeftCorner(m, m) = model.Q - fluid.lambda * Matrix::Identity(m, m);
    fluid.T.bottomRightCorner(m, m) = fluid.T.topLeftCorner(m, m);
    fluid.T.topRightCorner(m, m) = fluid.lambda * Matrix::Identity(m, m);
    fluid.T.bottomLeftCorner(m, m) = fluid.T.topRightCorner(m, m);

    const Vector theta = model.theta();
    fluid.Cp = model.mu + theta / eps;
    fluid.Cm = model.mu - theta / eps;
    fluid.c_diag = Vector(2 * m);
    fluid.c_diag << fluid.Cp, fluid.Cm;

    if ((fluid.Cp.array() <= 0.0).any() || (fluid.Cm.array() >= 0.0).any()) {
        throw SolverError(ErrorCode::EpsTooLarge, "rate sign pattern broken");
    }

    fluid.Tpp = fluid.T.topLeftCorner(m, m);
    fluid.Tpm = fluid.T.topRightCorner(m, m);
    fluid.Tmp = fluid.T.bottomLeftCorner(m, m);
    fluid.Tmm = fluid.T.bottomRightCorner(m, m);
    return fluid;
}

}  // namespace mmbm
