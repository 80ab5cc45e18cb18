#include "mmbm/validation.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>

namespace mmbm {

DiscretizationResult discretization_oracle(const MmbmModel& model, int n) {
    if (n < 50) throw SolverError(ErrorCode::BadInput, "discretization needs n >= 50");
    const int m = model.m;
    const double h = model.b / n;

    // per-phase birth/death rates; negative rates mean the grid is too coarse
    Vector up(m), down(m);
    for (int i = 0; i < m; ++i) {
        const double diff = model.sigma2(i) / (2.0 * h * h);
        const double adv = model.mu(i) / (2.0 * h);
        up(i) = diff + adv;
        down(i) = diff - adv;
        if (up(i) < 0.0 || down(i) < 0.0) {
            throw SolverError(ErrorCode::NegativeRate,
                              "|mu| h / sigma^2 >= 1: increase the cell count");
        }
    }

    // state (cell k, phase i) -> index k*m + i; solve x' G = 0 with the
    // normalization replacing the last balance equation
    const int N = n * m;
    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(N) * (m + 3));

    // builds G^T directly: entry (to, from) = rate(from -> to)
    auto add = [&](int from, int to, double rate) {
        if (rate == 0.0) return;
        trips.emplace_back(to, from, rate);
        trips.emplace_back(from, from, -rate);
    };
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < m; ++i) {
            const int s = k * m + i;
            if (k + 1 < n) add(s, s + m, up(i));
            if (k > 0) add(s, s - m, down(i));
            for (int j = 0; j < m; ++j) {
                if (j != i) add(s, k * m + j, model.Q(i, j));
            }
        }
    }

    Eigen::SparseMatrix<double> GT(N, N);
    GT.setFromTriplets(trips.begin(), trips.end());

    // replace equation N-1 by sum(x) = 1
    for (int c = 0; c < N; ++c) GT.coeffRef(N - 1, c) = 1.0;
    GT.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(GT);
    if (lu.info() != Eigen::Success) {
        throw SolverError(ErrorCode::SingularSystem, "sparse stationary solve failed");
    }
    Vector e = Vector::Zero(N);
    e(N - 1) = 1.0;
    Vector p = lu.solve(e);
    p = p.cwiseMax(0.0);
    p /= p.sum();

    DiscretizationResult res;
    res.n = n;
    res.h = h;
    res.centers = Vector(n);
    res.density = Matrix(n, m);
    for (int k = 0; k < n; ++k) {
        res.centers(k) = (k + 0.5) * h;
        for (int i = 0; i < m; ++i) res.density(k, i) = p(k * m + i) / h;
    }
    return res;
}

SweepReport lambda_sweep(const MmbmModel& model, std::vector<double> eps_list) {
    if (eps_list.empty()) throw SolverError(ErrorCode::BadInput, "empty eps list");
    std::sort(eps_list.begin(), eps_list.end(), std::greater<>());
    eps_list.erase(std::unique(eps_list.begin(), eps_list.end()), eps_list.end());

    const MmbmSolution limit = stationary_density(model);
    const int grid_points = 1000;

    SweepReport report;
    for (double eps : eps_list) {
        const FluidModel fluid = build_fluid_approximation(model, eps);
        const FiniteBufferSolution sol = finite_buffer_solution(fluid, model.b);

        double sup = 0.0;
        for (int j = 0; j <= grid_points; ++j) {
            const double x = model.b * j / grid_points;
            const RowVector ff = fluid_cdf_collapsed(sol, x);
            const RowVector fl = limit.cdf(x);
            sup = std::max(sup, (ff - fl).cwiseAbs().maxCoeff());
        }
        report.points.push_back({eps, sup, sol.mass0(), sol.massb(), sol.cond_N});
    }

    // least-squares slope of log(distance) vs log(eps) over the last 3 points
    const int k = static_cast<int>(report.points.size());
    const int fit = std::min(3, k);
    if (fit >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int i = k - fit; i < k; ++i) {
            const double lx = std::log(report.points[i].eps);
            const double ly = std::log(std::max(report.points[i].distance, 1e-300));
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        report.slope = (fit * sxy - sx * sy) / (fit * sxx - sx * sx);
        report.has_slope = true;
    }
    return report;
}

std::vector<ExpansionRow> expansion_check(const MmbmModel& model,
                                          std::vector<double> eps_list) {
    if (eps_list.empty()) throw SolverError(ErrorCode::BadInput, "empty eps list");
    std::sort(eps_list.begin(), eps_list.end(), std::greater<>());

    const LimitMatrices lm = limit_matrices(model);
    const SolventPair& sp = lm.solvents;
    const int m = model.m;
    const Matrix I = Matrix::Identity(m, m);
    const Vector theta_inv = model.theta().cwiseInverse();
    const Vector vinv = model.sigma2.cwiseInverse();
    const Matrix ThinvQ = theta_inv.asDiagonal() * model.Q;
    const Matrix VinvD = vinv.asDiagonal() * model.drift_matrix();

    Matrix J = Matrix::Zero(2 * m, 2 * m);
    J.topRightCorner(m, m) = I;
    J.bottomLeftCorner(m, m) = I;

    std::vector<ExpansionRow> rows;
    for (double eps : eps_list) {
        const FluidModel fluid = build_fluid_approximation(model, eps);
        const FirstPassageSet fp = first_passage_set(fluid);
        const GbMatrix gb = solve_Gb(fp, model.b);
        const double e2 = eps * eps;

        ExpansionRow row;
        row.eps = eps;
        row.psi = (fp.Psi - I - eps * sp.Psi1).cwiseAbs().maxCoeff() / e2;
        row.psi_star = (fp.PsiStar - I - eps * sp.Psi1Star).cwiseAbs().maxCoeff() / e2;
        row.k = (fp.K - lm.K0).cwiseAbs().maxCoeff() / eps;
        row.k_star = (fp.Kstar - lm.K0star).cwiseAbs().maxCoeff() / eps;
        row.u = (fp.U - sp.LamMinus - eps * (ThinvQ + VinvD * sp.Psi1))
                    .cwiseAbs()
                    .maxCoeff() /
                e2;
        row.u_star = (fp.Ustar - sp.LamPlus - eps * (ThinvQ - VinvD * sp.Psi1))
                         .cwiseAbs()
                         .maxCoeff() /
                     e2;
        row.gb = (gb.full() - J - eps * lm.G1b()).cwiseAbs().maxCoeff() / e2;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mmbm
