#pragma once

#include <vector>

#include "mmbm/fluid_stationary.hpp"
#include "mmbm/mmbm_stationary.hpp"
#include "mmbm/model.hpp"

namespace mmbm {

/// Stationary density of the n-cell birth-death CTMC discretization of the
/// model (second-order consistent, error O(h^2) with h = b/n).
struct DiscretizationResult {
    int n = 0;
    double h = 0.0;
    Vector centers;  ///< cell midpoints
    Matrix density;  ///< n x m, per-phase density values at the midpoints
};

DiscretizationResult discretization_oracle(const MmbmModel& model, int n);

struct SweepPoint {
    double eps = 0.0;
    double distance = 0.0;  ///< sup-CDF distance to the limit, atoms included
    double mass0 = 0.0;
    double massb = 0.0;
    double cond_N = 0.0;
};

struct SweepReport {
    std::vector<SweepPoint> points;  ///< sorted by decreasing eps
    double slope = 0.0;              ///< log-log slope over the last 3 points
    bool has_slope = false;
};

/// Convergence study of the fluid family towards the MMBM limit.
SweepReport lambda_sweep(const MmbmModel& model, std::vector<double> eps_list);

/// Residuals of the eps-expansions, each divided by its expected eps power;
/// across halvings of eps the entries should stay within a constant factor.
struct ExpansionRow {
    double eps = 0.0;
    double psi = 0.0;       ///< |Psi_eps - I - eps Psi1| / eps^2
    double psi_star = 0.0;
    double k = 0.0;         ///< |K_eps - K0| / eps
    double k_star = 0.0;
    double u = 0.0;         ///< |U_eps - Lam- - eps (Th^{-1}Q + V^{-1}D Psi1)| / eps^2
    double u_star = 0.0;
    double gb = 0.0;        ///< |G^(b) - J - eps G1^(b)| / eps^2
};

std::vector<ExpansionRow> expansion_check(const MmbmModel& model,
                                          std::vector<double> eps_list);

}  // namespace mmbm
