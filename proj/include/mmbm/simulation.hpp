#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mmbm/model.hpp"

namespace mmbm {

struct SimConfig {
    double horizon = 2e5;    ///< total simulated time
    double burn_in = 1e3;    ///< discarded prefix
    double step = 1e-3;      ///< Euler step (MMBM only)
    double sample_dt = 0.25; ///< observation interval
    std::uint64_t seed = 20240917;
    int grid = 400;          ///< histogram bin count
    std::uint64_t stream = 0;
};

/// Histogram estimate of a stationary law on [0, b] with boundary atoms,
/// plus local-time rates and batch-means bookkeeping for error bars.
struct EmpiricalLaw {
    int num_phases = 0;
    double b = 0.0;
    long long count = 0;
    Matrix hist;          ///< grid x num_phases, weights (sums with atoms to 1)
    RowVector boundary0;  ///< per-phase atom at level 0
    RowVector boundaryb;  ///< per-phase atom at level b
    double w_rate = 0.0;  ///< local time at 0 per unit time
    double m_rate = 0.0;  ///< local time at b per unit time
    std::vector<double> level_batch_means;
    double ess = 0.0;     ///< effective sample size (batch means, 100 batches)
    std::vector<std::string> warnings;

    int bins() const { return static_cast<int>(hist.rows()); }
    double bin_left(int k) const { return b * k / bins(); }
    double bin_right(int k) const { return b * (k + 1) / bins(); }
    /// occupancy per phase: atoms + histogram column sums
    RowVector phase_occupancy() const;
    double mean_level() const;
    /// standard error of the mean level from batch means
    double mean_level_se() const;
};

/// Event-driven exact simulation of the finite-buffer fluid.
EmpiricalLaw simulate_fluid(const FluidModel& fluid, double b, const SimConfig& cfg);

/// Euler discretization of the two-sided reflected MMBM; boundary treatment
/// is clamping, with clamped amounts accumulated into the local times.
EmpiricalLaw simulate_mmbm(const MmbmModel& model, const SimConfig& cfg);

/// Sup distance between the empirical level-marginal CDF (atoms included)
/// and an analytic CDF, evaluated at the histogram bin edges.
double ks_distance(const EmpiricalLaw& law, const std::function<double(double)>& cdf);

/// Weighted histogram addition; associative and order-independent.
EmpiricalLaw merge(const EmpiricalLaw& a, const EmpiricalLaw& b);

}  // namespace mmbm
