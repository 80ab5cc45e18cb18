#include <doctest.h>

#include <cmath>

#include "mmbm/fluid_stationary.hpp"
#include "mmbm/mmbm_stationary.hpp"
#include "mmbm/simulation.hpp"
#include "test_support.hpp"

using namespace mmbm;
using namespace mmbm::test;

namespace {

FluidModel symmetric_fluid() {
    // balanced two-phase fluid: mean level settles at b/2
    FluidModel f;
    f.m = 1;
    f.eps = 1.0;
    f.lambda = 1.0;
    f.T = Matrix(2, 2);
    f.T << -1.0, 1.0, 1.0, -1.0;
    f.c_diag = Vector(2);
    f.c_diag << 1.0, -1.0;
    f.Tpp = f.T.topLeftCorner(1, 1);
    f.Tpm = f.T.topRightCorner(1, 1);
    f.Tmp = f.T.bottomLeftCorner(1, 1);
    f.Tmm = f.T.bottomRightCorner(1, 1);
    f.Cp = f.c_diag.head(1);
    f.Cm = f.c_diag.tail(1);
    return f;
}

SimConfig quick_config(double horizon, double step = 1e-3) {
    SimConfig cfg;
    cfg.horizon = horizon;
    cfg.burn_in = horizon / 100.0;
    cfg.step = step;
    cfg.sample_dt = 0.25;
    cfg.seed = 4242;
    cfg.grid = 200;
    return cfg;
}

}  // namespace

TEST_CASE("fluid simulation is deterministic given the seed") {
    const FluidModel fluid = symmetric_fluid();
    const SimConfig cfg = quick_config(2000.0);
    const EmpiricalLaw a = simulate_fluid(fluid, 1.0, cfg);
    const EmpiricalLaw b = simulate_fluid(fluid, 1.0, cfg);
    CHECK(a.count == b.count);
    CHECK((a.hist.array() == b.hist.array()).all());
    CHECK((a.boundary0.array() == b.boundary0.array()).all());
    CHECK(a.w_rate == b.w_rate);
}

TEST_CASE("symmetric fluid settles at half the buffer") {
    const EmpiricalLaw law = simulate_fluid(symmetric_fluid(), 1.0, quick_config(50000.0));
    const double se = law.mean_level_se();
    CHECK(std::abs(law.mean_level() - 0.5) < 3.0 * se + 1e-3);
}

TEST_CASE("fluid phase occupancy approaches gamma (x) alpha") {
    const MmbmModel m1 = make_m1();
    const FluidModel fluid = build_fluid_approximation(m1, 0.1);
    const EmpiricalLaw law = simulate_fluid(fluid, m1.b, quick_config(50000.0));
    const RowVector occ = law.phase_occupancy();
    // two copies of the single phase, each at probability 1/2
    const double se = 3.0 / std::sqrt(law.ess) + 5e-3;
    CHECK(std::abs(occ(0) - 0.5) < se);
    CHECK(std::abs(occ(1) - 0.5) < se);
}

TEST_CASE("fluid simulation matches the fluid closed form in KS distance") {
    const MmbmModel m1 = make_m1();
    const FluidModel fluid = build_fluid_approximation(m1, 0.1);
    const FiniteBufferSolution sol = finite_buffer_solution(fluid, m1.b);
    const EmpiricalLaw law = simulate_fluid(fluid, m1.b, quick_config(50000.0));
    const double ks = ks_distance(
        law, [&](double x) { return fluid_cdf_collapsed(sol, x).sum(); });
    const double dkw3 = 3.0 * std::sqrt(std::log(2.0) / (2.0 * law.ess));
    CHECK(ks < dkw3);
}

TEST_CASE("MMBM simulation is deterministic and near the closed form") {
    const MmbmModel m1 = make_m1();
    SimConfig cfg = quick_config(2e4);
    const EmpiricalLaw a = simulate_mmbm(m1, cfg);
    const EmpiricalLaw b = simulate_mmbm(m1, cfg);
    CHECK((a.hist.array() == b.hist.array()).all());

    const double ks = ks_distance(a, [&](double x) { return m1_cdf(x); });
    CHECK(ks < 0.02);
}

TEST_CASE("MMBM simulation at the reference configuration") {
    // horizon 2e5, burn-in 1e3, step 1e-3 against 2 e^{-2x}/(1 - e^{-2})
    const MmbmModel m1 = make_m1();
    SimConfig cfg;
    cfg.horizon = 2e5;
    cfg.burn_in = 1e3;
    cfg.step = 1e-3;
    cfg.sample_dt = 0.25;
    cfg.seed = 20240917;
    cfg.grid = 400;
    const EmpiricalLaw law = simulate_mmbm(m1, cfg);
    const double ks = ks_distance(law, [&](double x) { return m1_cdf(x); });
    CHECK(ks <= 0.01);
}

TEST_CASE("no spurious boundary atoms; local-time rates are stable in the step") {
    // the reflected-overshoot step never parks the chain exactly on a wall,
    // matching the zero boundary masses of the limit law
    const MmbmModel m1 = make_m1();
    std::vector<double> w_rates;
    for (double step : {4e-3, 1e-3, 2.5e-4}) {
        SimConfig cfg = quick_config(3e4, step);
        const EmpiricalLaw law = simulate_mmbm(m1, cfg);
        CHECK(law.boundary0.sum() + law.boundaryb.sum() == 0.0);
        w_rates.push_back(law.w_rate);
    }
    CHECK(w_rates[2] > 0.0);
    // the local-time estimator should not blow up or vanish as the grid refines
    CHECK(w_rates[2] / w_rates[0] > 0.5);
    CHECK(w_rates[2] / w_rates[0] < 2.0);
}

TEST_CASE("mu -> -mu mirrors the level distribution") {
    SimConfig cfg = quick_config(3e4);
    const EmpiricalLaw down = simulate_mmbm(make_m1(-1.0), cfg);
    const EmpiricalLaw up = simulate_mmbm(make_m1(1.0), cfg);
    const double se = 3.0 * (down.mean_level_se() + up.mean_level_se());
    CHECK(std::abs(down.mean_level() - (1.0 - up.mean_level())) < se + 2e-3);
}

TEST_CASE("step-too-coarse warning") {
    const MmbmModel m1 = make_m1();
    SimConfig cfg = quick_config(200.0, 0.05);  // recommended is (b/20)^2 = 2.5e-3
    const EmpiricalLaw law = simulate_mmbm(m1, cfg);
    REQUIRE(!law.warnings.empty());
    CHECK(law.warnings.front().find("StepTooCoarse") == 0);
}

TEST_CASE("ks_distance sanity") {
    // synthetic law: uniform histogram on [0,1]
    EmpiricalLaw law;
    law.num_phases = 1;
    law.b = 1.0;
    law.count = 100000;
    law.hist = Matrix::Constant(100, 1, 0.01);
    law.boundary0 = RowVector::Zero(1);
    law.boundaryb = RowVector::Zero(1);

    CHECK(ks_distance(law, [](double x) { return x; }) < 1e-12);
    CHECK(ks_distance(law, [](double x) { return x * x; }) >= 0.1);

    EmpiricalLaw empty;
    empty.num_phases = 1;
    empty.b = 1.0;
    empty.hist = Matrix::Zero(10, 1);
    empty.boundary0 = RowVector::Zero(1);
    empty.boundaryb = RowVector::Zero(1);
    CHECK_THROWS_AS(ks_distance(empty, [](double x) { return x; }), SolverError);
}

TEST_CASE("sampled uniforms stay within the DKW band") {
    CounterRng rng(7, 0);
    EmpiricalLaw law;
    law.num_phases = 1;
    law.b = 1.0;
    law.hist = Matrix::Zero(1000, 1);
    law.boundary0 = RowVector::Zero(1);
    law.boundaryb = RowVector::Zero(1);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_uniform();
        law.hist(std::min(999, static_cast<int>(u * 1000)), 0) += 1.0;
    }
    law.hist /= n;
    law.count = n;
    CHECK(ks_distance(law, [](double x) { return x; }) < 0.01);
}

TEST_CASE("merge combines weights consistently") {
    const FluidModel fluid = symmetric_fluid();
    SimConfig a = quick_config(5000.0);
    SimConfig b = quick_config(5000.0);
    b.seed = 999;
    b.stream = 1;
    const EmpiricalLaw la = simulate_fluid(fluid, 1.0, a);
    const EmpiricalLaw lb = simulate_fluid(fluid, 1.0, b);
    const EmpiricalLaw m = merge(la, lb);
    CHECK(m.count == la.count + lb.count);
    const double total = m.hist.sum() + m.boundary0.sum() + m.boundaryb.sum();
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("invalid configurations are rejected") {
    const MmbmModel m1 = make_m1();
    SimConfig cfg;
    cfg.horizon = 10.0;
    cfg.burn_in = 20.0;
    CHECK_THROWS_AS(simulate_mmbm(m1, cfg), SolverError);
    cfg.burn_in = 1.0;
    cfg.grid = 5;
    CHECK_THROWS_AS(simulate_mmbm(m1, cfg), SolverError);
}
