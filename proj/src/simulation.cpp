#include "mmbm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmbm/rng.hpp"

namespace mmbm {

namespace {

void check_config(const SimConfig& cfg) {
    if (!(cfg.horizon > cfg.burn_in) || cfg.burn_in < 0.0 || !(cfg.step > 0.0) ||
        !(cfg.sample_dt > 0.0) || cfg.grid < 10) {
        throw SolverError(ErrorCode::BadInput,
                          "simulation config: need horizon > burn_in >= 0, step > 0, "
                          "sample_dt > 0, grid >= 10");
    }
}

// accumulates observations and finalizes into an EmpiricalLaw
class Recorder {
  public:
    Recorder(int num_phases, double b, int bins, long long expected_samples)
        : law_{}, batch_size_(std::max(1ll, expected_samples / 100)) {
        law_.num_phases = num_phases;
        law_.b = b;
        law_.hist = Matrix::Zero(bins, num_phases);
        law_.boundary0 = RowVector::Zero(num_phases);
        law_.boundaryb = RowVector::Zero(num_phases);
    }

    void observe(double level, int phase) {
        if (level <= 0.0) {
            law_.boundary0(phase) += 1.0;
        } else if (level >= law_.b) {
            law_.boundaryb(phase) += 1.0;
        } else {
            const int k = std::min(law_.bins() - 1,
                                   static_cast<int>(level / law_.b * law_.bins()));
            law_.hist(k, phase) += 1.0;
        }
        ++law_.count;
        sum_ += level;
        sumsq_ += level * level;
        batch_sum_ += level;
        if (++batch_fill_ == batch_size_) {
            law_.level_batch_means.push_back(batch_sum_ / batch_size_);
            batch_sum_ = 0.0;
            batch_fill_ = 0;
        }
    }

    EmpiricalLaw finish(double w_total, double m_total, double effective_time) {
        if (law_.count == 0) {
            throw SolverError(ErrorCode::EmptySample, "no observations recorded");
        }
        const double n = static_cast<double>(law_.count);
        law_.hist /= n;
        law_.boundary0 /= n;
        law_.boundaryb /= n;
        law_.w_rate = w_total / effective_time;
        law_.m_rate = m_total / effective_time;

        const double mean = sum_ / n;
        const double var = std::max(0.0, sumsq_ / n - mean * mean);
        const auto& bm = law_.level_batch_means;
        if (bm.size() >= 2 && var > 0.0) {
            double bmean = 0.0;
            for (double v : bm) bmean += v;
            bmean /= bm.size();
            double bvar = 0.0;
            for (double v : bm) bvar += (v - bmean) * (v - bmean);
            bvar /= (bm.size() - 1);
            law_.ess = std::clamp(bm.size() * var / std::max(bvar, 1e-300), 1.0, n);
        } else {
            law_.ess = n;
        }
        return law_;
    }

    EmpiricalLaw& law() { return law_; }

  private:
    EmpiricalLaw law_;
    long long batch_size_;
    long long batch_fill_ = 0;
    double batch_sum_ = 0.0;
    double sum_ = 0.0;
    double sumsq_ = 0.0;
};

}  // namespace

RowVector EmpiricalLaw::phase_occupancy() const {
    return boundary0 + boundaryb + hist.colwise().sum();
}

double EmpiricalLaw::mean_level() const {
    double mean = boundaryb.sum() * b;
    for (int k = 0; k < bins(); ++k) {
        const double center = 0.5 * (bin_left(k) + bin_right(k));
        mean += hist.row(k).sum() * center;
    }
    return mean;
}

double EmpiricalLaw::mean_level_se() const {
    const auto& bm = level_batch_means;
    if (bm.size() < 2) return 0.0;
    double mean = 0.0;
    for (double v : bm) mean += v;
    mean /= bm.size();
    double var = 0.0;
    for (double v : bm) var += (v - mean) * (v - mean);
    var /= (bm.size() - 1);
    return std::sqrt(var / bm.size());
}

EmpiricalLaw simulate_fluid(const FluidModel& fluid, double b, const SimConfig& cfg) {
    check_config(cfg);
    if (!(b > 0.0)) throw SolverError(ErrorCode::BadInput, "simulate_fluid needs b > 0");

    const int n = 2 * fluid.m;
    CounterRng rng(cfg.seed, cfg.stream);
    const long long expected =
        static_cast<long long>((cfg.horizon - cfg.burn_in) / cfg.sample_dt) + 1;
    Recorder rec(n, b, cfg.grid, expected);

    int phase = 0;
    double level = 0.5 * b;
    double t = 0.0;
    double next_obs = cfg.burn_in;
    double w_total = 0.0, m_total = 0.0;

    // level within a sojourn: linear at rate c, pinned after hitting a wall
    auto level_at = [&](double start_level, double c, double dt) {
        const double raw = start_level + c * dt;
        return std::clamp(raw, 0.0, b);
    };

    while (t < cfg.horizon) {
        const double exit_rate = -fluid.T(phase, phase);
        const double sojourn = rng.next_exponential(exit_rate);
        const double t_end = std::min(t + sojourn, cfg.horizon);
        const double c = fluid.c_diag(phase);

        while (next_obs <= t_end && next_obs <= cfg.horizon) {
            rec.observe(level_at(level, c, next_obs - t), phase);
            next_obs += cfg.sample_dt;
        }

        // local time while pinned (inside the post-burn-in window)
        if (c < 0.0 && level_at(level, c, t_end - t) == 0.0) {
            const double t_hit = t + level / (-c);
            const double from = std::max(t_hit, cfg.burn_in);
            if (t_end > from) w_total += (-c) * (t_end - from);
        } else if (c > 0.0 && level_at(level, c, t_end - t) == b) {
            const double t_hit = t + (b - level) / c;
            const double from = std::max(t_hit, cfg.burn_in);
            if (t_end > from) m_total += c * (t_end - from);
        }

        level = level_at(level, c, t_end - t);
        t = t_end;
        if (t >= cfg.horizon) break;

        // embedded jump: k != phase with probability T(phase,k)/exit_rate
        double u = rng.next_uniform() * exit_rate;
        int next = -1;
        for (int k = 0; k < n; ++k) {
            if (k == phase) continue;
            u -= fluid.T(phase, k);
            if (u <= 0.0) {
                next = k;
                break;
            }
        }
        phase = (next >= 0) ? next : (phase == n - 1 ? n - 2 : n - 1);
    }

    return rec.finish(w_total, m_total, cfg.horizon - cfg.burn_in);
}

EmpiricalLaw simulate_mmbm(const MmbmModel& model, const SimConfig& cfg) {
    check_config(cfg);
    CounterRng rng(cfg.seed, cfg.stream);
    const long long expected =
        static_cast<long long>((cfg.horizon - cfg.burn_in) / cfg.sample_dt) + 1;
    Recorder rec(model.m, model.b, cfg.grid, expected);

    const double recommended = (model.b / 20.0) * (model.b / 20.0) / model.sigma2.maxCoeff();
    if (cfg.step > recommended) {
        rec.law().warnings.push_back("StepTooCoarse: step " + std::to_string(cfg.step) +
                                     " exceeds recommended " + std::to_string(recommended));
    }

    int phase = 0;
    double y = 0.5 * model.b;
    double t = 0.0;
    double next_obs = cfg.burn_in;
    double w_total = 0.0, m_total = 0.0;

    auto draw_jump = [&](int i) {
        const double rate = -model.Q(i, i);
        return rate > 0.0 ? rng.next_exponential(rate)
                          : std::numeric_limits<double>::infinity();
    };
    double next_jump = t + draw_jump(phase);

    const double tiny = 1e-12 * cfg.step;
    while (t < cfg.horizon - tiny) {
        const double dt =
            std::min({cfg.step, next_jump - t, next_obs - t, cfg.horizon - t});
        if (dt > tiny) {
            y += model.mu(phase) * dt +
                 std::sqrt(model.sigma2(phase) * dt) * rng.next_normal();
            // symmetrized boundary step: reflect the overshoot; the plain
            // projection keeps an O(sqrt(step)) stationary bias that the
            // oracle tolerances cannot absorb
            if (y < 0.0) {
                // the push that realizes the reflection is twice the overshoot
                if (t + dt > cfg.burn_in) w_total += -2.0 * y;
                y = std::min(-y, model.b);
            } else if (y > model.b) {
                if (t + dt > cfg.burn_in) m_total += 2.0 * (y - model.b);
                y = std::max(2.0 * model.b - y, 0.0);
            }
            t += dt;
        } else {
            t = std::min({next_jump, next_obs, cfg.horizon});
        }

        if (t >= next_obs - tiny && next_obs <= cfg.horizon) {
            rec.observe(y, phase);
            next_obs += cfg.sample_dt;
        }
        if (t >= next_jump - tiny) {
            // embedded DTMC step of Q
            const double exit_rate = -model.Q(phase, phase);
            double u = rng.next_uniform() * exit_rate;
            int next = -1;
            for (int k = 0; k < model.m; ++k) {
                if (k == phase) continue;
                u -= model.Q(phase, k);
                if (u <= 0.0) {
                    next = k;
                    break;
                }
            }
            if (next >= 0) phase = next;
            next_jump = t + draw_jump(phase);
        }
    }

    return rec.finish(w_total, m_total, cfg.horizon - cfg.burn_in);
}

double ks_distance(const EmpiricalLaw& law, const std::function<double(double)>& cdf) {
    if (law.count == 0) throw SolverError(ErrorCode::EmptySample, "empty sample");
    // evaluated at the interior bin edges and at b; the boundary atoms are
    // folded into the cumulative sums (the histogram cannot localize mass
    // below its first edge anyway)
    const int bins = law.bins();
    double acc = law.boundary0.sum();
    double sup = 0.0;
    for (int k = 0; k < bins; ++k) {
        acc += law.hist.row(k).sum();
        const double edge = law.bin_right(k);
        double emp = acc;
        if (k == bins - 1) emp += law.boundaryb.sum();
        sup = std::max(sup, std::abs(emp - cdf(edge)));
    }
    return sup;
}

EmpiricalLaw merge(const EmpiricalLaw& a, const EmpiricalLaw& b) {
    if (a.num_phases != b.num_phases || a.bins() != b.bins() || a.b != b.b) {
        throw SolverError(ErrorCode::BadInput, "incompatible empirical laws");
    }
    EmpiricalLaw out = a;
    const double wa = static_cast<double>(a.count);
    const double wb = static_cast<double>(b.count);
    const double wt = wa + wb;
    out.count = a.count + b.count;
    out.hist = (wa * a.hist + wb * b.hist) / wt;
    out.boundary0 = (wa * a.boundary0 + wb * b.boundary0) / wt;
    out.boundaryb = (wa * a.boundaryb + wb * b.boundaryb) / wt;
    out.w_rate = 0.5 * (a.w_rate + b.w_rate);
    out.m_rate = 0.5 * (a.m_rate + b.m_rate);
    out.level_batch_means.insert(out.level_batch_means.end(), b.level_batch_means.begin(),
                                 b.level_batch_means.end());
    out.ess = a.ess + b.ess;
    out.warnings.insert(out.warnings.end(), b.warnings.begin(), b.warnings.end());
    return out;
}

}  // namespace mmbm
