#pragma once

// The iterated perturbation cascade. Each step perturbs the flattened box
// tau_k chi_[-1,1], books the created eigenvalue in a ledger and flattens the
// remaining a.c. mass again: tau_{k+1} = tau_k - m_{k+1} / 2.

#include "rankone/adtheory.hpp"
#include "rankone/error.hpp"
#include "rankone/parallel.hpp"
#include "rankone/rng.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rankone::cascade {

inline constexpr double tau_initial = 0.5;
inline constexpr double default_tau_floor = 1e-12;

class CouplingDistribution {
public:
    enum class Kind { Rademacher, UniformSymmetric, TwoPoint, Fixed };

    static CouplingDistribution rademacher(double c, std::uint64_t seed = 0) {
        if (!(c > 0.0) || !std::isfinite(c))
            throw InvalidArgument("rademacher: c must be positive and finite");
        CouplingDistribution d(Kind::Rademacher, seed);
        d.c_ = c;
        return d;
    }

    static CouplingDistribution uniform_symmetric(double c, std::uint64_t seed = 0) {
        if (!(c > 0.0) || !std::isfinite(c))
            throw InvalidArgument("uniform: c must be positive and finite");
        CouplingDistribution d(Kind::UniformSymmetric, seed);
        d.c_ = c;
        return d;
    }

    static CouplingDistribution two_point(double a, double b, double p, std::uint64_t seed = 0) {
        if (!std::isfinite(a) || !std::isfinite(b) || a == 0.0 || b == 0.0)
            throw InvalidArgument("two_point: values must be finite and nonzero");
        if (!(p >= 0.0 && p <= 1.0))
            throw InvalidArgument("two_point: p must lie in [0, 1]");
        CouplingDistribution d(Kind::TwoPoint, seed);
        d.a_ = a;
        d.b_ = b;
        d.p_ = p;
        return d;
    }

    /// Deterministic couplings; the sequence repeats once exhausted.
    static CouplingDistribution fixed(std::vector<double> seq) {
        if (seq.empty())
            throw InvalidArgument("fixed: sequence must be nonempty");
        for (double v : seq)
            if (!std::isfinite(v) || v == 0.0)
                throw InvalidArgument("fixed: couplings must be finite and nonzero");
        CouplingDistribution d(Kind::Fixed, 0);
        d.seq_ = std::move(seq);
        return d;
    }

    Kind kind() const noexcept { return kind_; }
    std::uint64_t seed() const noexcept { return seed_; }
    double c() const noexcept { return c_; }
    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    double p() const noexcept { return p_; }
    const std::vector<double>& sequence() const noexcept { return seq_; }

    /// Coupling for `step` (1-based) of trajectory `traj`.
    double sample(std::uint64_t traj, std::uint64_t step) const {
        switch (kind_) {
        case Kind::Rademacher:
            return (rng::draw(seed_, traj, step) >> 63) ? c_ : -c_;
        case Kind::UniformSymmetric:
            for (std::uint64_t sub = 0;; ++sub) {
                const double v = c_ * (2.0 * rng::to_unit(rng::draw(seed_, traj, step, sub)) - 1.0);
                if (std::abs(v) >= 1e-9)
                    return v;
            }
        case Kind::TwoPoint:
            return rng::to_unit(rng::draw(seed_, traj, step)) < p_ ? a_ : b_;
        case Kind::Fixed:
            return seq_[static_cast<std::size_t>((step - 1) % seq_.size())];
        }
        return 0.0;
    }

private:
    CouplingDistribution(Kind k, std::uint64_t seed) : kind_(k), seed_(seed) {}

    Kind kind_;
    std::uint64_t seed_;
    double c_ = 0.0;
    double a_ = 0.0;
    double b_ = 0.0;
    double p_ = 0.5;
    std::vector<double> seq_;
};

inline const char* to_string(CouplingDistribution::Kind k) noexcept {
    switch (k) {
    case CouplingDistribution::Kind::Rademacher: return "rademacher";
    case CouplingDistribution::Kind::UniformSymmetric: return "uniform";
    case CouplingDistribution::Kind::TwoPoint: return "twopoint";
    case CouplingDistribution::Kind::Fixed: return "fixed";
    }
    return "?";
}

struct LedgerEntry {
    std::size_t step = 0;
    double coupling = 0.0;
    double location = 0.0;
    double mass = 0.0;
};

struct CascadeState {
    std::size_t step = 0;
    double tau = tau_initial;
    std::vector<LedgerEntry> ledger;

    double ac_mass() const noexcept { return 2.0 * tau; }
};

/// 1 - (u / sinh u)^2 without cancellation for small u.
inline double retained_fraction(double u) {
    if (u < 0.1) {
        const double u2 = u * u;
        // sinh^2 u - u^2 = u^4/3 + 2u^6/45 + u^8/315 + 2u^10/14175 + ...
        const double num = u2 * u2 * (1.0 / 3.0 + u2 * (2.0 / 45.0 + u2 * (1.0 / 315.0 + u2 * 2.0 / 14175.0)));
        const double sh = std::sinh(u);
        return num / (sh * sh);
    }
    const double r = u / std::sinh(u);
    return 1.0 - r * r;
}

/// One cascade step with coupling alpha. Throws Localized once tau is at or
/// below the floor.
inline CascadeState step(CascadeState state, double alpha, double tau_floor = default_tau_floor) {
    if (!(state.tau > tau_floor))
        throw Localized("cascade step: tau at or below floor; localized, trajectory terminates");
    if (alpha == 0.0 || !std::isfinite(alpha))
        throw InvalidArgument("cascade step: alpha must be nonzero and finite");
    const Eigenvalue e = ad::box_eigenvalue_closed(state.tau, alpha);
    const double u = 1.0 / (2.0 * std::abs(alpha) * state.tau);
    const double next = u < 1.0 ? state.tau * retained_fraction(u) : state.tau - 0.5 * e.mass;
    state.step += 1;
    state.ledger.push_back({state.step, alpha, e.location, e.mass});
    state.tau = next;
    return state;
}

/// One row of a trajectory: the step's coupling, its eigenvalue and tau after it.
struct StepRecord {
    std::size_t step = 0;
    double alpha = 0.0;
    double location = 0.0;
    double mass = 0.0;
    double tau = 0.0;
};

/// Compact trajectory: tau_0 plus one record per step. The state after step k
/// is the prefix of records up to k.
struct Trajectory {
    double tau0 = tau_initial;
    std::vector<StepRecord> records;
    bool hit_floor = false;

    double final_tau() const noexcept { return records.empty() ? tau0 : records.back().tau; }

    CascadeState state_at(std::size_t k) const {
        if (k > records.size())
            throw InvalidArgument("trajectory: step beyond recorded length");
        CascadeState s;
        s.step = k;
        s.tau = k == 0 ? tau0 : records[k - 1].tau;
        for (std::size_t i = 0; i < k; ++i)
            s.ledger.push_back({records[i].step, records[i].alpha, records[i].location, records[i].mass});
        return s;
    }
};

inline Trajectory run_trajectory(const CouplingDistribution& dist, std::size_t max_steps,
                                 double tau_floor = default_tau_floor, std::uint64_t traj_index = 0) {
    if (max_steps < 1)
        throw InvalidArgument("run_trajectory: max_steps must be at least 1");
    if (!(tau_floor >= 0.0) || !std::isfinite(tau_floor))
        throw InvalidArgument("run_trajectory: tau_floor must be finite and nonnegative");
    Trajectory t;
    t.records.reserve(max_steps);
    CascadeState s;
    for (std::size_t k = 1; k <= max_steps; ++k) {
        if (!(s.tau > tau_floor)) {
            t.hit_floor = true;
            break;
        }
        const double alpha = dist.sample(traj_index, k);
        s = step(std::move(s), alpha, tau_floor);
        const LedgerEntry& e = s.ledger.back();
        t.records.push_back({k, alpha, e.location, e.mass, s.tau});
        s.ledger.clear();
    }
    if (!(t.final_tau() > tau_floor))
        t.hit_floor = true;
    return t;
}

/// Independent trajectories 0..count-1, run in parallel and merged by index.
inline std::vector<Trajectory> run_trajectories(const CouplingDistribution& dist, std::size_t count,
                                                std::size_t max_steps, double tau_floor = default_tau_floor) {
    return parallel_map(count, [&](std::size_t i) { return run_trajectory(dist, max_steps, tau_floor, i); });
}

/// 1 - sum of ledger masses (compensated summation).
inline double remaining_ac_mass(const Trajectory& t) {
    double sum = 0.0;
    double comp = 0.0;
    for (const auto& r : t.records) {
        const double y = r.mass - comp;
        const double s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    return 2.0 * t.tau0 - sum;
}

inline double remaining_ac_mass(const CascadeState& s) {
    double sum = 0.0;
    for (const auto& e : s.ledger)
        sum += e.mass;
    return 1.0 - sum;
}

struct LocalizationReport {
    bool localized = false;
    std::optional<std::size_t> steps_to_target;
    std::size_t steps_run = 0;
    double final_tau = tau_initial;
    bool strictly_decreasing = true;
    /// (step, tau) pairs: every step up to 1000, then geometrically spaced, plus the last.
    std::vector<std::pair<std::size_t, double>> tau_curve;
};

/// Runs one trajectory until tau drops below `tau_target` or max_steps pass.
inline LocalizationReport localization_report(const CouplingDistribution& dist, double tau_target,
                                              std::size_t max_steps, double tau_floor = default_tau_floor,
                                              std::uint64_t traj_index = 0) {
    if (!(tau_target > 0.0))
        throw InvalidArgument("localization_report: target must be positive");
    LocalizationReport rep;
    CascadeState s;
    rep.tau_curve.emplace_back(0, s.tau);
    std::size_t next_mark = 1000;
    for (std::size_t k = 1; k <= max_steps && s.tau > tau_floor; ++k) {
        const double prev = s.tau;
        s = step(std::move(s), dist.sample(traj_index, k), tau_floor);
        s.ledger.clear();
        rep.steps_run = k;
        if (!(s.tau < prev && s.tau > 0.0))
            rep.strictly_decreasing = false;
        if (k <= 1000 || k >= next_mark) {
            rep.tau_curve.emplace_back(k, s.tau);
            if (k >= next_mark)
                next_mark = static_cast<std::size_t>(static_cast<double>(next_mark) * 1.01) + 1;
        }
        if (s.tau < tau_target) {
            rep.localized = true;
            rep.steps_to_target = k;
            break;
        }
    }
    if (rep.tau_curve.back().first != rep.steps_run)
        rep.tau_curve.emplace_back(rep.steps_run, s.tau);
    rep.final_tau = s.tau;
    return rep;
}

} // namespace rankone::cascade
