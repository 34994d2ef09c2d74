#pragma once

// Minimum a.c. loss / singular gain under one general rank-one perturbation,
// and a harness that checks those bounds against the perturbation engine.

#include "rankone/adtheory.hpp"
#include "rankone/error.hpp"
#include "rankone/measures.hpp"
#include "rankone/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace rankone::bounds {

/// mu = f chi_[-a,a] dx + sum m_j delta_{x_j} with a unit direction phi.
struct BoundScenario {
    double a = 1.0;
    std::vector<PointMass> atoms;
    AcPart f = AcPart::box(0.5);
    std::vector<double> phi_ac;    // phi on the nodes of f
    std::vector<double> phi_atoms; // phi at the atoms, same order
    double eps = 0.0;
    Interval lambda_interval{0.5, 1.0};

    double c() const noexcept {
        double s = 0.0;
        for (const auto& p : atoms)
            s += p.m;
        return s;
    }

    SpectralMeasure mu() const { return SpectralMeasure(f, atoms); }

    /// sum m_j |phi(x_j)|^2
    double overlap() const {
        double s = 0.0;
        for (std::size_t j = 0; j < atoms.size(); ++j)
            s += atoms[j].m * phi_atoms[j] * phi_atoms[j];
        return s;
    }

    /// |phi|^2 d mu, the spectral measure of the perturbation direction.
    SpectralMeasure induced() const {
        const SpectralMeasure m = mu();
        std::vector<double> pa(atoms.size());
        // mu() sorts atoms; realign the direction values
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            const auto* hit = m.atom_at(atoms[j].x);
            pa[static_cast<std::size_t>(hit - m.atoms().data())] = phi_atoms[j];
        }
        return ad::induced_measure(m, ad::SampledDirection{phi_ac, pa});
    }

    /// |phi~|^2 f on [-a, a]: the part of phi that sees only the a.c. spectrum.
    SpectralMeasure induced_ac() const {
        const SpectralMeasure m(f);
        return ad::induced_measure(m, ad::SampledDirection{phi_ac, {}});
    }

    void validate() const {
        if (!(a > 0.0) || !std::isfinite(a))
            throw InvalidArgument("scenario: a must be positive");
        const Interval sup = f.support();
        if (sup.lo != -a || sup.hi != a)
            throw InvalidArgument("scenario: f must be supported on [-a, a]");
        if (phi_ac.size() != f.nodes().size() || phi_atoms.size() != atoms.size())
            throw InvalidArgument("scenario: phi samples do not match f nodes / atoms");
        const double cc = c();
        if (!(cc >= 0.0 && cc < 1.0))
            throw InvalidArgument("scenario: total atom mass c must lie in [0, 1)");
        for (const auto& p : atoms)
            if (!(std::abs(p.x) > a))
                throw InvalidArgument("scenario: atoms must lie outside [-a, a]");
        if (std::abs(f.mass() + cc - 1.0) > 1e-10)
            throw InvalidArgument("scenario: ||mu|| must be 1 (f mass + c)");
        if (!(eps >= 0.0 && eps <= 1.0))
            throw InvalidArgument("scenario: eps must lie in [0, 1]");
        if (std::abs(total_mass(induced()) - 1.0) > 1e-10)
            throw InvalidArgument("scenario: ||phi||^2 must be 1");
        if (overlap() > eps)
            throw InvalidArgument("scenario: atom overlap of phi exceeds eps");
        const Interval li = lambda_interval;
        if (!std::isfinite(li.lo) || !std::isfinite(li.hi) || !(li.lo <= li.hi) || li.contains(0.0))
            throw InvalidArgument("scenario: lambda interval must be compact and exclude 0");
    }
};

/// (1 - c) / (a + lambda_max (1 - eps) + 1)^2
inline double d_lower_bound(double a, double c, double eps, double lambda_max) {
    if (!(a > 0.0) || !(c >= 0.0 && c < 1.0) || !(eps >= 0.0 && eps <= 1.0) || !(lambda_max > 0.0))
        throw InvalidArgument("d_lower_bound: need a > 0, 0 <= c < 1, 0 <= eps <= 1, lambda_max > 0");
    const double den = a + lambda_max * (1.0 - eps) + 1.0;
    return (1.0 - c) / (den * den);
}

/// d - |lambda| sqrt(eps (1 - eps)); the bounds say something only when positive.
inline double k_margin(double d, double lambda_abs, double eps) {
    if (!std::isfinite(d) || !std::isfinite(lambda_abs) || !(eps >= 0.0 && eps <= 1.0))
        throw InvalidArgument("k_margin: inputs must be finite with eps in [0, 1]");
    return d - std::abs(lambda_abs) * std::sqrt(eps * (1.0 - eps));
}

struct CorollaryTerms {
    double first = 0.0;
    double second = 0.0;
};

/// The two displayed terms evaluated as written, e^u / (l^2 t (e^u - 1)^2) and
/// e^u sqrt(eps) / (l t (e^u - 1)^2) with u = 1 / (l t).
inline CorollaryTerms corollary_terms_verbatim(double lambda, double tau_n, double eps) {
    const double u = 1.0 / (lambda * tau_n);
    const double eu = std::exp(u);
    const double q = (eu - 1.0) * (eu - 1.0);
    return {eu / (lambda * lambda * tau_n * q), eu * std::sqrt(eps) / (lambda * tau_n * q)};
}

/// Same terms in the stable form: first = 1 / (4 l^2 t sinh^2(u/2)),
/// second = l sqrt(eps) first; log space once |u| > 30.
inline CorollaryTerms corollary_terms(double lambda, double tau_n, double eps) {
    if (lambda == 0.0 || !std::isfinite(lambda) || !(tau_n > 0.0) || !(eps >= 0.0 && eps <= 1.0))
        throw InvalidArgument("rademacher_corollary_bound: need lambda != 0, tau > 0, eps in [0, 1]");
    const double u = std::abs(1.0 / (lambda * tau_n));
    double first = 0.0;
    if (u > 30.0) {
        first = std::exp(-u - std::log(lambda * lambda * tau_n) - 2.0 * std::log1p(-std::exp(-u)));
    } else {
        const double sh = std::sinh(0.5 * u);
        first = 1.0 / (4.0 * lambda * lambda * tau_n * sh * sh);
    }
    return {first, lambda * std::sqrt(eps) * first};
}

inline double rademacher_corollary_bound(double lambda, double tau_n, double eps) {
    const auto t = corollary_terms(lambda, tau_n, eps);
    return t.first - t.second;
}

/// h(lambda): mass of the eigenvalue that phi~ alone creates.
inline double h_value(const SpectralMeasure& nu_ac, double lambda) {
    return ad::solve_eigenvalue(nu_ac, lambda).mass;
}

/// h sampled at `count` equally spaced points of the lambda interval.
inline std::vector<std::pair<double, double>> h_curve(const BoundScenario& s, std::size_t count = 101) {
    const SpectralMeasure nu = s.induced_ac();
    const Interval li = s.lambda_interval;
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < count; ++i) {
        const double l = count == 1 ? li.lo
                                    : li.lo + (li.hi - li.lo) * static_cast<double>(i) /
                                                  static_cast<double>(count - 1);
        out.emplace_back(l, h_value(nu, l));
    }
    return out;
}

/// d = min of h over the lambda interval: grid minimum, refined by
/// golden-section search on the bracketing neighbours.
inline double d_minimum(const BoundScenario& s, std::size_t grid = 101) {
    const SpectralMeasure nu = s.induced_ac();
    const auto curve = h_curve(s, grid);
    std::size_t best = 0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        if (curve[i].second < curve[best].second)
            best = i;
    double lo = curve[best == 0 ? 0 : best - 1].first;
    double hi = curve[std::min(best + 1, curve.size() - 1)].first;
    double dmin = curve[best].second;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double f1 = h_value(nu, x1);
    double f2 = h_value(nu, x2);
    for (int it = 0; it < 60 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = h_value(nu, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = h_value(nu, x2);
        }
    }
    return std::min({dmin, f1, f2});
}

struct Verification {
    double d = 0.0;
    double k = 0.0;
    double measured_loss = 0.0;
    double measured_gain = 0.0;
    /// Empty when k <= 0 (the bound is vacuous there).
    std::optional<bool> holds_ac;
    std::optional<bool> holds_singular;
};

inline constexpr double bound_slack = 1e-8;

/// Perturbs the phi-induced measure by lambda and measures a.c. loss and
/// singular gain against k = d - |lambda| sqrt(eps (1 - eps)).
inline Verification verify(const BoundScenario& s, double lambda, std::optional<double> d_known = std::nullopt) {
    s.validate();
    if (!s.lambda_interval.contains(lambda))
        throw InvalidArgument("verify: lambda must lie in the scenario's lambda interval");
    Verification v;
    v.d = d_known ? *d_known : d_minimum(s);
    v.k = k_margin(v.d, std::abs(lambda), s.eps);
    const SpectralMeasure nu = s.induced();
    const SpectralMeasure nu_l = ad::perturb(nu, lambda);
    v.measured_loss = ac_mass(nu) - ac_mass(nu_l);
    v.measured_gain = atom_mass(nu_l) - atom_mass(nu);
    if (v.k > 0.0) {
        v.holds_ac = v.measured_loss >= v.k - bound_slack;
        v.holds_singular = v.measured_gain >= v.k - bound_slack;
    }
    return v;
}

struct AcCheck {
    double k = 0.0;
    double measured_loss = 0.0;
    std::optional<bool> holds;
};

struct SingularCheck {
    double k = 0.0;
    double measured_gain = 0.0;
    std::optional<bool> holds;
};

inline AcCheck verify_ac_bound(const BoundScenario& s, double lambda) {
    const auto v = verify(s, lambda);
    return {v.k, v.measured_loss, v.holds_ac};
}

inline SingularCheck verify_singular_bound(const BoundScenario& s, double lambda) {
    const auto v = verify(s, lambda);
    return {v.k, v.measured_gain, v.holds_singular};
}

/// Random scenario number `index` for `seed`. a in [0.5, 1.5], c in [0, 0.5],
/// one to three atoms in [a + 0.1, a + 2] or its mirror, f a positive random
/// grid of 33 nodes, eps in [0, 0.2], |lambda| endpoints in [0.25, 2] with a
/// random common sign.
inline BoundScenario random_scenario(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t counter = 0;
    auto u = [&] { return rng::to_unit(rng::draw(seed, index, 0, counter++)); };
    BoundScenario s;
    s.a = 0.5 + u();
    const double c = 0.5 * u();
    const std::size_t n_atoms = 1 + static_cast<std::size_t>(3.0 * u());
    std::vector<double> w(n_atoms);
    double wsum = 0.0;
    for (auto& x : w) {
        x = 0.2 + u();
        wsum += x;
    }
    for (std::size_t j = 0; j < n_atoms; ++j) {
        const double dist = 0.1 + 1.9 * u();
        const double x = (u() < 0.5 ? -1.0 : 1.0) * (s.a + dist);
        if (c > 0.0)
            s.atoms.push_back({x, c * w[j] / wsum});
    }
    // distinct locations are almost sure; drop accidental duplicates
    std::sort(s.atoms.begin(), s.atoms.end(), [](const PointMass& l, const PointMass& r) { return l.x < r.x; });
    s.atoms.erase(std::unique(s.atoms.begin(), s.atoms.end(),
                              [](const PointMass& l, const PointMass& r) { return l.x == r.x; }),
                  s.atoms.end());
    double cc = 0.0;
    for (const auto& p : s.atoms)
        cc += p.m;

    constexpr std::size_t nodes = 33;
    std::vector<double> x(nodes), v(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        x[i] = -s.a + 2.0 * s.a * static_cast<double>(i) / static_cast<double>(nodes - 1);
        v[i] = 0.2 + u();
    }
    x.front() = -s.a;
    x.back() = s.a;
    const double raw = AcPart::grid(x, v).mass();
    for (auto& y : v)
        y *= (1.0 - cc) / raw;
    s.f = AcPart::grid(x, v);

    s.eps = 0.2 * u();
    const double overlap = s.atoms.empty() ? 0.0 : s.eps * (0.5 + 0.5 * u());
    std::vector<double> g(nodes);
    for (auto& y : g)
        y = 0.5 + u();
    s.phi_atoms.resize(s.atoms.size());
    double atom_raw = 0.0;
    for (std::size_t j = 0; j < s.atoms.size(); ++j) {
        s.phi_atoms[j] = 0.1 + u();
        atom_raw += s.atoms[j].m * s.phi_atoms[j] * s.phi_atoms[j];
    }
    const double pa = atom_raw > 0.0 ? std::sqrt(overlap / atom_raw) : 0.0;
    for (auto& y : s.phi_atoms)
        y *= pa;
    s.phi_ac = g;
    const double ac_raw = s.induced_ac().ac().mass();
    const double target = 1.0 - s.overlap();
    for (auto& y : s.phi_ac)
        y *= std::sqrt(target / ac_raw);

    double l1 = 0.25 + 1.75 * u();
    double l2 = 0.25 + 1.75 * u();
    if (l1 > l2)
        std::swap(l1, l2);
    const double sign = u() < 0.5 ? -1.0 : 1.0;
    s.lambda_interval = sign > 0.0 ? Interval{l1, l2} : Interval{-l2, -l1};
    return s;
}

/// `count` equally spaced couplings across the scenario's lambda interval.
inline std::vector<double> lambda_samples(const BoundScenario& s, std::size_t count = 5) {
    std::vector<double> out;
    const Interval li = s.lambda_interval;
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(count == 1 ? li.lo
                                 : li.lo + (li.hi - li.lo) * static_cast<double>(i) /
                                               static_cast<double>(count - 1));
    return out;
}

} // namespace rankone::bounds
