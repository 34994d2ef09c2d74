#pragma once

#include "rankone/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rankone {

/// Closed interval [lo, hi] with lo < hi.
struct Interval {
    double lo = -1.0;
    double hi = 1.0;

    double length() const noexcept { return hi - lo; }
    double midpoint() const noexcept { return 0.5 * (lo + hi); }
    bool contains(double x) const noexcept { return lo <= x && x <= hi; }
    bool interior(double x) const noexcept { return lo < x && x < hi; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Absolutely continuous part: a nonnegative weight on a compact interval.
///
/// Two shapes are supported. A box is a constant level over the support; a
/// grid is a piecewise-linear weight through (node, value) pairs whose first
/// and last nodes are the support endpoints. Internally both are stored as
/// nodes/values so the transform kernels see one representation; a box is
/// the two-node grid {lo, hi} -> {level, level}.
class AcPart {
public:
    enum class Kind { Box, Grid };

    AcPart() : AcPart(box(0.5)) {}

    static AcPart box(double level, Interval support = {-1.0, 1.0}) {
        if (!std::isfinite(support.lo) || !std::isfinite(support.hi) || !(support.lo < support.hi))
            throw InvalidArgument("box support must be a finite interval with lo < hi");
        if (!std::isfinite(level) || level < 0.0)
            throw InvalidArgument("box level must be finite and nonnegative");
        return AcPart(Kind::Box, {support.lo, support.hi}, {level, level});
    }

    static AcPart grid(std::vector<double> nodes, std::vector<double> values) {
        if (nodes.size() < 2 || nodes.size() != values.size())
            throw InvalidArgument("grid weight needs at least two nodes and one value per node");
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!std::isfinite(nodes[i]) || !std::isfinite(values[i]))
                throw InvalidArgument("grid nodes and values must be finite");
            if (values[i] < 0.0)
                throw InvalidArgument("grid values must be nonnegative");
            if (i > 0 && !(nodes[i - 1] < nodes[i]))
                throw InvalidArgument("grid nodes must be strictly increasing");
        }
        return AcPart(Kind::Grid, std::move(nodes), std::move(values));
    }

    Kind kind() const noexcept { return kind_; }
    bool is_box() const noexcept { return kind_ == Kind::Box; }
    /// Level of a box weight. Only meaningful when is_box().
    double level() const noexcept { return values_.front(); }

    Interval support() const noexcept { return {nodes_.front(), nodes_.back()}; }
    std::span<const double> nodes() const noexcept { return nodes_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t segments() const noexcept { return nodes_.size() - 1; }

    double slope(std::size_t seg) const noexcept {
        return (values_[seg + 1] - values_[seg]) / (nodes_[seg + 1] - nodes_[seg]);
    }

    /// Index of the segment containing x (clamped to the valid range).
    std::size_t segment_of(double x) const noexcept {
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
        std::size_t idx = it == nodes_.begin() ? 0 : static_cast<std::size_t>(it - nodes_.begin()) - 1;
        return std::min(idx, segments() - 1);
    }

    /// Weight at x; zero outside the support.
    double weight(double x) const noexcept {
        if (!support().contains(x))
            return 0.0;
        const std::size_t s = segment_of(x);
        const double t = (x - nodes_[s]) / (nodes_[s + 1] - nodes_[s]);
        return values_[s] + t * (values_[s + 1] - values_[s]);
    }

    /// Total mass: level * |support| for a box, exact trapezoid for a grid.
    double mass() const noexcept { return cumulative_.back(); }

    /// Mass of [lo, x].
    double cumulative(double x) const noexcept {
        const Interval sup = support();
        if (x <= sup.lo)
            return 0.0;
        if (x >= sup.hi)
            return mass();
        const std::size_t s = segment_of(x);
        const double t = x - nodes_[s];
        return cumulative_[s] + values_[s] * t + 0.5 * slope(s) * t * t;
    }

    /// Smallest x with cumulative(x) = target (target clamped to [0, mass]).
    double quantile(double target) const noexcept {
        if (target <= 0.0)
            return nodes_.front();
        if (target >= mass())
            return nodes_.back();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
        std::size_t s = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
        s = std::min(s, segments() - 1);
        const double r = target - cumulative_[s];
        const double w0 = values_[s];
        const double sl = slope(s);
        // Solve w0 t + sl t^2 / 2 = r in the cancellation-free form.
        const double disc = std::max(0.0, w0 * w0 + 2.0 * sl * r);
        const double denom = w0 + std::sqrt(disc);
        double t = denom > 0.0 ? 2.0 * r / denom : 0.0;
        t = std::clamp(t, 0.0, nodes_[s + 1] - nodes_[s]);
        return nodes_[s] + t;
    }

    friend bool operator==(const AcPart& a, const AcPart& b) {
        return a.kind_ == b.kind_ && a.nodes_ == b.nodes_ && a.values_ == b.values_;
    }

private:
    AcPart(Kind kind, std::vector<double> nodes, std::vector<double> values)
        : kind_(kind), nodes_(std::move(nodes)), values_(std::move(values)) {
        cumulative_.assign(nodes_.size(), 0.0);
        for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
            cumulative_[i + 1] =
                cumulative_[i] + 0.5 * (values_[i] + values_[i + 1]) * (nodes_[i + 1] - nodes_[i]);
    }

    Kind kind_;
    std::vector<double> nodes_;
    std::vector<double> values_;
    std::vector<double> cumulative_;
};

struct PointMass {
    double x = 0.0;
    double m = 0.0;

    friend bool operator==(const PointMass&, const PointMass&) = default;
};

/// Positive Borel measure: an a.c. part plus finitely many atoms.
/// Atoms are kept sorted by location; locations are pairwise distinct.
class SpectralMeasure {
public:
    SpectralMeasure() = default;

    explicit SpectralMeasure(AcPart ac, std::vector<PointMass> atoms = {})
        : ac_(std::move(ac)), atoms_(std::move(atoms)) {
        for (const auto& a : atoms_) {
            if (!std::isfinite(a.x))
                throw InvalidArgument("atom location must be finite");
            if (!std::isfinite(a.m) || !(a.m > 0.0))
                throw InvalidArgument("atom mass must be finite and positive");
        }
        std::sort(atoms_.begin(), atoms_.end(),
                  [](const PointMass& l, const PointMass& r) { return l.x < r.x; });
        for (std::size_t i = 1; i < atoms_.size(); ++i)
            if (atoms_[i - 1].x == atoms_[i].x)
                throw InvalidArgument("atom locations must be pairwise distinct");
    }

    const AcPart& ac() const noexcept { return ac_; }
    std::span<const PointMass> atoms() const noexcept { return atoms_; }

    /// Atom at exactly x, if any.
    const PointMass* atom_at(double x) const noexcept {
        auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x,
                                   [](const PointMass& a, double v) { return a.x < v; });
        return (it != atoms_.end() && it->x == x) ? &*it : nullptr;
    }

    /// True when every atom lies strictly outside the closed a.c. support.
    bool atoms_outside_support() const noexcept {
        const Interval sup = ac_.support();
        return std::none_of(atoms_.begin(), atoms_.end(),
                            [&](const PointMass& a) { return sup.contains(a.x); });
    }

    friend bool operator==(const SpectralMeasure&, const SpectralMeasure&) = default;

private:
    AcPart ac_ = AcPart::box(0.5);
    std::vector<PointMass> atoms_;
};

inline double ac_mass(const SpectralMeasure& m) noexcept { return m.ac().mass(); }

inline double atom_mass(const SpectralMeasure& m) noexcept {
    double s = 0.0;
    for (const auto& a : m.atoms())
        s += a.m;
    return s;
}

inline double total_mass(const SpectralMeasure& m) noexcept { return ac_mass(m) + atom_mass(m); }

/// Result of flattening an a.c. part onto a box of equal mass.
struct BoxScaling {
    AcPart box;
    double tau = 0.0;
};

/// The box measure with the same a.c. mass on the same support; atoms are
/// not part of the flattened space. Throws Localized when no a.c. mass remains.
inline BoxScaling scale_to_box(const SpectralMeasure& m) {
    const double mass = ac_mass(m);
    if (!(mass > 0.0))
        throw Localized("scale_to_box: a.c. part has zero mass; fully localized, cascade terminates");
    const Interval sup = m.ac().support();
    const double tau = mass / sup.length();
    return {AcPart::box(tau, sup), tau};
}

/// Chebyshev-Lobatto points on [lo, hi], increasing, endpoints included.
inline std::vector<double> chebyshev_nodes(Interval sup, std::size_t count) {
    if (count < 2)
        throw InvalidArgument("chebyshev_nodes: need at least two nodes");
    std::vector<double> x(count);
    const double n = static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
        const double c = -std::cos(std::numbers::pi * static_cast<double>(i) / n);
        x[i] = sup.midpoint() + 0.5 * sup.length() * c;
    }
    x.front() = sup.lo;
    x.back() = sup.hi;
    // cos symmetry can leave equal neighbours only for absurd counts
    for (std::size_t i = 1; i < count; ++i)
        if (!(x[i - 1] < x[i]))
            throw InvalidArgument("chebyshev_nodes: node count too large for the interval");
    return x;
}

} // namespace rankone
