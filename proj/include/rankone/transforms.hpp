#pragma once

// Borel transform F(z) = \int dmu(l) / (l - z), the auxiliary transform
// G(x) = \int dmu(y) / (y - x)^2, boundary values F(x + i0), the perturbed
// transform F / (1 + alpha F) and the spectral representation V_alpha.
//
// Piecewise-linear weights are integrated segment by segment with exact
// antiderivatives. Segments far from the evaluation point (relative to their
// length) switch to an 8-point Gauss rule, which avoids the cancellation the
// closed form suffers there.

#include "rankone/error.hpp"
#include "rankone/measures.hpp"
#include "rankone/quadrature.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace rankone {

using Complex = std::complex<double>;

/// A real point stored as anchor + offset. Points that sit within rounding of
/// a support edge or an atom keep their distance to it exactly, so F and G
/// stay accurate right next to singularities.
struct Locus {
    double anchor = 0.0;
    double offset = 0.0;

    double value() const noexcept { return anchor + offset; }
    /// node - x, computed without forming x.
    double diff(double node) const noexcept { return (node - anchor) - offset; }
};

/// F(x + i0) = principal + i pi density.
struct BoundaryValue {
    double principal = 0.0;
    double density = 0.0;

    Complex value() const noexcept { return {principal, std::numbers::pi * density}; }
};

namespace transforms {

namespace detail {

inline constexpr double far_ratio = 4.0;

// ln(db / da) for real da, db of equal sign.
inline double log_ratio(double da, double db, double h) {
    const double r = h / da;
    return std::abs(r) < 0.5 ? std::log1p(r) : std::log(db / da);
}

// Contribution of one segment [a, b] of a piecewise-linear weight to F at a
// real point x (da = a - x, db = b - x). For x inside the segment this is the
// principal value; zero-distance log terms cancel against the neighbouring
// segment because the weight is continuous, so they are dropped.
inline double segment_f(double da, double db, double h, double wa, double wb) {
    const double s = (wb - wa) / h;
    if (da * db > 0.0) {
        const double dm = 0.5 * (da + db);
        if (s != 0.0 && std::abs(dm) > far_ratio * h) {
            return quad::gauss<8>(
                [&](double t) {
                    const double lam_minus_x = dm + t;
                    return (0.5 * (wa + wb) + s * t) / lam_minus_x;
                },
                -0.5 * h, 0.5 * h);
        }
        const double e = wa - s * da;
        return e * log_ratio(da, db, h) + s * h;
    }
    const double e = wa - s * da;
    double logs = 0.0;
    if (db != 0.0)
        logs += std::log(std::abs(db));
    if (da != 0.0)
        logs -= std::log(std::abs(da));
    return e * logs + s * h;
}

// Contribution of one segment to G at a real x outside [a, b].
inline double segment_g(double da, double db, double h, double wa, double wb) {
    const double s = (wb - wa) / h;
    const double dm = 0.5 * (da + db);
    if (s != 0.0 && std::abs(dm) > far_ratio * h) {
        return quad::gauss<8>(
            [&](double t) {
                const double d = dm + t;
                return (0.5 * (wa + wb) + s * t) / (d * d);
            },
            -0.5 * h, 0.5 * h);
    }
    const double e = wa - s * da;
    return e * h / (da * db) + s * log_ratio(da, db, h);
}

inline Complex segment_f(Complex da, Complex db, double h, double wa, double wb) {
    const double s = (wb - wa) / h;
    const Complex dm = 0.5 * (da + db);
    if (std::abs(dm) > far_ratio * h) {
        return quad::gauss<8>(
            [&](double t) { return (0.5 * (wa + wb) + s * t) / (dm + t); }, -0.5 * h, 0.5 * h);
    }
    const Complex e = wa - s * da;
    return e * std::log(db / da) + s * h;
}

// Sum over segments at a real locus; `inside` selects the principal-value form.
inline double ac_f(const AcPart& ac, const Locus& x) {
    const auto n = ac.nodes();
    const auto v = ac.values();
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < n.size(); ++i)
        sum += segment_f(x.diff(n[i]), x.diff(n[i + 1]), n[i + 1] - n[i], v[i], v[i + 1]);
    return sum;
}

inline double ac_g(const AcPart& ac, const Locus& x) {
    const auto n = ac.nodes();
    const auto v = ac.values();
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < n.size(); ++i)
        sum += segment_g(x.diff(n[i]), x.diff(n[i + 1]), n[i + 1] - n[i], v[i], v[i + 1]);
    return sum;
}

inline bool off_support(const AcPart& ac, const Locus& x) {
    const Interval sup = ac.support();
    const double dl = x.diff(sup.lo);
    const double dh = x.diff(sup.hi);
    return (dl > 0.0 && dh > 0.0) || (dl < 0.0 && dh < 0.0);
}

inline bool on_atom(const SpectralMeasure& m, const Locus& x) {
    for (const auto& a : m.atoms())
        if (x.diff(a.x) == 0.0)
            return true;
    return false;
}

} // namespace detail

/// F at a real point off the closed a.c. support and off every atom.
inline double borel_real(const SpectralMeasure& m, const Locus& x) {
    if (!detail::off_support(m.ac(), x) && m.ac().mass() > 0.0)
        throw NumericalError("borel", "point lies on the real a.c. support; use boundary_value");
    if (detail::on_atom(m, x))
        throw NumericalError("borel", "point coincides with an atom; use boundary_value");
    double sum = m.ac().mass() > 0.0 ? detail::ac_f(m.ac(), x) : 0.0;
    for (const auto& a : m.atoms())
        sum += a.m / x.diff(a.x);
    return sum;
}

/// Borel transform F(z). Real z must avoid the closed a.c. support and atoms.
inline Complex borel(const SpectralMeasure& m, Complex z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw InvalidArgument("borel: z must be finite");
    if (z.imag() == 0.0)
        return {borel_real(m, Locus{z.real(), 0.0}), 0.0};
    const auto n = m.ac().nodes();
    const auto v = m.ac().values();
    Complex sum{};
    for (std::size_t i = 0; i + 1 < n.size(); ++i)
        sum += detail::segment_f(Complex(n[i]) - z, Complex(n[i + 1]) - z, n[i + 1] - n[i], v[i],
                                 v[i + 1]);
    for (const auto& a : m.atoms())
        sum += a.m / (a.x - z);
    return sum;
}

/// F(x + i0) for x strictly inside the a.c. support and not at an atom.
inline BoundaryValue boundary_value(const SpectralMeasure& m, double x) {
    const Interval sup = m.ac().support();
    if (x == sup.lo || x == sup.hi)
        throw NumericalError("boundary_value", "endpoint singularity at the support edge");
    if (!sup.interior(x))
        throw NumericalError("boundary_value", "x lies outside the a.c. support; use borel");
    if (m.atom_at(x) != nullptr)
        throw NumericalError("boundary_value", "x coincides with an atom; F(x + i0) is infinite");
    const Locus at{x, 0.0};
    double principal = detail::ac_f(m.ac(), at);
    for (const auto& a : m.atoms())
        principal += a.m / at.diff(a.x);
    return {principal, m.ac().weight(x)};
}

/// G at a real locus; +infinity on the closed a.c. support or at an atom.
inline double g_transform(const SpectralMeasure& m, const Locus& x) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (detail::on_atom(m, x))
        return inf;
    const bool has_ac = m.ac().mass() > 0.0;
    if (has_ac && !detail::off_support(m.ac(), x))
        return inf;
    double sum = has_ac ? detail::ac_g(m.ac(), x) : 0.0;
    for (const auto& a : m.atoms()) {
        const double d = x.diff(a.x);
        sum += a.m / (d * d);
    }
    return sum;
}

inline double g_transform(const SpectralMeasure& m, double x) {
    return g_transform(m, Locus{x, 0.0});
}

/// F_alpha = F / (1 + alpha F), the Borel transform after a rank-one
/// perturbation of coupling alpha.
inline Complex krein_shift(Complex f, double alpha) {
    const Complex denom = 1.0 + alpha * f;
    const double scale = 1.0 + std::abs(alpha * f);
    if (std::abs(denom) <= 4.0 * std::numeric_limits<double>::epsilon() * scale)
        throw NumericalError("krein_shift",
                             "pole of perturbed transform (eigenvalue condition 1 + alpha F = 0)");
    return f / denom;
}

/// Density of the perturbed a.c. part, pi^-1 Im F_alpha(x + i0).
inline double perturbed_ac_density(const SpectralMeasure& m, double alpha, double x) {
    const BoundaryValue bv = boundary_value(m, x);
    if (bv.density == 0.0)
        return 0.0;
    return bv.density / std::norm(1.0 + alpha * bv.value());
}

namespace detail {

// Nonuniform trapezoid weights on a grid.
inline std::vector<double> trapezoid_weights(std::span<const double> t) {
    std::vector<double> c(t.size(), 0.0);
    for (std::size_t j = 0; j + 1 < t.size(); ++j) {
        const double h = 0.5 * (t[j + 1] - t[j]);
        c[j] += h;
        c[j + 1] += h;
    }
    return c;
}

template <class Fn>
double centered_derivative(const Fn& f, double s) {
    const double h = 1e-5 * std::max(1.0, std::abs(s));
    return (f(s + h) - f(s - h)) / (2.0 * h);
}

inline void check_grid(const SpectralMeasure& m, std::span<const double> grid) {
    const Interval sup = m.ac().support();
    if (grid.size() < 2 || grid.front() != sup.lo || grid.back() != sup.hi)
        throw InvalidArgument("representation: grid must start and end at the a.c. support edges");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i - 1] < grid[i]))
            throw InvalidArgument("representation: grid must be strictly increasing");
}

} // namespace detail

/// V_alpha f sampled on `grid`, where
///   V_alpha f(s) = f(s) - alpha \int (f(s) - f(t)) / (s - t) dmu(t).
/// The a.c. integral uses the trapezoid rule on the grid (which must span the
/// a.c. support exactly); the t = s diagonal takes a centered derivative.
template <class Fn>
std::vector<double> representation_apply(const SpectralMeasure& m, double alpha, const Fn& f,
                                         std::span<const double> grid) {
    detail::check_grid(m, grid);
    const std::size_t n = grid.size();
    std::vector<double> fv(n), wc(n);
    const auto c = detail::trapezoid_weights(grid);
    for (std::size_t j = 0; j < n; ++j) {
        fv[j] = f(grid[j]);
        if (!std::isfinite(fv[j]))
            throw NumericalError("representation_apply", "non-finite sample of f");
        wc[j] = c[j] * m.ac().weight(grid[j]);
    }
    std::vector<double> fa;
    for (const auto& a : m.atoms()) {
        fa.push_back(f(a.x));
        if (!std::isfinite(fa.back()))
            throw NumericalError("representation_apply", "non-finite value of f at an atom");
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = grid[i];
        double integral = wc[i] * detail::centered_derivative(f, s);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i)
                integral += wc[j] * (fv[i] - fv[j]) / (s - grid[j]);
        const auto atoms = m.atoms();
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            integral += atoms[k].x == s ? atoms[k].m * detail::centered_derivative(f, s)
                                        : atoms[k].m * (fv[i] - fa[k]) / (s - atoms[k].x);
        }
        out[i] = fv[i] - alpha * integral;
    }
    return out;
}

/// V_alpha f at a single point s (typically an eigenvalue of the perturbed
/// operator, off the a.c. support). Same discretisation as representation_apply.
template <class Fn>
double representation_at(const SpectralMeasure& m, double alpha, const Fn& f, double s,
                         std::span<const double> grid) {
    detail::check_grid(m, grid);
    const auto c = detail::trapezoid_weights(grid);
    const double fs = f(s);
    if (!std::isfinite(fs))
        throw NumericalError("representation_at", "non-finite value of f");
    double integral = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double w = c[j] * m.ac().weight(grid[j]);
        if (w == 0.0)
            continue;
        integral += grid[j] == s ? w * detail::centered_derivative(f, s)
                                 : w * (fs - f(grid[j])) / (s - grid[j]);
    }
    for (const auto& a : m.atoms())
        integral += a.x == s ? a.m * detail::centered_derivative(f, s)
                             : a.m * (fs - f(a.x)) / (s - a.x);
    return fs - alpha * integral;
}

} // namespace transforms
} // namespace rankone
