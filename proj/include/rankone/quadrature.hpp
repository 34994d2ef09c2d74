#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cstddef>
#include <queue>
#include <utility>
#include <span>

namespace rankone::quad {

/// Fixed N-point Gauss-Legendre rule on [a, b]. Works for any callable whose
/// result supports scaling by double (real or complex).
template <std::size_t N, class F>
auto gauss(const F& f, double a, double b) {
    using rule = boost::math::quadrature::gauss<double, N>;
    const auto& x = rule::abscissa();
    const auto& w = rule::weights();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    using R = decltype(f(mid));
    R acc{};
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) {
            acc += w[i] * f(mid);
        } else {
            acc += w[i] * (f(mid - half * x[i]) + f(mid + half * x[i]));
        }
    }
    return half * acc;
}

namespace detail {

// One 7/15 Gauss-Kronrod panel on [a, b]: (Kronrod value, |Kronrod - Gauss|).
template <class F>
std::pair<double, double> kronrod15(const F& f, double a, double b) {
    using kr = boost::math::quadrature::gauss_kronrod<double, 15>;
    using g7 = boost::math::quadrature::gauss<double, 7>;
    const auto& x = kr::abscissa();
    const auto& wk = kr::weights();
    const auto& wg = g7::weights();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double f0 = f(mid);
    double k = f0 * wk[0];
    double g = f0 * wg[0];
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double pair = f(mid - half * x[i]) + f(mid + half * x[i]);
        k += pair * wk[i];
        if (i % 2 == 0)
            g += pair * wg[i / 2];
    }
    return {half * k, half * std::abs(k - g)};
}

} // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15): the interval with the largest
/// embedded error estimate is halved until the summed estimate drops below
/// the absolute tolerance `tol`. Pieces at depth `max_depth` are frozen.
template <class F>
double adaptive(const F& f, double a, double b, double tol = 1e-11, unsigned max_depth = 60,
                std::size_t max_pieces = 200000) {
    if (a == b)
        return 0.0;
    struct Piece {
        double a, b, est, err;
        unsigned depth;
        bool operator<(const Piece& o) const { return err < o.err; }
    };
    auto eval = [&](double lo, double hi, unsigned depth) {
        const auto [est, err] = detail::kronrod15(f, lo, hi);
        return Piece{lo, hi, est, err, depth};
    };
    std::priority_queue<Piece> live;
    double frozen = 0.0;
    double frozen_err = 0.0;
    live.push(eval(a, b, 0));
    double total_err = live.top().err;
    std::size_t pieces = 1;
    while (!live.empty() && total_err > tol && pieces < max_pieces) {
        const Piece p = live.top();
        live.pop();
        const double mid = 0.5 * (p.a + p.b);
        if (p.depth >= max_depth || !(p.a < mid && mid < p.b)) {
            frozen += p.est;
            frozen_err += p.err;
            continue;
        }
        const Piece l = eval(p.a, mid, p.depth + 1);
        const Piece r = eval(mid, p.b, p.depth + 1);
        total_err += l.err + r.err - p.err;
        live.push(l);
        live.push(r);
        ++pieces;
    }
    double sum = frozen;
    while (!live.empty()) {
        sum += live.top().est;
        live.pop();
    }
    return sum;
}

/// Adaptive integration over consecutive breakpoints (kinks of the integrand);
/// the tolerance is shared out by interval length.
template <class F>
double adaptive(const F& f, std::span<const double> breaks, double tol = 1e-11,
                unsigned max_depth = 60) {
    double sum = 0.0;
    const double total = breaks.back() - breaks.front();
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
        sum += adaptive(f, breaks[i], breaks[i + 1], tol * (breaks[i + 1] - breaks[i]) / total, max_depth,
                        20000);
    return sum;
}

} // namespace rankone::quad
