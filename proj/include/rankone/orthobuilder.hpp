#pragma once

// A +-1 valued function h on [-1, 1) that is orthogonal, in L^2(eta), to a
// finite family of functions.
//
// At level m, [-1, 1) is cut into 2^m equal cells and each cell is split into
// a -1 part on the left and a +1 part on the right. Without atoms the split is
// the eta-median of the cell, which kills every cell-constant function. Atoms
// cannot be split, so each atom gets a fixed sign and a target density rho in
// [0, 1] on the a.c. part absorbs what the atoms contribute: the +1 part of a
// cell then carries eta-mass \int_C rho d eta (rho = 1/2 is the median rule).

#include "rankone/error.hpp"
#include "rankone/measures.hpp"
#include "rankone/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace rankone::ortho {

using Function = std::function<double(double)>;

/// Piecewise +-1 function on [-1, 1): piece i is [breakpoints[i], breakpoints[i+1])
/// (the last piece ends at 1) with value signs[i].
struct SignFunction {
    std::vector<double> breakpoints{-1.0};
    std::vector<int> signs{1};

    std::size_t piece_of(double x) const {
        if (!(x >= -1.0 && x < 1.0))
            throw InvalidArgument("sign function: x must lie in [-1, 1)");
        auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
        return static_cast<std::size_t>(it - breakpoints.begin()) - 1;
    }

    int operator()(double x) const { return signs[piece_of(x)]; }

    double piece_end(std::size_t i) const { return i + 1 < breakpoints.size() ? breakpoints[i + 1] : 1.0; }

    void validate() const {
        if (breakpoints.empty() || breakpoints.size() != signs.size() || breakpoints.front() != -1.0)
            throw InvalidArgument("sign function: breakpoints must start at -1, one sign per piece");
        for (std::size_t i = 0; i < signs.size(); ++i) {
            if (signs[i] != 1 && signs[i] != -1)
                throw InvalidArgument("sign function: signs must be +1 or -1");
            if (!(breakpoints[i] < piece_end(i)))
                throw InvalidArgument("sign function: breakpoints must be strictly increasing in [-1, 1)");
        }
    }
};

namespace detail {

inline void check_eta(const SpectralMeasure& eta) {
    const Interval sup = eta.ac().support();
    if (sup.lo < -1.0 || sup.hi > 1.0)
        throw InvalidArgument("orthobuilder: eta must be supported in [-1, 1]");
    for (const auto& a : eta.atoms()) {
        if (a.x == 1.0)
            throw InvalidArgument("orthobuilder: eta must not have a point mass at x = 1");
        if (!(a.x >= -1.0 && a.x < 1.0))
            throw InvalidArgument("orthobuilder: atoms of eta must lie in [-1, 1)");
    }
}

// \int_lo^hi g(x) w(x) dx, splitting at the nodes of w. 8-point Gauss per piece.
template <class G>
double ac_integral(const AcPart& ac, const G& g, double lo, double hi) {
    const Interval sup = ac.support();
    lo = std::max(lo, sup.lo);
    hi = std::min(hi, sup.hi);
    if (!(lo < hi))
        return 0.0;
    const auto nodes = ac.nodes();
    auto it = std::upper_bound(nodes.begin(), nodes.end(), lo);
    double sum = 0.0;
    double a = lo;
    auto integrand = [&](double x) { return g(x) * ac.weight(x); };
    for (; it != nodes.end() && *it < hi; ++it) {
        sum += quad::gauss<8>(integrand, a, *it);
        a = *it;
    }
    return sum + quad::gauss<8>(integrand, a, hi);
}

} // namespace detail

/// <f_n, h>_eta for each n: per-piece Gauss rules on the a.c. part plus atoms.
inline std::vector<double> inner_products(const SignFunction& h, const std::vector<Function>& fns,
                                          const SpectralMeasure& eta) {
    detail::check_eta(eta);
    const AcPart& ac = eta.ac();
    const Interval sup = ac.support();
    const auto nodes = ac.nodes();
    std::vector<double> out(fns.size(), 0.0);
    if (ac.mass() > 0.0) {
        // walk pieces and weight segments together; each piece is cut at nodes
        for (std::size_t i = 0; i < h.signs.size(); ++i) {
            const double lo = std::max(h.breakpoints[i], sup.lo);
            const double hi = std::min(h.piece_end(i), sup.hi);
            if (!(lo < hi))
                continue;
            auto it = std::upper_bound(nodes.begin(), nodes.end(), lo);
            double a = lo;
            auto accumulate = [&](double x0, double x1) {
                const std::size_t seg = ac.segment_of(0.5 * (x0 + x1));
                const double n0 = nodes[seg];
                const double sl = ac.slope(seg);
                const double w0 = ac.values()[seg];
                for (std::size_t n = 0; n < fns.size(); ++n) {
                    const auto& f = fns[n];
                    out[n] += h.signs[i] *
                              quad::gauss<8>([&](double x) { return f(x) * (w0 + sl * (x - n0)); }, x0, x1);
                }
            };
            for (; it != nodes.end() && *it < hi; ++it) {
                accumulate(a, *it);
                a = *it;
            }
            accumulate(a, hi);
        }
    }
    for (const auto& at : eta.atoms()) {
        const int s = h(at.x);
        for (std::size_t n = 0; n < fns.size(); ++n)
            out[n] += at.m * fns[n](at.x) * s;
    }
    return out;
}

struct BuildResult {
    SignFunction h;
    std::vector<double> inner;
    double residual = std::numeric_limits<double>::infinity();
    unsigned level = 0;
    bool converged = false;
    std::vector<int> atom_signs;
    /// max residual after each level tried, level 0 first
    std::vector<double> history;
};

namespace detail {

// Target density rho = clamp(1/2 + sum beta_k f_k, 0, 1) on the a.c. part.
struct Rho {
    std::vector<double> beta;
    const std::vector<Function>* fns = nullptr;

    double operator()(double x) const {
        double q = 0.5;
        for (std::size_t k = 0; k < beta.size(); ++k)
            q += beta[k] * (*fns)[k](x);
        return std::clamp(q, 0.0, 1.0);
    }
};

inline double quad_ac(const AcPart& ac, const std::function<double(double)>& g) {
    const Interval sup = ac.support();
    return quad::adaptive([&](double x) { return g(x) * ac.weight(x); }, ac.nodes(),
                          1e-14 * std::max(1.0, ac.mass()) * sup.length());
}

// Solve \int f_n rho w = t_n for beta (damped Newton; the Jacobian is the Gram
// matrix restricted to where rho is not clamped).
inline bool solve_rho(const AcPart& ac, const std::vector<Function>& fns, const Eigen::VectorXd& t,
                      const Eigen::MatrixXd& gram, Rho& rho) {
    const auto K = static_cast<Eigen::Index>(fns.size());
    Eigen::VectorXd beta = gram.completeOrthogonalDecomposition().solve(t - 0.5 * [&] {
        Eigen::VectorXd m(K);
        for (Eigen::Index n = 0; n < K; ++n)
            m[n] = quad_ac(ac, fns[static_cast<std::size_t>(n)]);
        return m;
    }());
    rho.beta.assign(beta.data(), beta.data() + K);
    auto residual = [&](const Rho& r) {
        Eigen::VectorXd res(K);
        for (Eigen::Index n = 0; n < K; ++n) {
            const auto& f = fns[static_cast<std::size_t>(n)];
            res[n] = quad_ac(ac, [&](double x) { return f(x) * r(x); }) - t[n];
        }
        return res;
    };
    Eigen::VectorXd res = residual(rho);
    const double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
    for (int it = 0; it < 60 && res.cwiseAbs().maxCoeff() > 1e-13 * scale; ++it) {
        Eigen::MatrixXd jac(K, K);
        for (Eigen::Index n = 0; n < K; ++n)
            for (Eigen::Index k = 0; k <= n; ++k) {
                const auto& fn = fns[static_cast<std::size_t>(n)];
                const auto& fk = fns[static_cast<std::size_t>(k)];
                jac(n, k) = jac(k, n) = quad_ac(ac, [&](double x) {
                    const double r = rho(x);
                    return (r > 0.0 && r < 1.0) ? fn(x) * fk(x) : 0.0;
                });
            }
        const Eigen::VectorXd step = jac.completeOrthogonalDecomposition().solve(res);
        double damp = 1.0;
        Rho trial = rho;
        Eigen::VectorXd trial_res;
        for (int ls = 0; ls < 30; ++ls, damp *= 0.5) {
            for (Eigen::Index k = 0; k < K; ++k)
                trial.beta[static_cast<std::size_t>(k)] = rho.beta[static_cast<std::size_t>(k)] - damp * step[k];
            trial_res = residual(trial);
            if (trial_res.norm() < res.norm())
                break;
        }
        if (!(trial_res.norm() < res.norm()))
            break;
        rho = trial;
        res = trial_res;
    }
    return res.cwiseAbs().maxCoeff() <= 1e-10 * scale;
}

} // namespace detail

/// Builds h level by level until max_n |<f_n, h>| < tol or max_level is passed.
/// Non-convergence is reported through `converged`, never thrown.
inline BuildResult build_sign_function(const std::vector<Function>& fns, const SpectralMeasure& eta,
                                       double tol = 1e-6, unsigned max_level = 24) {
    detail::check_eta(eta);
    if (fns.empty())
        throw InvalidArgument("orthobuilder: need at least one function");
    if (!(tol > 0.0))
        throw InvalidArgument("orthobuilder: tol must be positive");
    if (max_level > 30)
        throw InvalidArgument("orthobuilder: max_level must be at most 30");
    const AcPart& ac = eta.ac();
    const auto atoms = eta.atoms();
    const auto K = static_cast<Eigen::Index>(fns.size());
    const std::size_t J = atoms.size();

    // Gram matrix of the family on the a.c. part
    Eigen::MatrixXd gram(K, K);
    for (Eigen::Index n = 0; n < K; ++n)
        for (Eigen::Index k = 0; k <= n; ++k) {
            const auto& fn = fns[static_cast<std::size_t>(n)];
            const auto& fk = fns[static_cast<std::size_t>(k)];
            gram(n, k) = gram(k, n) = ac.mass() > 0.0 ? detail::quad_ac(ac, [&](double x) { return fn(x) * fk(x); }) : 0.0;
        }
    Eigen::MatrixXd fa(K, static_cast<Eigen::Index>(J));
    for (Eigen::Index n = 0; n < K; ++n)
        for (std::size_t j = 0; j < J; ++j)
            fa(n, static_cast<Eigen::Index>(j)) = fns[static_cast<std::size_t>(n)](atoms[j].x) * atoms[j].m;

    // atom signs: keep the correction rho - 1/2 as small as possible
    std::vector<int> sigma(J, 1);
    if (J > 0) {
        const auto cod = gram.completeOrthogonalDecomposition();
        auto cost = [&](const std::vector<int>& s) {
            Eigen::VectorXd b = Eigen::VectorXd::Zero(K);
            for (std::size_t j = 0; j < J; ++j)
                b -= 0.5 * s[j] * fa.col(static_cast<Eigen::Index>(j));
            const Eigen::VectorXd beta = cod.solve(b);
            const double miss = (gram * beta - b).norm();
            return beta.dot(gram * beta) + 1e6 * miss;
        };
        if (J <= 12) {
            double best = std::numeric_limits<double>::infinity();
            std::vector<int> s(J);
            for (std::size_t mask = 0; mask < (std::size_t{1} << J); ++mask) {
                for (std::size_t j = 0; j < J; ++j)
                    s[j] = (mask >> j) & 1U ? 1 : -1;
                const double c = cost(s);
                if (c < best) {
                    best = c;
                    sigma = s;
                }
            }
        } else {
            // coordinate descent from all +1
            double best = cost(sigma);
            for (bool improved = true; improved;) {
                improved = false;
                for (std::size_t j = 0; j < J; ++j) {
                    sigma[j] = -sigma[j];
                    const double c = cost(sigma);
                    if (c < best) {
                        best = c;
                        improved = true;
                    } else {
                        sigma[j] = -sigma[j];
                    }
                }
            }
        }
    }

    detail::Rho rho;
    rho.fns = &fns;
    rho.beta.assign(fns.size(), 0.0);
    if (J > 0 && ac.mass() > 0.0) {
        // \int f_n rho w = (1/2) \int f_n d eta - sum_{sigma_j = +1} m_j f_n(x_j)
        Eigen::VectorXd t(K);
        for (Eigen::Index n = 0; n < K; ++n) {
            double v = 0.5 * detail::quad_ac(ac, fns[static_cast<std::size_t>(n)]);
            for (std::size_t j = 0; j < J; ++j)
                v -= 0.5 * sigma[j] * fa(n, static_cast<Eigen::Index>(j));
            t[n] = v;
        }
        detail::solve_rho(ac, fns, t, gram, rho);
    }
    const bool plain_median = J == 0 || !(ac.mass() > 0.0);

    BuildResult best;
    best.atom_signs = sigma;
    for (unsigned level = 0; level <= max_level; ++level) {
        SignFunction h;
        h.breakpoints.clear();
        h.signs.clear();
        auto emit = [&](double x, int s) {
            if (!h.breakpoints.empty() && h.signs.back() == s)
                return;
            if (!h.breakpoints.empty() && h.breakpoints.back() == x) {
                // zero-length piece: overwrite
                h.signs.back() = s;
                if (h.signs.size() >= 2 && h.signs[h.signs.size() - 2] == s) {
                    h.signs.pop_back();
                    h.breakpoints.pop_back();
                }
                return;
            }
            h.breakpoints.push_back(x);
            h.signs.push_back(s);
        };
        // Lay out [lo, hi) as `first` then `-first`, the `first` part carrying
        // a.c. mass `first_mass`. `hold` keeps a sliver of `first` at lo even
        // when first_mass is 0 (an atom sits at lo and needs that sign).
        auto layout = [&](double lo, double hi, int first, double first_mass, bool hold) {
            const double c0 = ac.cumulative(lo);
            const double c1 = ac.cumulative(hi);
            double s = std::clamp(ac.quantile(c0 + std::clamp(first_mass, 0.0, c1 - c0)), lo, hi);
            if (first_mass >= c1 - c0 && !hold)
                s = hi;
            if (hold && !(s > lo))
                s = std::min(hi, std::nextafter(lo, 2.0));
            if (s > lo)
                emit(lo, first);
            if (s < hi)
                emit(s, -first);
        };
        const std::size_t cells = std::size_t{1} << level;
        const double width = 2.0 / static_cast<double>(cells);
        std::size_t next_atom = 0;
        for (std::size_t c = 0; c < cells; ++c) {
            const double lo = -1.0 + width * static_cast<double>(c);
            const double hi = c + 1 == cells ? 1.0 : -1.0 + width * static_cast<double>(c + 1);
            // sub-cells cut at atoms inside this cell
            double a = lo;
            bool atom_at_a = false;
            int atom_sign = 1;
            while (true) {
                const bool more = next_atom < J && atoms[next_atom].x < hi;
                const double b = more ? atoms[next_atom].x : hi;
                if (b > a || atom_at_a) {
                    const double bb = std::max(a, b);
                    const double amass = ac.cumulative(bb) - ac.cumulative(a);
                    double plus = 0.5 * amass;
                    if (!plain_median)
                        plus = detail::ac_integral(ac, rho, a, bb);
                    if (atom_at_a) {
                        const double first_mass = atom_sign > 0 ? plus : amass - plus;
                        if (bb > a)
                            layout(a, bb, atom_sign, first_mass, true);
                        else
                            emit(a, atom_sign);
                    } else {
                        layout(a, bb, -1, amass - plus, false);
                    }
                }
                if (!more)
                    break;
                a = atoms[next_atom].x;
                atom_at_a = true;
                atom_sign = sigma[next_atom];
                ++next_atom;
            }
        }
        if (h.breakpoints.empty() || h.breakpoints.front() != -1.0) {
            h.breakpoints.insert(h.breakpoints.begin(), -1.0);
            h.signs.insert(h.signs.begin(), h.signs.empty() ? -1 : -h.signs.front());
        }
        auto inner = inner_products(h, fns, eta);
        double res = 0.0;
        for (double v : inner)
            res = std::max(res, std::abs(v));
        best.history.push_back(res);
        if (res < best.residual || level == 0) {
            best.h = std::move(h);
            best.inner = std::move(inner);
            best.residual = res;
            best.level = level;
        }
        if (res < tol) {
            best.converged = true;
            break;
        }
    }
    return best;
}

} // namespace rankone::ortho
