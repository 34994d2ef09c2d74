#include "catch_amalgamated.hpp"

#include "oracles.hpp"
#include "rankone/adtheory.hpp"
#include "rankone/rng.hpp"
#include "rankone/transforms.hpp"

#include <numbers>

using namespace rankone;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const SpectralMeasure box_half(AcPart::box(0.5));

SpectralMeasure mixed() {
    return SpectralMeasure(AcPart::grid({-1, -0.3, 0.4, 1}, {0.2, 0.5, 0.1, 0.3}), {{-1.8, 0.15}, {1.6, 0.2}});
}
} // namespace

TEST_CASE("borel: box closed form vs quadrature") {
    CHECK_THAT(transforms::borel(box_half, {2.0, 0.0}).real(), WithinAbs(-0.5493061443340549, 1e-15));
    CHECK_THAT(transforms::borel(box_half, {2.0, 0.0}).real(),
               WithinRel(oracle::borel_box(0.5, -1, 1, {2.0, 0.0}).real(), 1e-12));
    for (auto z : {Complex{0.3, 0.1}, Complex{-2.0, 0.5}, Complex{1.0, 1e-3}, Complex{5.0, 3.0}}) {
        const auto f = transforms::borel(box_half, z);
        const auto o = oracle::borel_box(0.5, -1, 1, z);
        CHECK_THAT(f.real(), WithinRel(o.real(), 1e-10));
        CHECK_THAT(f.imag(), WithinRel(o.imag(), 1e-10));
    }
}

TEST_CASE("borel: single atom and decay") {
    const SpectralMeasure atom(AcPart::box(0.0), {{0.0, 1.0}});
    const auto f = transforms::borel(atom, {0.0, 1.0});
    CHECK_THAT(f.real(), WithinAbs(0.0, 1e-15));
    CHECK_THAT(f.imag(), WithinAbs(1.0, 1e-15));
    const double x = 1e4;
    CHECK(std::abs(x * transforms::borel(box_half, {x, 0.0}).real() + 1.0) < 1e-3);
}

TEST_CASE("borel: real axis inside the support or at an atom is refused") {
    CHECK_THROWS_AS(transforms::borel(box_half, {0.3, 0.0}), NumericalError);
    CHECK_THROWS_AS(transforms::borel(mixed(), {1.6, 0.0}), NumericalError);
    try {
        transforms::borel(mixed(), {1.6, 0.0});
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("use boundary_value") != std::string::npos);
    }
}

TEST_CASE("boundary values") {
    auto b = transforms::boundary_value(box_half, 0.0);
    CHECK_THAT(b.principal, WithinAbs(0.0, 1e-15));
    CHECK(b.density == 0.5);
    b = transforms::boundary_value(box_half, 0.5);
    CHECK_THAT(b.principal, WithinAbs(-0.5493061443340549, 1e-14));
    CHECK_THAT(b.principal, WithinAbs(transforms::borel(box_half, {0.5, 1e-8}).real(), 1e-7));
    const SpectralMeasure tri(AcPart::grid({-1, 0.2, 1}, {0.0, 0.8, 0.0}));
    CHECK_THAT(transforms::boundary_value(tri, 0.2).density, WithinAbs(0.8, 1e-15));
    CHECK_THROWS_AS(transforms::boundary_value(box_half, 1.0), NumericalError);
}

TEST_CASE("boundary value of a grid matches the small-imaginary-part limit") {
    const auto m = mixed();
    for (double x : {-0.9, -0.3, 0.0, 0.25, 0.4, 0.85}) {
        const auto b = transforms::boundary_value(m, x);
        const auto f = transforms::borel(m, {x, 1e-9});
        CHECK_THAT(b.principal, WithinAbs(f.real(), 1e-7));
        CHECK_THAT(std::numbers::pi * b.density, WithinAbs(f.imag(), 1e-7));
    }
}

TEST_CASE("g transform") {
    const double x = 1.0 / std::tanh(1.0);
    CHECK_THAT(transforms::g_transform(box_half, x), WithinRel(1.0 / (x * x - 1.0), 1e-14));
    CHECK_THAT(transforms::g_transform(box_half, x), WithinRel(oracle::g_box(0.5, -1, 1, x), 1e-10));
    CHECK_THAT(1.0 / (x * x - 1.0), WithinAbs(1.381098, 1e-6));
    CHECK(std::isinf(transforms::g_transform(box_half, 0.0)));
    const SpectralMeasure atom(AcPart::box(0.0), {{2.0, 0.3}});
    CHECK_THAT(transforms::g_transform(atom, 0.0), WithinAbs(0.075, 1e-16));
}

TEST_CASE("g transform is the derivative of F off the support") {
    const auto m = mixed();
    const double h = 1e-4;
    for (double x : {-3.0, -2.5, -1.5, -1.2, 1.1, 1.3, 1.9, 2.2, 3.0, 6.0}) {
        const double fd =
            (transforms::borel(m, {x + h, 0.0}).real() - transforms::borel(m, {x - h, 0.0}).real()) / (2 * h);
        const double g = transforms::g_transform(m, x);
        CHECK(std::abs(g - fd) <= 1e-5 * std::max(1.0, g));
    }
}

TEST_CASE("F is increasing on every gap off the support") {
    const auto m = mixed();
    const std::vector<std::pair<double, double>> gaps{{-6, -1.81}, {-1.79, -1.01}, {1.01, 1.59}, {1.61, 6}};
    for (auto [a, b] : gaps) {
        double prev = -std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 200; ++i) {
            const double f = transforms::borel(m, {a + (b - a) * i / 200.0, 0.0}).real();
            CHECK(f > prev);
            prev = f;
        }
    }
}

TEST_CASE("Herglotz positivity") {
    const auto m = mixed();
    for (std::uint64_t i = 0; i < 200; ++i) {
        const double re = -4.0 + 8.0 * rng::to_unit(rng::draw(11, i, 0));
        const double im = 10.0 * (1.0 - rng::to_unit(rng::draw(11, i, 1)));
        CHECK(transforms::borel(m, {re, im}).imag() > 0.0);
    }
}

TEST_CASE("krein shift") {
    const auto a = transforms::krein_shift({0.0, 1.0}, 0.0);
    CHECK(a == Complex{0.0, 1.0});
    const auto b = transforms::krein_shift({0.0, 1.0}, 1.0);
    CHECK_THAT(b.real(), WithinAbs(0.5, 1e-16));
    CHECK_THAT(b.imag(), WithinAbs(0.5, 1e-16));
    CHECK_THROWS_AS(transforms::krein_shift({-0.5, 0.0}, 2.0), NumericalError);
}

TEST_CASE("perturbed a.c. density") {
    for (double x : {-0.7, 0.0, 0.4})
        CHECK(transforms::perturbed_ac_density(box_half, 0.0, x) == 0.5);
    const double d = transforms::perturbed_ac_density(box_half, 1.0, 0.0);
    const double q = std::numbers::pi / 2;
    CHECK_THAT(d, WithinAbs(q / (1 + q * q) / std::numbers::pi, 1e-15));
    CHECK_THAT(d, WithinAbs(0.14420021957, 1e-11));
    CHECK_THAT(d, WithinAbs(oracle::perturbed_density_limit(0.5, 1.0, 0.0), 1e-9));
    for (double x : {-0.95, -0.5, 0.3, 0.9})
        CHECK_THAT(transforms::perturbed_ac_density(box_half, -1.5, x),
                   WithinAbs(oracle::perturbed_density_limit(0.5, -1.5, x), 1e-8));
}

TEST_CASE("perturbed density integrates with the eigenvalue mass to one") {
    const double ac = oracle::integrate([](double x) { return transforms::perturbed_ac_density(box_half, 1.0, x); },
                                        -1.0, 1.0, 1e-10);
    CHECK_THAT(ac + 1.0 / std::pow(std::sinh(1.0), 2), WithinAbs(1.0, 1e-6));
}

TEST_CASE("representation operator") {
    std::vector<double> grid;
    for (int i = 0; i <= 400; ++i)
        grid.push_back(-1.0 + i / 200.0);
    SECTION("V maps 1 to 1") {
        const auto v = transforms::representation_apply(box_half, 0.8, [](double) { return 1.0; }, grid);
        for (double y : v)
            CHECK_THAT(y, WithinAbs(1.0, 1e-14));
    }
    SECTION("alpha = 0 is the identity") {
        auto f = [](double t) { return std::cos(2 * t); };
        const auto v = transforms::representation_apply(box_half, 0.0, f, grid);
        for (std::size_t i = 0; i < grid.size(); ++i)
            CHECK(v[i] == f(grid[i]));
    }
    SECTION("grids must span the support") {
        std::vector<double> bad{-0.5, 0.0, 0.5};
        CHECK_THROWS_AS(transforms::representation_apply(box_half, 1.0, [](double t) { return t; }, bad),
                        InvalidArgument);
    }
}

TEST_CASE("representation operator is isometric from L2(mu) to L2(mu_alpha)") {
    std::vector<double> grid;
    for (int i = 0; i <= 1024; ++i)
        grid.push_back(-1.0 + i / 512.0);
    grid.back() = 1.0;
    auto f = [](double t) { return t; };
    const double alpha = 1.0;
    double vn = oracle::integrate(
        [&](double s) {
            if (!(s > -1.0 && s < 1.0))
                return 0.0;
            const double y = transforms::representation_at(box_half, alpha, f, s, grid);
            return y * y * transforms::perturbed_ac_density(box_half, alpha, s);
        },
        std::vector<double>{-1.0, -0.999, 0.0, 0.999, 1.0});
    for (const auto& e : ad::eigenvalues(box_half, alpha)) {
        const double y = transforms::representation_at(box_half, alpha, f, e.location, grid);
        vn += e.mass * y * y;
    }
    CHECK_THAT(vn, WithinRel(1.0 / 3.0, 1e-8));
}
