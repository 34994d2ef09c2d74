#include "catch_amalgamated.hpp"

#include "oracles.hpp"
#include "rankone/adtheory.hpp"
#include "rankone/rng.hpp"

using namespace rankone;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const SpectralMeasure box_half(AcPart::box(0.5));
}

TEST_CASE("solve_eigenvalue on the half box") {
    const auto e = ad::solve_eigenvalue(box_half, 1.0);
    CHECK_THAT(e.location, WithinAbs(1.0 / std::tanh(1.0), 1e-13));
    CHECK_THAT(e.location, WithinAbs(1.313035, 1e-6));
    CHECK_THAT(e.mass, WithinRel(1.0 / std::pow(std::sinh(1.0), 2), 1e-12));
    CHECK_THAT(e.mass, WithinAbs(0.724061, 1e-6));
    CHECK(std::abs(ad::residual(box_half, e)) < 1e-12);
    const double e2 = std::exp(2.0);
    CHECK_THAT(e.location, WithinAbs((-1 - e2) / (1 - e2), 1e-13));
    CHECK_THAT(e.mass, WithinRel(4 * e2 / std::pow(e2 - 1, 2), 1e-12));

    const auto n = ad::solve_eigenvalue(box_half, -1.0);
    CHECK_THAT(n.location, WithinAbs(-e.location, 1e-13));
    CHECK_THAT(n.mass, WithinRel(e.mass, 1e-12));

    const auto small = ad::solve_eigenvalue(box_half, 0.05);
    // the exact value is 1/(0.0025 sinh^2 20) = 6.797e-15
    CHECK(small.mass < 1e-14);
    CHECK_THAT(small.mass, WithinRel(ad::box_eigenvalue_closed(0.5, 0.05).mass, 1e-6));

    CHECK_THROWS_AS(ad::solve_eigenvalue(box_half, 0.0), InvalidArgument);
}

TEST_CASE("solver agrees with the quadrature oracle") {
    for (double tau : {0.5, 0.25, 0.1})
        for (double alpha : {-2.0, -0.5, -0.25, 0.25, 1.0}) {
            const auto e = ad::solve_eigenvalue(SpectralMeasure(AcPart::box(tau)), alpha);
            const auto o = oracle::box_eigen(tau, alpha);
            CHECK_THAT(e.location, WithinAbs(o.x, 1e-10));
            CHECK_THAT(std::abs(e.locus.offset), WithinRel(o.delta, 1e-8));
            CHECK_THAT(e.mass, WithinRel(o.m, 1e-7));
        }
}

TEST_CASE("box closed form") {
    const auto a = ad::box_eigenvalue_closed(0.5, 1.0);
    CHECK_THAT(a.location, WithinAbs(1.313035, 1e-6));
    CHECK_THAT(a.mass, WithinAbs(0.724061, 1e-6));
    const auto b = ad::box_eigenvalue_closed(0.5, 2.0);
    CHECK_THAT(b.location, WithinAbs(2.163953, 1e-6));
    CHECK_THAT(b.mass, WithinAbs(0.920674, 1e-6));
    const auto o = oracle::box_eigen(0.5, 2.0);
    CHECK_THAT(b.location, WithinAbs(o.x, 1e-10));
    CHECK_THAT(b.mass, WithinRel(o.m, 1e-8));
    for (double tau : {0.5, 0.1, 1e-3})
        for (double alpha : {0.01, 0.3, 7.0})
            CHECK_THAT(ad::box_eigenvalue_closed(tau, alpha).mass,
                       WithinRel(ad::box_eigenvalue_closed(tau, -alpha).mass, 1e-15));
    // log-space branch and underflow sentinel
    const auto tiny = ad::box_eigenvalue_closed(0.01, 1.0);
    CHECK(tiny.mass > 0.0);
    CHECK_THAT(std::log(tiny.mass), WithinRel(std::log(2.0 / 0.01) - 100.0, 1e-12));
    const auto zero = ad::box_eigenvalue_closed(1e-4, 1.0);
    CHECK(zero.mass == 0.0);
    CHECK(zero.location == 1.0);
}

TEST_CASE("closed form matches the e^{2/alpha} form at tau = 1/2") {
    for (double alpha : {0.25, 0.5, 1.0, 2.0, -1.0}) {
        const double e = std::exp(2.0 / alpha);
        const double verbatim = 4 * e / (alpha * alpha * (e - 1) * (e - 1));
        CHECK_THAT(ad::box_eigenvalue_closed(0.5, alpha).mass, WithinRel(verbatim, 1e-12));
    }
}

TEST_CASE("perturb the half box") {
    const auto mu = ad::perturb(box_half, 1.0);
    REQUIRE(mu.atoms().size() == 1);
    CHECK_THAT(mu.atoms()[0].x, WithinAbs(1.313035, 1e-6));
    CHECK_THAT(mu.atoms()[0].m, WithinAbs(0.724061, 1e-6));
    CHECK_THAT(ac_mass(mu), WithinAbs(0.275939, 1e-6));
    CHECK_THAT(total_mass(mu), WithinAbs(1.0, 1e-6));
    const auto same = ad::perturb(box_half, 0.0);
    CHECK(same.ac().is_box());
    CHECK(same.ac().level() == 0.5);
}

TEST_CASE("perturb conserves mass for random boxes") {
    for (std::uint64_t i = 0; i < 10; ++i) {
        const double tau = 0.05 + 0.9 * rng::to_unit(rng::draw(3, i, 0));
        const double alpha = (rng::draw(3, i, 1) >> 63 ? 1 : -1) * (0.1 + 3.0 * rng::to_unit(rng::draw(3, i, 2)));
        const SpectralMeasure m(AcPart::box(tau));
        CHECK_THAT(total_mass(ad::perturb(m, alpha)), WithinAbs(total_mass(m), 1e-6));
    }
}

TEST_CASE("eigenvalues of a mixed measure: one per gap") {
    const SpectralMeasure m(AcPart::grid({-1, 0, 1}, {0.1, 0.4, 0.2}), {{-2.0, 0.2}, {1.5, 0.1}, {3.0, 0.25}});
    for (double alpha : {1.0, -0.7}) {
        const auto es = ad::eigenvalues(m, alpha);
        CHECK(es.size() == 4);
        for (const auto& e : es) {
            CHECK(std::abs(ad::residual(m, e)) < 1e-12);
            CHECK(std::abs(e.location) > 1.0);
        }
        CHECK_THAT(total_mass(ad::perturb(m, alpha)), WithinAbs(total_mass(m), 1e-6));
    }
}

TEST_CASE("perturb_general with the constant direction equals perturb") {
    const SpectralMeasure m(AcPart::grid({-1, -0.5, 0.5, 1}, {0.3, 0.6, 0.2, 0.4}));
    const ad::SampledDirection one{std::vector<double>(4, 1.0), {}};
    const auto a = ad::perturb(m, 0.9);
    const auto b = ad::perturb_general(m, one, 0.9);
    REQUIRE(a.atoms().size() == b.atoms().size());
    REQUIRE(a.ac().nodes().size() == b.ac().nodes().size());
    for (std::size_t i = 0; i < a.atoms().size(); ++i) {
        CHECK_THAT(a.atoms()[i].x, WithinAbs(b.atoms()[i].x, 1e-12));
        CHECK_THAT(a.atoms()[i].m, WithinAbs(b.atoms()[i].m, 1e-12));
    }
    for (std::size_t i = 0; i < a.ac().nodes().size(); ++i) {
        CHECK_THAT(a.ac().nodes()[i], WithinAbs(b.ac().nodes()[i], 1e-12));
        CHECK_THAT(a.ac().values()[i], WithinAbs(b.ac().values()[i], 1e-12));
    }
}

TEST_CASE("perturb_general: direction vanishing on the atoms drops them") {
    const SpectralMeasure m(AcPart::box(0.4), {{2.0, 0.2}});
    const ad::SampledDirection phi{{1.0, 1.0}, {0.0}};
    const auto nu = ad::induced_measure(m, phi);
    CHECK(nu.atoms().empty());
    const auto mu = ad::perturb_general(m, phi, 1.0);
    CHECK(mu.atoms().size() == 1);
    CHECK_THAT(total_mass(mu), WithinAbs(0.8, 1e-6));
    const ad::SampledDirection zero{{0.0, 0.0}, {0.0}};
    CHECK_THROWS_AS(ad::induced_measure(m, zero), InvalidArgument);
}

TEST_CASE("classification") {
    CHECK(ad::classify(box_half, 1.0, 0.0).cls == AdClass::L);
    const auto e = ad::solve_eigenvalue(box_half, 1.0);
    CHECK(ad::classify(box_half, 1.0, e.location).cls == AdClass::P_alpha);
    const auto far = ad::classify(box_half, 1.0, 5.0);
    CHECK(far.cls == AdClass::Neither);
    CHECK_THAT(far.f_boundary.principal, WithinAbs(-0.2027325540540822, 1e-14));
    // a grid vanishing at its upper edge with F(1) = -1/alpha: the edge is in S_alpha
    const SpectralMeasure wedge(AcPart::grid({-1, 1}, {1.0, 0.0}));
    const double f_edge = transforms::detail::ac_f(wedge.ac(), Locus{1.0, 0.0});
    const auto s = ad::classify(wedge, -1.0 / f_edge, 1.0);
    CHECK(s.cls == AdClass::S_alpha);
    CHECK(std::string(to_string(s.cls)) == "S_alpha");
}

TEST_CASE("distinct couplings give distinct atoms") {
    for (double a : {0.3, 1.0, -2.0}) {
        const double b = a * 1.5;
        CHECK(std::abs(ad::solve_eigenvalue(box_half, a).location - ad::solve_eigenvalue(box_half, b).location) >
              1e-9);
    }
}

TEST_CASE("rank-two example: candidate vs pipeline") {
    const auto z = ad::rank_two_example_density(0.0, 0.3);
    CHECK(z.candidate == 0.5);
    CHECK(z.oracle == 0.5);
    const auto r = ad::rank_two_example_density(1.0, 0.0);
    CHECK(r.candidate == 0.25);
    CHECK_THAT(r.oracle, WithinAbs(0.14420021957, 1e-11));
    const double ac = oracle::integrate([](double x) { return ad::rank_two_example_density(1.0, x).oracle; }, -1.0,
                                        1.0, 1e-10);
    CHECK_THAT(ac + ad::box_eigenvalue_closed(0.5, 1.0).mass, WithinAbs(1.0, 1e-6));
}
