#include "catch_amalgamated.hpp"

#include "rankone/io.hpp"
#include "rankone/orthobuilder.hpp"

#include <numbers>

using namespace rankone;
using namespace rankone::ortho;
using Catch::Matchers::WithinAbs;

namespace {
const SpectralMeasure half_lebesgue(AcPart::box(0.5));
const SpectralMeasure mixed_eta(AcPart::box(0.4), {{-0.5, 0.1}, {0.5, 0.1}});

std::vector<Function> family() {
    return {[](double) { return 1.0; }, [](double t) { return t; }, [](double t) { return t * t; },
            [](double t) { return std::sin(std::numbers::pi * t); }};
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}
} // namespace

TEST_CASE("constant function: one median split") {
    const auto r = build_sign_function({[](double) { return 1.0; }}, half_lebesgue);
    CHECK(r.converged);
    CHECK(r.level == 0);
    CHECK(r.h(-0.5) == -1);
    CHECK(r.h(0.5) == 1);
    CHECK(std::abs(inner_products(r.h, {[](double) { return 1.0; }}, half_lebesgue)[0]) < 1e-15);
}

TEST_CASE("{1, t} against Lebesgue/2") {
    const std::vector<Function> fns{[](double) { return 1.0; }, [](double t) { return t; }};
    const auto r = build_sign_function(fns, half_lebesgue, 1e-6, 22);
    CHECK(r.converged);
    CHECK(r.residual < 1e-6);
    CHECK(std::abs(inner_products(r.h, {[](double t) { return t; }}, half_lebesgue)[0]) < 1e-6);
}

TEST_CASE("four functions against both measures") {
    for (const auto* eta : {&half_lebesgue, &mixed_eta}) {
        const auto r = build_sign_function(family(), *eta);
        CHECK(r.converged);
        CHECK(r.residual < 1e-6);
        CHECK(max_abs(inner_products(r.h, family(), *eta)) < 1e-6);
        r.h.validate();
        // <h, h> = ||eta||
        const Function hf = [&](double t) { return static_cast<double>(r.h(t)); };
        CHECK_THAT(inner_products(r.h, {hf}, *eta)[0], WithinAbs(total_mass(*eta), 1e-10));
        // independent check: exact antiderivatives per piece plus atoms
        const std::vector<Function> prim{[](double t) { return t; }, [](double t) { return t * t / 2; },
                                         [](double t) { return t * t * t / 3; },
                                         [](double t) { return -std::cos(std::numbers::pi * t) / std::numbers::pi; }};
        for (std::size_t n = 0; n < prim.size(); ++n) {
            const auto f = family()[n];
            double s = 0.0;
            for (std::size_t i = 0; i < r.h.signs.size(); ++i)
                s += r.h.signs[i] * eta->ac().level() * (prim[n](r.h.piece_end(i)) - prim[n](r.h.breakpoints[i]));
            for (const auto& a : eta->atoms())
                s += a.m * r.h(a.x) * f(a.x);
            CHECK(std::abs(s) < 1e-6);
        }
    }
}

TEST_CASE("residual history does not grow for polynomial families") {
    const std::vector<Function> fns{[](double) { return 1.0; }, [](double t) { return t; },
                                    [](double t) { return t * t; }};
    const auto r = build_sign_function(fns, half_lebesgue, 1e-12, 14);
    for (std::size_t i = 1; i < r.history.size(); ++i)
        CHECK(r.history[i] <= r.history[i - 1] * (1 + 1e-9) + 1e-15);
}

TEST_CASE("non-convergence is reported") {
    const auto r = build_sign_function(family(), half_lebesgue, 1e-15, 2);
    CHECK_FALSE(r.converged);
    CHECK(std::isfinite(r.residual));
    CHECK(r.level <= 2);
}

TEST_CASE("eta is validated") {
    CHECK_THROWS_AS(build_sign_function(family(), SpectralMeasure(AcPart::box(0.5), {{1.0, 0.1}})), InvalidArgument);
    CHECK_THROWS_AS(build_sign_function(family(), SpectralMeasure(AcPart::box(0.5, {-2.0, 1.0}))), InvalidArgument);
}

TEST_CASE("function family JSON") {
    const auto fns = io::functions_from_json(io::read_file(RANKONE_SAMPLES "/funcs.json"));
    REQUIRE(fns.size() == 4);
    CHECK(fns[2](0.5) == 0.25);
    CHECK_THAT(fns[3](0.5), WithinAbs(1.0, 1e-15));
    const auto sampled = io::function_from_json(
        nlohmann::json::parse(R"({"type":"sampled","nodes":[-1,0,1],"values":[2,0,4]})"));
    CHECK(sampled(-0.5) == 1.0);
    CHECK(sampled(0.25) == 1.0);
    CHECK_THROWS_AS(io::function_from_json(nlohmann::json::parse(R"({"type":"exp"})")), InvalidArgument);
    SignFunction h;
    h.breakpoints = {-1.0, 0.25};
    h.signs = {-1, 1};
    const auto back = io::sign_function_from_json(io::to_json(h));
    CHECK(back.breakpoints == h.breakpoints);
    CHECK(back.signs == h.signs);
}
