#include "catch_amalgamated.hpp"

#include "cli.hpp"

#include <filesystem>
#include <sstream>

using namespace rankone;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch() {
    const auto p = fs::temp_directory_path() / "rankone_cli_test";
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const std::string samples = RANKONE_SAMPLES;

} // namespace

TEST_CASE("complex parser") {
    CHECK(cli::parse_complex("0.5+1e-6i") == std::complex<double>(0.5, 1e-6));
    CHECK(cli::parse_complex("2") == std::complex<double>(2, 0));
    CHECK(cli::parse_complex("-i") == std::complex<double>(0, -1));
    CHECK(cli::parse_complex("3-0.25i") == std::complex<double>(3, -0.25));
    CHECK(cli::parse_complex("1e-3i") == std::complex<double>(0, 1e-3));
    CHECK(cli::parse_complex("-1e+2+2E-1i") == std::complex<double>(-100, 0.2));
    CHECK_THROWS_AS(cli::parse_complex("abc"), InvalidArgument);
    CHECK_THROWS_AS(cli::parse_complex(""), InvalidArgument);
}

TEST_CASE("cascade run writes CSV and manifest") {
    const auto csv = (scratch() / "traj.csv").string();
    const auto svg = (scratch() / "curve.svg").string();
    const auto r = run({"cascade", "run", "--dist", "rademacher", "--c", "1", "--steps", "200", "--seed", "7",
                        "--out", csv, "--svg", svg});
    REQUIRE(r.code == 0);
    const std::string text = slurp(csv);
    CHECK(text.rfind("step,alpha,x_eig,mass,tau,ac_mass\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 201);
    CHECK_THAT(text, ContainsSubstring("\n1,"));
    CHECK_THAT(slurp(svg), ContainsSubstring("<polyline"));

    const auto manifest = nlohmann::json::parse(slurp(csv + ".manifest.json"));
    CHECK(manifest.at("version") == cli::version);
    CHECK(manifest.at("seeds")[0] == 7);
    CHECK(manifest.at("config").at("steps") == 200);
    REQUIRE(manifest.at("outputs").size() == 2);
    for (const auto& o : manifest.at("outputs")) {
        REQUIRE(fs::exists(o.at("path").get<std::string>()));
        CHECK(o.at("sha256") == cli::sha256_file(o.at("path")));
    }
}

TEST_CASE("determinism and replay from the manifest") {
    const auto a = (scratch() / "a.csv").string();
    const auto b = (scratch() / "b.csv").string();
    REQUIRE(run({"cascade", "run", "--dist", "uniform", "--c", "2", "--steps", "300", "--seed", "42", "--out", a})
                .code == 0);
    REQUIRE(run({"cascade", "run", "--dist", "uniform", "--c", "2", "--steps", "300", "--seed", "42", "--out", b})
                .code == 0);
    CHECK(slurp(a) == slurp(b));
    const std::string first = slurp(a);
    REQUIRE(run({"run", "--config", a + ".manifest.json"}).code == 0);
    CHECK(slurp(a) == first);
}

TEST_CASE("validation errors exit 2") {
    auto r = run({"cascade", "run", "--dist", "gaussian", "--c", "1"});
    CHECK(r.code == 2);
    CHECK_THAT(r.err, ContainsSubstring("rademacher, uniform, twopoint, fixed"));
    CHECK(run({"cascade", "run", "--c", "-1"}).code == 2);
    CHECK(run({"transforms", "eval", "--measure", "/nonexistent.json", "--z", "1+i"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"bounds", "dlower", "--a", "1"}).code == 2);

    const auto cfg = (scratch() / "bad.json").string();
    cli::detail::finite_or_throw("x", {1.0});
    io::write_file(cfg, R"({"command":"bounds dlower","a":1,"c":0.3,"eps":0.04,"lambda_max":1,"colour":2})");
    r = run({"run", "--config", cfg});
    CHECK(r.code == 2);
    CHECK_THAT(r.err, ContainsSubstring("colour"));
    io::write_file(cfg, "{not json");
    CHECK(run({"run", "--config", cfg}).code == 2);
}

TEST_CASE("numerical failures exit 3 and name the op") {
    const auto r = run({"transforms", "eval", "--measure", samples + "/mixed.json", "--z", "1.4"});
    CHECK(r.code == 3);
    CHECK_THAT(r.err, ContainsSubstring("use boundary_value"));
    CHECK_THAT(r.err, ContainsSubstring("borel"));
    const auto e = run({"transforms", "boundary", "--measure", samples + "/box.json", "--x", "1"});
    CHECK(e.code == 3);
}

TEST_CASE("transforms subcommands") {
    auto r = run({"transforms", "eval", "--measure", samples + "/box.json", "--z", "2"});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK_THAT(j.at("re").get<double>(), WithinAbs(-0.5493061443340549, 1e-15));
    CHECK(j.at("im") == 0.0);
    r = run({"transforms", "boundary", "--measure", samples + "/box.json", "--x", "0.5"});
    REQUIRE(r.code == 0);
    j = nlohmann::json::parse(r.out);
    CHECK_THAT(j.at("principal").get<double>(), WithinAbs(-0.5493061443340549, 1e-14));
    CHECK(j.at("density") == 0.5);
}

TEST_CASE("bounds subcommands") {
    auto r = run({"bounds", "dlower", "--a", "1", "--c", "0", "--eps", "0", "--lambda-max", "1"});
    REQUIRE(r.code == 0);
    CHECK_THAT(nlohmann::json::parse(r.out).at("d_lower").get<double>(), WithinAbs(1.0 / 9.0, 1e-16));
    r = run({"bounds", "verify", "--scenario", samples + "/scenario.json", "--lambda", "1.0"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK_THAT(j.at("measured_loss").get<double>(), WithinAbs(j.at("measured_gain").get<double>(), 1e-6));
    if (j.at("k").get<double>() <= 0.0)
        CHECK(j.at("holds") == "not-applicable");
    else
        CHECK(j.at("holds") == true);
}

TEST_CASE("adtheory perturb and ortho build") {
    const auto mu = (scratch() / "mu.json").string();
    auto r = run({"adtheory", "perturb", "--measure", samples + "/box.json", "--alpha", "1.0", "--out", mu});
    REQUIRE(r.code == 0);
    const auto m = io::measure_from_json(io::read_file(mu));
    CHECK_THAT(total_mass(m), WithinAbs(1.0, 1e-6));
    REQUIRE(m.atoms().size() == 1);
    CHECK_THAT(m.atoms()[0].x, WithinAbs(1.313035, 1e-6));
    CHECK(fs::exists(mu + ".manifest.json"));

    const auto h = (scratch() / "h.json").string();
    r = run({"ortho", "build", "--funcs", samples + "/funcs.json", "--measure", samples + "/eta_mixed.json", "--out",
             h});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(h));
    CHECK(j.at("converged") == true);
    CHECK(j.at("residual").get<double>() < 1e-6);
}

TEST_CASE("cascade localize") {
    const auto r = run({"cascade", "localize", "--dist", "rademacher", "--c", "1", "--target", "0.1"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("localized") == true);
    CHECK(j.at("steps_to_target").is_number_integer());
    CHECK(j.at("strictly_decreasing") == true);
}
