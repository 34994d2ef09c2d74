#pragma once

// Command-line front end. Every subcommand is first turned into a JSON config
// ({"command": "...", options...}); `execute` runs a config, so `run --config`
// and the direct subcommands share one validated path.

#include "rankone/rankone.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace rankone::cli {

using nlohmann::json;

inline constexpr const char* version = "0.1.0";

enum Exit : int { ok = 0, validation = 2, numerical = 3 };

inline std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidArgument("cannot read " + path + " for digest");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string data = buf.str();
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw NumericalError("sha256", "digest failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return hex.str();
}

/// "0.5+1e-6i", "2", "-i", "3-0.25i", "1e-3i"
inline std::complex<double> parse_complex(std::string s) {
    std::erase_if(s, [](char c) { return c == ' '; });
    auto number = [&](const std::string& t, double unit_default) {
        if (t.empty() || t == "+")
            return unit_default;
        if (t == "-")
            return -unit_default;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &used);
        } catch (...) {
            used = 0;
        }
        if (used != t.size() || !std::isfinite(v))
            throw InvalidArgument("cannot parse complex number \"" + s + "\"");
        return v;
    };
    if (s.empty())
        throw InvalidArgument("empty complex number");
    if (s.back() != 'i')
        return {number(s, 0.0), 0.0};
    const std::string body = s.substr(0, s.size() - 1);
    std::size_t split = std::string::npos;
    for (std::size_t i = body.size(); i-- > 1;) {
        if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    if (split == std::string::npos)
        return {0.0, number(body, 1.0)};
    return {number(body.substr(0, split), 0.0), number(body.substr(split), 1.0)};
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

namespace detail {

inline const json& need(const json& cfg, const char* key) {
    if (!cfg.contains(key) || cfg.at(key).is_null())
        throw InvalidArgument(std::string("config: missing \"") + key + "\"");
    return cfg.at(key);
}

inline double num(const json& cfg, const char* key) {
    const json& v = need(cfg, key);
    if (!v.is_number())
        throw InvalidArgument(std::string("config: \"") + key + "\" must be a number");
    return v.get<double>();
}

inline double num_or(const json& cfg, const char* key, double dflt) {
    return cfg.contains(key) && !cfg.at(key).is_null() ? num(cfg, key) : dflt;
}

inline std::uint64_t count(const json& cfg, const char* key, std::uint64_t dflt) {
    if (!cfg.contains(key) || cfg.at(key).is_null())
        return dflt;
    const json& v = cfg.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw InvalidArgument(std::string("config: \"") + key + "\" must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

inline std::string str_or(const json& cfg, const char* key, const std::string& dflt) {
    if (!cfg.contains(key) || cfg.at(key).is_null())
        return dflt;
    if (!cfg.at(key).is_string())
        throw InvalidArgument(std::string("config: \"") + key + "\" must be a string");
    return cfg.at(key).get<std::string>();
}

inline cascade::CouplingDistribution distribution(const json& cfg) {
    const std::string kind = str_or(cfg, "dist", "rademacher");
    const std::uint64_t seed = count(cfg, "seed", 0);
    if (kind == "rademacher")
        return cascade::CouplingDistribution::rademacher(num(cfg, "c"), seed);
    if (kind == "uniform")
        return cascade::CouplingDistribution::uniform_symmetric(num(cfg, "c"), seed);
    if (kind == "twopoint")
        return cascade::CouplingDistribution::two_point(num(cfg, "a"), num(cfg, "b"), num_or(cfg, "p", 0.5), seed);
    if (kind == "fixed") {
        const json& v = need(cfg, "values");
        if (!v.is_array())
            throw InvalidArgument("config: \"values\" must be an array of numbers");
        std::vector<double> seq;
        for (const auto& x : v) {
            if (!x.is_number())
                throw InvalidArgument("config: \"values\" must be an array of numbers");
            seq.push_back(x.get<double>());
        }
        return cascade::CouplingDistribution::fixed(std::move(seq));
    }
    throw InvalidArgument("config: unknown dist \"" + kind + "\" (allowed kinds: rademacher, uniform, twopoint, fixed)");
}

inline std::string tau_svg(const std::vector<std::pair<double, double>>& pts, const std::string& title) {
    const double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
    double xmax = 1.0, ymax = 0.0;
    for (const auto& [x, y] : pts) {
        xmax = std::max(xmax, x);
        ymax = std::max(ymax, y);
    }
    if (!(ymax > 0.0))
        ymax = 1.0;
    auto px = [&](double x) { return L + (W - L - R) * x / xmax; };
    auto py = [&](double y) { return H - B - (H - T - B) * y / ymax; };
    std::ostringstream s;
    s << std::setprecision(6);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
      << title << "</text>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = xmax * i / 4.0, yv = ymax * i / 4.0;
        s << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << xv << "</text>\n";
        s << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << yv << "</text>\n";
    }
    s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">step k</text>\n";
    s << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">tau_k</text>\n";
    s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : pts)
        s << px(x) << ',' << py(y) << ' ';
    s << "\"/>\n</svg>\n";
    return s.str();
}

inline void write_manifest(const json& cfg, const std::vector<std::string>& outputs, double wall,
                           const std::vector<std::uint64_t>& seeds) {
    json files = json::array();
    for (const auto& p : outputs)
        files.push_back({{"path", p}, {"sha256", sha256_file(p)}});
    const json manifest = {{"config", cfg},
                           {"version", version},
                           {"seeds", seeds},
                           {"wall_time_s", wall},
                           {"outputs", files}};
    io::write_file(outputs.front() + ".manifest.json", manifest.dump(2) + "\n");
}

inline void finite_or_throw(const char* op, std::initializer_list<double> vs) {
    for (double v : vs)
        if (!std::isfinite(v))
            throw NumericalError(op, "non-finite result");
}

inline json holds_json(const std::optional<bool>& h) {
    if (!h)
        return "not-applicable";
    return *h;
}

} // namespace detail

/// Runs one config. Writes result JSON (or a summary) to `out`.
inline void execute(const json& cfg, std::ostream& out) {
    using namespace detail;
    if (!cfg.is_object() || !cfg.contains("command") || !cfg.at("command").is_string())
        throw InvalidArgument("config: \"command\" must be a string");
    const std::string cmd = cfg.at("command").get<std::string>();
    const auto t0 = std::chrono::steady_clock::now();
    auto wall = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

    if (cmd == "cascade run") {
        io::require_keys(cfg, {"command", "dist", "c", "a", "b", "p", "values", "seed", "steps", "tau_floor",
                               "trajectory", "out", "svg"},
                         "cascade run");
        const auto dist = distribution(cfg);
        const auto steps = count(cfg, "steps", 500);
        const double floor = num_or(cfg, "tau_floor", cascade::default_tau_floor);
        const auto traj_index = count(cfg, "trajectory", 0);
        const std::string path = str_or(cfg, "out", "traj.csv");
        const std::string svg = str_or(cfg, "svg", "");
        const auto traj = cascade::run_trajectory(dist, steps, floor, traj_index);
        std::string csv = "step,alpha,x_eig,mass,tau,ac_mass\n";
        for (const auto& r : traj.records) {
            finite_or_throw("cascade run", {r.alpha, r.location, r.mass, r.tau});
            csv += std::to_string(r.step) + ',' + format_double(r.alpha) + ',' + format_double(r.location) + ',' +
                   format_double(r.mass) + ',' + format_double(r.tau) + ',' + format_double(2.0 * r.tau) + '\n';
        }
        io::write_file(path, csv);
        std::vector<std::string> outputs{path};
        if (!svg.empty()) {
            std::vector<std::pair<double, double>> pts{{0.0, traj.tau0}};
            for (const auto& r : traj.records)
                pts.emplace_back(static_cast<double>(r.step), r.tau);
            io::write_file(svg, tau_svg(pts, std::string("tau_k, ") + cascade::to_string(dist.kind())));
            outputs.push_back(svg);
        }
        write_manifest(cfg, outputs, wall(), {dist.seed()});
        out << json{{"rows", traj.records.size()},
                    {"final_tau", traj.final_tau()},
                    {"remaining_ac_mass", cascade::remaining_ac_mass(traj)},
                    {"hit_floor", traj.hit_floor},
                    {"out", path},
                    {"manifest", path + ".manifest.json"}}
                   .dump(2)
            << "\n";
        return;
    }
    if (cmd == "cascade localize") {
        io::require_keys(cfg, {"command", "dist", "c", "a", "b", "p", "values", "seed", "target", "max_steps",
                               "tau_floor", "trajectory", "out"},
                         "cascade localize");
        const auto dist = distribution(cfg);
        const auto rep = cascade::localization_report(dist, num_or(cfg, "target", 1e-3),
                                                      count(cfg, "max_steps", 1000000),
                                                      num_or(cfg, "tau_floor", cascade::default_tau_floor),
                                                      count(cfg, "trajectory", 0));
        json curve = json::array();
        for (const auto& [k, tau] : rep.tau_curve)
            curve.push_back({k, tau});
        const json result = {{"localized", rep.localized},
                             {"steps_to_target", rep.steps_to_target ? json(*rep.steps_to_target) : json(nullptr)},
                             {"steps_run", rep.steps_run},
                             {"final_tau", rep.final_tau},
                             {"strictly_decreasing", rep.strictly_decreasing},
                             {"tau_curve", curve}};
        const std::string path = str_or(cfg, "out", "");
        if (!path.empty()) {
            io::write_file(path, result.dump(2) + "\n");
            write_manifest(cfg, {path}, wall(), {dist.seed()});
        }
        out << result.dump(2) << "\n";
        return;
    }
    if (cmd == "adtheory perturb") {
        io::require_keys(cfg, {"command", "measure", "alpha", "nodes", "out"}, "adtheory perturb");
        const auto m = io::measure_from_json(io::read_file(str_or(cfg, "measure", "")));
        const auto mu = ad::perturb(m, num(cfg, "alpha"), count(cfg, "nodes", 2049));
        for (const auto& a : mu.atoms())
            finite_or_throw("perturb", {a.x, a.m});
        const json result = io::to_json(mu);
        const std::string path = str_or(cfg, "out", "");
        if (path.empty()) {
            out << result.dump() << "\n";
            return;
        }
        io::write_file(path, result.dump() + "\n");
        write_manifest(cfg, {path}, wall(), {});
        out << json{{"out", path}, {"atoms", mu.atoms().size()}, {"ac_mass", ac_mass(mu)},
                    {"total_mass", total_mass(mu)}}
                   .dump(2)
            << "\n";
        return;
    }
    if (cmd == "transforms eval") {
        io::require_keys(cfg, {"command", "measure", "z"}, "transforms eval");
        const auto m = io::measure_from_json(io::read_file(str_or(cfg, "measure", "")));
        const auto z = parse_complex(str_or(cfg, "z", ""));
        const auto f = transforms::borel(m, z);
        finite_or_throw("borel", {f.real(), f.imag()});
        out << json{{"re", f.real()}, {"im", f.imag()}}.dump() << "\n";
        return;
    }
    if (cmd == "transforms boundary") {
        io::require_keys(cfg, {"command", "measure", "x"}, "transforms boundary");
        const auto m = io::measure_from_json(io::read_file(str_or(cfg, "measure", "")));
        const auto bv = transforms::boundary_value(m, num(cfg, "x"));
        finite_or_throw("boundary_value", {bv.principal, bv.density});
        out << json{{"principal", bv.principal}, {"density", bv.density}}.dump() << "\n";
        return;
    }
    if (cmd == "bounds verify") {
        io::require_keys(cfg, {"command", "scenario", "lambda"}, "bounds verify");
        const auto s = io::scenario_from_json(io::read_file(str_or(cfg, "scenario", "")));
        const auto v = bounds::verify(s, num(cfg, "lambda"));
        finite_or_throw("bounds verify", {v.d, v.k, v.measured_loss, v.measured_gain});
        std::optional<bool> both;
        if (v.holds_ac)
            both = *v.holds_ac && *v.holds_singular;
        out << json{{"d", v.d},
                    {"k", v.k},
                    {"measured_loss", v.measured_loss},
                    {"measured_gain", v.measured_gain},
                    {"holds", holds_json(both)},
                    {"holds_ac", holds_json(v.holds_ac)},
                    {"holds_singular", holds_json(v.holds_singular)}}
                   .dump(2)
            << "\n";
        return;
    }
    if (cmd == "bounds dlower") {
        io::require_keys(cfg, {"command", "a", "c", "eps", "lambda_max"}, "bounds dlower");
        const double d = bounds::d_lower_bound(num(cfg, "a"), num(cfg, "c"), num(cfg, "eps"), num(cfg, "lambda_max"));
        out << json{{"d_lower", d}}.dump() << "\n";
        return;
    }
    if (cmd == "ortho build") {
        io::require_keys(cfg, {"command", "funcs", "measure", "tol", "max_level", "out"}, "ortho build");
        const auto fns = io::functions_from_json(io::read_file(str_or(cfg, "funcs", "")));
        const auto eta = io::measure_from_json(io::read_file(str_or(cfg, "measure", "")));
        const auto r = ortho::build_sign_function(fns, eta, num_or(cfg, "tol", 1e-6),
                                                  static_cast<unsigned>(count(cfg, "max_level", 24)));
        json result = io::to_json(r.h);
        result["level"] = r.level;
        result["converged"] = r.converged;
        result["residual"] = r.residual;
        result["inner_products"] = r.inner;
        result["atom_signs"] = r.atom_signs;
        const std::string path = str_or(cfg, "out", "h.json");
        io::write_file(path, result.dump() + "\n");
        write_manifest(cfg, {path}, wall(), {});
        out << json{{"out", path}, {"level", r.level}, {"converged", r.converged}, {"residual", r.residual},
                    {"pieces", r.h.signs.size()}}
                   .dump(2)
            << "\n";
        return;
    }
    throw InvalidArgument("config: unknown command \"" + cmd +
                          "\" (allowed: cascade run, cascade localize, adtheory perturb, transforms eval, "
                          "transforms boundary, bounds verify, bounds dlower, ortho build)");
}

/// Parses argv-style arguments (without the program name) and runs them.
/// Returns the process exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"rankone: iterated random rank-one perturbations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version);

    json cfg;
    auto add_dist = [&](CLI::App* sc, json& c) {
        sc->add_option_function<std::string>("--dist", [&c](const std::string& v) { c["dist"] = v; },
                                             "rademacher | uniform | twopoint | fixed");
        sc->add_option_function<double>("--c", [&c](double v) { c["c"] = v; }, "disorder strength");
        sc->add_option_function<double>("--a", [&c](double v) { c["a"] = v; }, "twopoint: first value");
        sc->add_option_function<double>("--b", [&c](double v) { c["b"] = v; }, "twopoint: second value");
        sc->add_option_function<double>("--p", [&c](double v) { c["p"] = v; }, "twopoint: probability of a");
        sc->add_option_function<std::vector<double>>("--values", [&c](const std::vector<double>& v) { c["values"] = v; },
                                                     "fixed: coupling sequence (repeats)")
            ->delimiter(',');
        sc->add_option_function<std::uint64_t>("--seed", [&c](std::uint64_t v) { c["seed"] = v; }, "RNG seed");
        sc->add_option_function<double>("--tau-floor", [&c](double v) { c["tau_floor"] = v; }, "stop below this tau");
        sc->add_option_function<std::uint64_t>("--trajectory", [&c](std::uint64_t v) { c["trajectory"] = v; },
                                               "trajectory index (RNG stream)");
    };
    auto str_opt = [&](CLI::App* sc, const char* flag, const char* key, const char* help, bool required = false) {
        auto* o = sc->add_option_function<std::string>(flag, [&cfg, key](const std::string& v) { cfg[key] = v; }, help);
        if (required)
            o->required();
    };
    auto num_opt = [&](CLI::App* sc, const char* flag, const char* key, const char* help, bool required = false) {
        auto* o = sc->add_option_function<double>(flag, [&cfg, key](double v) { cfg[key] = v; }, help);
        if (required)
            o->required();
    };
    auto int_opt = [&](CLI::App* sc, const char* flag, const char* key, const char* help) {
        sc->add_option_function<std::uint64_t>(flag, [&cfg, key](std::uint64_t v) { cfg[key] = v; }, help);
    };

    auto* casc = app.add_subcommand("cascade", "tau_k cascade under random couplings")->require_subcommand(1);
    auto* c_run = casc->add_subcommand("run", "run one trajectory and write a CSV");
    add_dist(c_run, cfg);
    int_opt(c_run, "--steps", "steps", "number of steps (default 500)");
    str_opt(c_run, "--out", "out", "CSV path (default traj.csv)");
    str_opt(c_run, "--svg", "svg", "optional tau_k line chart");
    auto* c_loc = casc->add_subcommand("localize", "steps until tau_k drops below a target");
    add_dist(c_loc, cfg);
    num_opt(c_loc, "--target", "target", "tau target (default 1e-3)");
    int_opt(c_loc, "--max-steps", "max_steps", "step budget (default 1e6)");
    str_opt(c_loc, "--out", "out", "optional JSON report path");

    auto* adt = app.add_subcommand("adtheory", "Aronszajn-Donoghue engine")->require_subcommand(1);
    auto* a_pert = adt->add_subcommand("perturb", "spectral measure after a rank-one perturbation");
    str_opt(a_pert, "--measure", "measure", "measure JSON", true);
    num_opt(a_pert, "--alpha", "alpha", "coupling", true);
    int_opt(a_pert, "--nodes", "nodes", "base Chebyshev nodes (default 2049)");
    str_opt(a_pert, "--out", "out", "output measure JSON (stdout if absent)");

    auto* tr = app.add_subcommand("transforms", "Borel transform and boundary values")->require_subcommand(1);
    auto* t_eval = tr->add_subcommand("eval", "F(z)");
    str_opt(t_eval, "--measure", "measure", "measure JSON", true);
    str_opt(t_eval, "--z", "z", "complex point, e.g. 0.5+1e-6i", true);
    auto* t_bnd = tr->add_subcommand("boundary", "F(x + i0) inside the support");
    str_opt(t_bnd, "--measure", "measure", "measure JSON", true);
    num_opt(t_bnd, "--x", "x", "real point", true);

    auto* bd = app.add_subcommand("bounds", "minimum loss/gain bounds")->require_subcommand(1);
    auto* b_ver = bd->add_subcommand("verify", "check the bounds on a scenario");
    str_opt(b_ver, "--scenario", "scenario", "scenario JSON", true);
    num_opt(b_ver, "--lambda", "lambda", "coupling in the scenario's interval", true);
    auto* b_dl = bd->add_subcommand("dlower", "(1 - c) / (a + lambda_max (1 - eps) + 1)^2");
    num_opt(b_dl, "--a", "a", "half-width of the a.c. support", true);
    num_opt(b_dl, "--c", "c", "total atom mass", true);
    num_opt(b_dl, "--eps", "eps", "atom overlap bound", true);
    num_opt(b_dl, "--lambda-max", "lambda_max", "largest |lambda|", true);

    auto* ort = app.add_subcommand("ortho", "orthogonal sign function")->require_subcommand(1);
    auto* o_build = ort->add_subcommand("build", "build h orthogonal to a function family");
    str_opt(o_build, "--funcs", "funcs", "function family JSON", true);
    str_opt(o_build, "--measure", "measure", "measure eta JSON", true);
    num_opt(o_build, "--tol", "tol", "residual tolerance (default 1e-6)");
    int_opt(o_build, "--max-level", "max_level", "deepest level (default 24)");
    str_opt(o_build, "--out", "out", "output JSON (default h.json)");

    std::string config_path;
    auto* runc = app.add_subcommand("run", "run a JSON config or a run manifest");
    runc->add_option("--config", config_path, "config or manifest JSON")->required();

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::CallForVersion&) {
        out << version << "\n";
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return validation;
    }

    try {
        if (runc->parsed()) {
            json j = io::read_file(config_path);
            if (j.is_object() && j.contains("config") && !j.contains("command"))
                j = j.at("config");
            execute(j, out);
            return ok;
        }
        for (auto* group : {casc, adt, tr, bd, ort})
            if (group->parsed())
                for (auto* sc : group->get_subcommands())
                    cfg["command"] = group->get_name() + " " + sc->get_name();
        execute(cfg, out);
        return ok;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return validation;
    } catch (const NumericalError& e) {
        err << "numerical failure in " << e.op() << ": " << e.what() << "\n";
        return numerical;
    } catch (const Localized& e) {
        err << "numerical failure: " << e.what() << "\n";
        return numerical;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return validation;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return numerical;
    }
}

} // namespace rankone::cli
