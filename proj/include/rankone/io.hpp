#pragma once

// JSON forms of measures, bound scenarios, sign functions and function
// families. Readers reject unknown keys.

#include "rankone/bounds.hpp"
#include "rankone/error.hpp"
#include "rankone/measures.hpp"
#include "rankone/orthobuilder.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

namespace rankone::io {

using nlohmann::json;

inline void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
    if (!j.is_object())
        throw InvalidArgument(what + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
            std::string list;
            for (const char* k : allowed)
                list += list.empty() ? k : std::string(", ") + k;
            throw InvalidArgument(what + ": unknown key \"" + it.key() + "\" (allowed: " + list + ")");
        }
    }
}

inline double get_number(const json& j, const char* key, const std::string& what) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw InvalidArgument(what + ": \"" + key + "\" must be a number");
    return j.at(key).get<double>();
}

inline std::vector<double> get_numbers(const json& j, const char* key, const std::string& what) {
    if (!j.contains(key) || !j.at(key).is_array())
        throw InvalidArgument(what + ": \"" + key + "\" must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number())
            throw InvalidArgument(what + ": \"" + key + "\" must contain numbers only");
        out.push_back(v.get<double>());
    }
    return out;
}

inline json read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(path + ": " + e.what());
    }
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InvalidArgument("cannot write " + path);
    out << text;
    if (!out)
        throw InvalidArgument("write failed for " + path);
}

// ---- measures ----

inline json to_json(const AcPart& ac) {
    if (ac.is_box())
        return {{"type", "box"}, {"tau", ac.level()}, {"support", {ac.support().lo, ac.support().hi}}};
    const auto n = ac.nodes();
    const auto v = ac.values();
    return {{"type", "grid"},
            {"nodes", std::vector<double>(n.begin(), n.end())},
            {"values", std::vector<double>(v.begin(), v.end())}};
}

inline json to_json(const SpectralMeasure& m) {
    json atoms = json::array();
    for (const auto& a : m.atoms())
        atoms.push_back({{"x", a.x}, {"m", a.m}});
    return {{"ac", to_json(m.ac())}, {"atoms", atoms}};
}

inline AcPart ac_from_json(const json& j) {
    const std::string what = "measure.ac";
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
        throw InvalidArgument(what + ": \"type\" must be \"box\" or \"grid\"");
    const auto type = j.at("type").get<std::string>();
    if (type == "box") {
        require_keys(j, {"type", "tau", "support"}, what);
        Interval sup{-1.0, 1.0};
        if (j.contains("support")) {
            const auto s = get_numbers(j, "support", what);
            if (s.size() != 2)
                throw InvalidArgument(what + ": \"support\" must be [lo, hi]");
            sup = {s[0], s[1]};
        }
        return AcPart::box(get_number(j, "tau", what), sup);
    }
    if (type == "grid") {
        require_keys(j, {"type", "nodes", "values"}, what);
        return AcPart::grid(get_numbers(j, "nodes", what), get_numbers(j, "values", what));
    }
    throw InvalidArgument(what + ": unknown type \"" + type + "\" (allowed: box, grid)");
}

inline std::vector<PointMass> atoms_from_json(const json& j, const std::string& what) {
    std::vector<PointMass> atoms;
    if (!j.is_array())
        throw InvalidArgument(what + ": \"atoms\" must be an array");
    for (const auto& a : j) {
        require_keys(a, {"x", "m"}, what + ".atoms[]");
        atoms.push_back({get_number(a, "x", what), get_number(a, "m", what)});
    }
    return atoms;
}

inline SpectralMeasure measure_from_json(const json& j) {
    require_keys(j, {"ac", "atoms"}, "measure");
    if (!j.contains("ac"))
        throw InvalidArgument("measure: missing \"ac\"");
    std::vector<PointMass> atoms;
    if (j.contains("atoms"))
        atoms = atoms_from_json(j.at("atoms"), "measure");
    return SpectralMeasure(ac_from_json(j.at("ac")), std::move(atoms));
}

// ---- bound scenarios ----

inline json to_json(const bounds::BoundScenario& s) {
    json atoms = json::array();
    for (const auto& a : s.atoms)
        atoms.push_back({{"x", a.x}, {"m", a.m}});
    const auto n = s.f.nodes();
    const auto v = s.f.values();
    return {{"a", s.a},
            {"c", s.c()},
            {"atoms", atoms},
            {"f", {{"nodes", std::vector<double>(n.begin(), n.end())}, {"values", std::vector<double>(v.begin(), v.end())}}},
            {"phi", {{"ac", s.phi_ac}, {"atoms", s.phi_atoms}}},
            {"eps", s.eps},
            {"lambda_interval", {s.lambda_interval.lo, s.lambda_interval.hi}}};
}

inline bounds::BoundScenario scenario_from_json(const json& j) {
    const std::string what = "scenario";
    require_keys(j, {"a", "c", "atoms", "f", "phi", "eps", "lambda_interval"}, what);
    bounds::BoundScenario s;
    s.a = get_number(j, "a", what);
    if (j.contains("atoms"))
        s.atoms = atoms_from_json(j.at("atoms"), what);
    if (!j.contains("f"))
        throw InvalidArgument(what + ": missing \"f\"");
    require_keys(j.at("f"), {"nodes", "values"}, what + ".f");
    s.f = AcPart::grid(get_numbers(j.at("f"), "nodes", what + ".f"), get_numbers(j.at("f"), "values", what + ".f"));
    if (!j.contains("phi"))
        throw InvalidArgument(what + ": missing \"phi\"");
    require_keys(j.at("phi"), {"ac", "atoms"}, what + ".phi");
    s.phi_ac = get_numbers(j.at("phi"), "ac", what + ".phi");
    s.phi_atoms = j.at("phi").contains("atoms") ? get_numbers(j.at("phi"), "atoms", what + ".phi")
                                                : std::vector<double>{};
    s.eps = get_number(j, "eps", what);
    const auto li = get_numbers(j, "lambda_interval", what);
    if (li.size() != 2)
        throw InvalidArgument(what + ": \"lambda_interval\" must be [lo, hi]");
    s.lambda_interval = {li[0], li[1]};
    if (j.contains("c") && std::abs(get_number(j, "c", what) - s.c()) > 1e-10)
        throw InvalidArgument(what + ": \"c\" does not match the total atom mass");
    s.validate();
    return s;
}

// ---- sign functions ----

inline json to_json(const ortho::SignFunction& h) {
    return {{"breakpoints", h.breakpoints}, {"signs", h.signs}};
}

inline ortho::SignFunction sign_function_from_json(const json& j) {
    require_keys(j, {"breakpoints", "signs"}, "sign function");
    ortho::SignFunction h;
    h.breakpoints = get_numbers(j, "breakpoints", "sign function");
    h.signs.clear();
    for (double v : get_numbers(j, "signs", "sign function"))
        h.signs.push_back(static_cast<int>(v));
    h.validate();
    return h;
}

// ---- function families ----

/// One entry of a function family:
///   {"type":"poly","coeffs":[c0,c1,...]}               c0 + c1 t + ...
///   {"type":"sin","omega":w} / {"type":"cos","omega":w} sin(w t), cos(w t)
///   {"type":"sampled","nodes":[...],"values":[...]}     linear interpolation
inline ortho::Function function_from_json(const json& j) {
    const std::string what = "function";
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
        throw InvalidArgument(what + ": \"type\" must be one of poly, sin, cos, sampled");
    const auto type = j.at("type").get<std::string>();
    if (type == "poly") {
        require_keys(j, {"type", "coeffs"}, what);
        auto c = get_numbers(j, "coeffs", what);
        if (c.empty())
            throw InvalidArgument(what + ": poly needs at least one coefficient");
        return [c](double t) {
            double v = 0.0;
            for (auto it = c.rbegin(); it != c.rend(); ++it)
                v = v * t + *it;
            return v;
        };
    }
    if (type == "sin" || type == "cos") {
        require_keys(j, {"type", "omega"}, what);
        const double w = get_number(j, "omega", what);
        if (type == "sin")
            return [w](double t) { return std::sin(w * t); };
        return [w](double t) { return std::cos(w * t); };
    }
    if (type == "sampled") {
        require_keys(j, {"type", "nodes", "values"}, what);
        // reuse the grid validation (values may be negative here, so check separately)
        auto x = get_numbers(j, "nodes", what);
        auto y = get_numbers(j, "values", what);
        if (x.size() < 2 || x.size() != y.size())
            throw InvalidArgument(what + ": sampled needs matching nodes/values, at least two");
        for (std::size_t i = 1; i < x.size(); ++i)
            if (!(x[i - 1] < x[i]))
                throw InvalidArgument(what + ": sampled nodes must be strictly increasing");
        return [x, y](double t) {
            if (t <= x.front())
                return y.front();
            if (t >= x.back())
                return y.back();
            const auto i = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin()) - 1;
            const double r = (t - x[i]) / (x[i + 1] - x[i]);
            return y[i] + r * (y[i + 1] - y[i]);
        };
    }
    throw InvalidArgument(what + ": unknown type \"" + type + "\" (allowed: poly, sin, cos, sampled)");
}

inline std::vector<ortho::Function> functions_from_json(const json& j) {
    require_keys(j, {"functions"}, "funcs");
    if (!j.contains("functions") || !j.at("functions").is_array() || j.at("functions").empty())
        throw InvalidArgument("funcs: \"functions\" must be a nonempty array");
    std::vector<ortho::Function> out;
    for (const auto& f : j.at("functions"))
        out.push_back(function_from_json(f));
    return out;
}

} // namespace rankone::io
