#ifndef LATWIG_SCENARIO_HPP
#define LATWIG_SCENARIO_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include <latwig/analytic_states.hpp>
#include <latwig/dynamics_continuous.hpp>
#include <latwig/dynamics_discrete.hpp>
#include <latwig/errors.hpp>
#include <latwig/negativity.hpp>
#include <latwig/state.hpp>
#include <latwig/wigner.hpp>
#include <latwig/wigner_io.hpp>

// Scenario files (JSON):
//
// {
//   "window":   {"n_min": -40, "n_max": 40, "a": 1.0},
//   "kgrid":    {"n_k": 164},
//   "state":    {"name": "gaussian", "params": {"center": 3, "sigma": 2.0, "spin": [1, 0]}},
//   "dynamics": {"type": "none"}
//             | {"type": "continuous",
//                "hamiltonian": {"j_hop": 1, "potential": {"type": "linear", "lambda": 1}, "spin_coupled": false},
//                "noise": [{"op": "sigma_z", "gamma": 0.3}],
//                "method": "closed_form" | "rk4" | "both" | "wigner_rk4",
//                "times": [0, 1.6], "dt": 0.001}
//             | {"type": "walk", "theta": 0.785, "steps": 20, "snapshot_every": 5,
//                "noise": {"p": 0.1, "basis": "spin" | "site", "mode": "noise_only" | "walk_and_noise"}},
//   "outputs":  {"directory": "out", "formats": ["wigner", "panels", "marginals", "negativity", "sites"]},
//   "tolerances": {"boundary": 1e-8, "two_path": 1e-6}
// }
//
// Complex numbers are written either as a plain number or as [re, im].
namespace latwig
{

inline constexpr const char *latwig_version = "0.1.0";

struct StateConfig {
    std::string name;
    nlohmann::json params = nlohmann::json::object();
};

struct NoDynamics {
};

enum class ContinuousMethod { closed_form, rk4, both, wigner_rk4 };

struct ContinuousDynamics {
    HamiltonianSpec hamiltonian;
    NoiseSpec noise;
    std::vector<std::string> noise_names; // "sigma_x" etc., empty string for explicit matrices
    ContinuousMethod method = ContinuousMethod::closed_form;
    std::vector<double> times;
    std::optional<double> dt;
};

enum class WalkNoiseMode { noise_only, walk_and_noise };

struct WalkDynamics {
    CoinSpec coin;
    int steps = 0;
    int snapshot_every = 1;
    std::optional<ProjectiveNoiseSpec> noise;
    WalkNoiseMode mode = WalkNoiseMode::walk_and_noise;
};

using DynamicsConfig = std::variant<NoDynamics, ContinuousDynamics, WalkDynamics>;

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats{"wigner", "marginals", "negativity"};

    bool wants(const std::string &f) const
    {
        return std::find(formats.begin(), formats.end(), f) != formats.end();
    }
};

struct Tolerances {
    double boundary = default_boundary_epsilon;
    double two_path = 1e-6;
};

struct ScenarioConfig {
    LatticeWindow window;
    std::size_t n_k = 0;
    StateConfig state;
    DynamicsConfig dynamics = NoDynamics{};
    OutputConfig outputs;
    Tolerances tolerances;
    nlohmann::json source; // the parsed document, echoed into the manifest
};

struct Diagnostic {
    enum class Severity { error, warning };
    Severity severity = Severity::error;
    std::string field;
    std::string message;

    std::string severity_name() const
    {
        return severity == Severity::error ? "error" : "warning";
    }
};

namespace detail
{

inline std::string join_path(const std::string &base, const std::string &key)
{
    return base.empty() ? key : base + "." + key;
}

inline const nlohmann::json &require(const nlohmann::json &obj, const std::string &key, const std::string &path)
{
    if (!obj.is_object()) {
        throw config_error(path.empty() ? "top level: expected an object" : path + ": expected an object");
    }
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw config_error(join_path(path, key) + ": missing required field");
    }
    return *it;
}

inline double as_number(const nlohmann::json &j, const std::string &path)
{
    if (!j.is_number()) {
        throw config_error(path + ": expected a number");
    }
    return j.get<double>();
}

inline long as_integer(const nlohmann::json &j, const std::string &path)
{
    if (!j.is_number_integer()) {
        throw config_error(path + ": expected an integer");
    }
    return j.get<long>();
}

inline bool as_bool(const nlohmann::json &j, const std::string &path)
{
    if (!j.is_boolean()) {
        throw config_error(path + ": expected true or false");
    }
    return j.get<bool>();
}

inline std::string as_string(const nlohmann::json &j, const std::string &path)
{
    if (!j.is_string()) {
        throw config_error(path + ": expected a string");
    }
    return j.get<std::string>();
}

inline complex as_complex(const nlohmann::json &j, const std::string &path)
{
    if (j.is_number()) {
        return {j.get<double>(), 0.0};
    }
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
        return {j[0].get<double>(), j[1].get<double>()};
    }
    throw config_error(path + ": expected a number or a [re, im] pair");
}

inline double number_or(const nlohmann::json &obj, const std::string &key, double fallback, const std::string &path)
{
    const auto it = obj.find(key);
    return it == obj.end() ? fallback : as_number(*it, join_path(path, key));
}

inline long integer_or(const nlohmann::json &obj, const std::string &key, long fallback, const std::string &path)
{
    const auto it = obj.find(key);
    return it == obj.end() ? fallback : as_integer(*it, join_path(path, key));
}

inline SpinVector as_spinor(const nlohmann::json &j, const std::string &path)
{
    if (!j.is_array() || j.size() != 2) {
        throw config_error(path + ": expected a two-component spinor");
    }
    return SpinVector(as_complex(j[0], path + "[0]"), as_complex(j[1], path + "[1]"));
}

inline SpinMatrix as_spin_operator(const nlohmann::json &j, const std::string &path)
{
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "sigma_x") {
            return pauli::x();
        }
        if (s == "sigma_y") {
            return pauli::y();
        }
        if (s == "sigma_z") {
            return pauli::z();
        }
        throw config_error(path + ": unknown operator '" + s + "' (sigma_x, sigma_y, sigma_z or a 2x2 matrix)");
    }
    if (!j.is_array() || j.size() != 2 || !j[0].is_array() || j[0].size() != 2 || !j[1].is_array()
        || j[1].size() != 2) {
        throw config_error(path + ": expected a 2x2 matrix");
    }
    SpinMatrix m;
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            m(r, c) = as_complex(j[r][c], path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
        }
    }
    return m;
}

inline std::vector<double> as_number_list(const nlohmann::json &j, const std::string &path)
{
    if (!j.is_array()) {
        throw config_error(path + ": expected a list of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

inline void reject_unknown(const nlohmann::json &obj, std::initializer_list<const char *> known, const std::string &path)
{
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::none_of(known.begin(), known.end(), [&](const char *k) { return it.key() == k; })) {
            throw config_error(join_path(path, it.key()) + ": unknown field");
        }
    }
}

inline Potential parse_potential(const nlohmann::json &j, const std::string &path)
{
    const std::string type = as_string(require(j, "type", path), join_path(path, "type"));
    if (type == "none") {
        reject_unknown(j, {"type"}, path);
        return NoPotential{};
    }
    if (type == "linear") {
        reject_unknown(j, {"type", "lambda"}, path);
        return LinearPotential{as_number(require(j, "lambda", path), join_path(path, "lambda"))};
    }
    if (type == "polynomial") {
        reject_unknown(j, {"type", "coeffs"}, path);
        auto c = as_number_list(require(j, "coeffs", path), join_path(path, "coeffs"));
        if (static_cast<int>(c.size()) > max_polynomial_degree + 1) {
            throw config_error(join_path(path, "coeffs") + ": degree exceeds " + std::to_string(max_polynomial_degree));
        }
        return PolynomialPotential{std::move(c)};
    }
    throw config_error(join_path(path, "type") + ": expected none, linear or polynomial");
}

inline ContinuousDynamics parse_continuous(const nlohmann::json &j, const std::string &path)
{
    reject_unknown(j, {"type", "hamiltonian", "noise", "method", "times", "dt"}, path);
    ContinuousDynamics d;
    const std::string hp = join_path(path, "hamiltonian");
    const auto &h = require(j, "hamiltonian", path);
    reject_unknown(h, {"j_hop", "potential", "spin_coupled"}, hp);
    d.hamiltonian.j_hop = as_number(require(h, "j_hop", hp), join_path(hp, "j_hop"));
    if (h.contains("potential")) {
        d.hamiltonian.potential = parse_potential(h["potential"], join_path(hp, "potential"));
    }
    if (h.contains("spin_coupled")) {
        d.hamiltonian.spin_coupled = as_bool(h["spin_coupled"], join_path(hp, "spin_coupled"));
    }
    if (j.contains("noise")) {
        const auto &n = j["noise"];
        const std::string np = join_path(path, "noise");
        if (!n.is_array()) {
            throw config_error(np + ": expected a list of {op, gamma}");
        }
        for (std::size_t i = 0; i < n.size(); ++i) {
            const std::string ip = np + "[" + std::to_string(i) + "]";
            reject_unknown(n[i], {"op", "gamma"}, ip);
            const auto &op = require(n[i], "op", ip);
            const double gamma = as_number(require(n[i], "gamma", ip), ip + ".gamma");
            if (!(gamma >= 0.0)) {
                throw config_error(ip + ".gamma: must be non-negative");
            }
            d.noise.lindblad_ops.push_back({as_spin_operator(op, ip + ".op"), gamma});
            d.noise_names.push_back(op.is_string() ? op.get<std::string>() : std::string());
        }
    }
    const std::string method = j.contains("method") ? as_string(j["method"], join_path(path, "method")) : "closed_form";
    if (method == "closed_form") {
        d.method = ContinuousMethod::closed_form;
    } else if (method == "rk4") {
        d.method = ContinuousMethod::rk4;
    } else if (method == "both") {
        d.method = ContinuousMethod::both;
    } else if (method == "wigner_rk4") {
        d.method = ContinuousMethod::wigner_rk4;
    } else {
        throw config_error(join_path(path, "method") + ": expected closed_form, rk4, both or wigner_rk4");
    }
    d.times = as_number_list(require(j, "times", path), join_path(path, "times"));
    if (d.times.empty()) {
        throw config_error(join_path(path, "times") + ": at least one time is required");
    }
    if (j.contains("dt") && !j["dt"].is_null()) {
        d.dt = as_number(j["dt"], join_path(path, "dt"));
    }
    return d;
}

inline WalkDynamics parse_walk(const nlohmann::json &j, const std::string &path)
{
    reject_unknown(j, {"type", "theta", "steps", "snapshot_every", "noise"}, path);
    WalkDynamics d;
    d.coin.theta = as_number(require(j, "theta", path), join_path(path, "theta"));
    d.steps = static_cast<int>(as_integer(require(j, "steps", path), join_path(path, "steps")));
    d.snapshot_every = static_cast<int>(integer_or(j, "snapshot_every", 1, path));
    if (j.contains("noise")) {
        const std::string np = join_path(path, "noise");
        const auto &n = j["noise"];
        reject_unknown(n, {"p", "basis", "mode"}, np);
        ProjectiveNoiseSpec spec;
        spec.p = as_number(require(n, "p", np), join_path(np, "p"));
        const std::string basis = n.contains("basis") ? as_string(n["basis"], join_path(np, "basis")) : "spin";
        if (basis == "spin") {
            spec.basis = ProjectionBasis::spin;
        } else if (basis == "site") {
            spec.basis = ProjectionBasis::site;
        } else {
            throw config_error(join_path(np, "basis") + ": expected spin or site");
        }
        const std::string mode = n.contains("mode") ? as_string(n["mode"], join_path(np, "mode")) : "walk_and_noise";
        if (mode == "noise_only") {
            d.mode = WalkNoiseMode::noise_only;
        } else if (mode == "walk_and_noise") {
            d.mode = WalkNoiseMode::walk_and_noise;
        } else {
            throw config_error(join_path(np, "mode") + ": expected noise_only or walk_and_noise");
        }
        d.noise = spec;
    }
    return d;
}

// 1-based line and column of a byte offset
inline std::pair<std::size_t, std::size_t> line_column(const std::string &text, std::size_t byte)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace detail

inline ScenarioConfig parse_scenario(const nlohmann::json &doc)
{
    detail::reject_unknown(doc, {"window", "kgrid", "state", "dynamics", "outputs", "tolerances", "description"}, "");
    ScenarioConfig cfg;
    cfg.source = doc;

    const auto &w = detail::require(doc, "window", "");
    detail::reject_unknown(w, {"n_min", "n_max", "a"}, "window");
    const long lo = detail::as_integer(detail::require(w, "n_min", "window"), "window.n_min");
    const long hi = detail::as_integer(detail::require(w, "n_max", "window"), "window.n_max");
    const double a = detail::number_or(w, "a", 1.0, "window");
    if (hi < lo) {
        throw config_error("window.n_max: must not be below window.n_min");
    }
    if (!(a > 0.0)) {
        throw config_error("window.a: lattice spacing must be positive");
    }
    cfg.window = LatticeWindow(lo, hi, a);

    const auto &g = detail::require(doc, "kgrid", "");
    detail::reject_unknown(g, {"n_k"}, "kgrid");
    const long nk = detail::as_integer(detail::require(g, "n_k", "kgrid"), "kgrid.n_k");
    if (nk < 1) {
        throw config_error("kgrid.n_k: must be positive");
    }
    cfg.n_k = static_cast<std::size_t>(nk);

    const auto &s = detail::require(doc, "state", "");
    detail::reject_unknown(s, {"name", "params"}, "state");
    cfg.state.name = detail::as_string(detail::require(s, "name", "state"), "state.name");
    if (s.contains("params")) {
        if (!s["params"].is_object()) {
            throw config_error("state.params: expected an object");
        }
        cfg.state.params = s["params"];
    }

    if (doc.contains("dynamics")) {
        const auto &d = doc["dynamics"];
        const std::string type = detail::as_string(detail::require(d, "type", "dynamics"), "dynamics.type");
        if (type == "none") {
            detail::reject_unknown(d, {"type"}, "dynamics");
            cfg.dynamics = NoDynamics{};
        } else if (type == "continuous") {
            cfg.dynamics = detail::parse_continuous(d, "dynamics");
        } else if (type == "walk") {
            cfg.dynamics = detail::parse_walk(d, "dynamics");
        } else {
            throw config_error("dynamics.type: expected none, continuous or walk");
        }
    }

    if (doc.contains("outputs")) {
        const auto &o = doc["outputs"];
        detail::reject_unknown(o, {"directory", "formats"}, "outputs");
        if (o.contains("directory")) {
            cfg.outputs.directory = detail::as_string(o["directory"], "outputs.directory");
        }
        if (o.contains("formats")) {
            if (!o["formats"].is_array()) {
                throw config_error("outputs.formats: expected a list of strings");
            }
            cfg.outputs.formats.clear();
            for (std::size_t i = 0; i < o["formats"].size(); ++i) {
                const std::string path = "outputs.formats[" + std::to_string(i) + "]";
                const std::string f = detail::as_string(o["formats"][i], path);
                if (f != "wigner" && f != "panels" && f != "marginals" && f != "negativity" && f != "sites") {
                    throw config_error(path + ": unknown format '" + f + "'");
                }
                cfg.outputs.formats.push_back(f);
            }
        }
    }

    if (doc.contains("tolerances")) {
        const auto &t = doc["tolerances"];
        detail::reject_unknown(t, {"boundary", "two_path"}, "tolerances");
        cfg.tolerances.boundary = detail::number_or(t, "boundary", cfg.tolerances.boundary, "tolerances");
        cfg.tolerances.two_path = detail::number_or(t, "two_path", cfg.tolerances.two_path, "tolerances");
    }
    return cfg;
}

inline ScenarioConfig parse_scenario_text(const std::string &text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw config_error("parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": "
                           + e.what());
    }
    return parse_scenario(doc);
}

inline ScenarioConfig load_scenario(const std::filesystem::path &file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw config_error("cannot open scenario file " + file.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_scenario_text(ss.str());
    } catch (const config_error &e) {
        throw config_error(file.string() + ": " + e.what());
    }
}

namespace detail
{

// Sites the initial state occupies, as [lo, hi]; Gaussians count +-6 sigma.
struct Footprint {
    double lo = 0.0, hi = 0.0;
    std::vector<Diagnostic> issues;
};

inline Footprint state_footprint(const ScenarioConfig &cfg)
{
    Footprint f;
    const auto &p = cfg.state.params;
    const auto &w = cfg.window;
    auto site_check = [&](const char *key, long fallback) {
        const long n = integer_or(p, key, fallback, "state.params");
        if (!w.contains(n)) {
            f.issues.push_back({Diagnostic::Severity::error, std::string("state.params.") + key,
                                "site " + std::to_string(n) + " lies outside the window"});
        }
        return static_cast<double>(n);
    };
    auto gaussian_check = [&](const char *key, long fallback, double sigma) {
        const double c = static_cast<double>(integer_or(p, key, fallback, "state.params"));
        if (c - 6.0 * sigma < static_cast<double>(w.n_min) || c + 6.0 * sigma > static_cast<double>(w.n_max)) {
            f.issues.push_back({Diagnostic::Severity::warning, std::string("state.params.") + key,
                                "Gaussian centre +- 6 sigma is not inside the window"});
        }
        return std::pair<double, double>(c - 6.0 * sigma, c + 6.0 * sigma);
    };
    const std::string &name = cfg.state.name;
    if (name == "delta") {
        f.lo = f.hi = site_check("site", 0);
    } else if (name == "double_delta" || name == "werner" || name == "cat") {
        const bool dd = name == "double_delta";
        const double x = site_check(dd ? "n1" : "a_site", 0), y = site_check(dd ? "n2" : "b_site", 1);
        f.lo = std::min(x, y);
        f.hi = std::max(x, y);
    } else if (name == "two_gaussian") {
        const double sigma = number_or(p, "sigma", 1.5, "state.params");
        const auto a = gaussian_check("a_center", 6, sigma), b = gaussian_check("b_center", -6, sigma);
        f.lo = std::min(a.first, b.first);
        f.hi = std::max(a.second, b.second);
    } else if (name == "gaussian") {
        const double sigma = number_or(p, "sigma", 1.0, "state.params");
        const auto a = gaussian_check("center", 0, sigma);
        f.lo = a.first;
        f.hi = a.second;
    } else {
        f.issues.push_back({Diagnostic::Severity::error, "state.name",
                            "unknown state '" + name + "' (delta, double_delta, two_gaussian, gaussian, werner, cat)"});
    }
    return f;
}

} // namespace detail

// Static checks only; nothing is executed.
inline std::vector<Diagnostic> validate(const ScenarioConfig &cfg)
{
    std::vector<Diagnostic> out;
    const auto need = KGrid::min_points_for_width(cfg.window.width());
    if (cfg.n_k < need) {
        out.push_back({Diagnostic::Severity::error, "kgrid.n_k",
                       "n_k = " + std::to_string(cfg.n_k) + " is below the exactness bound n_k >= 2W+1 = "
                           + std::to_string(need) + " for a window of W = " + std::to_string(cfg.window.width())
                           + " sites"});
    }
    detail::Footprint fp;
    try {
        fp = detail::state_footprint(cfg);
    } catch (const config_error &e) {
        out.push_back({Diagnostic::Severity::error, "state.params", e.what()});
        return out;
    }
    out.insert(out.end(), fp.issues.begin(), fp.issues.end());

    if (const auto *c = std::get_if<ContinuousDynamics>(&cfg.dynamics)) {
        double prev = 0.0;
        for (std::size_t i = 0; i < c->times.size(); ++i) {
            if (!(c->times[i] >= prev)) {
                out.push_back({Diagnostic::Severity::error, "dynamics.times[" + std::to_string(i) + "]",
                               "times must be non-negative and sorted ascending"});
                break;
            }
            prev = c->times[i];
        }
        const double t_max = c->times.empty() ? 0.0 : *std::max_element(c->times.begin(), c->times.end());
        const double jj = std::abs(c->hamiltonian.j_hop);
        // largest excursion in sites the propagator kernel can produce
        double reach = 0.0;
        const bool closed = c->method == ContinuousMethod::closed_form || c->method == ContinuousMethod::both;
        if (const auto *lin = std::get_if<LinearPotential>(&c->hamiltonian.potential)) {
            const double la = lin->slope * cfg.window.a;
            if (la == 0.0) {
                out.push_back({Diagnostic::Severity::error, "dynamics.hamiltonian.potential.lambda",
                               "lambda must be non-zero"});
            } else {
                reach = 4.0 * jj / std::abs(la);
            }
        } else if (std::holds_alternative<NoPotential>(c->hamiltonian.potential)) {
            reach = 2.0 * jj * t_max;
        } else if (closed) {
            out.push_back({Diagnostic::Severity::error, "dynamics.method",
                           "closed_form needs a linear potential or none; use rk4 or wigner_rk4"});
        }
        if (reach > 0.0
            && (fp.lo - reach < static_cast<double>(cfg.window.n_min)
                || fp.hi + reach > static_cast<double>(cfg.window.n_max))) {
            out.push_back({Diagnostic::Severity::warning, "window",
                           "state footprint plus the Bessel kernel reach (" + std::to_string(reach)
                               + " sites) does not fit inside the window"});
        }
        if (closed && !c->noise.lindblad_ops.empty()) {
            for (std::size_t i = 0; i < c->noise_names.size(); ++i) {
                const std::string &nm = c->noise_names[i];
                if (nm != "sigma_z" && nm != "sigma_x") {
                    out.push_back({Diagnostic::Severity::error, "dynamics.noise[" + std::to_string(i) + "].op",
                                   "closed_form supports only sigma_z or sigma_x channels"});
                }
            }
            if (c->noise.lindblad_ops.size() > 1) {
                out.push_back({Diagnostic::Severity::error, "dynamics.noise",
                               "closed_form supports a single channel"});
            } else if (c->noise_names.size() == 1 && c->noise_names[0] == "sigma_x" && c->hamiltonian.spin_coupled) {
                out.push_back({Diagnostic::Severity::warning, "dynamics.noise[0].op",
                               "sigma_x closed form with a spin-coupled Hamiltonian: generators do not commute"});
            }
        }
        if (c->method == ContinuousMethod::wigner_rk4 && !c->noise.lindblad_ops.empty()) {
            out.push_back({Diagnostic::Severity::error, "dynamics.method", "wigner_rk4 does not support noise"});
        }
        if (c->dt) {
            const double est = detail::norm_estimate(c->hamiltonian, cfg.window, c->noise);
            if (!(*c->dt > 0.0) || *c->dt * 2.0 * est > 2.5) {
                out.push_back({Diagnostic::Severity::error, "dynamics.dt", "step outside the RK4 stability bound"});
            }
        }
    } else if (const auto *wk = std::get_if<WalkDynamics>(&cfg.dynamics)) {
        if (!(wk->coin.theta >= 0.0 && wk->coin.theta <= 0.5 * pi)) {
            out.push_back({Diagnostic::Severity::error, "dynamics.theta", "theta must lie in [0, pi/2]"});
        }
        if (wk->steps < 0) {
            out.push_back({Diagnostic::Severity::error, "dynamics.steps", "steps must be non-negative"});
        }
        if (wk->snapshot_every < 1) {
            out.push_back({Diagnostic::Severity::error, "dynamics.snapshot_every", "must be at least 1"});
        }
        if (wk->noise && !(wk->noise->p >= 0.0 && wk->noise->p <= 1.0)) {
            out.push_back({Diagnostic::Severity::error, "dynamics.noise.p", "p must lie in [0, 1]"});
        }
        const bool walking = !(wk->noise && wk->mode == WalkNoiseMode::noise_only);
        if (walking && (fp.lo - wk->steps - 1 < static_cast<double>(cfg.window.n_min)
                        || fp.hi + wk->steps + 1 > static_cast<double>(cfg.window.n_max))) {
            out.push_back({Diagnostic::Severity::warning, "window",
                           "the walker can reach the window edge within the requested steps"});
        }
    }
    return out;
}

inline bool has_errors(const std::vector<Diagnostic> &d)
{
    return std::any_of(d.begin(), d.end(), [](const Diagnostic &x) { return x.severity == Diagnostic::Severity::error; });
}

// Builds the initial density operator named in the config.
inline DensityOperator build_state(const ScenarioConfig &cfg)
{
    const auto &p = cfg.state.params;
    const auto &w = cfg.window;
    const std::string pp = "state.params";
    auto cplx = [&](const char *key, complex fallback) {
        return p.contains(key) ? detail::as_complex(p[key], pp + "." + key) : fallback;
    };
    auto spinor = [&](const char *key, SpinVector fallback) {
        return p.contains(key) ? detail::as_spinor(p[key], pp + "." + key) : fallback;
    };
    try {
        const std::string &name = cfg.state.name;
        if (name == "delta") {
            detail::reject_unknown(p, {"site", "spin"}, pp);
            const long n = detail::integer_or(p, "site", 0, pp);
            if (!w.contains(n)) {
                throw config_error(pp + ".site: outside the window");
            }
            const SpinVector s = spinor("spin", SpinVector(1.0, 0.0));
            if (!(s.norm() > 0.0)) {
                throw config_error(pp + ".spin: zero spinor");
            }
            PureState psi(w);
            psi(n, 0) = s[0] / s.norm();
            psi(n, 1) = s[1] / s.norm();
            return density_from_pure(psi);
        }
        if (name == "double_delta") {
            detail::reject_unknown(p, {"n1", "n2", "alpha"}, pp);
            return density_from_pure(double_delta_state(
                {detail::integer_or(p, "n1", 0, pp), detail::integer_or(p, "n2", 1, pp), cplx("alpha", 1.0)}, w));
        }
        if (name == "two_gaussian") {
            detail::reject_unknown(p, {"a_center", "b_center", "sigma"}, pp);
            return density_from_pure(two_gaussian_state({detail::integer_or(p, "a_center", 6, pp),
                                                         detail::integer_or(p, "b_center", -6, pp),
                                                         detail::number_or(p, "sigma", 1.5, pp)},
                                                        w));
        }
        if (name == "gaussian") {
            detail::reject_unknown(p, {"center", "sigma", "spin"}, pp);
            return density_from_pure(product_gaussian_state({detail::integer_or(p, "center", 0, pp),
                                                             detail::number_or(p, "sigma", 1.0, pp),
                                                             spinor("spin", SpinVector(1.0, 0.0))},
                                                            w));
        }
        if (name == "werner") {
            detail::reject_unknown(p, {"a_site", "b_site", "z"}, pp);
            return werner_density({detail::integer_or(p, "a_site", 0, pp), detail::integer_or(p, "b_site", 1, pp),
                                   detail::number_or(p, "z", 1.0, pp)},
                                  w);
        }
        if (name == "cat") {
            detail::reject_unknown(p, {"a_site", "b_site", "beta", "spin1", "spin2"}, pp);
            return density_from_pure(cat_state({detail::integer_or(p, "a_site", 0, pp),
                                                detail::integer_or(p, "b_site", 1, pp), cplx("beta", 1.0),
                                                spinor("spin1", SpinVector(1.0, 0.0)),
                                                spinor("spin2", SpinVector(0.0, 1.0))},
                                               w));
        }
        throw config_error("state.name: unknown state '" + name + "'");
    } catch (const domain_error &e) {
        throw config_error(std::string("state: ") + e.what());
    }
}

enum class RunMode { state, evolve, walk, negativity };

struct RunManifest {
    nlohmann::json json;
    std::vector<std::string> files;
    std::vector<Diagnostic> diagnostics;
    bool invariant_violated = false;
    std::string violation;
};

namespace detail
{

struct Trajectory {
    std::vector<double> times;
    std::vector<WignerMatrix> snapshots;
    std::vector<std::optional<DensityOperator>> states; // for site distributions when available
    bool timed = false;
    std::string time_label = "t";
    double boundary_leak = 0.0;
    std::optional<double> two_path_deviation;
};

inline Trajectory run_continuous(const ScenarioConfig &cfg, const ContinuousDynamics &c, const DensityOperator &rho0,
                                 const KGrid &grid)
{
    Trajectory tr;
    tr.timed = true;
    tr.times = c.times;
    const WignerMatrix w0 = wigner_of_density(rho0, grid);
    RK4Options opt{c.dt, cfg.tolerances.boundary};

    auto closed_form = [&](double t) {
        const auto &h = c.hamiltonian;
        WignerMatrix wt = w0;
        if (const auto *lin = std::get_if<LinearPotential>(&h.potential)) {
            const double la = lin->slope * cfg.window.a;
            wt = h.spin_coupled ? spin_linear_propagate(w0, h.j_hop, la, t, cfg.tolerances.boundary)
                                : linear_potential_propagate(w0, h.j_hop, la, t, cfg.tolerances.boundary);
        } else if (std::holds_alternative<NoPotential>(h.potential)) {
            wt = hopping_propagate(w0, h.j_hop, t, cfg.tolerances.boundary);
        } else {
            throw config_error("dynamics.method: closed_form needs a linear potential or none");
        }
        if (!c.noise.lindblad_ops.empty()) {
            const auto ch = c.noise_names.at(0) == "sigma_z" ? LindbladChannel::sigma_z : LindbladChannel::sigma_x;
            wt = lindblad_wigner_closed(wt, ch, c.noise.lindblad_ops[0].gamma, t);
        }
        return wt;
    };

    std::vector<WignerMatrix> rk_snaps;
    if (c.method == ContinuousMethod::rk4 || c.method == ContinuousMethod::both) {
        const auto res = c.noise.lindblad_ops.empty() ? von_neumann_rk4(rho0, c.hamiltonian, c.times, opt)
                                                      : lindblad_rk4(rho0, c.hamiltonian, c.noise, c.times, opt);
        tr.boundary_leak = std::max(tr.boundary_leak, res.boundary_leak);
        for (const auto &s : res.snapshots) {
            rk_snaps.push_back(wigner_of_density(s, grid));
            tr.states.emplace_back(s);
        }
    }
    if (c.method == ContinuousMethod::wigner_rk4) {
        const auto res = wigner_rk4(w0, c.hamiltonian, c.times, opt);
        tr.boundary_leak = std::max(tr.boundary_leak, res.boundary_leak);
        tr.snapshots = res.snapshots;
        tr.states.assign(tr.snapshots.size(), std::nullopt);
        return tr;
    }
    if (c.method == ContinuousMethod::rk4) {
        tr.snapshots = std::move(rk_snaps);
        return tr;
    }
    for (double t : c.times) {
        tr.snapshots.push_back(closed_form(t));
    }
    tr.boundary_leak = std::max(tr.boundary_leak, wigner_boundary_population(tr.snapshots.back()));
    if (c.method == ContinuousMethod::both) {
        double dev = 0.0;
        for (std::size_t i = 0; i < rk_snaps.size(); ++i) {
            dev = std::max(dev, max_abs_difference(rk_snaps[i], tr.snapshots[i]));
        }
        tr.two_path_deviation = dev;
    } else {
        tr.states.assign(tr.snapshots.size(), std::nullopt);
    }
    return tr;
}

inline Trajectory run_walk(const WalkDynamics &wk, const DensityOperator &rho0, const KGrid &grid)
{
    Trajectory tr;
    tr.timed = true;
    tr.time_label = "step";
    const bool noise_only = wk.noise && wk.mode == WalkNoiseMode::noise_only;
    DensityOperator rho = rho0;
    WignerMatrix w = wigner_of_density(rho0, grid);
    auto record = [&](int step) {
        tr.times.push_back(step);
        tr.snapshots.push_back(w);
        tr.states.emplace_back(rho);
    };
    record(0);
    for (int s = 1; s <= wk.steps; ++s) {
        if (wk.noise) {
            if (!noise_only) {
                rho = qw_step_state(rho, wk.coin);
            }
            rho = projective_map(rho, *wk.noise);
            w = wigner_of_density(rho, grid);
        } else {
            // Wigner-space recursion; the state path is kept for site distributions
            w = qw_step_wigner(w, wk.coin);
            rho = qw_step_state(rho, wk.coin);
        }
        tr.boundary_leak = std::max(tr.boundary_leak, rho.boundary_population());
        if (s % wk.snapshot_every == 0 || s == wk.steps) {
            record(s);
        }
    }
    return tr;
}

inline std::string snapshot_name(const std::string &prefix, std::size_t index, const std::string &ext)
{
    std::ostringstream ss;
    ss << prefix << '_' << std::setw(3) << std::setfill('0') << index << ext;
    return ss.str();
}

class OutputSink
{
public:
    explicit OutputSink(std::filesystem::path dir) : m_dir(std::move(dir))
    {
        std::error_code ec;
        std::filesystem::create_directories(m_dir, ec);
        if (ec || !std::filesystem::is_directory(m_dir)) {
            throw config_error("outputs.directory: cannot create " + m_dir.string());
        }
    }

    std::ofstream open(const std::string &name)
    {
        std::ofstream out(m_dir / name, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw config_error("outputs.directory: cannot write " + (m_dir / name).string());
        }
        m_files.push_back(name);
        return out;
    }

    const std::vector<std::string> &files() const noexcept
    {
        return m_files;
    }
    const std::filesystem::path &dir() const noexcept
    {
        return m_dir;
    }

private:
    std::filesystem::path m_dir;
    std::vector<std::string> m_files;
};

inline void write_panels(OutputSink &sink, const WignerMatrix &w, std::size_t idx)
{
    struct Panel {
        const char *name;
        int a, b;
        bool imag;
    };
    const Panel panels[] = {{"W00", 0, 0, false}, {"reW01", 0, 1, false}, {"imW01", 0, 1, true}, {"W11", 1, 1, false}};
    for (const auto &p : panels) {
        auto out = sink.open(snapshot_name(std::string("panel_") + p.name, idx, ".csv"));
        out << "m,k,value\n";
        for (long m = w.m_min(); m <= w.m_max(); ++m) {
            const auto r = w.row(m);
            for (std::size_t j = 0; j < r.size(); ++j) {
                const complex v = r[j](p.a, p.b);
                out << m << ',' << format_double(w.kgrid().point(j)) << ',' << format_double(p.imag ? v.imag() : v.real())
                    << '\n';
            }
        }
    }
}

inline nlohmann::json diagnostics_json(const std::vector<Diagnostic> &d)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto &x : d) {
        out.push_back({{"severity", x.severity_name()}, {"field", x.field}, {"message", x.message}});
    }
    return out;
}

} // namespace detail

// Executes a scenario and writes every output into out_dir.
inline RunManifest run(const ScenarioConfig &cfg, RunMode mode, const std::filesystem::path &out_dir)
{
    const auto started = std::chrono::steady_clock::now();
    RunManifest man;
    man.diagnostics = validate(cfg);
    if (has_errors(man.diagnostics)) {
        std::string msg;
        for (const auto &d : man.diagnostics) {
            if (d.severity == Diagnostic::Severity::error) {
                msg += (msg.empty() ? "" : "; ") + d.field + ": " + d.message;
            }
        }
        throw config_error(msg);
    }
    if (mode == RunMode::evolve && !std::holds_alternative<ContinuousDynamics>(cfg.dynamics)) {
        throw config_error("dynamics.type: the evolve command needs continuous dynamics");
    }
    if (mode == RunMode::walk && !std::holds_alternative<WalkDynamics>(cfg.dynamics)) {
        throw config_error("dynamics.type: the walk command needs walk dynamics");
    }

    const KGrid grid(cfg.n_k);
    const DensityOperator rho0 = build_state(cfg);

    detail::Trajectory tr;
    if (mode == RunMode::state || std::holds_alternative<NoDynamics>(cfg.dynamics)) {
        tr.times = {0.0};
        tr.snapshots = {wigner_of_density(rho0, grid)};
        tr.states = {rho0};
    } else if (const auto *c = std::get_if<ContinuousDynamics>(&cfg.dynamics)) {
        try {
            tr = detail::run_continuous(cfg, *c, rho0, grid);
        } catch (const domain_error &e) {
            throw config_error(std::string("dynamics: ") + e.what());
        }
    } else {
        try {
            tr = detail::run_walk(std::get<WalkDynamics>(cfg.dynamics), rho0, grid);
        } catch (const boundary_leak_error &) {
            throw;
        } catch (const domain_error &e) {
            throw config_error(std::string("dynamics: ") + e.what());
        }
    }

    detail::OutputSink sink(out_dir);
    const bool only_negativity = mode == RunMode::negativity;
    nlohmann::json snapshots = nlohmann::json::array();
    for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
        nlohmann::json entry = {{tr.time_label, tr.times[i]}};
        if (!only_negativity && cfg.outputs.wants("wigner")) {
            const std::string name = detail::snapshot_name("wigner", i, ".csv");
            auto out = sink.open(name);
            if (tr.timed) {
                write_wigner_csv(out, tr.snapshots[i], tr.times[i]);
            } else {
                write_wigner_csv(out, tr.snapshots[i]);
            }
            entry["wigner"] = name;
        }
        if (!only_negativity && cfg.outputs.wants("panels")) {
            detail::write_panels(sink, tr.snapshots[i], i);
        }
        snapshots.push_back(entry);
    }
    if (!only_negativity && cfg.outputs.wants("wigner")) {
        auto out = sink.open("wigner.json");
        out << wigner_sidecar(tr.snapshots.front(), {{"state", cfg.source.at("state")}, {"generator", "latwig"}})
                   .dump(2)
            << '\n';
    }

    if (!only_negativity && cfg.outputs.wants("marginals")) {
        auto pos = sink.open("marginal_position.csv");
        pos << tr.time_label << ",n,p00,p11,re01,im01\n";
        auto mom = sink.open("marginal_momentum.csv");
        mom << tr.time_label << ",k,re00,im00,re01,im01,re10,im10,re11,im11\n";
        for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
            const std::string t = format_double(tr.times[i]);
            const PositionMarginal pm = marginal_position(tr.snapshots[i]);
            for (long n = cfg.window.n_min; n <= cfg.window.n_max; ++n) {
                const SpinMatrix &b = pm.at(n);
                pos << t << ',' << n << ',' << format_double(b(0, 0).real()) << ',' << format_double(b(1, 1).real())
                    << ',' << format_double(b(0, 1).real()) << ',' << format_double(b(0, 1).imag()) << '\n';
            }
            const auto mm = marginal_momentum(tr.snapshots[i]);
            for (std::size_t j = 0; j < mm.size(); ++j) {
                mom << t << ',' << format_double(grid.point(j));
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b) {
                        mom << ',' << format_double(mm[j](a, b).real()) << ',' << format_double(mm[j](a, b).imag());
                    }
                }
                mom << '\n';
            }
        }
    }

    if (!only_negativity && cfg.outputs.wants("sites")) {
        for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
            auto out = sink.open(detail::snapshot_name("sites", i, ".csv"));
            out << "n,p0,p1,p\n";
            const PositionMarginal pm = marginal_position(tr.snapshots[i]);
            for (long n = cfg.window.n_min; n <= cfg.window.n_max; ++n) {
                const double p0 = pm.at(n)(0, 0).real(), p1 = pm.at(n)(1, 1).real();
                out << n << ',' << format_double(p0) << ',' << format_double(p1) << ',' << format_double(p0 + p1)
                    << '\n';
            }
        }
    }

    if (only_negativity || cfg.outputs.wants("negativity")) {
        nlohmann::json entries = nlohmann::json::array();
        std::vector<WignerMatrix> snaps = tr.snapshots;
        const auto series = negativity_timeseries(tr.times, snaps);
        for (std::size_t i = 0; i < snaps.size(); ++i) {
            const NegativityReport rep = matrix_negativity(snaps[i]);
            nlohmann::json per_m = nlohmann::json::array();
            for (const auto &[m, v] : rep.per_m) {
                per_m.push_back({m, v});
            }
            entries.push_back({{tr.time_label, tr.times[i]}, {"eta", rep.eta}, {"per_m", per_m}});
        }
        auto js = sink.open("negativity.json");
        js << nlohmann::json{{"eta", entries.back()["eta"]},
                             {"snapshots", entries},
                             {"params", {{"n_k", cfg.n_k}, {"state", cfg.source.at("state")}}}}
                  .dump(2)
           << '\n';
        auto csv = sink.open("negativity.csv");
        csv << tr.time_label << ",eta\n";
        for (const auto &[t, eta] : series) {
            csv << format_double(t) << ',' << format_double(eta) << '\n';
        }
    }

    nlohmann::json diag = {{"boundary_leak", tr.boundary_leak}, {"messages", detail::diagnostics_json(man.diagnostics)}};
    if (tr.two_path_deviation) {
        diag["max_two_path_deviation"] = *tr.two_path_deviation;
        if (*tr.two_path_deviation > cfg.tolerances.two_path) {
            man.invariant_violated = true;
            man.violation = "two-path deviation " + std::to_string(*tr.two_path_deviation) + " exceeds tolerance "
                            + std::to_string(cfg.tolerances.two_path);
        }
    }
    for (const auto &snap : tr.snapshots) {
        if (snap.hermiticity_defect() > 1e-10 || std::abs(snap.normalization() - 1.0) > 1e-8) {
            man.invariant_violated = true;
            man.violation = "Wigner matrix lost hermiticity or normalisation";
        }
    }
    if (man.invariant_violated) {
        diag["violation"] = man.violation;
    }

    man.files = sink.files();
    man.files.push_back("manifest.json");
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    man.json = {{"config", cfg.source},
                {"versions",
                 {{"latwig", latwig_version},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "."
                                + std::to_string(EIGEN_MINOR_VERSION)},
                  {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "."
                                        + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "."
                                        + std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
                {"snapshots", snapshots},
                {"files", man.files},
                {"diagnostics", diag},
                {"wall_clock_seconds", seconds}};
    {
        std::ofstream out(sink.dir() / "manifest.json", std::ios::binary | std::ios::trunc);
        if (!out) {
            throw config_error("outputs.directory: cannot write manifest.json");
        }
        out << man.json.dump(2) << '\n';
    }
    return man;
}

} // namespace latwig

#endif
