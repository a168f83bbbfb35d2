#pragma once

// JSON experiment configs in, JSON reports and CSV tables out.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "capillary_lab/capillary.hpp"
#include "capillary_lab/convexbody.hpp"
#include "capillary_lab/hypersurface.hpp"
#include "capillary_lab/surfaces.hpp"

#ifndef CAPILLARY_LAB_VERSION
#define CAPILLARY_LAB_VERSION "0.0.0"
#endif

namespace capillary_lab::cli {

using json = nlohmann::json;

inline constexpr const char* kVersion = CAPILLARY_LAB_VERSION;
inline constexpr const char* kOrderEnv = "CAPILLARY_LAB_ORDER";

enum class Command { cap_stability, variation_check, tube_poly, convex_check, steiner, quotient_scan, sweep };

inline const std::map<std::string, Command>& command_names()
{
    static const std::map<std::string, Command> m = {
        {"cap-stability", Command::cap_stability}, {"variation-check", Command::variation_check},
        {"tube-poly", Command::tube_poly},         {"convex-check", Command::convex_check},
        {"steiner", Command::steiner},             {"quotient-scan", Command::quotient_scan},
        {"sweep", Command::sweep}};
    return m;
}

inline std::string to_string(Command c)
{
    for (const auto& [name, value] : command_names())
        if (value == c) return name;
    return "unknown";
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

struct SurfaceConfig {
    std::string kind;
    int n = 2;
    json params = json::object();  // validated numeric fields by name
    std::optional<std::pair<double, double>> theta_range;
    int steps = 0;

    bool has(const std::string& k) const { return params.contains(k); }
    double get(const std::string& k) const { return params.at(k).get<double>(); }
    double get(const std::string& k, double fallback) const { return has(k) ? get(k) : fallback; }
};

struct BodyConfig {
    std::string kind;
    int n = 2;
    json params = json::object();
    std::vector<std::vector<double>> vertices;
    int count = 0;

    double get(const std::string& k, double fallback) const
    {
        return params.contains(k) ? params.at(k).get<double>() : fallback;
    }
};

struct ExperimentConfig {
    Command command = Command::cap_stability;
    std::optional<SurfaceConfig> surface;
    std::optional<BodyConfig> body;
    std::optional<int> quadrature_order;  // unset: environment or default
    double fd_step = 1e-3;
    std::uint64_t seed = 0;
    std::optional<std::string> output_path;
    std::vector<double> t_grid;
};

namespace detail {

/// Strict view of one JSON object: unknown keys and non-finite numbers are
/// rejected with the field path in the message.
class Fields {
public:
    Fields(const json& obj, std::string path, std::set<std::string> allowed)
        : obj_(obj), path_(std::move(path))
    {
        if (!obj_.is_object()) throw ParseError(path_ + ": expected an object");
        for (const auto& [k, v] : obj_.items()) {
            if (!allowed.count(k)) throw ParseError(path_ + "." + k + ": unknown field");
        }
    }

    bool has(const std::string& k) const { return obj_.contains(k); }
    std::string field(const std::string& k) const { return path_ + "." + k; }

    double number(const std::string& k) const
    {
        const auto& v = obj_.at(k);
        if (!v.is_number()) throw ParseError(field(k) + ": expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ParseError(field(k) + ": must be finite");
        return d;
    }

    std::int64_t integer(const std::string& k) const
    {
        const auto& v = obj_.at(k);
        if (!v.is_number_integer()) throw ParseError(field(k) + ": expected an integer");
        return v.get<std::int64_t>();
    }

    std::string string(const std::string& k) const
    {
        const auto& v = obj_.at(k);
        if (!v.is_string()) throw ParseError(field(k) + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& k) const
    {
        const auto& v = obj_.at(k);
        if (!v.is_array()) throw ParseError(field(k) + ": expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
                throw ParseError(field(k) + "[" + std::to_string(i) + "]: expected a finite number");
            }
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    std::string require_string(const std::string& k) const
    {
        if (!has(k)) throw ParseError(field(k) + ": missing");
        return string(k);
    }

private:
    const json& obj_;
    std::string path_;
};

inline const std::map<std::string, std::set<std::string>>& surface_fields()
{
    static const std::map<std::string, std::set<std::string>> m = {
        {"cap_halfspace", {"kind", "n", "R", "theta", "steps"}},
        {"bridge_wedge", {"kind", "n", "R", "alpha", "theta", "theta1", "theta2", "tilt", "steps"}},
        {"spheroid_cap", {"kind", "a", "c", "cut"}},
        {"sphere", {"kind", "n", "R"}},
        {"torus", {"kind", "major", "minor"}},
        {"ellipsoid", {"kind", "a", "b", "c"}}};
    return m;
}

inline const std::map<std::string, std::set<std::string>>& body_fields()
{
    static const std::map<std::string, std::set<std::string>> m = {
        {"square", {"kind", "side"}},
        {"cube", {"kind", "side"}},
        {"polygon", {"kind", "vertices"}},
        {"polyhedron", {"kind", "vertices"}},
        {"ball", {"kind", "n", "radius"}},
        {"ellipse", {"kind", "a", "b"}},
        {"ellipsoid", {"kind", "a", "b", "c"}},
        {"random_polygons", {"kind", "count"}},
        {"random_polyhedra", {"kind", "count"}}};
    return m;
}

inline SurfaceConfig parse_surface(const json& j)
{
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
        throw ParseError("config.surface.kind: missing or not a string");
    }
    const std::string kind = j.at("kind").get<std::string>();
    const auto it = surface_fields().find(kind);
    if (it == surface_fields().end()) throw ParseError("config.surface.kind: unknown kind '" + kind + "'");
    Fields f(j, "config.surface", it->second);
    SurfaceConfig s;
    s.kind = kind;
    if (f.has("n")) {
        s.n = static_cast<int>(f.integer("n"));
        if (s.n != 2 && s.n != 3) throw ParseError("config.surface.n: must be 2 or 3");
    }
    if (f.has("steps")) {
        s.steps = static_cast<int>(f.integer("steps"));
        if (s.steps < 1) throw ParseError("config.surface.steps: must be positive");
    }
    for (const auto& [k, v] : j.items()) {
        if (k == "kind" || k == "n" || k == "steps") continue;
        if (k == "theta" && v.is_array()) {
            const auto r = f.numbers("theta");
            if (r.size() != 2) throw ParseError("config.surface.theta: range must have two entries");
            s.theta_range = std::make_pair(r[0], r[1]);
            continue;
        }
        s.params[k] = f.number(k);
    }
    return s;
}

inline BodyConfig parse_body(const json& j)
{
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
        throw ParseError("config.body.kind: missing or not a string");
    }
    const std::string kind = j.at("kind").get<std::string>();
    const auto it = body_fields().find(kind);
    if (it == body_fields().end()) throw ParseError("config.body.kind: unknown kind '" + kind + "'");
    Fields f(j, "config.body", it->second);
    BodyConfig b;
    b.kind = kind;
    b.n = (kind == "cube" || kind == "polyhedron" || kind == "ellipsoid" || kind == "random_polyhedra") ? 3 : 2;
    if (f.has("n")) {
        b.n = static_cast<int>(f.integer("n"));
        if (b.n != 2 && b.n != 3) throw ParseError("config.body.n: must be 2 or 3");
    }
    if (f.has("count")) {
        b.count = static_cast<int>(f.integer("count"));
        if (b.count < 1) throw ParseError("config.body.count: must be positive");
    }
    if (f.has("vertices")) {
        const auto& v = j.at("vertices");
        if (!v.is_array()) throw ParseError("config.body.vertices: expected an array");
        const std::size_t dim = kind == "polygon" ? 2 : 3;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string where = "config.body.vertices[" + std::to_string(i) + "]";
            if (!v[i].is_array() || v[i].size() != dim) {
                throw ParseError(where + ": expected " + std::to_string(dim) + " coordinates");
            }
            std::vector<double> p;
            for (const auto& x : v[i]) {
                if (!x.is_number() || !std::isfinite(x.get<double>())) {
                    throw ParseError(where + ": coordinates must be finite numbers");
                }
                p.push_back(x.get<double>());
            }
            b.vertices.push_back(p);
        }
    }
    for (const auto& [k, v] : j.items()) {
        if (k == "kind" || k == "n" || k == "count" || k == "vertices") continue;
        b.params[k] = f.number(k);
    }
    return b;
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') ++line, col = 1;
        else ++col;
    }
    return {line, col};
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j)
{
    detail::Fields f(j, "config",
                     {"command", "surface", "body", "quadrature_order", "fd_step", "seed",
                      "output_path", "t_grid"});
    ExperimentConfig c;
    const std::string name = f.require_string("command");
    const auto it = command_names().find(name);
    if (it == command_names().end()) throw ParseError("config.command: unknown command '" + name + "'");
    c.command = it->second;
    if (f.has("surface")) c.surface = detail::parse_surface(j.at("surface"));
    if (f.has("body")) c.body = detail::parse_body(j.at("body"));
    if (f.has("quadrature_order")) {
        const auto o = f.integer("quadrature_order");
        if (o < 2 || o > 512) throw ParseError("config.quadrature_order: must lie in 2..512");
        c.quadrature_order = static_cast<int>(o);
    }
    if (f.has("fd_step")) {
        c.fd_step = f.number("fd_step");
        if (!(c.fd_step > 0.0)) throw ParseError("config.fd_step: must be positive");
    }
    if (f.has("seed")) {
        const auto s = f.integer("seed");
        if (s < 0) throw ParseError("config.seed: must be nonnegative");
        c.seed = static_cast<std::uint64_t>(s);
    }
    if (f.has("output_path")) c.output_path = f.string("output_path");
    if (f.has("t_grid")) c.t_grid = f.numbers("t_grid");

    const bool needs_surface = c.command == Command::cap_stability || c.command == Command::variation_check ||
                               c.command == Command::tube_poly || c.command == Command::sweep;
    if (needs_surface && !c.surface) throw ParseError("config.surface: required for " + name);
    if (!needs_surface && !c.body) throw ParseError("config.body: required for " + name);
    if (c.command == Command::sweep && (!c.surface->theta_range || c.surface->steps < 1)) {
        throw ParseError("config.surface: sweep needs theta: [lo, hi] and steps");
    }
    return c;
}

inline ExperimentConfig parse_config_text(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
        std::ostringstream os;
        os << "config: malformed JSON at line " << line << ", column " << col;
        throw ParseError(os.str());
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("config: cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Command-line flag, then config, then environment, then the default.
inline int resolve_order(std::optional<int> flag, const ExperimentConfig& c, const char* env_value)
{
    if (flag) return *flag;
    if (c.quadrature_order) return *c.quadrature_order;
    if (env_value && *env_value) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(env_value, &used);
            if (used == std::string(env_value).size() && v >= 2 && v <= 512) return v;
        } catch (const std::exception&) {
        }
        throw ParseError(std::string(kOrderEnv) + ": expected an integer in 2..512");
    }
    return num::kDefaultOrder;
}

inline json surface_to_json(const SurfaceConfig& s)
{
    json j = s.params;
    j["kind"] = s.kind;
    if (s.kind != "spheroid_cap" && s.kind != "torus" && s.kind != "ellipsoid") j["n"] = s.n;
    if (s.theta_range) j["theta"] = {s.theta_range->first, s.theta_range->second};
    if (s.steps > 0) j["steps"] = s.steps;
    return j;
}

inline json body_to_json(const BodyConfig& b)
{
    json j = b.params;
    j["kind"] = b.kind;
    j["n"] = b.n;
    if (!b.vertices.empty()) j["vertices"] = b.vertices;
    if (b.count > 0) j["count"] = b.count;
    return j;
}

/// Effective configuration as echoed in reports.
inline json config_to_json(const ExperimentConfig& c, int order)
{
    json j;
    j["command"] = to_string(c.command);
    if (c.surface) j["surface"] = surface_to_json(*c.surface);
    if (c.body) j["body"] = body_to_json(*c.body);
    j["quadrature_order"] = order;
    j["fd_step"] = c.fd_step;
    j["seed"] = c.seed;
    if (c.output_path) j["output_path"] = *c.output_path;
    if (!c.t_grid.empty()) j["t_grid"] = c.t_grid;
    return j;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// A reported number with the tolerance it was checked against (if any).
struct Quantity {
    double value = 0.0;
    std::optional<double> tolerance;
    std::optional<bool> pass;

    bool operator==(const Quantity&) const = default;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;  // numbers, strings or null

    bool operator==(const Table&) const = default;
};

struct Report {
    std::string tool = "capillary-lab";
    std::string version = kVersion;
    std::string status = "ok";  // ok | hypothesis_failure | error
    std::optional<std::string> error;
    json config = json::object();
    json tolerances = json::object();
    std::map<std::string, Quantity> results;
    std::optional<std::string> verdict;
    std::vector<std::string> warnings;
    json details = json::object();
    Table table;
    double wall_clock_seconds = 0.0;
    int exit_code = 0;

    void put(const std::string& name, double value, std::optional<double> tol = std::nullopt,
             std::optional<bool> pass = std::nullopt)
    {
        results[name] = Quantity{value, tol, pass};
    }

    /// |value − expected| ≤ tol.
    void check(const std::string& name, double value, double expected, double tol)
    {
        put(name, value, tol, std::abs(value - expected) <= tol);
    }
};

inline void to_json(json& j, const Quantity& q)
{
    j = json{{"value", q.value}};
    j["tolerance"] = q.tolerance ? json(*q.tolerance) : json(nullptr);
    if (q.pass) j["pass"] = *q.pass;
}

inline void from_json(const json& j, Quantity& q)
{
    q.value = j.at("value").get<double>();
    q.tolerance = j.at("tolerance").is_null() ? std::nullopt : std::optional<double>(j.at("tolerance").get<double>());
    q.pass = j.contains("pass") ? std::optional<bool>(j.at("pass").get<bool>()) : std::nullopt;
}

inline void to_json(json& j, const Table& t) { j = json{{"columns", t.columns}, {"rows", t.rows}}; }

inline void from_json(const json& j, Table& t)
{
    t.columns = j.at("columns").get<std::vector<std::string>>();
    t.rows = j.at("rows").get<std::vector<std::vector<json>>>();
}

inline void to_json(json& j, const Report& r)
{
    j = json{{"tool", r.tool},
             {"version", r.version},
             {"status", r.status},
             {"exit_code", r.exit_code},
             {"config", r.config},
             {"tolerances", r.tolerances},
             {"results", r.results},
             {"warnings", r.warnings},
             {"details", r.details},
             {"table", r.table},
             {"wall_clock_seconds", r.wall_clock_seconds}};
    j["error"] = r.error ? json(*r.error) : json(nullptr);
    j["verdict"] = r.verdict ? json(*r.verdict) : json(nullptr);
}

inline void from_json(const json& j, Report& r)
{
    r.tool = j.at("tool").get<std::string>();
    r.version = j.at("version").get<std::string>();
    r.status = j.at("status").get<std::string>();
    r.exit_code = j.at("exit_code").get<int>();
    r.config = j.at("config");
    r.tolerances = j.at("tolerances");
    r.results = j.at("results").get<std::map<std::string, Quantity>>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    r.details = j.at("details");
    r.table = j.at("table").get<Table>();
    r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    r.error = j.at("error").is_null() ? std::nullopt : std::optional<std::string>(j.at("error").get<std::string>());
    r.verdict = j.at("verdict").is_null() ? std::nullopt : std::optional<std::string>(j.at("verdict").get<std::string>());
}

inline std::string report_text(const Report& r) { return json(r).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_field(const json& cell)
{
    if (cell.is_null()) return "";
    if (cell.is_number_integer()) return std::to_string(cell.get<long long>());
    if (cell.is_number()) return format_number(cell.get<double>());
    if (cell.is_boolean()) return cell.get<bool>() ? "true" : "false";
    const std::string s = cell.is_string() ? cell.get<std::string>() : cell.dump();
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

inline std::string csv_text(const Table& t)
{
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + csv_field(t.columns[i]);
    out += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_field(row[i]);
        out += "\n";
    }
    return out;
}

inline void write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << text;
    if (!out) throw Error("cannot write " + path);
}

inline void emit_csv(const Report& r, const std::string& path) { write_file(path, csv_text(r.table)); }

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct Checks {
    double balancing = 1e-8;
    double criticality_relative = 1e-6;
    double first_variation = 1e-6;
    double second_variation = 1e-4;
    double volume_identity = 1e-6;
    double tube = 1e-6;
    double slack = 1e-9;
    double ball_equality = 1e-3;
    double quotient_derivative = 1e-6;
};

inline json tolerances_json(const Tolerances& t, const Checks& c)
{
    return json{{"cmc", t.cmc},
                {"angle", t.angle},
                {"on_plane", t.on_plane},
                {"edge", t.edge},
                {"umbilic", t.umbilic},
                {"indicator", t.indicator},
                {"balancing", c.balancing},
                {"criticality_relative", c.criticality_relative},
                {"first_variation", c.first_variation},
                {"second_variation", c.second_variation},
                {"volume_identity", c.volume_identity},
                {"tube", c.tube},
                {"slack", c.slack},
                {"ball_equality", c.ball_equality},
                {"quotient_derivative", c.quotient_derivative}};
}

struct RunContext {
    ExperimentConfig config;
    int order = num::kDefaultOrder;
    Tolerances tol;
    Checks checks;
};

namespace detail {

template <class F>
decltype(auto) with_dim(int n, F&& f)
{
    if (n == 3) return f(std::integral_constant<int, 3>{});
    return f(std::integral_constant<int, 2>{});
}

inline void require(const SurfaceConfig& s, std::initializer_list<const char*> keys)
{
    for (const char* k : keys)
        if (!s.has(k)) throw ParseError(std::string("config.surface.") + k + ": missing");
}

inline std::pair<double, double> bridge_angles(const SurfaceConfig& s)
{
    if (s.has("theta1") || s.has("theta2")) {
        require(s, {"theta1", "theta2"});
        return {s.get("theta1"), s.get("theta2")};
    }
    require(s, {"theta"});
    return {s.get("theta"), s.get("theta")};
}

/// Refuses wedge angles below π/2 before any building: such bridges fall
/// outside the stability hypotheses and, for spherical pieces, outside the wedge.
inline void check_wedge_angles(double t1, double t2, double tol)
{
    for (double t : {t1, t2}) {
        if (t < 0.5 * pi - tol) {
            std::ostringstream os;
            os << "contact angle " << t << " is below π/2 in a wedge";
            throw HypothesisError(os.str());
        }
    }
}

template <int N>
CapillarySurface<N> build_capillary(const SurfaceConfig& s, const RunContext& ctx,
                                    std::optional<double> theta_override = std::nullopt)
{
    if (s.kind == "cap_halfspace") {
        const double theta = theta_override ? *theta_override : (require(s, {"theta"}), s.get("theta"));
        return cap_in_halfspace<N>(s.get("R", 1.0), theta, ctx.order, ctx.tol);
    }
    if (s.kind == "bridge_wedge") {
        require(s, {"alpha"});
        auto [t1, t2] = theta_override ? std::make_pair(*theta_override, *theta_override) : bridge_angles(s);
        check_wedge_angles(t1, t2, ctx.tol.angle);
        return bridge_in_wedge<N>(s.get("R", 1.0), s.get("alpha"), t1, t2, ctx.order, ctx.tol,
                                  s.get("tilt", 0.0));
    }
    if (s.kind == "spheroid_cap") {
        if constexpr (N == 2) {
            require(s, {"a", "c"});
            return spheroid_cap_in_halfspace(s.get("a"), s.get("c"), s.get("cut", 0.0), ctx.order, ctx.tol);
        } else {
            throw ParameterError("spheroid_cap is built for n = 2 only");
        }
    }
    throw ParameterError("surface kind '" + s.kind + "' is not a capillary surface");
}

template <int N>
ParametricPatch<N> build_patch(const SurfaceConfig& s, const RunContext& ctx)
{
    if (s.kind == "sphere") return surfaces::sphere<N>(s.get("R", 1.0));
    if constexpr (N == 2) {
        if (s.kind == "torus") {
            require(s, {"major", "minor"});
            return surfaces::torus(s.get("major"), s.get("minor"));
        }
        if (s.kind == "ellipsoid") {
            require(s, {"a", "b", "c"});
            return surfaces::ellipsoid(s.get("a"), s.get("b"), s.get("c"));
        }
    }
    return build_capillary<N>(s, ctx).patch;
}

inline std::string indexed(const std::string& base, int i) { return base + "_" + std::to_string(i + 1); }

template <int N>
void cap_stability(const RunContext& ctx, Report& r)
{
    const auto s = build_capillary<N>(*ctx.config.surface, ctx);
    const auto& chk = ctx.checks;
    r.warnings.insert(r.warnings.end(), s.warnings.begin(), s.warnings.end());
    r.put("area", s.stats.area);
    r.put("enclosed_volume", s.enclosed_volume);
    r.put("total_energy", total_energy(s));
    r.put("mean_curvature", s.mean_curvature);
    r.put("mean_curvature_deviation", s.mean_curvature_deviation, ctx.tol.cmc, s.cmc);
    r.put("umbilic_deficit", s.stats.umbilic_deficit, ctx.tol.umbilic, s.stats.umbilic_deficit < ctx.tol.umbilic);
    for (int i = 0; i < s.walls(); ++i) {
        r.check(indexed("contact_angle", i), s.measured_angles[i].mean, s.contact_angles[i], ctx.tol.angle);
        r.put(indexed("contact_angle_deviation", i), s.measured_angles[i].max_deviation, ctx.tol.angle,
              s.measured_angles[i].max_deviation <= ctx.tol.angle);
        r.put(indexed("wetted_area", i), s.wetted[i].area);
        r.put(indexed("boundary_measure", i), s.wetted[i].boundary_area);
    }
    r.details["surface_kind"] = s.kind;
    r.details["cmc"] = s.cmc;

    if (!s.cmc) {
        r.put("second_factor", second_factor(s));
        r.warnings.push_back("surface is not CMC; no stability verdict is issued");
        return;
    }
    for (int i = 0; i < s.walls(); ++i) {
        r.check(indexed("balancing_residual", i), balancing_residual(s, i), 0.0, chk.balancing);
    }
    const auto rep = stability_indicator(s);
    const auto& e = rep.coefficients;
    r.put("e0", e.e0);
    r.put("e1", e.e1);
    r.put("e2", e.e2);
    if (rep.verdict != Verdict::degenerate) {
        const double v0c = critical_volume<N>(e);
        r.put("critical_volume", v0c);
        r.check("criticality_relative_error", std::abs(v0c / s.enclosed_volume - 1.0), 0.0,
                chk.criticality_relative);
        r.put("second_variation", second_variation_closed_form<N>(e));
    }
    r.put("first_factor", rep.first_factor);
    r.put("second_factor", rep.second_factor);
    r.put("umbilic_integral", rep.umbilic_integral);
    r.put("indicator", rep.indicator, ctx.tol.indicator, std::abs(rep.indicator) <= ctx.tol.indicator);
    r.put("indicator_from_coefficients", rep.indicator_from_coefficients, ctx.tol.indicator,
          std::abs(rep.indicator_from_coefficients - rep.indicator) <= ctx.tol.indicator);
    r.details["hypotheses"] = json{{"angles_at_least_right", rep.hypotheses.angles_at_least_right},
                                   {"boundary_embedded", rep.hypotheses.boundary_embedded},
                                   {"domains_convex", rep.hypotheses.domains_convex},
                                   {"satisfied", rep.hypotheses.satisfied},
                                   {"notes", rep.hypotheses.notes}};
    r.verdict = to_string(rep.verdict);
    if (rep.verdict == Verdict::hypotheses_not_met) {
        r.status = "hypothesis_failure";
        r.exit_code = 2;
    }
}

template <int N>
void variation_check(const RunContext& ctx, Report& r)
{
    const auto s = build_capillary<N>(*ctx.config.surface, ctx);
    const auto& chk = ctx.checks;
    const double h = ctx.config.fd_step;
    const auto vp = variation_polynomials(s);
    r.details["raw_energy_polynomial"] = vp.energy;
    r.details["raw_volume_polynomial"] = vp.volume;
    r.put("focal_window", vp.focal_window);

    std::vector<double> grid = ctx.config.t_grid;
    if (grid.empty()) grid = {-2.0 * h, -h, 0.0, h, 2.0 * h};
    r.table.columns = {"t", "raw_energy", "raw_volume", "scale", "scaled_energy"};
    for (double t : grid) {
        const auto v = variation_energy<N>(vp, t);
        r.table.rows.push_back({t, v.raw_energy, v.raw_volume, v.scale, v.scaled_energy});
    }

    const auto d = variation_derivatives(s, h);
    r.check("first_variation", d.first, 0.0, chk.first_variation);
    r.put("second_variation_fd", d.second);
    if (s.cmc) {
        const double closed = second_variation_closed_form<N>(energy_coefficients(s));
        r.put("second_variation_closed_form", closed);
        r.check("second_variation_gap", std::abs(d.second - closed), 0.0, chk.second_variation);
    } else {
        r.warnings.push_back("surface is not CMC; the closed-form second variation does not apply");
    }
    double gap = 0.0;
    const double dv = 1e-4;
    for (double t : {-0.05, 0.0, 0.05}) {
        if (!(std::abs(t) + dv < vp.focal_window)) continue;
        const double slope =
            (variation_energy<N>(vp, t + dv).raw_volume - variation_energy<N>(vp, t - dv).raw_volume) / (2.0 * dv);
        gap = std::max(gap, std::abs(slope - variation_energy<N>(vp, t).raw_energy));
    }
    r.check("volume_identity_gap", gap, 0.0, chk.volume_identity);
}

template <int N>
void tube_poly(const RunContext& ctx, Report& r)
{
    const auto patch = build_patch<N>(*ctx.config.surface, ctx);
    const auto stats = survey(patch, ctx.order);
    const TubePolynomial tp{stats.signed_curvature};
    const auto vp = volume_polynomial(tp, stats.volume_term);
    for (std::size_t k = 0; k < tp.a.size(); ++k) r.put("a" + std::to_string(k), tp.a[k]);
    for (std::size_t k = 0; k < vp.v.size(); ++k) r.put("v" + std::to_string(k), vp.v[k]);
    const double window = stats.max_abs_curvature > 0.0 ? 1.0 / stats.max_abs_curvature
                                                         : std::numeric_limits<double>::infinity();
    r.put("focal_window", window);

    std::vector<double> grid = ctx.config.t_grid;
    if (grid.empty()) grid = {-0.2, -0.1, 0.1, 0.2};
    r.table.columns = {"t", "polynomial_area", "sampled_area", "gap"};
    double worst = 0.0;
    for (double t : grid) {
        if (!(std::abs(t) < window)) {
            r.warnings.push_back("t = " + format_number(t) + " lies outside the focal window; skipped");
            r.table.rows.push_back({t, tp(t), nullptr, nullptr});
            continue;
        }
        const double sampled = area(parallel_patch(patch, t, ctx.order), ctx.order);
        const double gap = std::abs(sampled - tp(t));
        worst = std::max(worst, gap);
        r.table.rows.push_back({t, tp(t), sampled, gap});
    }
    r.check("max_parallel_area_gap", worst, 0.0, ctx.checks.tube);
}

template <int N>
void sweep(const RunContext& ctx, Report& r)
{
    const auto& surf = *ctx.config.surface;
    if (surf.kind != "cap_halfspace" && surf.kind != "bridge_wedge") {
        throw ParameterError("sweep: surface kind must be cap_halfspace or bridge_wedge");
    }
    const auto [lo, hi] = *surf.theta_range;
    const int steps = surf.steps;
    r.table.columns = {"theta", "status", "balancing_residual_1", "balancing_residual_2", "e0", "e1", "e2",
                       "indicator", "verdict"};
    int built = 0;
    double worst_balance = 0.0, worst_indicator = 0.0;
    for (int k = 0; k < steps; ++k) {
        const double theta = steps == 1 ? lo : lo + (hi - lo) * k / (steps - 1);
        std::vector<json> row = {theta};
        try {
            const auto s = build_capillary<N>(surf, ctx, theta);
            const auto rep = stability_indicator(s);
            const double b1 = balancing_residual(s, 0);
            const json b2 = s.walls() > 1 ? json(balancing_residual(s, 1)) : json(nullptr);
            worst_balance = std::max(worst_balance, std::abs(b1));
            if (s.walls() > 1) worst_balance = std::max(worst_balance, std::abs(b2.get<double>()));
            worst_indicator = std::max(worst_indicator, std::abs(rep.indicator));
            row.insert(row.end(), {"ok", b1, b2, rep.coefficients.e0, rep.coefficients.e1, rep.coefficients.e2,
                                   rep.indicator, to_string(rep.verdict)});
            ++built;
        } catch (const HypothesisError& e) {
            row.insert(row.end(), {"hypothesis_failure", nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr});
            r.warnings.push_back("theta = " + format_number(theta) + ": " + e.what());
        } catch (const Error& e) {
            row.insert(row.end(), {"error", nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr});
            r.warnings.push_back("theta = " + format_number(theta) + ": " + e.what());
        }
        r.table.rows.push_back(std::move(row));
    }
    r.put("rows_built", built);
    r.check("max_balancing_residual", worst_balance, 0.0, ctx.checks.balancing);
    r.check("max_abs_indicator", worst_indicator, 0.0, ctx.tol.indicator);
}

inline std::vector<convex::Point<2>> to_points2(const std::vector<std::vector<double>>& v)
{
    std::vector<convex::Point<2>> out;
    for (const auto& p : v) out.emplace_back(p[0], p[1]);
    return out;
}

inline std::vector<convex::Point<3>> to_points3(const std::vector<std::vector<double>>& v)
{
    std::vector<convex::Point<3>> out;
    for (const auto& p : v) out.emplace_back(p[0], p[1], p[2]);
    return out;
}

/// Polytope bodies; smooth bodies and suites return nothing.
template <int D>
std::optional<convex::ConvexPolytope<D>> build_polytope(const BodyConfig& b)
{
    using P = convex::ConvexPolytope<D>;
    if constexpr (D == 2) {
        if (b.kind == "square") return convex::unit_square().transformed(b.get("side", 1.0), convex::Point<2>::Zero());
        if (b.kind == "polygon") return P::from_vertices(to_points2(b.vertices));
        if (b.kind == "ball") return convex::ball_approximant_2d().first.transformed(b.get("radius", 1.0), convex::Point<2>::Zero());
    } else {
        if (b.kind == "cube") return convex::unit_cube().transformed(b.get("side", 1.0), convex::Point<3>::Zero());
        if (b.kind == "polyhedron") return P::from_vertices(to_points3(b.vertices));
        if (b.kind == "ball") return convex::ball_approximant_3d(4).first.transformed(b.get("radius", 1.0), convex::Point<3>::Zero());
    }
    return std::nullopt;
}

inline convex::QuermassVector body_quermass(const BodyConfig& b, int order)
{
    if (b.kind == "ellipse") return convex::smooth_quermass<1>(surfaces::ellipse(b.get("a", 1.0), b.get("b", 1.0)), std::max(order, 64));
    if (b.kind == "ellipsoid") {
        return convex::smooth_quermass<2>(surfaces::ellipsoid(b.get("a", 1.0), b.get("b", 1.0), b.get("c", 1.0)),
                                          std::max(order, 64));
    }
    if (b.n == 3) {
        if (auto p = build_polytope<3>(b)) return convex::quermass(*p);
    } else {
        if (auto p = build_polytope<2>(b)) return convex::quermass(*p);
    }
    throw ParameterError("body kind '" + b.kind + "' has no single quermass vector");
}

inline void put_slacks(Report& r, const convex::InequalitySlacks& s, double tol, const std::string& prefix = "")
{
    auto put = [&](const std::string& name, double v) { r.put(prefix + name, v, tol, v >= -tol); };
    put("slack_af_first", s.af_first);
    put("slack_minkowski", s.minkowski);
    if (s.af_second) put("slack_af_second", *s.af_second);
    if (s.chain_first) put("slack_chain_first", *s.chain_first);
    if (s.chain_second) put("slack_chain_second", *s.chain_second);
}

inline void convex_check(const RunContext& ctx, Report& r)
{
    const auto& b = *ctx.config.body;
    const double tol = ctx.checks.slack;
    if (b.kind == "random_polygons" || b.kind == "random_polyhedra") {
        std::mt19937_64 rng(ctx.config.seed);
        const int count = b.count > 0 ? b.count : (b.kind == "random_polygons" ? 100 : 20);
        r.table.columns = {"index", "vertices", "W0", "W1", "W2", "W3", "min_slack"};
        double worst = std::numeric_limits<double>::infinity();
        for (int k = 0; k < count; ++k) {
            convex::InequalitySlacks s;
            std::size_t verts = 0;
            if (b.kind == "random_polygons") {
                const auto p = convex::random_polygon(rng);
                s = convex::inequality_suite(p);
                verts = p.vertex_count();
            } else {
                const auto p = convex::random_polyhedron(rng);
                s = convex::inequality_suite(p);
                verts = p.vertex_count();
            }
            const auto& w = s.quermass.w;
            r.table.rows.push_back({k, verts, w[0], w[1], w[2], w.size() > 3 ? json(w[3]) : json(nullptr),
                                    s.min_slack()});
            worst = std::min(worst, s.min_slack());
        }
        if (b.kind == "random_polygons") {
            double worst_af = std::numeric_limits<double>::infinity();
            for (int k = 0; k < count; ++k) {
                const auto p = convex::random_polygon(rng), q = convex::random_polygon(rng);
                const double v = convex::mixed_volume_2d(p, q);
                worst_af = std::min(worst_af, v * v - p.volume() * q.volume());
            }
            r.put("min_slack_af_pairs", worst_af, tol, worst_af >= -tol);
        }
        r.put("bodies", count);
        r.put("min_slack", worst, tol, worst >= -tol);
        return;
    }
    const auto q = body_quermass(b, ctx.order);
    for (int j = 0; j <= q.n; ++j) r.put("W" + std::to_string(j), q[j]);
    const auto s = convex::inequality_suite(q);
    put_slacks(r, s, tol);
    if (b.kind == "ball") {
        r.check("ball_equality_relative", s.max_relative_slack(), 0.0, ctx.checks.ball_equality);
    }
    r.details["steiner_coefficients"] = convex::steiner(q).coefficients;
}

inline void steiner_cmd(const RunContext& ctx, Report& r)
{
    const auto& b = *ctx.config.body;
    std::vector<double> grid = ctx.config.t_grid;
    if (grid.empty()) grid = {0.0, 0.25, 0.5};
    r.table.columns = {"t", "polynomial", "sampled", "residual", "bound", "within_bound"};
    if (b.kind == "ball") throw ParameterError("steiner: the body must differ from the ball approximant");
    bool all_ok = true;
    auto run_for = [&](const auto& poly) {
        r.details["steiner_coefficients"] = convex::steiner(poly).coefficients;
        for (double t : grid) {
            const auto c = convex::steiner_check(poly, t);
            all_ok = all_ok && c.within_bound();
            r.table.rows.push_back({t, c.polynomial, c.sampled, c.residual, c.bound, c.within_bound()});
        }
    };
    if (b.n == 3) {
        const auto p = build_polytope<3>(b);
        if (!p) throw ParameterError("steiner: body must be a polytope");
        run_for(*p);
    } else {
        const auto p = build_polytope<2>(b);
        if (!p) throw ParameterError("steiner: body must be a polytope");
        run_for(*p);
    }
    r.put("all_within_bound", all_ok ? 1.0 : 0.0, 0.0, all_ok);
}

inline void quotient_scan_cmd(const RunContext& ctx, Report& r)
{
    const auto q = body_quermass(*ctx.config.body, ctx.order);
    std::vector<double> grid = ctx.config.t_grid;
    if (grid.empty()) grid = {0.0, 0.5, 1.0, 2.0};
    const auto scan = convex::parallel_quotient_scan(q, grid);
    r.table.columns = {"t", "quotient"};
    for (std::size_t i = 0; i < scan.t.size(); ++i) r.table.rows.push_back({scan.t[i], scan.quotient[i]});
    r.put("nonincreasing", scan.nonincreasing ? 1.0 : 0.0, 0.0, scan.nonincreasing);
    // d/dt of Pⁿ/A^{n−1} at t = 0 from the Steiner data.
    const auto s = convex::steiner(q);
    const int n = q.n;
    const double A = s(0.0), P = s.boundary(0.0), dP = 2.0 * s.coefficients.at(2);
    const double deriv = n * std::pow(P, n - 1) * dP / std::pow(A, n - 1) - (n - 1) * std::pow(P, n + 1) / std::pow(A, n);
    r.put("quotient_derivative_at_zero", deriv, ctx.checks.quotient_derivative, deriv <= ctx.checks.quotient_derivative);
}

}  // namespace detail

/// Runs one experiment. Never throws for computational failures: they are
/// recorded in the report with exit code 2 (hypotheses) or 1 (errors).
inline Report run(const ExperimentConfig& config, int order)
{
    const auto start = std::chrono::steady_clock::now();
    RunContext ctx;
    ctx.config = config;
    ctx.order = order;
    Report r;
    r.config = config_to_json(config, order);
    r.tolerances = tolerances_json(ctx.tol, ctx.checks);
    try {
        const int n = config.surface ? config.surface->n : 2;
        switch (config.command) {
        case Command::cap_stability:
            detail::with_dim(n, [&](auto d) { detail::cap_stability<decltype(d)::value>(ctx, r); });
            break;
        case Command::variation_check:
            detail::with_dim(n, [&](auto d) { detail::variation_check<decltype(d)::value>(ctx, r); });
            break;
        case Command::tube_poly:
            detail::with_dim(n, [&](auto d) { detail::tube_poly<decltype(d)::value>(ctx, r); });
            break;
        case Command::sweep:
            detail::with_dim(n, [&](auto d) { detail::sweep<decltype(d)::value>(ctx, r); });
            break;
        case Command::convex_check: detail::convex_check(ctx, r); break;
        case Command::steiner: detail::steiner_cmd(ctx, r); break;
        case Command::quotient_scan: detail::quotient_scan_cmd(ctx, r); break;
        }
    } catch (const HypothesisError& e) {
        r.status = "hypothesis_failure";
        r.error = e.what();
        r.exit_code = 2;
    } catch (const NonConvex& e) {
        r.status = "hypothesis_failure";
        r.error = e.what();
        r.exit_code = 2;
    } catch (const std::exception& e) {
        r.status = "error";
        r.error = e.what();
        r.exit_code = 1;
    }
    r.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace capillary_lab::cli
