#pragma once

// Config handling and command runners behind the weakkam executable. Every command reads
// one JSON config, writes <out>/<command>.csv and <out>/<command>.json, and returns
// 0 (success), 2 (invalid input or unmet precondition) or 3 (certificate violated).

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wkam/cost.hpp"
#include "wkam/derham.hpp"
#include "wkam/domain.hpp"
#include "wkam/error.hpp"
#include "wkam/expr.hpp"
#include "wkam/glue.hpp"
#include "wkam/ilmanen.hpp"
#include "wkam/jensen.hpp"
#include "wkam/lax.hpp"

namespace wkam::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr const char* version = "0.1.0";

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c{"check", "regularize-uniform", "regularize-general", "pipeline-uv",
                                            "smoothfree", "aubry", "ilmanen", "mollify"};
    return c;
}

/// Invalid config or input data; reported with exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A run: the merged config plus the directory relative paths are resolved against.
struct RunConfig {
    json doc = json::object();
    fs::path base_dir = ".";

    bool has(const char* key) const { return doc.contains(key) && !doc[key].is_null(); }
    const json& at(const char* key) const {
        if (!has(key)) throw ConfigError(std::string("config: missing required field '") + key + "'");
        return doc[key];
    }
    double number(const char* key) const {
        const auto& v = at(key);
        if (!v.is_number()) throw ConfigError(std::string("config: field '") + key + "' must be a number");
        return v.get<double>();
    }
    double number_or(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }
    std::string path(const std::string& p) const {
        const fs::path q(p);
        return (q.is_absolute() ? q : base_dir / q).string();
    }
};

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open config " + path);
    RunConfig rc;
    try {
        rc.doc = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    if (!rc.doc.is_object()) throw ConfigError("config " + path + " must be a JSON object");
    rc.base_dir = fs::path(path).parent_path();
    if (rc.base_dir.empty()) rc.base_dir = ".";
    return rc;
}

// ---- parsing of the config fields -------------------------------------------------------

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

inline double to_number(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) throw ConfigError(what + ": '" + s + "' is not a number");
    return v;
}

} // namespace detail

/// "circle:a,b,N" (period [a, b)) or "interval:a,b,N", or {"kind","origin","length","n"}.
inline GridDomain parse_domain(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        const auto colon = s.find(':');
        if (colon == std::string::npos) throw ConfigError("domain '" + s + "' must look like circle:a,b,N");
        const auto kind = s.substr(0, colon);
        const auto parts = detail::split(s.substr(colon + 1), ',');
        if (parts.size() != 3) throw ConfigError("domain '" + s + "' needs three values a,b,N");
        const double a = detail::to_number(parts[0], "domain"), b = detail::to_number(parts[1], "domain");
        const double n = detail::to_number(parts[2], "domain");
        if (n != std::floor(n) || n < 2) throw ConfigError("domain '" + s + "': N must be an integer ≥ 2");
        if (kind != "circle" && kind != "interval") throw ConfigError("domain kind must be circle or interval, got " + kind);
        return make_grid(kind == "circle" ? DomainKind::circle : DomainKind::interval, a, b - a,
                         static_cast<std::size_t>(n));
    }
    if (j.is_object()) {
        const auto kind = j.value("kind", std::string("circle"));
        if (kind != "circle" && kind != "interval") throw ConfigError("domain kind must be circle or interval, got " + kind);
        if (!j.contains("n") || !j["n"].is_number_unsigned()) throw ConfigError("domain.n must be a positive integer");
        return make_grid(kind == "circle" ? DomainKind::circle : DomainKind::interval, j.value("origin", 0.0),
                         j.value("length", 1.0), j["n"].get<std::size_t>());
    }
    throw ConfigError("domain must be a string or an object");
}

/// Reads one column of a CSV with a header; the first column must be the node x.
/// Picks `value` or `result` when there are several columns.
inline GridFunction read_function_csv(const std::string& path, const GridDomain& d, const std::string& column = "") {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw ConfigError(path + " is empty");
    const auto header = detail::split(line, ',');
    if (header.size() < 2 || header[0] != "x") throw ConfigError(path + ": header must start with x");
    std::size_t col = 1;
    auto find = [&](const std::string& name) {
        for (std::size_t k = 1; k < header.size(); ++k)
            if (header[k] == name) return k;
        return std::size_t{0};
    };
    if (!column.empty()) col = find(column);
    else if (header.size() > 2) col = find("value") ? find("value") : find("result");
    if (col == 0) throw ConfigError(path + ": no column " + (column.empty() ? std::string("value or result") : column));
    std::vector<double> v;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = detail::split(line, ',');
        if (cells.size() != header.size()) throw ConfigError(path + ": malformed row '" + line + "'");
        const std::size_t i = v.size();
        if (i >= d.size()) throw DomainMismatch(path + " has more rows than grid nodes");
        const double x = detail::to_number(cells[0], path);
        if (std::abs(x - d.node(i)) > 1e-9 * (1.0 + std::abs(d.node(i))))
            throw DomainMismatch(path + ": row " + std::to_string(i) + " has x=" + cells[0] + ", grid node is " +
                                 format_double(d.node(i)));
        v.push_back(detail::to_number(cells[col], path));
    }
    if (v.size() != d.size())
        throw DomainMismatch(path + " has " + std::to_string(v.size()) + " rows for " + std::to_string(d.size()) + " nodes");
    return GridFunction(d, std::move(v));
}

/// A number, an expression string in x, or {"csv": path, "column": name}.
inline GridFunction parse_function(const json& j, const GridDomain& d, const RunConfig& rc) {
    if (j.is_number()) return GridFunction::constant(d, j.get<double>());
    if (j.is_string()) return sample_expr(parse_expr(j.get<std::string>()), d);
    if (j.is_object() && j.contains("csv"))
        return read_function_csv(rc.path(j["csv"].get<std::string>()), d, j.value("column", std::string()));
    throw ConfigError("function spec must be a number, an expression string or {\"csv\": path}");
}

inline std::vector<double> read_matrix_csv(const std::string& path, std::size_t n) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open " + path);
    std::vector<double> C;
    std::string line;
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = detail::split(line, ',');
        if (cells.size() != n)
            throw ConfigError(path + ": row " + std::to_string(rows) + " has " + std::to_string(cells.size()) +
                              " entries, expected " + std::to_string(n));
        for (const auto& c : cells) C.push_back(detail::to_number(c, path));
        ++rows;
    }
    if (rows != n) throw ConfigError(path + ": expected " + std::to_string(n) + " rows, got " + std::to_string(rows));
    return C;
}

inline Cost parse_cost(const json& j, const GridDomain& d, const RunConfig& rc) {
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("cost must be an object with a kind");
    const auto kind = j["kind"].get<std::string>();
    auto field = [&](const char* k) -> const json& {
        if (!j.contains(k)) throw ConfigError("cost " + kind + " needs field '" + k + "'");
        return j[k];
    };
    if (kind == "quadratic") return Cost::quadratic(d, j.value("t", 1.0));
    if (kind == "quad_plus_potential")
        return Cost::quad_plus_potential(d, j.value("t", 1.0), parse_function(j.value("V", json(0.0)), d, rc),
                                         parse_function(j.value("W", json(0.0)), d, rc));
    if (kind == "separable") return Cost::separable(parse_function(field("f"), d, rc), parse_function(field("g"), d, rc));
    if (kind == "matrix") return Cost::matrix(d, read_matrix_csv(rc.path(field("path").get<std::string>()), d.size()));
    throw ConfigError("unknown cost kind '" + kind + "'");
}

// ---- output -----------------------------------------------------------------------------

struct Column {
    std::string name;
    GridFunction values;
};

inline void write_table(const std::string& path, const GridDomain& d, const std::vector<Column>& cols) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << 'x';
    for (const auto& c : cols) os << ',' << c.name;
    os << '\n';
    for (std::size_t i = 0; i < d.size(); ++i) {
        os << format_double(d.node(i));
        for (const auto& c : cols) os << ',' << format_double(c.values[i]);
        os << '\n';
    }
}

inline json domain_json(const GridDomain& d) {
    return json{{"kind", d.periodic() ? "circle" : "interval"}, {"origin", d.origin()}, {"length", d.length()},
                {"n", d.size()}, {"h", d.spacing()}};
}

inline json regularity_json(const RegularityCertificate& r) {
    return json{{"semiconcavity_constant", r.semiconcavity_constant},
                {"semiconvexity_constant", r.semiconvexity_constant},
                {"c11_constant", r.c11_constant},
                {"max_step", r.max_step}};
}

inline json certificate_json(const RegularizationCertificate& c) {
    return json{{"holds", c.holds()},
                {"sandwich_low_defect", c.sandwich_low_defect},
                {"sandwich_high_defect", c.sandwich_high_defect},
                {"sup_change", c.sup_change},
                {"semiconcavity_bound", c.semiconcavity_bound},
                {"semiconvexity_bound", c.semiconvexity_bound},
                {"regularity_slack", c.regularity_slack},
                {"output_regularity", regularity_json(c.output_regularity)},
                {"tol", c.tol}};
}

inline json pairs_json(const std::vector<NodePair>& p) {
    json a = json::array();
    for (const auto& [x, y] : p) a.push_back(json::array({x, y}));
    return a;
}

inline json smoothing_json(const SmoothingReport& s) {
    return json{{"balls", s.balls}, {"max_budget_ratio", s.max_budget_ratio}, {"c11_before", s.c11_before},
                {"c11_after", s.c11_after}};
}

// ---- commands ---------------------------------------------------------------------------

struct Outcome {
    json report;
    std::vector<Column> columns;
    bool certified = true; ///< false → exit 3
};

namespace detail {

inline double tol_of(const RunConfig& rc, const Cost& c, const GridFunction& u) {
    return rc.has("tol") ? rc.number("tol") : default_tol(c, u);
}

inline std::vector<GridFunction> seeds_of(const RunConfig& rc, const GridDomain& d) {
    std::vector<GridFunction> out;
    if (rc.has("seeds")) {
        const auto& s = rc.at("seeds");
        if (!s.is_array() || s.empty()) throw ConfigError("config: seeds must be a non-empty array");
        for (const auto& e : s) out.push_back(parse_function(e, d, rc));
    } else {
        out.push_back(parse_function(rc.has("u") ? rc.at("u") : json(0.0), d, rc));
    }
    return out;
}

inline AtlasSpec atlas_of(const RunConfig& rc) {
    AtlasSpec a;
    if (rc.has("atlas")) {
        const auto& j = rc.at("atlas");
        a.n_charts = j.value("n_charts", a.n_charts);
        a.overlap_fraction = j.value("overlap_fraction", a.overlap_fraction);
    }
    return a;
}

inline json analysis_json(const SubsolutionReport& r) {
    return json{{"is_subsolution", r.is_subsolution},
                {"max_violation", r.max_violation},
                {"aubry_nodes", r.aubry_nodes},
                {"free_nodes", r.free_nodes.size()},
                {"contact_pairs", r.contact_pairs.size()},
                {"min_leverage", r.leverage.min()},
                {"max_leverage", r.leverage.max()},
                {"tol", r.tol}};
}

inline Outcome cmd_check(const RunConfig& rc) {
    const auto d = parse_domain(rc.at("domain"));
    const auto c = parse_cost(rc.at("cost"), d, rc);
    const auto u = parse_function(rc.has("u") ? rc.at("u") : json(0.0), d, rc);
    const auto rep = analyze(c, u, tol_of(rc, c, u));
    const auto diag = validate_cost(c);
    const auto id = operator_identity_check(c, u);
    Outcome o;
    o.report["analysis"] = analysis_json(rep);
    o.report["contact_pairs"] = pairs_json(rep.contact_pairs);
    o.report["cost"] = json{{"K", diag.K}, {"min", diag.min}, {"max", diag.max}, {"diagonal_min", diag.diagonal_min},
                            {"diagonal_negative", diag.diagonal_negative}};
    o.report["identities"] = json{{"plus_identity_defect", id.plus_identity_defect},
                                  {"minus_identity_defect", id.minus_identity_defect},
                                  {"chain", json::array({id.chain[0], id.chain[1], id.chain[2], id.chain[3]})}};
    o.columns = {{"u", u}, {"T_minus_u", rep.t_minus_u}, {"T_plus_u", rep.t_plus_u}, {"leverage", rep.leverage}};
    return o;
}

inline Outcome cmd_regularize_uniform(const RunConfig& rc) {
    const auto d = parse_domain(rc.at("domain"));
    const auto c = parse_cost(rc.at("cost"), d, rc);
    const auto u = parse_function(rc.has("u") ? rc.at("u") : json(0.0), d, rc);
    const double K = estimate_K(c).K;
    JensenVariant variant = JensenVariant::minus_plus_minus;
    if (rc.has("variant")) {
        const auto v = rc.at("variant").get<std::string>();
        if (v == "plus_minus_plus") variant = JensenVariant::plus_minus_plus;
        else if (v != "minus_plus_minus") throw ConfigError("variant must be minus_plus_minus or plus_minus_plus");
    }
    JensenParams p;
    if (rc.has("t") || rc.has("s")) {
        p = {rc.number_or("t", rc.number_or("s", 0.0)), rc.number_or("s", rc.number_or("t", 0.0)), variant};
    } else if (rc.has("eps")) {
        p = select_ts(c, u, parse_function(rc.at("eps"), d, rc).min(), variant);
    } else {
        const double t = K > 0.0 ? 0.5 / K : 1.0;
        p = {t, t, variant};
    }
    const auto r = regularize_uniform(c, u, p, tol_of(rc, c, u));
    Outcome o;
    o.report["params"] = json{{"t", p.t}, {"s", p.s}, {"variant", variant == JensenVariant::minus_plus_minus
                                                                      ? "minus_plus_minus" : "plus_minus_plus"},
                              {"K", K}};
    o.report["certificate"] = certificate_json(r.cert);
    o.columns = {{"u", u}, {"T_minus_u", t_minus(c, u)}, {"T_plus_u", t_plus(c, u)}, {"result", r.w}};
    o.certified = r.cert.holds();
    return o;
}

inline Outcome cmd_regularize_general(const RunConfig& rc) {
    const auto d = parse_domain(rc.at("domain"));
    const auto c = parse_cost(rc.at("cost"), d, rc);
    const auto u = parse_function(rc.has("u") ? rc.at("u") : json(0.0), d, rc);
    const auto eps = parse_function(rc.at("eps"), d, rc);
    const auto r = regularize_general(c, u, eps, atlas_of(rc), tol_of(rc, c, u));
    Outcome o;
    o.report["params"] = json{{"a", r.params.a}, {"b", r.params.b}, {"eps_budgets", r.params.eps_budgets},
                              {"petit_ratio", r.params.petit_ratio}, {"k_concave", r.params.k_concave},
                              {"k_convex", r.params.k_convex}};
    o.report["certificate"] = certificate_json(r.cert);
    o.report["eps_excess"] = r.eps_excess;
    o.report["confinement"] = r.confinement;
    o.report["holds"] = r.holds();
    o.columns = {{"u", u}, {"T_minus_u", t_minus(c, u)}, {"T_plus_u", t_plus(c, u)}, {"eps", eps}, {"result", r.w}};
    o.certified = r.holds();
    return o;
}

inline PipelineOptions pipeline_options(const RunConfig& rc) {
    PipelineOptions opt;
    opt.atlas = atlas_of(rc);
    opt.eps_floor = rc.number_or("eps_floor", opt.eps_floor);
    opt.strict_delta = rc.number_or("strict_delta", opt.strict_delta);
    return opt;
}

inline json pipeline_json(const PipelineReport& r) {
    return json{{"holds", r.holds()},
                {"aubry_nodes", r.aubry_nodes},
                {"aubry_defect", r.aubry_defect},
                {"min_leverage_off_aubry", r.min_leverage_off_aubry},
                {"strict_pairs_checked", r.strict_pairs_checked},
                {"strict_pairs_lost", r.strict_pairs_lost},
                {"max_violation", r.max_violation},
                {"regularity", regularity_json(r.regularity)},
                {"smoothing", smoothing_json(r.smoothing)},
                {"tol", r.tol}};
}

inline Outcome cmd_pipeline_uv(const RunConfig& rc) {
    const auto d = parse_domain(rc.at("domain"));
    const auto c = parse_cost(rc.at("cost"), d, rc);
    const auto u = parse_function(rc.has("u") ? rc.at("u") : json(0.0), d, rc);
    const auto r = pipeline_uv(c, u, pipeline_options(rc), tol_of(rc, c, u));
    Outcome o;
    o.report["pipeline"] = pipeline_json(r);
    o.columns = {{"u", u}, {"v1", r.v1}, {"v2", r.v2}, {"eps", r.smoothing_eps}, {"result", r.v3}};
    o.certified = r.holds();
    return o;
}

inline Outcome cmd_smoothfree(const RunConfig& rc) {
    const auto d = parse_domain(rc.at("domain"));
    const auto c = parse_cost(rc.at("cost"), d, rc);
    const auto seeds = seeds_of(rc, d);
    std::optional<double> tol;
    if (rc.has("tol")) tol = rc.number("tol");
    const auto r = smoothfree_build(c, seeds, pipeline_options(rc), tol);
    Outcome o;
    o.report["seed_intersection"] = json{{"nodes", r.seed_aubry.nodes}, {"pairs", r.seed_aubry.pairs.size()},
                                         {"outer_estimate", true}};
    o.report["order"] = r.order;
    o.report["min_leverage_off_intersection"] = r.min_leverage_off_intersection;
    o.report["pipeline"] = pipeline_json(r.pipeline);
    for (std::size_t k = 0; k < seeds.size(); ++k) o.columns.push_back({"seed" + std::to_string(k), seeds[k]});
    o.columns.push_back({"result", r.pipeline.v3});
    o.certified = r.pipeline.holds();
    return o;
}

inline Outcome cmd_aubry(const RunConfig& rc) {
    const auto d = parse_domain(rc.at("domain"));
    const auto c = parse_cost(rc.at("cost"), d, rc);
    const auto seeds = seeds_of(rc, d);
    double tl = 0.0;
    if (rc.has("tol")) tl = rc.number("tol");
    else
        for (const auto& s : seeds) tl = std::max(tl, default_tol(c, s));
    std::vector<SubsolutionReport> reps;
    Outcome o;
    o.report["seeds"] = json::array();
    for (std::size_t k = 0; k < seeds.size(); ++k) {
        reps.push_back(analyze(c, seeds[k], tl));
        if (!reps.back().is_subsolution)
            throw PreconditionError("aubry: seed " + std::to_string(k) + " is not a subsolution (max violation " +
                                    format_double(reps.back().max_violation) + ")");
        o.report["seeds"].push_back(analysis_json(reps.back()));
    }
    const auto in = aubry_intersection(reps);
    // over a finite family the intersection contains the true Aubry set, possibly strictly
    o.report["intersection"] = json{{"outer_estimate", true},
                                    {"nodes", in.nodes},
                                    {"pairs", pairs_json(in.pairs)},
                                    {"missing_outgoing", in.missing_outgoing},
                                    {"missing_incoming", in.missing_incoming}};
    std::vector<double> mark(d.size(), 0.0);
    for (auto x : in.nodes) mark[x] = 1.0;
    for (std::size_t k = 0; k < seeds.size(); ++k) o.columns.push_back({"seed" + std::to_string(k), seeds[k]});
    o.columns.push_back({"in_intersection", GridFunction(d, std::move(mark))});
    return o;
}

inline Outcome cmd_ilmanen(const RunConfig& rc) {
    const auto d = parse_domain(rc.has("domain") ? rc.at("domain") : json("interval:-1,1,201"));
    const auto f = parse_function(rc.at("f"), d, rc);
    const auto g = parse_function(rc.at("g"), d, rc);
    std::optional<double> tol;
    if (rc.has("tol")) tol = rc.number("tol");
    const auto r = ilmanen_sandwich(f, g, tol);
    Outcome o;
    o.report["params"] = json{{"t", r.params.t}, {"s", r.params.s}, {"K", r.K}};
    o.report["certificate"] = certificate_json(r.cert);
    o.report["normalization"] = r.normalization;
    o.report["lower_defect"] = r.lower_defect;
    o.report["upper_defect"] = r.upper_defect;
    o.report["output_regularity"] = regularity_json(regularity_certificate(r.u));
    o.report["holds"] = r.holds();
    o.columns = {{"minus_g", -g}, {"u", r.u}, {"f", f}};
    o.certified = r.holds();
    return o;
}

inline Outcome cmd_mollify(const RunConfig& rc) {
    const auto d = parse_domain(rc.at("domain"));
    GridFunction f;
    if (rc.has("input")) f = read_function_csv(rc.path(rc.at("input").get<std::string>()), d);
    else f = parse_function(rc.has("u") ? rc.at("u") : json(0.0), d, rc);
    const auto eps = parse_function(rc.at("eps"), d, rc);
    const double kk = rc.number_or("k", 1.0);
    if (kk != 0.0 && kk != 1.0) throw ConfigError("config: k must be 0 or 1");
    SmoothingReport rep;
    const auto g = smooth_on_open(f, eps, static_cast<int>(kk), &rep);
    bool frozen = true, within = true;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (eps[i] == 0.0 && g[i] != f[i]) frozen = false;
        if (std::abs(g[i] - f[i]) > eps[i]) within = false;
    }
    const bool c11_ok = rep.c11_after <= rep.c11_before + 1.0 + 1e-6;
    Outcome o;
    o.report["smoothing"] = smoothing_json(rep);
    o.report["certificate"] = json{{"outside_unchanged", frozen}, {"within_budget", within},
                                   {"budget_ratio_ok", rep.max_budget_ratio <= 1.0}, {"c11_increase_ok", c11_ok}};
    o.columns = {{"f", f}, {"eps", eps}, {"result", g}};
    o.certified = frozen && within && rep.max_budget_ratio <= 1.0 && c11_ok;
    return o;
}

} // namespace detail

inline Outcome execute(const std::string& command, const RunConfig& rc) {
    static const std::vector<std::pair<std::string, std::function<Outcome(const RunConfig&)>>> table{
        {"check", detail::cmd_check},
        {"regularize-uniform", detail::cmd_regularize_uniform},
        {"regularize-general", detail::cmd_regularize_general},
        {"pipeline-uv", detail::cmd_pipeline_uv},
        {"smoothfree", detail::cmd_smoothfree},
        {"aubry", detail::cmd_aubry},
        {"ilmanen", detail::cmd_ilmanen},
        {"mollify", detail::cmd_mollify}};
    for (const auto& [name, fn] : table)
        if (name == command) return fn(rc);
    throw ConfigError("unknown command '" + command + "'");
}

inline void print_error(std::ostream& err, const char* kind, const std::string& message) {
    err << json{{"error", kind}, {"message", message}, {"version", version}}.dump() << '\n';
}

/// Runs a command and writes <out>/<command>.csv and <out>/<command>.json.
inline int run(const std::string& command, const RunConfig& rc, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    try {
        const auto o = execute(command, rc);
        json report{{"version", version}, {"command", command}};
        const auto d = parse_domain(rc.has("domain") ? rc.at("domain") : json("interval:-1,1,201"));
        report["domain"] = domain_json(d);
        for (const auto& [k, v] : o.report.items()) report[k] = v;
        report["certified"] = o.certified;
        const fs::path dir = rc.has("out") ? fs::path(rc.path(rc.at("out").get<std::string>())) : fs::path(".");
        fs::create_directories(dir);
        write_table((dir / (command + ".csv")).string(), d, o.columns);
        {
            std::ofstream js(dir / (command + ".json"), std::ios::binary);
            if (!js) throw std::runtime_error("cannot write " + (dir / (command + ".json")).string());
            js << report.dump(2) << '\n';
        }
        out << report.dump(2) << '\n';
        if (!o.certified) {
            print_error(err, "certificate", command + ": a guaranteed certificate failed; see the report");
            return 3;
        }
        return 0;
    } catch (const CertificateError& e) {
        print_error(err, "certificate", e.what());
        return 3;
    } catch (const PreconditionError& e) {
        print_error(err, "precondition", e.what());
        return 2;
    } catch (const ExprError& e) {
        print_error(err, "expression", e.what());
        return 2;
    } catch (const ExprDomainError& e) {
        print_error(err, "expression", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        print_error(err, "invalid_input", e.what());
        return 2;
    } catch (const json::exception& e) {
        print_error(err, "invalid_input", e.what());
        return 2;
    } catch (const std::exception& e) {
        print_error(err, "io", e.what());
        return 2;
    }
}

} // namespace wkam::cli
