// soficlab command-line front end.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "soficlab/soficlab.hpp"

namespace fs = std::filesystem;
using namespace soficlab;

namespace {

#ifndef SOFICLAB_VERSION
#define SOFICLAB_VERSION "0.0.0"
#endif

constexpr int exit_compare_fail = 1;
constexpr int exit_internal = 70;

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ------------------------------------------------------------ parameters

struct ParamSpec {
    enum class Type { string, integer, unsigned_integer, number, int_list } type;
    json fallback;  // null: required unless noted optional
    bool optional = false;
};

using Schema = std::map<std::string, ParamSpec>;

const std::map<std::string, Schema>& schemas() {
    using T = ParamSpec::Type;
    static const Schema sequence{
        {"model", {T::string, nullptr}},
        {"lambda", {T::number, nullptr, true}},
        {"builder", {T::string, nullptr, true}},
        {"d", {T::integer, nullptr, true}},
        {"k", {T::integer, nullptr, true}},
        {"seed", {T::unsigned_integer, 1}},
        {"sizes", {T::int_list, json::array({8, 16, 32, 64})}},
        {"method", {T::string, "auto"}},
        {"enforcement", {T::string, "good_windows"}},
        {"sweeps", {T::integer, 20000}},
        {"grid", {T::integer, 64}},
    };
    static const std::map<std::string, Schema> all{
        {"pressure", sequence},
        {"entropy", sequence},
        {"tssm-check",
         {{"model", {T::string, nullptr}},
          {"range", {T::integer, 1}},
          {"radius", {T::integer, 2}},
          {"kmax", {T::integer, 2}},
          {"pad", {T::integer, 2}},
          {"budget", {T::integer, 2000000}}}},
        {"ssm-profile",
         {{"model", {T::string, nullptr}},
          {"lambda", {T::number, nullptr, true}},
          {"rmax", {T::integer, 8}},
          {"budget", {T::number, 1e6}}}},
        {"kp-estimate",
         {{"model", {T::string, nullptr}},
          {"lambda", {T::number, nullptr, true}},
          {"oracle", {T::string, "transfer"}},
          {"r", {T::integer, 16}},
          {"N", {T::integer, 200000}},
          {"nu", {T::string, "fixed0"}},
          {"M", {T::integer, 1000}},
          {"past", {T::string, "percolation"}},
          {"pad", {T::integer, 6}},
          {"c_radius", {T::integer, 2}},
          {"builder", {T::string, nullptr, true}},
          {"d", {T::integer, nullptr, true}},
          {"k", {T::integer, nullptr, true}},
          {"m", {T::integer, 16}},
          {"seed", {T::unsigned_integer, 7}}}},
        {"saw-marginal",
         {{"graph", {T::string, nullptr}}, {"root", {T::integer, 0}}, {"lambda", {T::number, 1.0}}}},
        {"sofic-stats",
         {{"builder", {T::string, "torus"}},
          {"d", {T::integer, 1}},
          {"k", {T::integer, 2}},
          {"m", {T::integer, 16}},
          {"r", {T::integer, 1}},
          {"delta", {T::number, 0.01}},
          {"seed", {T::unsigned_integer, 1}}}},
        {"compare",
         {{"a", {T::string, nullptr}},
          {"b", {T::string, nullptr}},
          {"tolerance", {T::number, 1e-3}},
          {"sigmas", {T::number, 3.0}}}},
    };
    return all;
}

bool type_ok(const ParamSpec& spec, const json& v) {
    using T = ParamSpec::Type;
    switch (spec.type) {
        case T::string: return v.is_string();
        case T::integer: return v.is_number_integer();
        case T::unsigned_integer: return v.is_number_unsigned();
        case T::number: return v.is_number();
        case T::int_list:
            if (!v.is_array() || v.empty()) return false;
            for (const auto& e : v)
                if (!e.is_number_integer()) return false;
            return true;
    }
    return false;
}

/// Validates against the experiment schema and fills in defaults.
json materialize(const std::string& experiment, const json& given) {
    auto it = schemas().find(experiment);
    require(it != schemas().end(), ErrorCode::schema, "unknown experiment '" + experiment + "'");
    require(given.is_object(), ErrorCode::schema, "params must be an object");
    const Schema& schema = it->second;
    for (const auto& [key, value] : given.items()) {
        auto s = schema.find(key);
        require(s != schema.end(), ErrorCode::schema, "unknown parameter '" + key + "' for " + experiment);
        require(type_ok(s->second, value), ErrorCode::schema, "parameter '" + key + "' has the wrong type");
    }
    json out = json::object();
    for (const auto& [key, spec] : schema) {
        if (given.contains(key)) {
            out[key] = given.at(key);
        } else if (!spec.fallback.is_null()) {
            out[key] = spec.fallback;
        } else if (!spec.optional) {
            fail(ErrorCode::schema, "missing required parameter '" + key + "' for " + experiment);
        }
    }
    return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

/// Loads the model; a lambda parameter sets the activity of a two-symbol model.
Model model_param(const json& params, const fs::path& base) {
    json j = read_json_file(resolve(base, params.at("model").get<std::string>()).string());
    Model m = model_from_json(j);
    if (params.contains("lambda")) {
        double lambda = params.at("lambda").get<double>();
        require(lambda > 0.0, ErrorCode::invalid_argument, "lambda must be positive");
        require(m.alphabet() == 2, ErrorCode::invalid_argument, "lambda applies to two-symbol models");
        m.potential.vertex_log_weights = {0.0, std::log(lambda)};
    }
    return m;
}

BuilderSpec builder_param(const json& params, const fs::path& base, const GroupSpec& group) {
    BuilderSpec b;
    b.builder = group.is_abelian() ? "torus" : "random_perm";
    b.d = group.is_abelian() ? group.rank() : 1;
    b.k = group.is_abelian() ? 2 : group.rank();
    if (params.contains("model")) {
        auto from_file = builder_from_json(read_json_file(resolve(base, params.at("model").get<std::string>()).string()));
        if (from_file) b = *from_file;
    }
    if (params.contains("builder")) b.builder = params.at("builder").get<std::string>();
    if (params.contains("d")) b.d = params.at("d").get<int>();
    if (params.contains("k")) b.k = params.at("k").get<int>();
    if (params.contains("seed")) b.seed = params.at("seed").get<std::uint64_t>();
    require(b.builder == "torus" || b.builder == "folner" || b.builder == "random_perm", ErrorCode::schema,
            "builder must be torus, folner or random_perm");
    require(builder_group(b) == group, ErrorCode::invalid_argument,
            "builder acts by " + builder_group(b).describe() + " but the model lives on " + group.describe());
    return b;
}

Enforcement enforcement_param(const json& params) {
    auto e = params.at("enforcement").get<std::string>();
    if (e == "good_windows") return Enforcement::good_windows;
    if (e == "all_edges") return Enforcement::all_edges;
    fail(ErrorCode::invalid_argument, "enforcement must be good_windows or all_edges");
}

json element_json(const GroupElement& g) { return g.data; }

// ------------------------------------------------------------- experiments

struct Result {
    json outputs = json::object();
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::string method;
    bool sequence = false;
    std::optional<double> value;
    double stderr = 0.0;
};

Result run_pressure(const json& p, const fs::path& base) {
    Model m = model_param(p, base);
    BuilderSpec b = builder_param(p, base, m.group);
    McmcOptions opt;
    opt.seed = p.at("seed").get<std::uint64_t>();
    opt.sweeps = p.at("sweeps").get<int>();
    opt.grid_points = p.at("grid").get<int>();
    auto rows = pressure_estimate(m, b, p.at("sizes").get<std::vector<long long>>(), parse_method(p.at("method")), opt,
                                  enforcement_param(p));
    Result r;
    r.sequence = true;
    r.header = {"n", "log_Z", "pressure_estimate", "stderr", "method", "seed"};
    std::set<std::string> methods;
    json out = json::array();
    for (const auto& row : rows) {
        methods.insert(method_name(row.method));
        r.rows.push_back({std::to_string(row.n), num(row.log_Z), num(row.pressure), num(row.stderr),
                          method_name(row.method), std::to_string(row.seed)});
        out.push_back({{"n", row.n}, {"log_Z", row.log_Z}, {"pressure_estimate", row.pressure}, {"stderr", row.stderr},
                       {"method", method_name(row.method)}, {"seed", row.seed}});
    }
    for (const auto& s : methods) r.method += (r.method.empty() ? "" : "+") + s;
    r.outputs["rows"] = out;
    r.outputs["builder"] = {{"builder", b.builder}, {"d", b.d}, {"k", b.k}, {"seed", b.seed}};
    r.value = rows.back().pressure;
    r.stderr = rows.back().stderr;
    return r;
}

Result run_entropy(const json& p, const fs::path& base) {
    Model m = model_param(p, base);
    BuilderSpec b = builder_param(p, base, m.group);
    McmcOptions opt;
    opt.seed = p.at("seed").get<std::uint64_t>();
    opt.sweeps = p.at("sweeps").get<int>();
    opt.grid_points = p.at("grid").get<int>();
    auto rows = entropy_rate_estimate(m, b, p.at("sizes").get<std::vector<long long>>(), parse_method(p.at("method")),
                                      opt, enforcement_param(p));
    Result r;
    r.sequence = true;
    r.header = {"n", "entropy_rate", "stderr", "method"};
    std::set<std::string> methods;
    json out = json::array();
    for (const auto& row : rows) {
        methods.insert(row.method);
        r.rows.push_back({std::to_string(row.n), num(row.entropy_rate), num(row.stderr), row.method});
        out.push_back({{"n", row.n}, {"entropy_rate", row.entropy_rate}, {"stderr", row.stderr}, {"method", row.method}});
    }
    for (const auto& s : methods) r.method += (r.method.empty() ? "" : "+") + s;
    r.outputs["rows"] = out;
    r.value = rows.back().entropy_rate;
    r.stderr = rows.back().stderr;
    return r;
}

Result run_tssm(const json& p, const fs::path& base) {
    Model m = model_param(p, base);
    const int pad = p.at("pad").get<int>();
    auto v = check_tssm(m.constraints, m.group, p.at("range").get<int>(), p.at("radius").get<int>(), p.at("kmax").get<int>(),
                        pad, static_cast<size_t>(p.at("budget").get<long long>()));
    Result r;
    r.method = "bounded_search";
    r.outputs = {{"verdict", tssm_kind_name(v.kind)}, {"range", v.range},         {"radius", v.radius},
                 {"k_max", v.k_max},                  {"patterns_checked", v.patterns_checked}};
    if (v.kind == TssmVerdict::Kind::violated_at) {
        json support = json::array();
        for (const auto& g : v.witness.support) support.push_back(element_json(g));
        r.outputs["witness"] = {{"support", support},
                                {"values", v.witness.values},
                                {"replay", verdict_name(is_globally_admissible(m.constraints, m.group, v.witness, pad))}};
    }
    r.header = {"verdict", "range", "radius", "k_max", "patterns_checked"};
    r.rows.push_back({tssm_kind_name(v.kind), std::to_string(v.range), std::to_string(v.radius), std::to_string(v.k_max),
                      std::to_string(v.patterns_checked)});
    return r;
}

Result run_ssm(const json& p, const fs::path& base) {
    Model m = model_param(p, base);
    auto beta = ssm_profile(m, p.at("rmax").get<int>(), p.at("budget").get<double>());
    Result r;
    r.sequence = true;
    r.method = "ball_enumeration";
    r.header = {"r", "beta_hat"};
    json out = json::array();
    for (size_t i = 0; i < beta.size(); ++i) {
        r.rows.push_back({std::to_string(i), num(beta[i])});
        out.push_back({{"r", i}, {"beta_hat", beta[i]}});
    }
    r.outputs["rows"] = out;
    r.outputs["label"] = "empirical profile";
    r.value = beta.back();
    return r;
}

Result run_kp(const json& p, const fs::path& base) {
    Model m = model_param(p, base);
    const int rad = p.at("r").get<int>();
    const long long N = p.at("N").get<long long>();
    const long long M = p.at("M").get<long long>();
    const auto seed = p.at("seed").get<std::uint64_t>();
    const auto nu = p.at("nu").get<std::string>();
    require(nu == "fixed0" || nu == "mu", ErrorCode::invalid_argument, "nu must be fixed0 or mu");
    const PastKind past = parse_past(p.at("past"));
    auto oracle = make_oracle(parse_oracle(p.at("oracle")), m, rad, p.at("pad").get<int>());
    CayleyBall B = ball(m.group, rad);

    InfoEstimate total, info;
    bool have_info = false;
    if (nu == "fixed0") {
        if (past == PastKind::percolation) {
            total = kp_pressure_at_fixed_point(m, *oracle, rad, N, seed);
        } else {
            auto safe = detect_safe_symbol(m.constraints);
            require(safe.has_value(), ErrorCode::no_safe_symbol, "the fixed-point formula needs a safe symbol");
            total = lex_info(*oracle, m.group, std::vector<int>(static_cast<size_t>(B.size()), *safe), rad);
            total.value += m.phi_constant(*safe);
        }
    } else {
        PatternSampler sampler;
        if (m.group.is_abelian() && m.group.rank() == 1) {
            sampler = transfer_sampler(m, rad);
        } else {
            BuilderSpec b = builder_param(p, base, m.group);
            auto space = std::make_shared<const DerivedSpace>(m, build_sofic(b, p.at("m").get<int>()));
            sampler = glauber_pullback_sampler(space, rad, 200, 2, derive_seed(seed, 77));
        }
        if (past == PastKind::percolation) {
            auto est = kp_pressure_at_measure(m, *oracle, sampler, rad, N, M, seed);
            total = est.total;
            info = est.information;
        } else {
            std::mt19937_64 rng(derive_seed(seed, 0xA5A5));
            std::vector<double> totals, infos;
            for (long long j = 0; j < M; ++j) {
                auto x = sampler(rng);
                double f = lex_info(*oracle, m.group, x, rad).value;
                infos.push_back(f);
                totals.push_back(f + phi_at(m, B, x));
            }
            auto t = mean_stderr(totals), i = mean_stderr(infos);
            total = {t.mean, t.stderr, rad, M, oracle->tag()};
            info = {i.mean, i.stderr, rad, M, oracle->tag()};
        }
        have_info = true;
    }

    json budget_beta = nullptr, budget_c = nullptr, budget = nullptr;
    try {
        KpBudget kb = kp_budget(m, rad, p.at("c_radius").get<int>());
        budget_beta = kb.beta;
        budget_c = kb.c;
        budget = kb.value();
    } catch (const Error& e) {
        if (e.code() != ErrorCode::budget_exceeded) throw;
    }

    Result r;
    r.method = "kieffer_pinsker/" + oracle->tag();
    r.outputs = {{"value", total.value}, {"stderr", total.stderr}, {"r", rad},
                 {"N", total.N},         {"oracle", total.oracle},  {"budget_beta", budget_beta},
                 {"budget_c", budget_c}, {"budget", budget},        {"nu", nu},
                 {"past", past == PastKind::percolation ? "percolation" : "lex"}};
    if (have_info) r.outputs["information"] = {{"value", info.value}, {"stderr", info.stderr}};
    PastSample example = past == PastKind::percolation ? sample_percolation_past(B.size(), rad, derive_seed(seed, 0))
                                                       : lex_past_sample(B);
    r.outputs["past_sample"] = {{"r", example.radius}, {"members", example.members()}};
    r.header = {"value", "stderr", "r", "N", "oracle", "budget_beta", "budget_c"};
    auto cell = [](const json& v) { return v.is_null() ? std::string("") : num(v.get<double>()); };
    r.rows.push_back({num(total.value), num(total.stderr), std::to_string(rad), std::to_string(total.N), total.oracle,
                      cell(budget_beta), cell(budget_c)});
    r.value = total.value;
    r.stderr = total.stderr;
    return r;
}

Result run_saw(const json& p, const fs::path& base) {
    json g = read_json_file(resolve(base, p.at("graph").get<std::string>()).string());
    require(g.is_object() && g.contains("n") && g.at("n").is_number_integer() && g.at("n").get<int>() >= 1,
            ErrorCode::schema, "graph needs an integer n >= 1");
    const int n = g.at("n").get<int>();
    std::vector<std::vector<int>> adj(static_cast<size_t>(n));
    if (g.contains("edges")) {
        require(g.at("edges").is_array(), ErrorCode::schema, "edges must be an array of pairs");
        for (const auto& e : g.at("edges")) {
            require(e.is_array() && e.size() == 2 && e[0].is_number_integer() && e[1].is_number_integer(),
                    ErrorCode::schema, "each edge is a pair of vertex indices");
            int u = e[0].get<int>(), v = e[1].get<int>();
            require(u >= 0 && u < n && v >= 0 && v < n, ErrorCode::schema, "edge endpoint outside the graph");
            if (u == v) continue;
            adj[static_cast<size_t>(u)].push_back(v);
            adj[static_cast<size_t>(v)].push_back(u);
        }
    }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    std::vector<int> pins;
    if (g.contains("pins")) {
        const json& pj = g.at("pins");
        require(pj.is_array() && static_cast<int>(pj.size()) == n, ErrorCode::schema, "pins must list one entry per vertex");
        for (const auto& x : pj) {
            require(x.is_number_integer(), ErrorCode::schema, "pins are -1, 0 or 1");
            pins.push_back(x.get<int>());
        }
    }
    const int root = p.at("root").get<int>();
    const double lambda = p.at("lambda").get<double>();
    require(root >= 0 && root < n, ErrorCode::invalid_argument, "root outside the graph");
    double marginal = hardcore_marginal_via_saw(adj, root, lambda, pins);
    auto tree = build_saw_tree(adj, root, pins);
    Result r;
    r.method = "saw_tree";
    r.outputs = {{"root", root}, {"lambda", lambda}, {"marginal", marginal}, {"tree_nodes", tree.size()},
                 {"tree_depth", tree.depth()}};
    r.header = {"root", "lambda", "marginal", "tree_nodes"};
    r.rows.push_back({std::to_string(root), num(lambda), num(marginal), std::to_string(tree.size())});
    r.value = marginal;
    return r;
}

Result run_sofic_stats(const json& p, const fs::path&) {
    BuilderSpec b;
    b.builder = p.at("builder").get<std::string>();
    b.d = p.at("d").get<int>();
    b.k = p.at("k").get<int>();
    b.seed = p.at("seed").get<std::uint64_t>();
    require(b.builder == "torus" || b.builder == "folner" || b.builder == "random_perm", ErrorCode::schema,
            "builder must be torus, folner or random_perm");
    const int rad = p.at("r").get<int>();
    SoficMap sigma = build_sofic(b, p.at("m").get<int>());
    CayleyBall F = ball(sigma.group(), rad);
    auto rep = good_vertices(sigma, F);
    auto chk = check_sofic(sigma, F, p.at("delta").get<double>());
    Result r;
    r.method = b.builder;
    r.outputs = {{"group", sigma.group().describe()},
                 {"n", sigma.size()},
                 {"radius", rep.radius},
                 {"ball_size", rep.ball_size},
                 {"good_count", rep.good_vertices.size()},
                 {"good_fraction", rep.fraction},
                 {"multiplicative_defect", rep.multiplicative_defect},
                 {"trace_defect", rep.trace_defect},
                 {"sofic_ok", chk.ok},
                 {"coupling_fraction", coupling_check(sigma, rad)}};
    r.header = {"n", "radius", "good_fraction", "multiplicative_defect", "trace_defect"};
    r.rows.push_back({std::to_string(sigma.size()), std::to_string(rad), num(rep.fraction), num(rep.multiplicative_defect),
                      num(rep.trace_defect)});
    r.value = rep.fraction;
    return r;
}

struct LoadedConfig {
    std::string experiment;
    json params;
    fs::path base;
    std::optional<std::string> output;
    std::optional<std::string> format;
};

LoadedConfig load_config(const std::string& path) {
    json j = read_json_file(path);
    require(j.is_object(), ErrorCode::schema, "config must be an object");
    static const std::set<std::string> top{"experiment", "model", "sofic", "params", "seed", "output", "format"};
    for (const auto& [key, _] : j.items()) require(top.contains(key), ErrorCode::schema, "unknown config key '" + key + "'");
    LoadedConfig c;
    c.base = fs::path(path).parent_path();
    require(j.contains("experiment") && j.at("experiment").is_string(), ErrorCode::schema, "config needs an experiment");
    c.experiment = j.at("experiment").get<std::string>();
    c.params = j.value("params", json::object());
    require(c.params.is_object(), ErrorCode::schema, "params must be an object");
    if (j.contains("model")) c.params["model"] = j.at("model");
    if (j.contains("seed")) c.params["seed"] = j.at("seed");
    if (j.contains("sofic")) {
        const json& s = j.at("sofic");
        require(s.is_object(), ErrorCode::schema, "sofic must be an object");
        if (s.contains("builder")) c.params["builder"] = s.at("builder");
        if (s.contains("params")) {
            require(s.at("params").is_object(), ErrorCode::schema, "sofic.params must be an object");
            for (const auto& [k, v] : s.at("params").items()) {
                if (k == "d" || k == "k") {
                    c.params[k] = v;
                } else if (k == "m") {
                    if (c.experiment == "pressure" || c.experiment == "entropy") {
                        if (!c.params.contains("sizes")) c.params["sizes"] = json::array({v});
                    } else if (!c.params.contains("m")) {
                        c.params["m"] = v;
                    }
                } else {
                    fail(ErrorCode::schema, "unknown sofic parameter '" + k + "'");
                }
            }
        }
        if (s.contains("seed")) c.params["seed"] = s.at("seed");
    }
    if (c.experiment == "compare") {
        for (const char* key : {"a", "b"})
            if (c.params.contains(key) && c.params.at(key).is_string())
                c.params[key] = resolve(c.base, c.params.at(key).get<std::string>()).string();
    }
    if (j.contains("output")) {
        require(j.at("output").is_string(), ErrorCode::schema, "output must be a path");
        c.output = resolve(c.base, j.at("output").get<std::string>()).string();
    }
    if (j.contains("format")) {
        require(j.at("format") == "csv" || j.at("format") == "json", ErrorCode::schema, "format must be csv or json");
        c.format = j.at("format").get<std::string>();
    }
    return c;
}

struct Record {
    std::string experiment;
    json inputs;
    Result result;
    double wall_time = 0.0;
};

Record run_experiment(const std::string& experiment, const json& given, const fs::path& base);

Result run_compare(const json& p, const fs::path&) {
    auto ca = load_config(p.at("a").get<std::string>());
    auto cb = load_config(p.at("b").get<std::string>());
    require(ca.experiment == cb.experiment, ErrorCode::type_mismatch,
            "cannot compare " + ca.experiment + " with " + cb.experiment);
    require(ca.experiment != "compare", ErrorCode::invalid_argument, "compare configs must name a base experiment");
    Record ra = run_experiment(ca.experiment, ca.params, ca.base);
    Record rb = run_experiment(cb.experiment, cb.params, cb.base);
    require(ra.result.value.has_value() && rb.result.value.has_value(), ErrorCode::type_mismatch,
            ca.experiment + " has no scalar result to compare");
    const double va = *ra.result.value, vb = *rb.result.value;
    const double sa = ra.result.stderr, sb = rb.result.stderr;
    const double tol = p.at("tolerance").get<double>(), k = p.at("sigmas").get<double>();
    const double diff = std::abs(va - vb), joint = std::hypot(sa, sb), threshold = tol + k * joint;
    const bool pass = diff <= threshold;
    std::ostringstream arithmetic;
    arithmetic << "|" << num(va) << " - " << num(vb) << "| = " << num(diff) << (pass ? " <= " : " > ") << num(tol) << " + "
               << num(k) << " * " << num(joint) << " = " << num(threshold);
    Result r;
    r.method = "compare/" + ca.experiment;
    r.outputs = {{"verdict", pass ? "PASS" : "FAIL"},
                 {"experiment", ca.experiment},
                 {"a", {{"config", p.at("a")}, {"value", va}, {"stderr", sa}, {"method", ra.result.method}}},
                 {"b", {{"config", p.at("b")}, {"value", vb}, {"stderr", sb}, {"method", rb.result.method}}},
                 {"diff", diff},
                 {"joint_stderr", joint},
                 {"tolerance", tol},
                 {"sigmas", k},
                 {"threshold", threshold},
                 {"arithmetic", arithmetic.str()}};
    r.header = {"verdict", "value_a", "value_b", "diff", "threshold"};
    r.rows.push_back({pass ? "PASS" : "FAIL", num(va), num(vb), num(diff), num(threshold)});
    return r;
}

Record run_experiment(const std::string& experiment, const json& given, const fs::path& base) {
    static const std::map<std::string, std::function<Result(const json&, const fs::path&)>> table{
        {"pressure", run_pressure},      {"entropy", run_entropy},   {"tssm-check", run_tssm},
        {"ssm-profile", run_ssm},        {"kp-estimate", run_kp},    {"saw-marginal", run_saw},
        {"sofic-stats", run_sofic_stats}, {"compare", run_compare}};
    Record rec;
    rec.experiment = experiment;
    rec.inputs = materialize(experiment, given);
    auto start = std::chrono::steady_clock::now();
    rec.result = table.at(experiment)(rec.inputs, base);
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

json provenance(const Record& rec) {
    return {{"version", SOFICLAB_VERSION},
            {"seed", rec.inputs.contains("seed") ? rec.inputs.at("seed") : json(nullptr)},
            {"method", rec.result.method},
            {"conventions",
             {{"letters", "2i = s_i, 2i+1 = s_i^-1; a word acts last letter first"},
              {"ball_order", "length-lex over letters"},
              {"enforcement", rec.inputs.contains("enforcement") ? rec.inputs.at("enforcement") : json("good_windows")}}},
            {"caps",
             {{"SOFICLAB_EXACT_CAP", static_cast<int>(exact_cap_bits())},
              {"SOFICLAB_TABLE_CAP", static_cast<int>(table_cap_bits())}}},
            {"wall_time_s", rec.wall_time}};
}

std::string render(const Record& rec, const std::string& format) {
    if (format == "json") {
        json out = {{"experiment", rec.experiment},
                    {"inputs", rec.inputs},
                    {"outputs", rec.result.outputs},
                    {"provenance", provenance(rec)}};
        return out.dump(2) + "\n";
    }
    std::ostringstream os;
    json prov = provenance(rec);
    os << "# soficlab " << SOFICLAB_VERSION << " experiment=" << rec.experiment << "\n";
    os << "# inputs=" << rec.inputs.dump() << "\n";
    os << "# provenance=" << prov.dump() << "\n";
    for (size_t i = 0; i < rec.result.header.size(); ++i) os << (i ? "," : "") << rec.result.header[i];
    os << "\n";
    for (const auto& row : rec.result.rows) {
        for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << "\n";
    }
    return os.str();
}

void emit(const std::string& text, const std::optional<std::string>& out) {
    if (!out) {
        std::cout << text << std::flush;
        return;
    }
    // write to a sibling temporary, then rename, so a failure leaves nothing behind
    fs::path target(*out), tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        require(f.good(), ErrorCode::invalid_argument, "cannot write '" + tmp.string() + "'");
        f << text;
        require(f.good(), ErrorCode::invalid_argument, "cannot write '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

// ---------------------------------------------------------------- flags

/// Collects subcommand flags that were actually given into a params object.
class Flags {
public:
    explicit Flags(CLI::App* app) : app_(app) {}

    Flags& str(const std::string& name, const std::string& key, const std::string& help) {
        auto holder = std::make_shared<std::string>();
        add(app_->add_option(name, *holder, help), [holder, key](json& j) { j[key] = *holder; });
        return *this;
    }
    Flags& integer(const std::string& name, const std::string& key, const std::string& help) {
        auto holder = std::make_shared<long long>();
        add(app_->add_option(name, *holder, help), [holder, key](json& j) { j[key] = *holder; });
        return *this;
    }
    Flags& seed(const std::string& help) {
        auto holder = std::make_shared<std::uint64_t>();
        add(app_->add_option("--seed", *holder, help), [holder](json& j) { j["seed"] = *holder; });
        return *this;
    }
    Flags& number(const std::string& name, const std::string& key, const std::string& help) {
        auto holder = std::make_shared<double>();
        add(app_->add_option(name, *holder, help), [holder, key](json& j) { j[key] = *holder; });
        return *this;
    }
    Flags& list(const std::string& name, const std::string& key, const std::string& help) {
        auto holder = std::make_shared<std::vector<long long>>();
        add(app_->add_option(name, *holder, help)->delimiter(','), [holder, key](json& j) { j[key] = *holder; });
        return *this;
    }

    [[nodiscard]] json collect() const {
        json j = json::object();
        for (const auto& [opt, store] : entries_)
            if (opt->count() > 0) store(j);
        return j;
    }
    [[nodiscard]] CLI::App* app() const { return app_; }

private:
    void add(CLI::Option* opt, std::function<void(json&)> store) { entries_.emplace_back(opt, std::move(store)); }
    CLI::App* app_;
    std::vector<std::pair<CLI::Option*, std::function<void(json&)>>> entries_;
};

void sequence_flags(Flags& f) {
    f.str("--model", "model", "model JSON file")
        .number("--lambda", "lambda", "activity override for two-symbol models")
        .str("--builder", "builder", "torus | folner | random_perm")
        .integer("--d", "d", "dimension for torus/folner")
        .integer("--k", "k", "rank for random_perm")
        .seed("seed for random builders and MCMC")
        .list("--sizes", "sizes", "comma-separated sizes (side m, or n for random_perm)")
        .str("--method", "method", "auto | exact | transfer | mcmc")
        .str("--enforcement", "enforcement", "good_windows | all_edges")
        .integer("--sweeps", "sweeps", "MCMC sweeps per grid point")
        .integer("--grid", "grid", "MCMC grid points");
}

int report_error(const std::string& name, int code, const std::string& message) {
    json e = {{"error", name}, {"code", code}, {"message", message}};
    std::cerr << e.dump() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"soficlab: sofic pressure, entropy and Kieffer-Pinsker experiments"};
    app.set_version_flag("--version", SOFICLAB_VERSION);
    app.require_subcommand(1);
    app.fallthrough();
    bool as_json = false, as_csv = false;
    std::string out_path;
    app.add_flag("--json", as_json, "emit a JSON record");
    app.add_flag("--csv", as_csv, "emit CSV");
    auto* out_opt = app.add_option("--out", out_path, "write output to this file instead of stdout");

    std::vector<std::unique_ptr<Flags>> flags;
    auto sub = [&](const std::string& name, const std::string& help) {
        flags.push_back(std::make_unique<Flags>(app.add_subcommand(name, help)));
        return flags.back().get();
    };

    sequence_flags(*sub("pressure", "log Z_n / n along a sofic sequence"));
    sequence_flags(*sub("entropy", "H(mu_n) / n along a sofic sequence"));
    sub("tssm-check", "bounded topological strong spatial mixing check")
        ->str("--model", "model", "model JSON file")
        .integer("--range", "range", "window range m")
        .integer("--radius", "radius", "search radius R")
        .integer("--kmax", "kmax", "largest pattern support")
        .integer("--pad", "pad", "padding for global admissibility")
        .integer("--budget", "budget", "pattern budget");
    sub("ssm-profile", "empirical strong spatial mixing profile")
        ->str("--model", "model", "model JSON file")
        .number("--lambda", "lambda", "activity override")
        .integer("--rmax", "rmax", "largest radius")
        .number("--budget", "budget", "boundary enumeration budget");
    sub("kp-estimate", "Kieffer-Pinsker pressure estimate")
        ->str("--model", "model", "model JSON file")
        .number("--lambda", "lambda", "activity override")
        .str("--oracle", "oracle", "transfer | ball | saw")
        .integer("--r", "r", "truncation radius")
        .integer("--N", "N", "past samples (per pattern for --nu mu)")
        .str("--nu", "nu", "fixed0 | mu")
        .integer("--M", "M", "outer pattern samples for --nu mu")
        .str("--past", "past", "percolation | lex")
        .integer("--pad", "pad", "ball/saw oracle padding")
        .integer("--c-radius", "c_radius", "radius for the uniform bound c")
        .str("--builder", "builder", "builder for Glauber pullbacks off Z^1")
        .integer("--d", "d", "builder dimension")
        .integer("--k", "k", "builder rank")
        .integer("--m", "m", "builder size")
        .seed("Monte Carlo seed");
    sub("saw-marginal", "hardcore marginal through the self-avoiding-walk tree")
        ->str("--graph", "graph", "graph JSON {n, edges, pins}")
        .integer("--root", "root", "root vertex")
        .number("--lambda", "lambda", "activity");
    sub("sofic-stats", "goodness of a sofic approximation")
        ->str("--builder", "builder", "torus | folner | random_perm")
        .integer("--d", "d", "dimension")
        .integer("--k", "k", "rank")
        .integer("--m", "m", "side m, or n for random_perm")
        .integer("--r", "r", "ball radius")
        .number("--delta", "delta", "sofic tolerance")
        .seed("builder seed");
    sub("compare", "compare the scalar results of two run configs")
        ->str("--a", "a", "first config")
        .str("--b", "b", "second config")
        .number("--tolerance", "tolerance", "absolute tolerance")
        .number("--sigmas", "sigmas", "multiplier on the joint stderr");
    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    std::string config_path;
    run->add_option("--config", config_path, "config JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(error_code_name(ErrorCode::invalid_argument), static_cast<int>(ErrorCode::invalid_argument),
                            e.what());
    }

    try {
        require(!(as_json && as_csv), ErrorCode::invalid_argument, "--json and --csv are exclusive");
        std::string experiment;
        json params;
        fs::path base;
        std::optional<std::string> out, format;
        if (run->parsed()) {
            LoadedConfig c = load_config(config_path);
            experiment = c.experiment;
            params = c.params;
            base = c.base;
            out = c.output;
            format = c.format;
        } else {
            for (const auto& f : flags)
                if (f->app()->parsed()) {
                    experiment = f->app()->get_name();
                    params = f->collect();
                }
        }
        if (out_opt->count() > 0) out = out_path;
        if (as_json) format = "json";
        if (as_csv) format = "csv";
        Record rec = run_experiment(experiment, params, base);
        if (!format) format = rec.result.sequence ? "csv" : "json";
        emit(render(rec, *format), out);
        if (experiment == "compare" && rec.result.outputs.at("verdict") == "FAIL") return exit_compare_fail;
        return 0;
    } catch (const Error& e) {
        std::string message = e.what();
        const std::string prefix = std::string(error_code_name(e.code())) + ": ";
        if (message.rfind(prefix, 0) == 0) message.erase(0, prefix.size());
        return report_error(error_code_name(e.code()), static_cast<int>(e.code()), message);
    } catch (const json::exception& e) {
        return report_error(error_code_name(ErrorCode::schema), static_cast<int>(ErrorCode::schema), e.what());
    } catch (const std::exception& e) {
        return report_error("InternalError", exit_internal, e.what());
    }
}
