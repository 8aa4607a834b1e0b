#pragma once

// JSON model files.
//
// {
//   "name": "hardcore",
//   "group": {"kind": "Zd", "d": 1}            or {"kind": "Free", "k": 2},
//   "alphabet": 2,
//   "relations": {"e1": [[true, true], [true, false]]},
//   "vertex_log_weights": [0.0, 0.0],
//   "edge_log_weights": {"e1": [[0.0, 0.0], [0.0, 0.0]]},      (optional)
//   "sofic": {"builder": "torus", "params": {"d": 1, "m": 8}, "seed": 1}   (optional)
// }

#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "soficlab/derived.hpp"
#include "soficlab/error.hpp"
#include "soficlab/model.hpp"

namespace soficlab {

using json = nlohmann::json;

namespace detail {

inline const json& field(const json& j, const char* key) {
    require(j.is_object() && j.contains(key), ErrorCode::schema, std::string("missing field '") + key + "'");
    return j.at(key);
}

inline int int_field(const json& j, const char* key) {
    const json& v = field(j, key);
    require(v.is_number_integer(), ErrorCode::schema, std::string("field '") + key + "' must be an integer");
    return v.get<int>();
}

template <class T, class Check>
std::vector<T> square_matrix(const json& m, int a, const std::string& what, Check check) {
    require(m.is_array() && static_cast<int>(m.size()) == a, ErrorCode::schema, what + " must have " + std::to_string(a) + " rows");
    std::vector<T> out;
    for (const auto& row : m) {
        require(row.is_array() && static_cast<int>(row.size()) == a, ErrorCode::schema,
                what + " rows must have " + std::to_string(a) + " entries");
        for (const auto& e : row) {
            require(check(e), ErrorCode::schema, what + " has an entry of the wrong type");
            out.push_back(e.get<T>());
        }
    }
    return out;
}

} // namespace detail

inline GroupSpec group_from_json(const json& g) {
    const json& kind = detail::field(g, "kind");
    require(kind.is_string(), ErrorCode::schema, "group kind must be a string");
    if (kind == "Zd") return GroupSpec::zd(detail::int_field(g, "d"));
    if (kind == "Free") return GroupSpec::free_group(detail::int_field(g, "k"));
    fail(ErrorCode::schema, "group kind must be \"Zd\" or \"Free\"");
}

inline json group_to_json(const GroupSpec& g) {
    if (g.is_abelian()) return {{"kind", "Zd"}, {"d", g.rank()}};
    return {{"kind", "Free"}, {"k", g.rank()}};
}

inline Model model_from_json(const json& j) {
    require(j.is_object(), ErrorCode::schema, "model file must hold a JSON object");
    GroupSpec group = [&] {
        try {
            return group_from_json(detail::field(j, "group"));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::invalid_argument) fail(ErrorCode::schema, e.what());
            throw;
        }
    }();
    const int a = detail::int_field(j, "alphabet");
    require(a >= 1, ErrorCode::schema, "alphabet must be >= 1");
    Model m{j.value("name", std::string("model")), group, {a, {}}, {{}, {}}};

    const json& rel = detail::field(j, "relations");
    require(rel.is_object(), ErrorCode::schema, "relations must be an object keyed by generator");
    for (int gen = 0; gen < group.rank(); ++gen) {
        std::string name = group.generator_name(gen);
        require(rel.contains(name), ErrorCode::schema, "relations lack generator '" + name + "'");
        auto flags = detail::square_matrix<bool>(rel.at(name), a, "relation " + name,
                                                 [](const json& e) { return e.is_boolean(); });
        m.constraints.relations.emplace_back(flags.begin(), flags.end());
    }
    require(static_cast<int>(rel.size()) == group.rank(), ErrorCode::schema, "relations name an unknown generator");

    const json& h = detail::field(j, "vertex_log_weights");
    require(h.is_array() && static_cast<int>(h.size()) == a, ErrorCode::schema,
            "vertex_log_weights must have one number per symbol");
    for (const auto& e : h) {
        require(e.is_number(), ErrorCode::schema, "vertex_log_weights must be numbers");
        m.potential.vertex_log_weights.push_back(e.get<double>());
    }
    if (j.contains("edge_log_weights")) {
        const json& ew = j.at("edge_log_weights");
        require(ew.is_object(), ErrorCode::schema, "edge_log_weights must be an object keyed by generator");
        for (int gen = 0; gen < group.rank(); ++gen) {
            std::string name = group.generator_name(gen);
            if (!ew.contains(name)) {
                m.potential.edge_log_weights.emplace_back();
                continue;
            }
            m.potential.edge_log_weights.push_back(detail::square_matrix<double>(
                ew.at(name), a, "edge_log_weights " + name, [](const json& e) { return e.is_number(); }));
        }
    }
    validate(m);
    return m;
}

inline json model_to_json(const Model& m) {
    json j;
    j["name"] = m.name;
    j["group"] = group_to_json(m.group);
    j["alphabet"] = m.alphabet();
    const int a = m.alphabet();
    json rel = json::object(), ew = json::object();
    for (int gen = 0; gen < m.num_generators(); ++gen) {
        json R = json::array(), W = json::array();
        for (int x = 0; x < a; ++x) {
            json rrow = json::array(), wrow = json::array();
            for (int y = 0; y < a; ++y) {
                rrow.push_back(m.allowed(gen, x, y));
                wrow.push_back(m.J(gen, x, y));
            }
            R.push_back(rrow);
            W.push_back(wrow);
        }
        rel[m.group.generator_name(gen)] = R;
        ew[m.group.generator_name(gen)] = W;
    }
    j["relations"] = rel;
    j["vertex_log_weights"] = m.potential.vertex_log_weights;
    j["edge_log_weights"] = ew;
    return j;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::schema, "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCode::schema, "'" + path + "' is not valid JSON: " + e.what());
    }
}

inline Model load_model(const std::string& path) { return model_from_json(read_json_file(path)); }

/// Optional "sofic" block of a model file.
inline std::optional<BuilderSpec> builder_from_json(const json& j) {
    if (!j.contains("sofic")) return std::nullopt;
    const json& s = j.at("sofic");
    BuilderSpec b;
    const json& name = detail::field(s, "builder");
    require(name.is_string(), ErrorCode::schema, "sofic.builder must be a string");
    b.builder = name.get<std::string>();
    require(b.builder == "torus" || b.builder == "folner" || b.builder == "random_perm", ErrorCode::schema,
            "sofic.builder must be torus, folner or random_perm");
    if (s.contains("params")) {
        const json& p = s.at("params");
        if (p.contains("d")) b.d = detail::int_field(p, "d");
        if (p.contains("k")) b.k = detail::int_field(p, "k");
    }
    if (s.contains("seed")) {
        require(s.at("seed").is_number_unsigned(), ErrorCode::schema, "sofic.seed must be a nonnegative integer");
        b.seed = s.at("seed").get<std::uint64_t>();
    }
    return b;
}

} // namespace soficlab
