#pragma once

// Nearest-neighbour constraint structures and potentials.
//
// phi(x) = h(x(1)) + sum_i J_i(x(1), x(s_i)) over positive generators s_i;
// the relation R_i constrains pairs (x(g), x(s_i g)).

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "soficlab/cayley.hpp"
#include "soficlab/error.hpp"

namespace soficlab {

struct ConstraintStructure {
    int alphabet = 0;
    /// Per positive generator, row-major alphabet x alphabet allowed-pair flags.
    std::vector<std::vector<char>> relations;

    [[nodiscard]] int num_generators() const noexcept { return static_cast<int>(relations.size()); }
    [[nodiscard]] bool allowed(int gen, int a, int b) const {
        return relations[static_cast<size_t>(gen)][static_cast<size_t>(a * alphabet + b)] != 0;
    }
};

struct Potential {
    std::vector<double> vertex_log_weights;
    /// Per positive generator, row-major; an empty entry means J_i = 0.
    std::vector<std::vector<double>> edge_log_weights;

    [[nodiscard]] double vertex(int a) const { return vertex_log_weights[static_cast<size_t>(a)]; }
    [[nodiscard]] double edge(int gen, int a, int b, int alphabet) const {
        if (static_cast<size_t>(gen) >= edge_log_weights.size()) return 0.0;
        const auto& J = edge_log_weights[static_cast<size_t>(gen)];
        return J.empty() ? 0.0 : J[static_cast<size_t>(a * alphabet + b)];
    }
    /// max|h| + sum_i max|J_i|
    [[nodiscard]] double norm() const {
        double n = 0.0;
        for (double h : vertex_log_weights) n = std::max(n, std::abs(h));
        for (const auto& J : edge_log_weights) {
            double m = 0.0;
            for (double j : J) m = std::max(m, std::abs(j));
            n += m;
        }
        return n;
    }
};

struct Model {
    std::string name;
    GroupSpec group;
    ConstraintStructure constraints;
    Potential potential;

    [[nodiscard]] int alphabet() const noexcept { return constraints.alphabet; }
    [[nodiscard]] int num_generators() const noexcept { return constraints.num_generators(); }
    [[nodiscard]] bool allowed(int gen, int a, int b) const { return constraints.allowed(gen, a, b); }
    [[nodiscard]] double h(int a) const { return potential.vertex(a); }
    [[nodiscard]] double J(int gen, int a, int b) const { return potential.edge(gen, a, b, alphabet()); }

    /// phi evaluated on the constant configuration a^Gamma.
    [[nodiscard]] double phi_constant(int a) const {
        double v = h(a);
        for (int gen = 0; gen < num_generators(); ++gen) v += J(gen, a, a);
        return v;
    }
};

/// Throws SchemaError on shape or finiteness violations.
inline void validate(const Model& m) {
    const int a = m.alphabet();
    require(a >= 1, ErrorCode::schema, "alphabet must be >= 1");
    require(m.num_generators() == m.group.rank(), ErrorCode::schema,
            "need one relation per positive generator of " + m.group.describe());
    for (const auto& R : m.constraints.relations)
        require(R.size() == static_cast<size_t>(a * a), ErrorCode::schema, "relation matrix has wrong shape");
    require(m.potential.vertex_log_weights.size() == static_cast<size_t>(a), ErrorCode::schema,
            "vertex_log_weights must have one entry per symbol");
    for (double h : m.potential.vertex_log_weights)
        require(std::isfinite(h), ErrorCode::schema, "vertex log-weights must be finite");
    require(m.potential.edge_log_weights.size() <= static_cast<size_t>(m.num_generators()), ErrorCode::schema,
            "too many edge log-weight matrices");
    for (const auto& J : m.potential.edge_log_weights) {
        require(J.empty() || J.size() == static_cast<size_t>(a * a), ErrorCode::schema,
                "edge log-weight matrix has wrong shape");
        for (double j : J) require(std::isfinite(j), ErrorCode::schema, "edge log-weights must be finite");
    }
}

/// Generators whose relation allows no pair at all (X is then empty).
inline std::vector<int> empty_relations(const ConstraintStructure& cs) {
    std::vector<int> out;
    for (int gen = 0; gen < cs.num_generators(); ++gen) {
        const auto& R = cs.relations[static_cast<size_t>(gen)];
        if (std::none_of(R.begin(), R.end(), [](char c) { return c != 0; })) out.push_back(gen);
    }
    return out;
}

/// Smallest symbol whose row and column are all-allowed in every relation.
inline std::optional<int> detect_safe_symbol(const ConstraintStructure& cs) {
    for (int s = 0; s < cs.alphabet; ++s) {
        bool safe = true;
        for (int gen = 0; gen < cs.num_generators() && safe; ++gen)
            for (int b = 0; b < cs.alphabet && safe; ++b)
                safe = cs.allowed(gen, s, b) && cs.allowed(gen, b, s);
        if (safe) return s;
    }
    return std::nullopt;
}

namespace models {

inline std::vector<char> relation_all(int a) { return std::vector<char>(static_cast<size_t>(a * a), 1); }

/// Independent sets with activity lambda: forbid (1,1), h(1) = log lambda.
inline Model hardcore(const GroupSpec& group, double lambda) {
    require(lambda > 0.0, ErrorCode::invalid_argument, "hardcore activity must be positive");
    Model m{"hardcore", group, {2, {}}, {{0.0, std::log(lambda)}, {}}};
    for (int gen = 0; gen < group.rank(); ++gen) m.constraints.relations.push_back({1, 1, 1, 0});
    return m;
}

/// Proper 2-colourings: forbid (0,0) and (1,1).
inline Model checkerboard(const GroupSpec& group) {
    Model m{"checkerboard", group, {2, {}}, {{0.0, 0.0}, {}}};
    for (int gen = 0; gen < group.rank(); ++gen) m.constraints.relations.push_back({0, 1, 1, 0});
    return m;
}

inline Model full_shift(const GroupSpec& group, int alphabet) {
    Model m{"full_shift", group, {alphabet, {}}, {std::vector<double>(static_cast<size_t>(alphabet), 0.0), {}}};
    for (int gen = 0; gen < group.rank(); ++gen) m.constraints.relations.push_back(relation_all(alphabet));
    return m;
}

/// Unconstrained two-state model with J(a,b) = coupling * [a == b] and h(1) = field.
inline Model ising(const GroupSpec& group, double coupling, double field = 0.0) {
    Model m{"ising", group, {2, {}}, {{0.0, field}, {}}};
    for (int gen = 0; gen < group.rank(); ++gen) {
        m.constraints.relations.push_back(relation_all(2));
        m.potential.edge_log_weights.push_back({coupling, 0.0, 0.0, coupling});
    }
    return m;
}

} // namespace models

} // namespace soficlab
