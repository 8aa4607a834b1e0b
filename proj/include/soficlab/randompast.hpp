#pragma once

// Invariant random pasts restricted to balls (percolation and lexicographic),
// random vertex orders on V_n, and the diagonal coupling between them.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "soficlab/cayley.hpp"
#include "soficlab/error.hpp"
#include "soficlab/sofic.hpp"
#include "soficlab/stats.hpp"

namespace soficlab {

/// Past of the identity on the first `size` ball elements (canonical order).
struct PastSample {
    int radius = 0;
    std::vector<char> member;
    std::vector<double> chi;  // empty for deterministic pasts

    [[nodiscard]] std::vector<int> members() const {
        std::vector<int> out;
        for (size_t i = 0; i < member.size(); ++i)
            if (member[i]) out.push_back(static_cast<int>(i));
        return out;
    }
};

/// u precedes v iff (chi_u, u) < (chi_v, v).
inline bool precedes(double chi_u, size_t u, double chi_v, size_t v) {
    return chi_u < chi_v || (chi_u == chi_v && u < v);
}

/// Past from given uniforms: g is in the past iff chi_g precedes chi_1.
inline PastSample past_from_uniforms(std::vector<double> chi, int radius) {
    PastSample s;
    s.radius = radius;
    s.member.assign(chi.size(), 0);
    for (size_t i = 1; i < chi.size(); ++i) s.member[i] = precedes(chi[i], i, chi[0], 0) ? 1 : 0;
    s.chi = std::move(chi);
    return s;
}

/// Percolation past on `ball_size` elements of radius r.
inline PastSample sample_percolation_past(int ball_size, int r, std::uint64_t seed) {
    require(ball_size >= 1, ErrorCode::invalid_argument, "ball must contain the identity");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> chi(static_cast<size_t>(ball_size));
    for (double& c : chi) c = U(rng);
    return past_from_uniforms(std::move(chi), r);
}

inline PastSample sample_percolation_past(const GroupSpec& spec, int r, std::uint64_t seed) {
    return sample_percolation_past(ball(spec, r).size(), r, seed);
}

/// Algebraic past on Z^d: g precedes 1 iff g < 0 lexicographically.
inline bool lex_past(const GroupSpec& spec, const GroupElement& g) {
    require(spec.is_abelian(), ErrorCode::invalid_argument, "lexicographic past is defined on Z^d only");
    for (int c : g.data)
        if (c != 0) return c < 0;
    return false;
}

inline PastSample lex_past_sample(const CayleyBall& B) {
    PastSample s;
    s.radius = B.radius;
    for (const auto& g : B.elements) s.member.push_back(lex_past(B.spec, g) ? 1 : 0);
    return s;
}

struct VertexOrder {
    std::vector<Vertex> rank;
    std::vector<double> chi;
};

/// Ranks of i.i.d. uniforms on V_n.
inline VertexOrder sample_vertex_order(const SoficMap& sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    VertexOrder o;
    o.chi.resize(sigma.size());
    for (double& c : o.chi) c = U(rng);
    std::vector<Vertex> by(sigma.size());
    std::iota(by.begin(), by.end(), Vertex{0});
    std::sort(by.begin(), by.end(), [&](Vertex u, Vertex v) { return precedes(o.chi[u], u, o.chi[v], v); });
    o.rank.resize(sigma.size());
    for (size_t i = 0; i < by.size(); ++i) o.rank[by[i]] = static_cast<Vertex>(i);
    return o;
}

/// Lexicographic order on a box or torus of side m (first coordinate most significant).
inline VertexOrder folner_lex_order(const SoficMap& sigma) {
    const auto& prov = sigma.provenance();
    require(prov.builder == "folner" || prov.builder == "torus", ErrorCode::wrong_builder,
            "lexicographic ordering needs a box builder");
    long long d = 0, m = 0;
    for (const auto& [k, v] : prov.params) {
        if (k == "d") d = v;
        if (k == "m") m = v;
    }
    VertexOrder o;
    o.rank.resize(sigma.size());
    for (size_t v = 0; v < sigma.size(); ++v) {
        // index sum_i x_i m^i; lexicographic rank puts x_1 most significant
        size_t rest = v, key = 0;
        std::vector<size_t> coords(static_cast<size_t>(d));
        for (long long i = 0; i < d; ++i) {
            coords[static_cast<size_t>(i)] = rest % static_cast<size_t>(m);
            rest /= static_cast<size_t>(m);
        }
        for (long long i = 0; i < d; ++i) key = key * static_cast<size_t>(m) + coords[static_cast<size_t>(i)];
        o.rank[v] = static_cast<Vertex>(key);
    }
    return o;
}

/// {g in B_r : rank(sigma^g v) < rank(v)}, as ball indices.
inline std::vector<int> pulled_back_past(const SoficMap& sigma, const VertexOrder& order, Vertex v, int r) {
    CayleyBall B = ball(sigma.group(), r);
    std::vector<int> out;
    for (int i = 0; i < B.size(); ++i) {
        Vertex u = sigma_word(sigma, B.elements[static_cast<size_t>(i)], v);
        if (order.rank[u] < order.rank[v]) out.push_back(i);
    }
    return out;
}

/// Group-side past read through the diagonal coupling: chi_g := chi(sigma^g v).
inline PastSample diagonal_past(const SoficMap& sigma, const VertexOrder& order, Vertex v, int r) {
    require(!order.chi.empty(), ErrorCode::invalid_argument, "diagonal coupling needs the uniforms");
    CayleyBall B = ball(sigma.group(), r);
    std::vector<double> chi;
    for (const auto& g : B.elements) chi.push_back(order.chi[sigma_word(sigma, g, v)]);
    return past_from_uniforms(std::move(chi), r);
}

/// Fraction of vertices that are B_r-good (hence window-injective), where the
/// diagonal coupling reproduces the percolation past exactly.
inline double coupling_check(const SoficMap& sigma, int r) {
    if (sigma.size() == 0) return 0.0;
    auto mask = good_mask(sigma, ball(sigma.group(), r));
    size_t good = 0;
    for (char c : mask) good += c != 0;
    return static_cast<double>(good) / static_cast<double>(sigma.size());
}

} // namespace soficlab
