#pragma once

// Finitely generated groups Z^d and F_k: elements, word metric, balls.
//
// Letters are integers in [0, 2*rank): letter 2i is the generator s_i and
// letter 2i+1 its inverse. A word w[0..l-1] denotes the product
// w[0] * w[1] * ... * w[l-1].

#include <algorithm>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "soficlab/error.hpp"

namespace soficlab {

enum class GroupKind { free_abelian, free };

class GroupSpec {
public:
    static GroupSpec zd(int d) {
        require(d >= 1, ErrorCode::invalid_argument, "Z^d needs d >= 1");
        return GroupSpec(GroupKind::free_abelian, d);
    }
    static GroupSpec free_group(int k) {
        require(k >= 1, ErrorCode::invalid_argument, "F_k needs k >= 1");
        return GroupSpec(GroupKind::free, k);
    }

    [[nodiscard]] GroupKind kind() const noexcept { return kind_; }
    [[nodiscard]] int rank() const noexcept { return rank_; }
    [[nodiscard]] int num_letters() const noexcept { return 2 * rank_; }
    [[nodiscard]] bool is_abelian() const noexcept { return kind_ == GroupKind::free_abelian; }

    static constexpr int inverse_letter(int letter) noexcept { return letter ^ 1; }
    static constexpr int letter_generator(int letter) noexcept { return letter >> 1; }
    static constexpr bool letter_is_inverse(int letter) noexcept { return (letter & 1) != 0; }

    /// "e1".."ed" for Z^d, "s1".."sk" for F_k.
    [[nodiscard]] std::string generator_name(int gen) const {
        return (is_abelian() ? "e" : "s") + std::to_string(gen + 1);
    }
    [[nodiscard]] std::string letter_name(int letter) const {
        auto name = generator_name(letter_generator(letter));
        return letter_is_inverse(letter) ? name + "^-1" : name;
    }
    [[nodiscard]] std::string describe() const {
        return (is_abelian() ? "Z^" : "F_") + std::to_string(rank_);
    }

    friend bool operator==(const GroupSpec&, const GroupSpec&) = default;

private:
    GroupSpec(GroupKind kind, int rank) : kind_(kind), rank_(rank) {}
    GroupKind kind_;
    int rank_;
};

/// For Z^d: integer coordinates (size d). For F_k: a reduced word of letters.
struct GroupElement {
    std::vector<int> data;
    friend auto operator<=>(const GroupElement&, const GroupElement&) = default;
};

inline GroupElement identity(const GroupSpec& spec) {
    if (spec.is_abelian()) return GroupElement{std::vector<int>(static_cast<size_t>(spec.rank()), 0)};
    return GroupElement{};
}

inline GroupElement letter_element(const GroupSpec& spec, int letter) {
    require(letter >= 0 && letter < spec.num_letters(), ErrorCode::invalid_argument, "letter out of range");
    if (spec.is_abelian()) {
        auto g = identity(spec);
        g.data[static_cast<size_t>(GroupSpec::letter_generator(letter))] = GroupSpec::letter_is_inverse(letter) ? -1 : 1;
        return g;
    }
    return GroupElement{{letter}};
}

inline GroupElement mul(const GroupSpec& spec, const GroupElement& g, const GroupElement& h) {
    if (spec.is_abelian()) {
        GroupElement out = g;
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += h.data[i];
        return out;
    }
    // free reduction at the junction
    std::vector<int> word = g.data;
    size_t j = 0;
    while (!word.empty() && j < h.data.size() && word.back() == GroupSpec::inverse_letter(h.data[j])) {
        word.pop_back();
        ++j;
    }
    word.insert(word.end(), h.data.begin() + static_cast<std::ptrdiff_t>(j), h.data.end());
    return GroupElement{std::move(word)};
}

inline GroupElement inv(const GroupSpec& spec, const GroupElement& g) {
    GroupElement out;
    if (spec.is_abelian()) {
        out.data.reserve(g.data.size());
        for (int c : g.data) out.data.push_back(-c);
        return out;
    }
    out.data.assign(g.data.rbegin(), g.data.rend());
    for (int& l : out.data) l = GroupSpec::inverse_letter(l);
    return out;
}

inline int word_length(const GroupSpec& spec, const GroupElement& g) {
    if (spec.is_abelian()) {
        int len = 0;
        for (int c : g.data) len += std::abs(c);
        return len;
    }
    return static_cast<int>(g.data.size());
}

/// Canonical word. Z^d elements spell e1-letters first, then e2-letters, ...
inline std::vector<int> to_word(const GroupSpec& spec, const GroupElement& g) {
    if (!spec.is_abelian()) return g.data;
    std::vector<int> word;
    for (int i = 0; i < spec.rank(); ++i) {
        int c = g.data[static_cast<size_t>(i)];
        int letter = c >= 0 ? 2 * i : 2 * i + 1;
        for (int t = 0; t < std::abs(c); ++t) word.push_back(letter);
    }
    return word;
}

inline GroupElement from_word(const GroupSpec& spec, const std::vector<int>& word) {
    GroupElement g = identity(spec);
    for (int l : word) g = mul(spec, g, letter_element(spec, l));
    return g;
}

/// Length-lexicographic order on canonical words.
inline bool canonical_less(const GroupSpec& spec, const GroupElement& g, const GroupElement& h) {
    auto wg = to_word(spec, g);
    auto wh = to_word(spec, h);
    if (wg.size() != wh.size()) return wg.size() < wh.size();
    return wg < wh;
}

/// Vertices ordered by distance from the root (index 0), with labeled
/// directed edges (from, to, gen) meaning to = s_gen * from.
struct RootedGraph {
    struct Edge {
        int from;
        int to;
        int gen;
        friend bool operator==(const Edge&, const Edge&) = default;
    };

    int num_generators = 0;
    std::vector<int> distance;
    std::vector<Edge> edges;

    [[nodiscard]] int size() const noexcept { return static_cast<int>(distance.size()); }

    /// Number of vertices at distance <= r (a prefix of the vertex order).
    [[nodiscard]] int prefix_size(int r) const {
        return static_cast<int>(std::upper_bound(distance.begin(), distance.end(), r) - distance.begin());
    }
    [[nodiscard]] int max_distance() const { return distance.empty() ? -1 : distance.back(); }

    [[nodiscard]] RootedGraph truncate(int r) const {
        RootedGraph out;
        out.num_generators = num_generators;
        int keep = prefix_size(r);
        out.distance.assign(distance.begin(), distance.begin() + keep);
        for (const auto& e : edges)
            if (e.from < keep && e.to < keep) out.edges.push_back(e);
        return out;
    }

    /// Undirected simple adjacency (self-loops dropped, duplicates merged).
    [[nodiscard]] std::vector<std::vector<int>> adjacency() const {
        std::vector<std::vector<int>> adj(distance.size());
        for (const auto& e : edges) {
            if (e.from == e.to) continue;
            adj[static_cast<size_t>(e.from)].push_back(e.to);
            adj[static_cast<size_t>(e.to)].push_back(e.from);
        }
        for (auto& a : adj) {
            std::sort(a.begin(), a.end());
            a.erase(std::unique(a.begin(), a.end()), a.end());
        }
        return adj;
    }
};

struct CayleyBall {
    GroupSpec spec;
    int radius;
    std::vector<GroupElement> elements;
    std::vector<int> lengths;
    std::vector<RootedGraph::Edge> edges;
    std::map<GroupElement, int> index_of;

    [[nodiscard]] int size() const noexcept { return static_cast<int>(elements.size()); }

    /// Index of g in the ball, or -1.
    [[nodiscard]] int find(const GroupElement& g) const {
        auto it = index_of.find(g);
        return it == index_of.end() ? -1 : it->second;
    }
    [[nodiscard]] int prefix_size(int r) const {
        return static_cast<int>(std::upper_bound(lengths.begin(), lengths.end(), r) - lengths.begin());
    }

    [[nodiscard]] RootedGraph graph() const {
        RootedGraph g;
        g.num_generators = spec.rank();
        g.distance = lengths;
        g.edges = edges;
        return g;
    }
};

inline constexpr size_t default_ball_cap = 1'000'000;

/// Closed word-metric ball B_r around the identity, sorted canonically so that
/// ball(r) is a prefix of ball(r+1).
inline CayleyBall ball(const GroupSpec& spec, int r, size_t size_cap = default_ball_cap) {
    require(r >= 0, ErrorCode::invalid_argument, "ball radius must be >= 0");
    std::vector<GroupElement> frontier{identity(spec)};
    std::vector<GroupElement> all = frontier;
    std::map<GroupElement, int> seen{{identity(spec), 0}};
    for (int len = 1; len <= r; ++len) {
        std::vector<GroupElement> next;
        for (const auto& g : frontier) {
            for (int l = 0; l < spec.num_letters(); ++l) {
                GroupElement h = mul(spec, letter_element(spec, l), g);
                if (word_length(spec, h) != len || seen.contains(h)) continue;
                seen.emplace(h, 0);
                next.push_back(h);
                if (seen.size() > size_cap)
                    fail(ErrorCode::cap_exceeded, "ball of radius " + std::to_string(r) + " exceeds size cap");
            }
        }
        all.insert(all.end(), next.begin(), next.end());
        frontier = std::move(next);
    }

    std::vector<std::pair<std::vector<int>, GroupElement>> keyed;
    keyed.reserve(all.size());
    for (auto& g : all) keyed.emplace_back(to_word(spec, g), std::move(g));
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
        return a.first < b.first;
    });

    CayleyBall out{spec, r, {}, {}, {}, {}};
    for (auto& [word, g] : keyed) {
        out.index_of.emplace(g, static_cast<int>(out.elements.size()));
        out.lengths.push_back(static_cast<int>(word.size()));
        out.elements.push_back(std::move(g));
    }
    for (int i = 0; i < out.size(); ++i) {
        for (int gen = 0; gen < spec.rank(); ++gen) {
            int j = out.find(mul(spec, letter_element(spec, 2 * gen), out.elements[static_cast<size_t>(i)]));
            if (j >= 0) out.edges.push_back({i, j, gen});
        }
    }
    return out;
}

/// Label-, direction- and root-preserving isomorphism of two rooted graphs,
/// found by simultaneous traversal. Graphs with two out- (or in-) edges of
/// the same label at one vertex are reported as non-isomorphic.
inline bool rooted_labeled_isomorphic(const RootedGraph& a, const RootedGraph& b) {
    if (a.size() != b.size() || a.edges.size() != b.edges.size() || a.num_generators != b.num_generators)
        return false;
    if (a.size() == 0) return true;
    const int k = a.num_generators;
    auto build = [k](const RootedGraph& g, std::vector<std::vector<int>>& out, std::vector<std::vector<int>>& in) {
        out.assign(static_cast<size_t>(g.size()), std::vector<int>(static_cast<size_t>(k), -1));
        in = out;
        for (const auto& e : g.edges) {
            int& o = out[static_cast<size_t>(e.from)][static_cast<size_t>(e.gen)];
            int& i = in[static_cast<size_t>(e.to)][static_cast<size_t>(e.gen)];
            if (o != -1 || i != -1) return false;
            o = e.to;
            i = e.from;
        }
        return true;
    };
    std::vector<std::vector<int>> out_a, in_a, out_b, in_b;
    if (!build(a, out_a, in_a) || !build(b, out_b, in_b)) return false;

    std::vector<int> map_ab(static_cast<size_t>(a.size()), -1), map_ba(static_cast<size_t>(b.size()), -1);
    std::vector<int> queue{0};
    map_ab[0] = 0;
    map_ba[0] = 0;
    for (size_t head = 0; head < queue.size(); ++head) {
        int u = queue[head];
        int w = map_ab[static_cast<size_t>(u)];
        for (int gen = 0; gen < k; ++gen) {
            for (int dir = 0; dir < 2; ++dir) {
                int x = dir == 0 ? out_a[static_cast<size_t>(u)][static_cast<size_t>(gen)] : in_a[static_cast<size_t>(u)][static_cast<size_t>(gen)];
                int y = dir == 0 ? out_b[static_cast<size_t>(w)][static_cast<size_t>(gen)] : in_b[static_cast<size_t>(w)][static_cast<size_t>(gen)];
                if ((x < 0) != (y < 0)) return false;
                if (x < 0) continue;
                int& mx = map_ab[static_cast<size_t>(x)];
                int& my = map_ba[static_cast<size_t>(y)];
                if (mx == -1 && my == -1) {
                    mx = y;
                    my = x;
                    queue.push_back(x);
                } else if (mx != y || my != x) {
                    return false;
                }
            }
        }
    }
    return static_cast<int>(queue.size()) == a.size();
}

} // namespace soficlab
