#pragma once

// Sofic approximations as per-letter permutation arrays on V_n = {0..n-1}.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "soficlab/cayley.hpp"
#include "soficlab/error.hpp"

namespace soficlab {

using Vertex = std::uint32_t;

inline constexpr size_t default_vertex_cap = 50'000'000;

struct Provenance {
    std::string builder;
    std::vector<std::pair<std::string, long long>> params;
    std::uint64_t seed = 0;
};

class SoficMap {
public:
    /// `generator_perms[i]` is sigma^{s_i}; inverse letters are derived.
    SoficMap(GroupSpec group, std::vector<std::vector<Vertex>> generator_perms, Provenance provenance)
        : group_(group), provenance_(std::move(provenance)) {
        require(static_cast<int>(generator_perms.size()) == group.rank(), ErrorCode::invalid_argument,
                "one permutation per generator required");
        n_ = generator_perms.empty() ? 0 : generator_perms.front().size();
        perms_.resize(static_cast<size_t>(group.num_letters()));
        for (int gen = 0; gen < group.rank(); ++gen) {
            auto& fwd = generator_perms[static_cast<size_t>(gen)];
            require(fwd.size() == n_, ErrorCode::invalid_argument, "permutations must share a size");
            std::vector<Vertex> back(n_, static_cast<Vertex>(n_));
            for (size_t v = 0; v < n_; ++v) {
                require(fwd[v] < n_ && back[fwd[v]] == n_, ErrorCode::invalid_argument,
                        "generator array is not a permutation");
                back[fwd[v]] = static_cast<Vertex>(v);
            }
            perms_[static_cast<size_t>(2 * gen)] = std::move(fwd);
            perms_[static_cast<size_t>(2 * gen + 1)] = std::move(back);
        }
    }

    [[nodiscard]] const GroupSpec& group() const noexcept { return group_; }
    [[nodiscard]] size_t size() const noexcept { return n_; }
    [[nodiscard]] const Provenance& provenance() const noexcept { return provenance_; }
    [[nodiscard]] const std::vector<Vertex>& letter_perm(int letter) const {
        return perms_[static_cast<size_t>(letter)];
    }

    [[nodiscard]] Vertex apply(int letter, Vertex v) const { return perms_[static_cast<size_t>(letter)][v]; }

    /// sigma^w(v) for the word w[0]...w[l-1]: the last letter acts first.
    [[nodiscard]] Vertex act(const std::vector<int>& word, Vertex v) const {
        for (auto it = word.rbegin(); it != word.rend(); ++it) v = apply(*it, v);
        return v;
    }

private:
    GroupSpec group_;
    size_t n_ = 0;
    std::vector<std::vector<Vertex>> perms_;
    Provenance provenance_;
};

inline Vertex sigma_word(const SoficMap& sigma, const GroupElement& g, Vertex v) {
    require(v < sigma.size(), ErrorCode::invalid_argument, "vertex out of range");
    return sigma.act(to_word(sigma.group(), g), v);
}

namespace detail {

inline size_t checked_power(int m, int d, size_t cap) {
    size_t n = 1;
    for (int i = 0; i < d; ++i) {
        n *= static_cast<size_t>(m);
        if (n > cap) fail(ErrorCode::cap_exceeded, "m^d exceeds the vertex cap");
    }
    return n;
}

} // namespace detail

/// Quotient (Z/mZ)^d with sigma^{e_i}(v) = v + e_i; vertex index sum_i x_i m^i.
inline SoficMap build_torus(int d, int m, size_t cap = default_vertex_cap) {
    require(d >= 1 && m >= 2, ErrorCode::invalid_argument, "torus needs d >= 1, m >= 2");
    const size_t n = detail::checked_power(m, d, cap);
    std::vector<std::vector<Vertex>> perms(static_cast<size_t>(d), std::vector<Vertex>(n));
    size_t stride = 1;
    for (int i = 0; i < d; ++i) {
        for (size_t v = 0; v < n; ++v) {
            size_t coord = (v / stride) % static_cast<size_t>(m);
            size_t next = coord + 1 == static_cast<size_t>(m) ? v - coord * stride : v + stride;
            perms[static_cast<size_t>(i)][v] = static_cast<Vertex>(next);
        }
        stride *= static_cast<size_t>(m);
    }
    return SoficMap(GroupSpec::zd(d), std::move(perms), {"torus", {{"d", d}, {"m", m}}, 0});
}

/// Box {0..m-1}^d: translation inside, and the top face along axis i maps to
/// the bottom face shifted by +1 (mod m) along axis i+1. In d = 1 this is
/// the only completion of the shift, i.e. the cycle.
inline SoficMap build_folner_box(int d, int m, size_t cap = default_vertex_cap) {
    require(d >= 1 && m >= 2, ErrorCode::invalid_argument, "Folner box needs d >= 1, m >= 2");
    const size_t n = detail::checked_power(m, d, cap);
    std::vector<size_t> strides(static_cast<size_t>(d));
    size_t s = 1;
    for (int i = 0; i < d; ++i) {
        strides[static_cast<size_t>(i)] = s;
        s *= static_cast<size_t>(m);
    }
    const auto mm = static_cast<size_t>(m);
    std::vector<std::vector<Vertex>> perms(static_cast<size_t>(d), std::vector<Vertex>(n));
    for (int i = 0; i < d; ++i) {
        const size_t si = strides[static_cast<size_t>(i)];
        for (size_t v = 0; v < n; ++v) {
            size_t coord = (v / si) % mm;
            size_t next;
            if (coord + 1 < mm) {
                next = v + si;
            } else {
                next = v - coord * si;
                if (d > 1) {
                    const size_t sj = strides[static_cast<size_t>((i + 1) % d)];
                    size_t cj = (next / sj) % mm;
                    next = next - cj * sj + ((cj + 1) % mm) * sj;
                }
            }
            perms[static_cast<size_t>(i)][v] = static_cast<Vertex>(next);
        }
    }
    return SoficMap(GroupSpec::zd(d), std::move(perms), {"folner", {{"d", d}, {"m", m}}, 0});
}

/// k independent uniformly random permutations of {0..n-1}.
inline SoficMap build_random_perm(int k, size_t n, std::uint64_t seed) {
    require(k >= 1 && n >= 2, ErrorCode::invalid_argument, "random_perm needs k >= 1, n >= 2");
    std::mt19937_64 rng(seed);
    std::vector<std::vector<Vertex>> perms(static_cast<size_t>(k), std::vector<Vertex>(n));
    for (auto& p : perms) {
        std::iota(p.begin(), p.end(), Vertex{0});
        std::shuffle(p.begin(), p.end(), rng);
    }
    return SoficMap(GroupSpec::free_group(k), std::move(perms),
                    {"random_perm", {{"k", k}, {"n", static_cast<long long>(n)}}, seed});
}

struct GoodnessReport {
    int radius = 0;
    size_t ball_size = 0;
    std::vector<Vertex> good_vertices;
    double fraction = 0.0;
    /// max over g,h in F of |{v : sigma^g sigma^h v != sigma^{gh} v}| / n
    double multiplicative_defect = 0.0;
    /// max over g in F \ {1} of |{v : sigma^g v = v}| / n
    double trace_defect = 0.0;
};

namespace detail {

struct BallWords {
    std::vector<std::vector<int>> words;
    std::vector<std::vector<int>> inverse_words;   // canonical word of g^-1
    std::vector<std::vector<int>> reversed_words;  // letter-wise inverse of words[g]: (sigma^g)^-1
    std::vector<std::vector<std::vector<int>>> product_words;  // [g][h] -> word of gh
};

inline BallWords ball_words(const CayleyBall& F) {
    BallWords bw;
    const auto& spec = F.spec;
    for (const auto& g : F.elements) {
        bw.words.push_back(to_word(spec, g));
        bw.inverse_words.push_back(to_word(spec, inv(spec, g)));
        std::vector<int> rev(bw.words.back().rbegin(), bw.words.back().rend());
        for (int& l : rev) l = GroupSpec::inverse_letter(l);
        bw.reversed_words.push_back(std::move(rev));
    }
    bw.product_words.resize(F.elements.size());
    for (size_t i = 0; i < F.elements.size(); ++i)
        for (size_t j = 0; j < F.elements.size(); ++j)
            bw.product_words[i].push_back(to_word(spec, mul(spec, F.elements[i], F.elements[j])));
    return bw;
}

inline bool is_good(const SoficMap& sigma, const BallWords& bw, Vertex v, std::vector<Vertex>& image) {
    const size_t f = bw.words.size();
    image.resize(f);
    for (size_t i = 0; i < f; ++i) image[i] = sigma.act(bw.words[i], v);
    // (1) injective window
    std::vector<Vertex> sorted = image;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
    for (Vertex u : image) {
        for (size_t g = 0; g < f; ++g) {
            // (3) sigma^{g^-1} sigma^g u = u
            Vertex gu = sigma.act(bw.words[g], u);
            if (sigma.act(bw.inverse_words[g], gu) != u) return false;
            // (4) the unique w with sigma^g w = u is sigma^{g^-1} u
            if (sigma.act(bw.reversed_words[g], u) != sigma.act(bw.inverse_words[g], u)) return false;
            // (2) sigma^g sigma^h u = sigma^{gh} u
            for (size_t h = 0; h < f; ++h) {
                Vertex lhs = sigma.act(bw.words[g], sigma.act(bw.words[h], u));
                if (lhs != sigma.act(bw.product_words[g][h], u)) return false;
            }
        }
    }
    return true;
}

inline void fill_defects(const SoficMap& sigma, const BallWords& bw, GoodnessReport& rep) {
    const size_t n = sigma.size();
    if (n == 0) return;
    const size_t f = bw.words.size();
    size_t worst_mult = 0, worst_trace = 0;
    for (size_t g = 0; g < f; ++g) {
        size_t fixed = 0;
        for (Vertex v = 0; v < n; ++v)
            if (sigma.act(bw.words[g], v) == v) ++fixed;
        if (!bw.words[g].empty()) worst_trace = std::max(worst_trace, fixed);
        for (size_t h = 0; h < f; ++h) {
            size_t bad = 0;
            for (Vertex v = 0; v < n; ++v)
                if (sigma.act(bw.words[g], sigma.act(bw.words[h], v)) != sigma.act(bw.product_words[g][h], v)) ++bad;
            worst_mult = std::max(worst_mult, bad);
        }
    }
    rep.multiplicative_defect = static_cast<double>(worst_mult) / static_cast<double>(n);
    rep.trace_defect = static_cast<double>(worst_trace) / static_cast<double>(n);
}

} // namespace detail

/// Good-vertex mask for the window F: conditions (1)-(4).
inline std::vector<char> good_mask(const SoficMap& sigma, const CayleyBall& F) {
    require(F.spec == sigma.group(), ErrorCode::invalid_argument, "ball and sofic map use different groups");
    auto bw = detail::ball_words(F);
    std::vector<char> mask(sigma.size(), 0);
    std::vector<Vertex> image;
    for (Vertex v = 0; v < sigma.size(); ++v) mask[v] = detail::is_good(sigma, bw, v, image) ? 1 : 0;
    return mask;
}

inline GoodnessReport good_vertices(const SoficMap& sigma, const CayleyBall& F, bool with_defects = true) {
    GoodnessReport rep;
    rep.radius = F.radius;
    rep.ball_size = F.elements.size();
    auto mask = good_mask(sigma, F);
    for (Vertex v = 0; v < sigma.size(); ++v)
        if (mask[v]) rep.good_vertices.push_back(v);
    rep.fraction = sigma.size() == 0 ? 0.0 : static_cast<double>(rep.good_vertices.size()) / static_cast<double>(sigma.size());
    if (with_defects) detail::fill_defects(sigma, detail::ball_words(F), rep);
    return rep;
}

struct SoficCheck {
    bool ok = false;
    double multiplicative_defect = 0.0;
    double trace_defect = 0.0;
};

/// (F, delta)-multiplicativity and trace preservation.
inline SoficCheck check_sofic(const SoficMap& sigma, const CayleyBall& F, double delta) {
    require(delta > 0.0 && delta < 1.0, ErrorCode::invalid_argument, "delta must lie in (0,1)");
    GoodnessReport rep;
    detail::fill_defects(sigma, detail::ball_words(F), rep);
    return {rep.multiplicative_defect <= delta && rep.trace_defect <= delta, rep.multiplicative_defect,
            rep.trace_defect};
}

/// Labeled r-neighbourhood of v in the Schreier graph of sigma, in BFS order
/// (letters tried in index order). Vertex ids of the result index `members`.
struct Neighbourhood {
    RootedGraph graph;
    std::vector<Vertex> members;
};

inline Neighbourhood neighbourhood(const SoficMap& sigma, Vertex root, int r) {
    Neighbourhood nb;
    nb.graph.num_generators = sigma.group().rank();
    std::vector<int> local(sigma.size(), -1);
    nb.members.push_back(root);
    nb.graph.distance.push_back(0);
    local[root] = 0;
    for (size_t head = 0; head < nb.members.size(); ++head) {
        Vertex u = nb.members[head];
        int du = nb.graph.distance[head];
        if (du == r) continue;
        for (int l = 0; l < sigma.group().num_letters(); ++l) {
            Vertex w = sigma.apply(l, u);
            if (local[w] == -1) {
                local[w] = static_cast<int>(nb.members.size());
                nb.members.push_back(w);
                nb.graph.distance.push_back(du + 1);
            }
        }
    }
    for (size_t i = 0; i < nb.members.size(); ++i) {
        for (int gen = 0; gen < sigma.group().rank(); ++gen) {
            int j = local[sigma.apply(2 * gen, nb.members[i])];
            if (j >= 0) nb.graph.edges.push_back({static_cast<int>(i), j, gen});
        }
    }
    return nb;
}

} // namespace soficlab
