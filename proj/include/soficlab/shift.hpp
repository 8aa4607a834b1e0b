#pragma once

// Patterns on finite subsets of the group, local and global admissibility,
// bounded TSSM checks, and the X^n window machinery on a sofic map: error
// sets, greedy extension and error correction.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "soficlab/cayley.hpp"
#include "soficlab/error.hpp"
#include "soficlab/model.hpp"
#include "soficlab/pairwise.hpp"
#include "soficlab/sofic.hpp"

namespace soficlab {

struct Pattern {
    std::vector<GroupElement> support;
    std::vector<int> values;

    [[nodiscard]] size_t size() const noexcept { return support.size(); }
};

/// Pattern from (element, symbol) pairs; support elements must be distinct.
inline Pattern make_pattern(const std::vector<std::pair<GroupElement, int>>& entries) {
    Pattern p;
    for (const auto& [g, a] : entries) {
        require(std::find(p.support.begin(), p.support.end(), g) == p.support.end(), ErrorCode::invalid_argument,
                "pattern support has a repeated element");
        p.support.push_back(g);
        p.values.push_back(a);
    }
    return p;
}

/// Pattern on a ball, in canonical ball order.
inline Pattern ball_pattern(const CayleyBall& B, const std::vector<int>& values) {
    require(values.size() == B.elements.size(), ErrorCode::invalid_argument, "pattern length differs from ball size");
    return {B.elements, values};
}

/// Every group edge (g, s g) inside the support carries an allowed pair.
inline bool is_locally_admissible(const ConstraintStructure& cs, const GroupSpec& spec, const Pattern& p) {
    for (int v : p.values)
        if (v < 0 || v >= cs.alphabet) return false;
    for (size_t i = 0; i < p.size(); ++i) {
        for (int gen = 0; gen < spec.rank(); ++gen) {
            GroupElement sg = mul(spec, letter_element(spec, 2 * gen), p.support[i]);
            for (size_t j = 0; j < p.size(); ++j)
                if (p.support[j] == sg && !cs.allowed(gen, p.values[i], p.values[j])) return false;
        }
    }
    return true;
}

enum class Verdict { yes, no, unknown_at_pad };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::yes: return "Yes";
        case Verdict::no: return "No";
        case Verdict::unknown_at_pad: return "UnknownAtPad";
    }
    return "?";
}

namespace detail {

inline Model constraint_only(const ConstraintStructure& cs, const GroupSpec& spec) {
    return Model{"constraints", spec, cs, {std::vector<double>(static_cast<size_t>(cs.alphabet), 0.0), {}}};
}

inline int support_radius(const GroupSpec& spec, const Pattern& p) {
    int R = 0;
    for (const auto& g : p.support) R = std::max(R, word_length(spec, g));
    return R;
}

} // namespace detail

/// Does p extend to a configuration in X? Extensions are searched on B_{R+pad}.
inline Verdict is_globally_admissible(const ConstraintStructure& cs, const GroupSpec& spec, const Pattern& p, int pad,
                                      size_t state_cap = default_state_cap) {
    require(pad >= 0, ErrorCode::invalid_argument, "pad must be >= 0");
    if (!is_locally_admissible(cs, spec, p)) return Verdict::no;
    if (detect_safe_symbol(cs)) return Verdict::yes;
    CayleyBall B = ball(spec, detail::support_radius(spec, p) + pad);
    PairwiseSystem sys = system_on_graph(detail::constraint_only(cs, spec), B.graph());
    sys.set_state_cap(state_cap);
    for (size_t i = 0; i < p.size(); ++i) sys.pin(B.find(p.support[i]), p.values[i]);
    double logz;
    try {
        logz = sys.log_partition();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::cap_exceeded) return Verdict::unknown_at_pad;
        throw;
    }
    if (logz == neg_inf) return Verdict::no;
    return pad >= 1 ? Verdict::yes : Verdict::unknown_at_pad;
}

struct TssmVerdict {
    enum class Kind { safe_symbol_certified, holds_up_to_radius, violated_at, budget_exceeded } kind;
    int range = 1;
    int radius = 0;
    int k_max = 0;
    size_t patterns_checked = 0;
    Pattern witness;
};

inline const char* tssm_kind_name(TssmVerdict::Kind k) {
    switch (k) {
        case TssmVerdict::Kind::safe_symbol_certified: return "SafeSymbolCertified";
        case TssmVerdict::Kind::holds_up_to_radius: return "HoldsUpToRadius";
        case TssmVerdict::Kind::violated_at: return "ViolatedAt";
        case TssmVerdict::Kind::budget_exceeded: return "BudgetExceeded";
    }
    return "?";
}

/// Bounded TSSM check with range B_m: searches F in B_R, |F| <= k_max, for a
/// pattern whose B_m g windows are admissible but which is not.
inline TssmVerdict check_tssm(const ConstraintStructure& cs, const GroupSpec& spec, int m, int R, int k_max,
                              int pad = 2, size_t budget = 2'000'000) {
    require(m >= 0 && m <= R, ErrorCode::invalid_argument, "need 0 <= range <= radius");
    require(k_max >= 1, ErrorCode::invalid_argument, "k_max must be >= 1");
    TssmVerdict out{TssmVerdict::Kind::holds_up_to_radius, m, R, k_max, 0, {}};
    if (detect_safe_symbol(cs)) {
        out.kind = TssmVerdict::Kind::safe_symbol_certified;
        out.range = 1;
        return out;
    }
    CayleyBall B = ball(spec, R);
    const int nb = B.size();
    const int a = cs.alphabet;

    std::vector<int> subset;
    auto test_subset = [&](const std::vector<int>& S) -> bool {
        const size_t k = S.size();
        std::vector<std::vector<size_t>> windows;
        for (size_t gi = 0; gi < k; ++gi) {
            std::vector<size_t> w;
            for (size_t fi = 0; fi < k; ++fi) {
                const auto& f = B.elements[static_cast<size_t>(S[fi])];
                const auto& g = B.elements[static_cast<size_t>(S[gi])];
                if (word_length(spec, mul(spec, f, inv(spec, g))) <= m) w.push_back(fi);
            }
            windows.push_back(std::move(w));
        }
        std::vector<int> vals(k, 0);
        while (true) {
            if (++out.patterns_checked > budget) return true;
            bool windows_ok = true;
            for (const auto& w : windows) {
                Pattern sub;
                for (size_t fi : w) {
                    sub.support.push_back(B.elements[static_cast<size_t>(S[fi])]);
                    sub.values.push_back(vals[fi]);
                }
                if (is_globally_admissible(cs, spec, sub, pad) == Verdict::no) {
                    windows_ok = false;
                    break;
                }
            }
            if (windows_ok) {
                Pattern full;
                for (size_t fi = 0; fi < k; ++fi) {
                    full.support.push_back(B.elements[static_cast<size_t>(S[fi])]);
                    full.values.push_back(vals[fi]);
                }
                if (is_globally_admissible(cs, spec, full, pad) == Verdict::no) {
                    out.kind = TssmVerdict::Kind::violated_at;
                    out.witness = std::move(full);
                    return true;
                }
            }
            // next pattern, first entry most significant
            int pos = static_cast<int>(k) - 1;
            while (pos >= 0 && vals[static_cast<size_t>(pos)] == a - 1) vals[static_cast<size_t>(pos--)] = 0;
            if (pos < 0) return false;
            ++vals[static_cast<size_t>(pos)];
        }
    };

    for (int k = 1; k <= std::min(k_max, nb); ++k) {
        std::vector<int> S(static_cast<size_t>(k));
        for (int i = 0; i < k; ++i) S[static_cast<size_t>(i)] = i;
        while (true) {
            if (test_subset(S)) {
                if (out.kind != TssmVerdict::Kind::violated_at) out.kind = TssmVerdict::Kind::budget_exceeded;
                return out;
            }
            int pos = k - 1;
            while (pos >= 0 && S[static_cast<size_t>(pos)] == nb - k + pos) --pos;
            if (pos < 0) break;
            ++S[static_cast<size_t>(pos)];
            for (int i = pos + 1; i < k; ++i) S[static_cast<size_t>(i)] = S[static_cast<size_t>(i - 1)] + 1;
        }
    }
    return out;
}

/// Which sofic edges X^n constrains.
enum class Enforcement { good_windows, all_edges };

inline const char* enforcement_name(Enforcement e) {
    return e == Enforcement::good_windows ? "good_windows" : "all_edges";
}

using Configuration = std::vector<int>;

/// MM = B_2 windows of a sofic map: good set, window images and enforced edges.
class WindowChecker {
public:
    WindowChecker(const SoficMap& sigma, const ConstraintStructure& cs, Enforcement enforcement = Enforcement::good_windows)
        : sigma_(&sigma), cs_(cs), enforcement_(enforcement), window_ball_(ball(sigma.group(), 2)) {
        require(cs.num_generators() == sigma.group().rank(), ErrorCode::invalid_argument,
                "constraint structure and sofic map disagree on the number of generators");
        good_ = good_mask(sigma, window_ball_);
        const size_t n = sigma.size();
        const int k = sigma.group().rank();
        for (const auto& g : window_ball_.elements) words_.push_back(to_word(sigma.group(), g));
        enforced_.assign(n * static_cast<size_t>(k), enforcement == Enforcement::all_edges ? 1 : 0);
        if (enforcement == Enforcement::good_windows) {
            for (Vertex v = 0; v < n; ++v) {
                if (!good_[v]) continue;
                auto img = window(v);
                for (const auto& e : window_ball_.edges)
                    enforced_[img[static_cast<size_t>(e.from)] * static_cast<size_t>(k) + static_cast<size_t>(e.gen)] = 1;
            }
        }
    }

    [[nodiscard]] const SoficMap& sigma() const noexcept { return *sigma_; }
    [[nodiscard]] const ConstraintStructure& constraints() const noexcept { return cs_; }
    [[nodiscard]] Enforcement enforcement() const noexcept { return enforcement_; }
    [[nodiscard]] const CayleyBall& window_ball() const noexcept { return window_ball_; }
    [[nodiscard]] const std::vector<char>& good() const noexcept { return good_; }
    [[nodiscard]] bool is_good(Vertex v) const { return good_[v] != 0; }
    [[nodiscard]] bool enforced(Vertex v, int gen) const {
        return enforced_[v * static_cast<size_t>(sigma_->group().rank()) + static_cast<size_t>(gen)] != 0;
    }

    /// sigma^g(v) for g in B_2, canonical order.
    [[nodiscard]] std::vector<Vertex> window(Vertex v) const {
        std::vector<Vertex> img(words_.size());
        for (size_t i = 0; i < words_.size(); ++i) img[i] = sigma_->act(words_[i], v);
        return img;
    }

    /// The pulled-back B_2 window of x at v is locally admissible.
    [[nodiscard]] bool window_ok(const Configuration& x, Vertex v) const {
        auto img = window(v);
        for (const auto& e : window_ball_.edges)
            if (!cs_.allowed(e.gen, x[img[static_cast<size_t>(e.from)]], x[img[static_cast<size_t>(e.to)]])) return false;
        return true;
    }

    [[nodiscard]] bool edge_ok(const Configuration& x, Vertex v, int gen) const {
        return cs_.allowed(gen, x[v], x[sigma_->apply(2 * gen, v)]);
    }

    /// E(x): good vertices with an inadmissible window (good_windows), or
    /// endpoints of violated edges (all_edges).
    [[nodiscard]] std::vector<Vertex> error_set(const Configuration& x) const {
        check_length(x);
        std::vector<Vertex> out;
        const size_t n = sigma_->size();
        if (enforcement_ == Enforcement::good_windows) {
            for (Vertex v = 0; v < n; ++v)
                if (good_[v] && !window_ok(x, v)) out.push_back(v);
            return out;
        }
        std::vector<char> bad(n, 0);
        for (Vertex v = 0; v < n; ++v)
            for (int gen = 0; gen < sigma_->group().rank(); ++gen)
                if (!edge_ok(x, v, gen)) bad[v] = bad[sigma_->apply(2 * gen, v)] = 1;
        for (Vertex v = 0; v < n; ++v)
            if (bad[v]) out.push_back(v);
        return out;
    }

    [[nodiscard]] bool in_Xn(const Configuration& x) const {
        check_length(x);
        for (Vertex v = 0; v < sigma_->size(); ++v)
            for (int gen = 0; gen < sigma_->group().rank(); ++gen)
                if (enforced(v, gen) && !edge_ok(x, v, gen)) return false;
        return true;
    }

    /// sigma^{B_2}(E), sorted.
    [[nodiscard]] std::vector<Vertex> window_union(const std::vector<Vertex>& E) const {
        std::vector<char> mark(sigma_->size(), 0);
        for (Vertex v : E)
            for (Vertex u : window(v)) mark[u] = 1;
        std::vector<Vertex> out;
        for (Vertex u = 0; u < sigma_->size(); ++u)
            if (mark[u]) out.push_back(u);
        return out;
    }

private:
    void check_length(const Configuration& x) const {
        require(x.size() == sigma_->size(), ErrorCode::invalid_argument, "configuration length differs from |V_n|");
    }

    const SoficMap* sigma_;
    ConstraintStructure cs_;
    Enforcement enforcement_;
    CayleyBall window_ball_;
    std::vector<std::vector<int>> words_;
    std::vector<char> good_;
    std::vector<char> enforced_;
};

/// Complete a partial configuration (-1 = unassigned) to one in X^n. With a
/// safe symbol the gaps are filled with it; otherwise vertices are coloured
/// greedily in ascending order with the smallest symbol compatible with the
/// enforced edges to already coloured vertices.
inline Configuration extend_locally_consistent(const WindowChecker& wc, const Configuration& partial) {
    const SoficMap& sigma = wc.sigma();
    const auto& cs = wc.constraints();
    require(partial.size() == sigma.size(), ErrorCode::invalid_argument, "partial configuration has wrong length");
    Configuration y = partial;
    if (auto safe = detect_safe_symbol(cs)) {
        for (int& v : y)
            if (v < 0) v = *safe;
    } else {
        const int k = sigma.group().rank();
        for (Vertex v = 0; v < sigma.size(); ++v) {
            if (y[v] >= 0) continue;
            int chosen = -1;
            for (int b = 0; b < cs.alphabet && chosen < 0; ++b) {
                bool ok = true;
                for (int gen = 0; gen < k && ok; ++gen) {
                    Vertex out = sigma.apply(2 * gen, v);
                    Vertex in = sigma.apply(2 * gen + 1, v);
                    if (wc.enforced(v, gen)) {
                        int xo = out == v ? b : y[out];
                        ok = xo < 0 || cs.allowed(gen, b, xo);
                    }
                    if (ok && wc.enforced(in, gen)) {
                        int xi = in == v ? b : y[in];
                        ok = xi < 0 || cs.allowed(gen, xi, b);
                    }
                }
                if (ok) chosen = b;
            }
            if (chosen < 0) fail(ErrorCode::no_consistent_color, "no admissible symbol at vertex " + std::to_string(v));
            y[v] = chosen;
        }
    }
    if (!wc.in_Xn(y)) fail(ErrorCode::no_consistent_color, "extension is not in X^n; the input was not locally consistent");
    return y;
}

/// y in X^n agreeing with x outside sigma^{B_2}(E(x)).
inline Configuration correct_errors(const WindowChecker& wc, const Configuration& x) {
    auto E = wc.error_set(x);
    if (E.empty() && wc.in_Xn(x)) return x;
    Configuration partial = x;
    for (Vertex u : wc.window_union(E)) partial[u] = -1;
    return extend_locally_consistent(wc, partial);
}

} // namespace soficlab
