#pragma once

// Exact computations for a model placed on a finite labeled graph:
// partition function, joint marginals of chosen vertices, full enumeration
// and first-solution search. The graph is given as directed factors
// (u, v, gen) standing for the pair (x_u, x_v) = (x(g), x(s_gen g)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "soficlab/error.hpp"
#include "soficlab/model.hpp"

namespace soficlab {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

inline double log_sum_exp(const std::vector<double>& xs) {
    double m = neg_inf;
    for (double x : xs) m = std::max(m, x);
    if (m == neg_inf) return neg_inf;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

inline constexpr size_t default_state_cap = size_t{1} << 24;

class PairwiseSystem {
public:
    struct Factor {
        int u;
        int v;
        int gen;
        bool constrained;
    };

    PairwiseSystem(Model model, int num_vertices)
        : model_(std::move(model)), n_(num_vertices), pins_(static_cast<size_t>(num_vertices), -1) {}

    [[nodiscard]] const Model& model() const noexcept { return model_; }
    [[nodiscard]] int size() const noexcept { return n_; }
    [[nodiscard]] int alphabet() const noexcept { return model_.alphabet(); }
    [[nodiscard]] const std::vector<Factor>& factors() const noexcept { return factors_; }
    [[nodiscard]] const std::vector<int>& pins() const noexcept { return pins_; }

    void add_factor(int u, int v, int gen, bool constrained = true) {
        require(u >= 0 && u < n_ && v >= 0 && v < n_, ErrorCode::invalid_argument, "factor endpoint out of range");
        factors_.push_back({u, v, gen, constrained});
    }
    void pin(int v, int symbol) {
        require(symbol >= -1 && symbol < alphabet(), ErrorCode::invalid_argument, "pin symbol out of range");
        pins_[static_cast<size_t>(v)] = symbol;
    }
    void clear_pins() { std::fill(pins_.begin(), pins_.end(), -1); }
    void set_state_cap(size_t cap) { state_cap_ = cap; }

    [[nodiscard]] double factor_value(const Factor& f, int a, int b) const {
        if (f.constrained && !model_.allowed(f.gen, a, b)) return neg_inf;
        return model_.J(f.gen, a, b);
    }

    /// Log weight of a full assignment (pins are not consulted); -inf if a constraint fails.
    [[nodiscard]] double log_weight(const std::vector<int>& x) const {
        double w = 0.0;
        for (int v = 0; v < n_; ++v) w += model_.h(x[static_cast<size_t>(v)]);
        for (const auto& f : factors_) {
            double fv = factor_value(f, x[static_cast<size_t>(f.u)], x[static_cast<size_t>(f.v)]);
            if (fv == neg_inf) return neg_inf;
            w += fv;
        }
        return w;
    }

    /// Joint law of the kept vertices; prob is indexed by sum_i x_{kept[i]} a^i.
    struct Joint {
        std::vector<int> kept;
        std::vector<double> prob;
        double log_z = neg_inf;
    };

    [[nodiscard]] Joint joint(const std::vector<int>& kept) const {
        Eliminated e = eliminate(kept);
        Joint out;
        out.kept = kept;
        out.log_z = log_sum_exp(e.table);
        out.prob.assign(e.table.size(), 0.0);
        if (out.log_z == neg_inf) return out;
        // e.frontier is a permutation of kept; re-index into kept order
        const int a = alphabet();
        std::vector<int> where(kept.size());
        for (size_t i = 0; i < kept.size(); ++i)
            where[i] = static_cast<int>(std::find(e.frontier.begin(), e.frontier.end(), kept[i]) - e.frontier.begin());
        for (size_t idx = 0; idx < e.table.size(); ++idx) {
            if (e.table[idx] == neg_inf) continue;
            size_t target = 0, mult = 1;
            for (size_t i = 0; i < kept.size(); ++i) {
                size_t digit = (idx / ipow(a, where[i])) % static_cast<size_t>(a);
                target += digit * mult;
                mult *= static_cast<size_t>(a);
            }
            out.prob[target] = std::exp(e.table[idx] - out.log_z);
        }
        return out;
    }

    [[nodiscard]] double log_partition() const { return log_sum_exp(eliminate({}).table); }

    /// Single-site law of v (all zeros when the system is infeasible).
    [[nodiscard]] std::vector<double> marginal(int v) const { return joint({v}).prob; }

    /// Pruned depth-first enumeration of all feasible assignments in vertex order.
    void enumerate(const std::function<void(const std::vector<int>&, double)>& visit) const {
        std::vector<int> x(static_cast<size_t>(n_), -1);
        auto nb = lower_factors();
        dfs(0, x, 0.0, nb, visit);
    }

    enum class SearchStatus { found, infeasible, budget };
    struct SearchResult {
        SearchStatus status;
        std::vector<int> assignment;
    };

    /// First feasible assignment in vertex order with smallest symbols first.
    [[nodiscard]] SearchResult find_assignment(size_t node_budget = 10'000'000) const {
        std::vector<int> x(static_cast<size_t>(n_), -1);
        auto nb = lower_factors();
        size_t nodes = 0;
        std::function<int(int)> go = [&](int v) -> int {
            if (v == n_) return 1;
            if (++nodes > node_budget) return -1;
            for (int b = 0; b < alphabet(); ++b) {
                if (!symbol_ok(v, b, x, nb)) continue;
                x[static_cast<size_t>(v)] = b;
                int r = go(v + 1);
                if (r != 0) return r;
            }
            x[static_cast<size_t>(v)] = -1;
            return 0;
        };
        int r = go(0);
        if (r == 1) return {SearchStatus::found, x};
        return {r == 0 ? SearchStatus::infeasible : SearchStatus::budget, {}};
    }

    /// Largest frontier the elimination order reaches (for capacity planning).
    [[nodiscard]] int max_frontier(const std::vector<int>& kept = {}) const {
        auto plan = plan_order(kept);
        return plan.second;
    }

private:
    static size_t ipow(int a, int e) {
        size_t r = 1;
        for (int i = 0; i < e; ++i) r *= static_cast<size_t>(a);
        return r;
    }

    struct Eliminated {
        std::vector<int> frontier;
        std::vector<double> table;
    };

    // Factors indexed by their later endpoint, for the in-order DFS.
    [[nodiscard]] std::vector<std::vector<int>> lower_factors() const {
        std::vector<std::vector<int>> nb(static_cast<size_t>(n_));
        for (size_t i = 0; i < factors_.size(); ++i)
            nb[static_cast<size_t>(std::max(factors_[i].u, factors_[i].v))].push_back(static_cast<int>(i));
        return nb;
    }

    [[nodiscard]] bool symbol_ok(int v, int b, const std::vector<int>& x, const std::vector<std::vector<int>>& nb) const {
        int p = pins_[static_cast<size_t>(v)];
        if (p >= 0 && p != b) return false;
        for (int fi : nb[static_cast<size_t>(v)]) {
            const auto& f = factors_[static_cast<size_t>(fi)];
            int xu = f.u == v ? b : x[static_cast<size_t>(f.u)];
            int xv = f.v == v ? b : x[static_cast<size_t>(f.v)];
            if (factor_value(f, xu, xv) == neg_inf) return false;
        }
        return true;
    }

    void dfs(int v, std::vector<int>& x, double w, const std::vector<std::vector<int>>& nb,
             const std::function<void(const std::vector<int>&, double)>& visit) const {
        if (v == n_) {
            visit(x, w);
            return;
        }
        for (int b = 0; b < alphabet(); ++b) {
            if (!symbol_ok(v, b, x, nb)) continue;
            double dw = model_.h(b);
            for (int fi : nb[static_cast<size_t>(v)]) {
                const auto& f = factors_[static_cast<size_t>(fi)];
                int xu = f.u == v ? b : x[static_cast<size_t>(f.u)];
                int xv = f.v == v ? b : x[static_cast<size_t>(f.v)];
                dw += model_.J(f.gen, xu, xv);
            }
            x[static_cast<size_t>(v)] = b;
            dfs(v + 1, x, w + dw, nb, visit);
        }
        x[static_cast<size_t>(v)] = -1;
    }

    // Vertices taking part in elimination: free vertices and kept vertices.
    [[nodiscard]] std::vector<char> active_mask(const std::vector<int>& kept) const {
        std::vector<char> active(static_cast<size_t>(n_), 0);
        for (int v = 0; v < n_; ++v) active[static_cast<size_t>(v)] = pins_[static_cast<size_t>(v)] < 0;
        for (int v : kept) active[static_cast<size_t>(v)] = 1;
        return active;
    }

    [[nodiscard]] std::vector<std::vector<int>> active_neighbours(const std::vector<char>& active) const {
        std::vector<std::vector<int>> adj(static_cast<size_t>(n_));
        for (const auto& f : factors_) {
            if (f.u == f.v || !active[static_cast<size_t>(f.u)] || !active[static_cast<size_t>(f.v)]) continue;
            adj[static_cast<size_t>(f.u)].push_back(f.v);
            adj[static_cast<size_t>(f.v)].push_back(f.u);
        }
        for (auto& a : adj) {
            std::sort(a.begin(), a.end());
            a.erase(std::unique(a.begin(), a.end()), a.end());
        }
        return adj;
    }

    // Greedy order keeping the frontier small; returns (order, max frontier size).
    [[nodiscard]] std::pair<std::vector<int>, int> plan_order(const std::vector<int>& kept) const {
        auto active = active_mask(kept);
        auto adj = active_neighbours(active);
        std::vector<char> is_kept(static_cast<size_t>(n_), 0), added(static_cast<size_t>(n_), 0),
            in_front(static_cast<size_t>(n_), 0);
        for (int v : kept) is_kept[static_cast<size_t>(v)] = 1;
        std::vector<int> remaining(static_cast<size_t>(n_));
        for (int v = 0; v < n_; ++v) remaining[static_cast<size_t>(v)] = static_cast<int>(adj[static_cast<size_t>(v)].size());

        std::vector<int> order, front;
        int total = 0, worst = 0;
        for (int v = 0; v < n_; ++v) total += active[static_cast<size_t>(v)];
        order.reserve(static_cast<size_t>(total));
        while (static_cast<int>(order.size()) < total) {
            std::vector<int> cand;
            for (int u : front)
                for (int w : adj[static_cast<size_t>(u)])
                    if (!added[static_cast<size_t>(w)]) cand.push_back(w);
            if (cand.empty()) {
                int best = -1;
                for (int v = 0; v < n_; ++v) {
                    if (!active[static_cast<size_t>(v)] || added[static_cast<size_t>(v)]) continue;
                    if (best < 0 || adj[static_cast<size_t>(v)].size() < adj[static_cast<size_t>(best)].size()) best = v;
                }
                cand.push_back(best);
            }
            std::sort(cand.begin(), cand.end());
            cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
            int best = -1, best_score = std::numeric_limits<int>::max();
            for (int w : cand) {
                int score = (remaining[static_cast<size_t>(w)] > 0 || is_kept[static_cast<size_t>(w)]) ? 1 : 0;
                for (int u : adj[static_cast<size_t>(w)])
                    if (in_front[static_cast<size_t>(u)] && remaining[static_cast<size_t>(u)] == 1 && !is_kept[static_cast<size_t>(u)])
                        --score;
                if (score < best_score) {
                    best_score = score;
                    best = w;
                }
            }
            // apply
            added[static_cast<size_t>(best)] = 1;
            order.push_back(best);
            for (int u : adj[static_cast<size_t>(best)]) --remaining[static_cast<size_t>(u)];
            front.push_back(best);
            in_front[static_cast<size_t>(best)] = 1;
            worst = std::max(worst, static_cast<int>(front.size()));
            std::erase_if(front, [&](int u) {
                bool drop = remaining[static_cast<size_t>(u)] == 0 && !is_kept[static_cast<size_t>(u)];
                if (drop) in_front[static_cast<size_t>(u)] = 0;
                return drop;
            });
        }
        return {order, worst};
    }

    [[nodiscard]] Eliminated eliminate(const std::vector<int>& kept) const {
        const int a = alphabet();
        auto active = active_mask(kept);

        // Fold pinned, inactive vertices into unary terms and a constant.
        std::vector<std::vector<double>> unary(static_cast<size_t>(n_), std::vector<double>(static_cast<size_t>(a), 0.0));
        double constant = 0.0;
        for (int v = 0; v < n_; ++v) {
            int p = pins_[static_cast<size_t>(v)];
            for (int b = 0; b < a; ++b) {
                if (active[static_cast<size_t>(v)])
                    unary[static_cast<size_t>(v)][static_cast<size_t>(b)] = (p >= 0 && p != b) ? neg_inf : model_.h(b);
            }
            if (!active[static_cast<size_t>(v)]) constant += model_.h(p);
        }
        std::vector<std::vector<int>> pair_factors(static_cast<size_t>(n_));
        for (size_t i = 0; i < factors_.size(); ++i) {
            const auto& f = factors_[i];
            bool au = active[static_cast<size_t>(f.u)], av = active[static_cast<size_t>(f.v)];
            int pu = pins_[static_cast<size_t>(f.u)], pv = pins_[static_cast<size_t>(f.v)];
            if (f.u == f.v) {
                if (au) {
                    for (int b = 0; b < a; ++b) unary[static_cast<size_t>(f.u)][static_cast<size_t>(b)] += factor_value(f, b, b);
                } else {
                    constant += factor_value(f, pu, pu);
                }
            } else if (au && av) {
                pair_factors[static_cast<size_t>(f.u)].push_back(static_cast<int>(i));
                pair_factors[static_cast<size_t>(f.v)].push_back(static_cast<int>(i));
            } else if (au) {
                for (int b = 0; b < a; ++b) unary[static_cast<size_t>(f.u)][static_cast<size_t>(b)] += factor_value(f, b, pv);
            } else if (av) {
                for (int b = 0; b < a; ++b) unary[static_cast<size_t>(f.v)][static_cast<size_t>(b)] += factor_value(f, pu, b);
            } else {
                constant += factor_value(f, pu, pv);
            }
        }

        auto [order, worst] = plan_order(kept);
        if (worst > 0) {
            double states = std::pow(static_cast<double>(a), worst);
            require(states <= static_cast<double>(state_cap_), ErrorCode::cap_exceeded,
                    "exact elimination needs " + std::to_string(worst) + " frontier vertices");
        }

        std::vector<char> is_kept(static_cast<size_t>(n_), 0), added(static_cast<size_t>(n_), 0);
        for (int v : kept) is_kept[static_cast<size_t>(v)] = 1;
        auto adj = active_neighbours(active);
        std::vector<int> remaining(static_cast<size_t>(n_));
        for (int v = 0; v < n_; ++v) remaining[static_cast<size_t>(v)] = static_cast<int>(adj[static_cast<size_t>(v)].size());
        std::vector<int> pos(static_cast<size_t>(n_), -1);

        Eliminated st;
        st.table = {constant};
        for (int w : order) {
            const size_t old_size = st.table.size();
            const int wpos = static_cast<int>(st.frontier.size());
            std::vector<double> next(old_size * static_cast<size_t>(a), neg_inf);
            std::vector<int> digits(st.frontier.size());
            for (size_t idx = 0; idx < old_size; ++idx) {
                double base = st.table[idx];
                if (base == neg_inf) continue;
                size_t rest = idx;
                for (size_t i = 0; i < digits.size(); ++i) {
                    digits[i] = static_cast<int>(rest % static_cast<size_t>(a));
                    rest /= static_cast<size_t>(a);
                }
                for (int b = 0; b < a; ++b) {
                    double val = base + unary[static_cast<size_t>(w)][static_cast<size_t>(b)];
                    if (val == neg_inf) continue;
                    for (int fi : pair_factors[static_cast<size_t>(w)]) {
                        const auto& f = factors_[static_cast<size_t>(fi)];
                        int other = f.u == w ? f.v : f.u;
                        if (!added[static_cast<size_t>(other)]) continue;
                        int xo = digits[static_cast<size_t>(pos[static_cast<size_t>(other)])];
                        val += f.u == w ? factor_value(f, b, xo) : factor_value(f, xo, b);
                        if (val == neg_inf) break;
                    }
                    if (val != neg_inf) next[idx + static_cast<size_t>(b) * old_size] = val;
                }
            }
            st.table = std::move(next);
            st.frontier.push_back(w);
            pos[static_cast<size_t>(w)] = wpos;
            added[static_cast<size_t>(w)] = 1;
            for (int u : adj[static_cast<size_t>(w)]) --remaining[static_cast<size_t>(u)];

            // sum out closed vertices, highest position first
            for (int p = static_cast<int>(st.frontier.size()) - 1; p >= 0; --p) {
                int u = st.frontier[static_cast<size_t>(p)];
                if (remaining[static_cast<size_t>(u)] != 0 || is_kept[static_cast<size_t>(u)]) continue;
                st.table = sum_out(st.table, a, p);
                st.frontier.erase(st.frontier.begin() + p);
                pos[static_cast<size_t>(u)] = -1;
                for (size_t i = static_cast<size_t>(p); i < st.frontier.size(); ++i)
                    pos[static_cast<size_t>(st.frontier[i])] = static_cast<int>(i);
            }
        }
        return st;
    }

    static std::vector<double> sum_out(const std::vector<double>& table, int a, int p) {
        const size_t low = ipow(a, p);
        const size_t out_size = table.size() / static_cast<size_t>(a);
        std::vector<double> out(out_size, neg_inf);
        for (size_t idx = 0; idx < table.size(); ++idx) {
            if (table[idx] == neg_inf) continue;
            size_t lo = idx % low;
            size_t hi = idx / (low * static_cast<size_t>(a));
            size_t target = lo + hi * low;
            out[target] = log_add(out[target], table[idx]);
        }
        return out;
    }

    Model model_;
    int n_;
    std::vector<int> pins_;
    std::vector<Factor> factors_;
    size_t state_cap_ = default_state_cap;
};

/// Model placed on a rooted graph (Cayley ball or sofic neighbourhood), every edge constrained.
inline PairwiseSystem system_on_graph(const Model& model, const RootedGraph& g) {
    PairwiseSystem sys(model, g.size());
    for (const auto& e : g.edges) sys.add_factor(e.from, e.to, e.gen, true);
    return sys;
}

} // namespace soficlab
