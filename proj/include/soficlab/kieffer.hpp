#pragma once

// Truncated and random information functions, Kieffer-Pinsker pressure
// estimators, conditional-marginal oracles, and trees of self-avoiding walks.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "soficlab/cayley.hpp"
#include "soficlab/derived.hpp"
#include "soficlab/error.hpp"
#include "soficlab/gibbs.hpp"
#include "soficlab/model.hpp"
#include "soficlab/pairwise.hpp"
#include "soficlab/randompast.hpp"
#include "soficlab/stats.hpp"
#include "soficlab/transfer.hpp"

namespace soficlab {

// ---------------------------------------------------------------- SAW trees

enum class SawPin { free, occupied, empty };

struct SawNode {
    int vertex = 0;
    int parent = -1;
    SawPin pin = SawPin::free;
    std::vector<int> children;
};

struct SawTree {
    std::vector<SawNode> nodes;  // nodes[0] is the root

    [[nodiscard]] size_t size() const noexcept { return nodes.size(); }
    [[nodiscard]] int depth() const {
        int best = 0;
        for (size_t i = 0; i < nodes.size(); ++i) {
            int d = 0;
            for (int p = nodes[i].parent; p >= 0; p = nodes[static_cast<size_t>(p)].parent) ++d;
            best = std::max(best, d);
        }
        return best;
    }
};

inline constexpr size_t default_saw_cap = 5'000'000;

/// Tree of self-avoiding walks from `root`. `pins[v]` is -1 (free), 0 or 1;
/// pinned vertices become pinned leaves. A walk returning to a vertex u on
/// the path gives a leaf pinned occupied iff the closing neighbour of u has a
/// larger index than the neighbour through which the walk left u.
inline SawTree build_saw_tree(const std::vector<std::vector<int>>& adj, int root, const std::vector<int>& pins = {},
                              size_t cap = default_saw_cap) {
    const int n = static_cast<int>(adj.size());
    require(root >= 0 && root < n, ErrorCode::invalid_argument, "root outside the graph");
    auto pin_of = [&](int v) { return pins.empty() ? -1 : pins[static_cast<size_t>(v)]; };
    SawTree t;
    std::vector<int> on_path(static_cast<size_t>(n), -1);  // position on the current path
    std::vector<int> path;

    auto add = [&](int vertex, int parent, SawPin pin) {
        require(t.nodes.size() < cap, ErrorCode::budget_exceeded, "SAW tree exceeds the node cap");
        t.nodes.push_back({vertex, parent, pin, {}});
        int id = static_cast<int>(t.nodes.size()) - 1;
        if (parent >= 0) t.nodes[static_cast<size_t>(parent)].children.push_back(id);
        return id;
    };
    auto as_pin = [](int p) { return p < 0 ? SawPin::free : (p == 1 ? SawPin::occupied : SawPin::empty); };

    std::function<void(int, int)> grow = [&](int node, int u) {
        on_path[static_cast<size_t>(u)] = static_cast<int>(path.size());
        path.push_back(u);
        int prev = path.size() >= 2 ? path[path.size() - 2] : -1;
        for (int w : adj[static_cast<size_t>(u)]) {
            if (w == prev || w == u) continue;
            int pos = on_path[static_cast<size_t>(w)];
            if (pos >= 0) {
                int left_through = path[static_cast<size_t>(pos) + 1];
                add(w, node, u > left_through ? SawPin::occupied : SawPin::empty);
            } else if (pin_of(w) >= 0) {
                add(w, node, as_pin(pin_of(w)));
            } else {
                int child = add(w, node, SawPin::free);
                grow(child, w);
            }
        }
        path.pop_back();
        on_path[static_cast<size_t>(u)] = -1;
    };

    int r = add(root, -1, as_pin(pin_of(root)));
    if (pin_of(root) < 0) grow(r, root);
    return t;
}

/// Hardcore root occupation probability by the tree recursion
/// R_v = lambda_v prod_c 1/(1 + R_c), P = R_root / (1 + R_root).
inline double root_occupation(const SawTree& t, const std::function<double(int)>& activity) {
    if (t.nodes.empty()) return 0.0;
    const auto inf = std::numeric_limits<double>::infinity();
    std::vector<double> R(t.nodes.size(), 0.0);
    for (size_t i = t.nodes.size(); i-- > 0;) {
        const auto& nd = t.nodes[i];
        if (nd.pin == SawPin::occupied) {
            R[i] = inf;
            continue;
        }
        if (nd.pin == SawPin::empty) continue;
        double r = activity(nd.vertex);
        for (int c : nd.children) {
            double rc = R[static_cast<size_t>(c)];
            r = rc == inf ? 0.0 : r / (1.0 + rc);
            if (r == 0.0) break;
        }
        R[i] = r;
    }
    if (R[0] == inf) return 1.0;
    return R[0] / (1.0 + R[0]);
}

inline double root_occupation(const SawTree& t, double lambda) {
    return root_occupation(t, [lambda](int) { return lambda; });
}

/// P(v occupied | pins) for the hardcore model on G, via the SAW tree.
inline double hardcore_marginal_via_saw(const std::vector<std::vector<int>>& adj, int v, double lambda,
                                        const std::vector<int>& pins = {}, size_t cap = default_saw_cap) {
    require(lambda >= 0.0, ErrorCode::invalid_argument, "activity must be nonnegative");
    if (!pins.empty()) {
        require(pins.size() == adj.size(), ErrorCode::invalid_argument, "one pin entry per vertex");
        for (size_t u = 0; u < adj.size(); ++u) {
            require(pins[u] >= -1 && pins[u] <= 1, ErrorCode::invalid_argument, "hardcore pins are -1, 0 or 1");
            if (pins[u] != 1) continue;
            for (int w : adj[u])
                if (pins[static_cast<size_t>(w)] == 1 || static_cast<size_t>(w) == u)
                    fail(ErrorCode::inconsistent_pins, "adjacent vertices pinned occupied");
        }
    }
    return root_occupation(build_saw_tree(adj, v, pins, cap), lambda);
}

/// Hardcore uniqueness threshold on the Delta-regular tree.
inline double weitz_threshold(int Delta) {
    require(Delta >= 3, ErrorCode::invalid_argument, "lambda_c(Delta) needs Delta >= 3");
    return std::pow(Delta - 1.0, Delta - 1) / std::pow(Delta - 2.0, Delta);
}

// ------------------------------------------------------------------ oracles

/// Pins as (index into the oracle's canonical geometry, symbol).
using Pins = std::vector<std::pair<int, int>>;

class MarginalOracle {
public:
    virtual ~MarginalOracle() = default;
    [[nodiscard]] virtual std::string tag() const = 0;
    /// Rooted geometry whose vertex indices the pins refer to.
    [[nodiscard]] virtual const RootedGraph& geometry() const = 0;
    /// Law of the root symbol given pins inside B_r.
    [[nodiscard]] virtual std::vector<double> root_law(const Pins& pins, int r) const = 0;
};

/// Exact infinite-volume conditionals on Z^1 from the stationary chain.
class TransferOracle final : public MarginalOracle {
public:
    TransferOracle(const Model& model, int max_radius) : tm_(model), ball_(ball(model.group, max_radius)) {
        require(model.group.is_abelian() && model.group.rank() == 1, ErrorCode::wrong_builder,
                "transfer oracle needs Z^1");
        graph_ = ball_.graph();
        for (const auto& g : ball_.elements) position_.push_back(g.data[0]);
    }
    [[nodiscard]] std::string tag() const override { return "transfer"; }
    [[nodiscard]] const RootedGraph& geometry() const override { return graph_; }
    [[nodiscard]] const TransferMatrix& transfer() const noexcept { return tm_; }

    [[nodiscard]] std::vector<double> root_law(const Pins& pins, int /*r*/) const override {
        int ld = 0, lv = 0, rd = 0, rv = 0;
        for (const auto& [idx, sym] : pins) {
            int x = position_[static_cast<size_t>(idx)];
            if (x == 0) {
                std::vector<double> point(static_cast<size_t>(tm_.alphabet()), 0.0);
                point[static_cast<size_t>(sym)] = 1.0;
                return point;
            }
            if (x < 0 && (ld == 0 || -x < ld)) {
                ld = -x;
                lv = sym;
            }
            if (x > 0 && (rd == 0 || x < rd)) {
                rd = x;
                rv = sym;
            }
        }
        return tm_.conditional(ld, lv, rd, rv);
    }

private:
    TransferMatrix tm_;
    CayleyBall ball_;
    RootedGraph graph_;
    std::vector<int> position_;
};

enum class BoundaryPolicy { safe, free };

/// Exact specification on B_{r+pad}, with the safe symbol on S_{r+pad+1}
/// (policy safe) or a free boundary.
class BallOracle final : public MarginalOracle {
public:
    BallOracle(const Model& model, RootedGraph geometry, int pad, BoundaryPolicy policy = BoundaryPolicy::safe)
        : model_(model), graph_(std::move(geometry)), pad_(pad), policy_(policy) {
        require(pad >= 0, ErrorCode::invalid_argument, "pad must be >= 0");
        if (policy == BoundaryPolicy::safe) {
            auto s = detect_safe_symbol(model.constraints);
            require(s.has_value(), ErrorCode::no_safe_symbol, "safe boundary policy needs a safe symbol");
            safe_ = *s;
        }
    }
    BallOracle(const Model& model, int max_radius, int pad, BoundaryPolicy policy = BoundaryPolicy::safe)
        : BallOracle(model, ball(model.group, max_radius + pad + 1).graph(), pad, policy) {}

    [[nodiscard]] std::string tag() const override { return "ball"; }
    [[nodiscard]] const RootedGraph& geometry() const override { return graph_; }
    [[nodiscard]] int pad() const noexcept { return pad_; }

    [[nodiscard]] std::vector<double> root_law(const Pins& pins, int r) const override {
        const int R = r + pad_;
        const int outer = policy_ == BoundaryPolicy::safe ? R + 1 : R;
        require(graph_.max_distance() >= outer, ErrorCode::oracle, "oracle geometry too small for r + pad");
        auto it = systems_.find(R);
        if (it == systems_.end()) {
            PairwiseSystem sys = system_on_graph(model_, graph_.truncate(outer));
            if (policy_ == BoundaryPolicy::safe)
                for (int i : sphere_indices(graph_, R)) sys.pin(i, safe_);
            it = systems_.emplace(R, std::move(sys)).first;
        }
        PairwiseSystem sys = it->second;
        for (const auto& [idx, sym] : pins) {
            require(idx < sys.size(), ErrorCode::oracle, "pin outside the oracle ball");
            sys.pin(idx, sym);
        }
        auto J = sys.joint({0});
        require(J.log_z != neg_inf, ErrorCode::oracle, "conditioning event has probability zero");
        return J.prob;
    }

private:
    Model model_;
    RootedGraph graph_;
    int pad_;
    BoundaryPolicy policy_;
    int safe_ = 0;
    mutable std::map<int, PairwiseSystem> systems_;
};

/// Hardcore conditionals from the SAW tree of B_{r+pad} (safe boundary:
/// vertices outside are empty, hence absent).
class SawOracle final : public MarginalOracle {
public:
    SawOracle(double lambda, RootedGraph geometry, int pad) : lambda_(lambda), graph_(std::move(geometry)), pad_(pad) {}

    [[nodiscard]] std::string tag() const override { return "saw"; }
    [[nodiscard]] const RootedGraph& geometry() const override { return graph_; }

    [[nodiscard]] std::vector<double> root_law(const Pins& pins, int r) const override {
        const int R = r + pad_;
        require(graph_.max_distance() >= R, ErrorCode::oracle, "oracle geometry too small for r + pad");
        auto adj = graph_.truncate(R).adjacency();
        std::vector<int> pv(adj.size(), -1);
        for (const auto& [idx, sym] : pins) pv[static_cast<size_t>(idx)] = sym;
        double p = hardcore_marginal_via_saw(adj, 0, lambda_, pv);
        return {1.0 - p, p};
    }

private:
    double lambda_;
    RootedGraph graph_;
    int pad_;
};

/// Hardcore activity lambda = exp(h(1) - h(0)) of a model shaped like the hardcore model.
inline double hardcore_activity(const Model& m) {
    require(m.alphabet() == 2 && detect_safe_symbol(m.constraints) == 0 && m.potential.edge_log_weights.empty(),
            ErrorCode::invalid_argument, "SAW oracle is hardcore-only");
    for (int gen = 0; gen < m.num_generators(); ++gen)
        require(!m.allowed(gen, 1, 1) && m.allowed(gen, 0, 1) && m.allowed(gen, 1, 0), ErrorCode::invalid_argument,
                "SAW oracle is hardcore-only");
    return std::exp(m.h(1) - m.h(0));
}

enum class OracleKind { transfer, ball, saw };

inline OracleKind parse_oracle(const std::string& s) {
    if (s == "transfer") return OracleKind::transfer;
    if (s == "ball") return OracleKind::ball;
    if (s == "saw") return OracleKind::saw;
    fail(ErrorCode::invalid_argument, "unknown oracle '" + s + "'");
}

inline std::unique_ptr<MarginalOracle> make_oracle(OracleKind kind, const Model& model, int max_radius, int pad) {
    switch (kind) {
        case OracleKind::transfer: return std::make_unique<TransferOracle>(model, max_radius);
        case OracleKind::ball: return std::make_unique<BallOracle>(model, max_radius, pad);
        case OracleKind::saw:
            return std::make_unique<SawOracle>(hardcore_activity(model), ball(model.group, max_radius + pad).graph(), pad);
    }
    return nullptr;
}

// ------------------------------------------------------- information functions

struct InfoEstimate {
    double value = 0.0;
    double stderr = 0.0;
    int r = 0;
    long long N = 0;
    std::string oracle;
};

/// f_r(x, D) = -log mu([x_1] | [x_{D cap B_r}]); x and D index the oracle geometry.
inline double info_fn_truncated(const MarginalOracle& oracle, const std::vector<int>& x, const std::vector<int>& D, int r) {
    const int inner = oracle.geometry().prefix_size(r);
    Pins pins;
    for (int idx : D)
        if (idx > 0 && idx < inner) pins.emplace_back(idx, x[static_cast<size_t>(idx)]);
    double p = oracle.root_law(pins, r)[static_cast<size_t>(x[0])];
    require(p > 0.0, ErrorCode::oracle, "pattern has probability zero under the oracle");
    return -std::log(p);
}

enum class PastKind { percolation, lex };

inline PastKind parse_past(const std::string& s) {
    if (s == "percolation") return PastKind::percolation;
    if (s == "lex") return PastKind::lex;
    fail(ErrorCode::invalid_argument, "unknown past '" + s + "'");
}

namespace detail {

inline std::vector<int> past_members(const MarginalOracle& oracle, PastKind past, int r, std::uint64_t seed) {
    const int size = oracle.geometry().prefix_size(r);
    if (past == PastKind::percolation) return sample_percolation_past(size, r, seed).members();
    fail(ErrorCode::invalid_argument, "lexicographic past needs group elements; use lex_info");
}

} // namespace detail

/// Monte Carlo mean of f_r(x, P cap B_r) over N percolation pasts.
inline InfoEstimate random_info(const MarginalOracle& oracle, const std::vector<int>& x, int r, long long N,
                                std::uint64_t seed) {
    require(N >= 1, ErrorCode::invalid_argument, "N must be >= 1");
    std::vector<double> f;
    f.reserve(static_cast<size_t>(N));
    for (long long i = 0; i < N; ++i)
        f.push_back(info_fn_truncated(oracle, x, detail::past_members(oracle, PastKind::percolation, r,
                                                                      derive_seed(seed, static_cast<std::uint64_t>(i))),
                                      r));
    MeanError me = mean_stderr(f);
    return {me.mean, me.stderr, r, N, oracle.tag()};
}

/// f_r(x, lex past cap B_r) on Z^d (deterministic, N = 1).
inline InfoEstimate lex_info(const MarginalOracle& oracle, const GroupSpec& spec, const std::vector<int>& x, int r) {
    CayleyBall B = ball(spec, r);
    double v = info_fn_truncated(oracle, x, lex_past_sample(B).members(), r);
    return {v, 0.0, r, 1, oracle.tag()};
}

/// phi(x) = h(x_1) + sum_i J_i(x_1, x_{s_i}) read from a pattern on B_r, r >= 1.
inline double phi_at(const Model& model, const CayleyBall& B, const std::vector<int>& x) {
    double v = model.h(x[0]);
    for (int gen = 0; gen < model.num_generators(); ++gen) {
        int j = B.find(letter_element(model.group, 2 * gen));
        v += model.J(gen, x[0], x[static_cast<size_t>(j)]);
    }
    return v;
}

/// I^P_mu(0^Gamma) + phi(0^Gamma).
inline InfoEstimate kp_pressure_at_fixed_point(const Model& model, const MarginalOracle& oracle, int r, long long N,
                                               std::uint64_t seed) {
    auto safe = detect_safe_symbol(model.constraints);
    require(safe.has_value(), ErrorCode::no_safe_symbol, "the fixed-point formula needs a safe symbol");
    std::vector<int> x(static_cast<size_t>(oracle.geometry().prefix_size(r)), *safe);
    InfoEstimate est = random_info(oracle, x, r, N, seed);
    est.value += model.phi_constant(*safe);
    return est;
}

/// Samples patterns on B_r (canonical order) from an invariant measure nu.
using PatternSampler = std::function<std::vector<int>(std::mt19937_64&)>;

inline PatternSampler fixed_point_sampler(const Model& model, int r) {
    auto safe = detect_safe_symbol(model.constraints);
    require(safe.has_value(), ErrorCode::no_safe_symbol, "delta at the safe fixed point needs a safe symbol");
    auto size = static_cast<size_t>(ball(model.group, r).size());
    int s = *safe;
    return [size, s](std::mt19937_64&) { return std::vector<int>(size, s); };
}

/// Exact samples of mu on Z^1 through the stationary chain.
inline PatternSampler transfer_sampler(const Model& model, int r) {
    auto tm = std::make_shared<TransferMatrix>(model);
    CayleyBall B = ball(model.group, r);
    std::vector<int> pos;
    for (const auto& g : B.elements) pos.push_back(g.data[0] + r);
    return [tm, pos, r](std::mt19937_64& rng) {
        auto path = tm->sample_window(r, rng);
        std::vector<int> w(pos.size());
        for (size_t i = 0; i < pos.size(); ++i) w[i] = path[static_cast<size_t>(pos[i])];
        return w;
    };
}

/// Pullbacks at random good vertices of a Glauber chain on a derived space.
inline PatternSampler glauber_pullback_sampler(std::shared_ptr<const DerivedSpace> space, int r, int burn_in,
                                               int sweeps_between, std::uint64_t seed) {
    auto chain = std::make_shared<GlauberChain>(*space, 0.0, seed);
    for (int s = 0; s < burn_in; ++s) chain->sweep();
    auto good = good_vertices(space->sigma(), ball(space->model().group, r), false).good_vertices;
    require(!good.empty(), ErrorCode::oracle, "no B_r-good vertex to pull back from");
    return [space, chain, good, r, sweeps_between](std::mt19937_64& rng) {
        for (int s = 0; s < sweeps_between; ++s) chain->sweep();
        Vertex v = good[std::uniform_int_distribution<size_t>(0, good.size() - 1)(rng)];
        return pullback(*space, chain->state(), v, r).values;
    };
}

struct KpMeasureEstimate {
    InfoEstimate total;
    InfoEstimate information;
};

/// Outer Monte Carlo over nu of I^P_mu(x) + phi(x), with N pasts per pattern.
inline KpMeasureEstimate kp_pressure_at_measure(const Model& model, const MarginalOracle& oracle,
                                                const PatternSampler& nu, int r, long long N, long long M_outer,
                                                std::uint64_t seed) {
    require(N >= 1 && M_outer >= 1, ErrorCode::invalid_argument, "N and M_outer must be >= 1");
    require(r >= 1, ErrorCode::invalid_argument, "phi needs r >= 1");
    CayleyBall B = ball(model.group, r);
    std::mt19937_64 outer(derive_seed(seed, 0xA5A5));
    std::vector<double> totals, infos;
    for (long long j = 0; j < M_outer; ++j) {
        std::vector<int> x = nu(outer);
        require(static_cast<int>(x.size()) == B.size(), ErrorCode::invalid_argument, "sampler pattern has wrong size");
        InfoEstimate inner = random_info(oracle, x, r, N, derive_seed(seed, static_cast<std::uint64_t>(j)));
        infos.push_back(inner.value);
        totals.push_back(inner.value + phi_at(model, B, x));
    }
    MeanError t = mean_stderr(totals), i = mean_stderr(infos);
    return {{t.mean, t.stderr, r, N * M_outer, oracle.tag()}, {i.mean, i.stderr, r, N * M_outer, oracle.tag()}};
}

/// |f_r(x, D) - f_{r'}(x, D)|
inline double truncation_gap(const MarginalOracle& oracle, const std::vector<int>& x, const std::vector<int>& D, int r,
                             int r_prime) {
    require(r <= r_prime, ErrorCode::invalid_argument, "need r <= r'");
    return std::abs(info_fn_truncated(oracle, x, D, r) - info_fn_truncated(oracle, x, D, r_prime));
}

/// Error budget 3 beta_hat(r) / c_hat.
struct KpBudget {
    double beta = 0.0;
    double c = 1.0;
    [[nodiscard]] double value() const { return 3.0 * beta / c; }
};

inline KpBudget kp_budget(const Model& model, int r, int c_radius = 2) {
    return {ssm_profile(model, r).back(), uniform_bound_c(model, c_radius).c_hat};
}

/// Smallest r <= r_cap with beta_hat(r)/c_hat < target/6.
inline int choose_truncation_radius(const Model& model, double target, int r_cap, int c_radius = 2) {
    double c = uniform_bound_c(model, c_radius).c_hat;
    auto beta = ssm_profile(model, r_cap);
    for (int r = 0; r <= r_cap; ++r)
        if (beta[static_cast<size_t>(r)] / c < target / 6) return r;
    return r_cap;
}

struct LocalityResult {
    InfoEstimate a;
    InfoEstimate b;
    double beta_a = 0.0, beta_b = 0.0, c_a = 1.0, c_b = 1.0;
    [[nodiscard]] double bound() const { return beta_a / c_a + beta_b / c_b; }
};

/// KP fixed-point estimates on two rooted structures whose r+1 balls agree,
/// with the bound beta_a(r)/c_a + beta_b(r)/c_b. Both graphs need radius >= r+pad+1.
inline LocalityResult locality_experiment(const Model& model, const RootedGraph& graph_a, const RootedGraph& graph_b,
                                          int r, int pad, long long N, std::uint64_t seed, int c_radius = 1) {
    require(graph_a.max_distance() >= r + pad + 1 && graph_b.max_distance() >= r + pad + 1, ErrorCode::invalid_argument,
            "both structures need radius >= r + pad + 1");
    require(rooted_labeled_isomorphic(graph_a.truncate(r + 1), graph_b.truncate(r + 1)), ErrorCode::ball_mismatch,
            "the two structures differ inside the ball of radius r + 1");
    LocalityResult out;
    BallOracle oa(model, graph_a, pad), ob(model, graph_b, pad);
    out.a = kp_pressure_at_fixed_point(model, oa, r, N, seed);
    out.b = kp_pressure_at_fixed_point(model, ob, r, N, seed);
    out.beta_a = ssm_profile_on_graph(model, graph_a, r).back();
    out.beta_b = ssm_profile_on_graph(model, graph_b, r).back();
    out.c_a = uniform_bound_on_graph(model, graph_a, c_radius).c_hat;
    out.c_b = uniform_bound_on_graph(model, graph_b, c_radius).c_hat;
    return out;
}

} // namespace soficlab
