#pragma once

// Specifications on balls, exact derived Gibbs measures, Shannon entropy,
// Glauber sampling, empirical distributions, local weak* diagnostics, and
// empirical SSM / uniform-bound estimates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "soficlab/cayley.hpp"
#include "soficlab/derived.hpp"
#include "soficlab/error.hpp"
#include "soficlab/model.hpp"
#include "soficlab/pairwise.hpp"
#include "soficlab/stats.hpp"
#include "soficlab/transfer.hpp"

namespace soficlab {

/// Law of patterns on B_r (canonical ball order).
struct BallDistribution {
    int radius = 0;
    std::map<std::vector<int>, double> table;

    [[nodiscard]] double total() const {
        double s = 0.0;
        for (const auto& [_, p] : table) s += p;
        return s;
    }
    [[nodiscard]] double probability(const std::vector<int>& w) const {
        auto it = table.find(w);
        return it == table.end() ? 0.0 : it->second;
    }
    /// Law of the symbol at the identity (index 0).
    [[nodiscard]] std::vector<double> center(int alphabet) const {
        std::vector<double> out(static_cast<size_t>(alphabet), 0.0);
        for (const auto& [w, p] : table) out[static_cast<size_t>(w[0])] += p;
        return out;
    }
};

inline double total_variation(const BallDistribution& p, const BallDistribution& q) {
    double s = 0.0;
    for (const auto& [w, x] : p.table) s += std::abs(x - q.probability(w));
    for (const auto& [w, y] : q.table)
        if (!p.table.contains(w)) s += y;
    return s / 2;
}

/// Sphere vertices of a rooted graph at distance exactly r+1.
inline std::vector<int> sphere_indices(const RootedGraph& g, int r) {
    std::vector<int> out;
    for (int i = g.prefix_size(r); i < g.prefix_size(r + 1); ++i) out.push_back(i);
    return out;
}

/// gamma_{B_r}( . | boundary on S_{r+1}) on a rooted graph of radius >= r+1.
inline BallDistribution specification_on_graph(const Model& model, const RootedGraph& g, int r,
                                               const std::vector<int>& boundary) {
    RootedGraph G = g.truncate(r + 1);
    auto sphere = sphere_indices(G, r);
    require(boundary.size() == sphere.size(), ErrorCode::invalid_argument, "boundary must cover the sphere S_{r+1}");
    PairwiseSystem sys = system_on_graph(model, G);
    for (size_t i = 0; i < sphere.size(); ++i) sys.pin(sphere[i], boundary[i]);
    const int inner = G.prefix_size(r);
    std::vector<int> kept(static_cast<size_t>(inner));
    for (int i = 0; i < inner; ++i) kept[static_cast<size_t>(i)] = i;
    auto J = sys.joint(kept);
    if (J.log_z == neg_inf) fail(ErrorCode::empty_fiber, "no interior completion of the boundary");
    BallDistribution out;
    out.radius = r;
    const int a = model.alphabet();
    for (size_t idx = 0; idx < J.prob.size(); ++idx) {
        if (J.prob[idx] <= 0.0) continue;
        std::vector<int> w(static_cast<size_t>(inner));
        size_t rest = idx;
        for (int i = 0; i < inner; ++i) {
            w[static_cast<size_t>(i)] = static_cast<int>(rest % static_cast<size_t>(a));
            rest /= static_cast<size_t>(a);
        }
        out.table.emplace(std::move(w), J.prob[idx]);
    }
    return out;
}

/// gamma_{B_r}( . | boundary) for the Cayley graph of the model's group.
inline BallDistribution specification_ball(const Model& model, int r, const std::vector<int>& boundary) {
    return specification_on_graph(model, ball(model.group, r + 1).graph(), r, boundary);
}

struct ExactGibbs {
    std::vector<Configuration> configs;
    std::vector<double> probs;
    std::vector<double> energies;
    double log_Z = neg_inf;

    [[nodiscard]] double entropy() const {
        double h = 0.0;
        for (double p : probs)
            if (p > 0.0) h -= p * std::log(p);
        return h;
    }
    [[nodiscard]] double mean_energy() const {
        double e = 0.0;
        for (size_t i = 0; i < probs.size(); ++i) e += probs[i] * energies[i];
        return e;
    }
};

/// Full table of mu_n(x) = 1_{X^n}(x) exp(H*_n(x)) / Z_n.
inline ExactGibbs derived_gibbs_exact(const DerivedSpace& space, std::optional<double> cap_bits = std::nullopt) {
    require_exact_size(space, cap_bits.value_or(table_cap_bits()));
    ExactGibbs g;
    space.system().enumerate([&](const std::vector<int>& x, double w) {
        g.configs.push_back(x);
        g.energies.push_back(w);
    });
    require(!g.configs.empty(), ErrorCode::empty_fiber, "X^n is empty");
    g.log_Z = log_sum_exp(g.energies);
    for (double w : g.energies) g.probs.push_back(std::exp(w - g.log_Z));
    return g;
}

inline double shannon_entropy_exact(const DerivedSpace& space) { return derived_gibbs_exact(space).entropy(); }

/// One Glauber sample from mu_n after `sweeps` sweeps.
inline Configuration sample_derived_gibbs(const DerivedSpace& space, int sweeps, std::uint64_t seed) {
    GlauberChain chain(space, 0.0, seed);
    for (int s = 0; s < sweeps; ++s) chain.sweep();
    return chain.state();
}

/// E_{mu_n}[H*_n] from exact single-site and edge marginals.
inline double expected_energy_exact(const DerivedSpace& space) {
    PairwiseSystem sys = space.system();
    const Model& m = space.model();
    const int a = m.alphabet();
    double e = 0.0;
    for (Vertex v = 0; v < space.size(); ++v) {
        auto p = sys.marginal(static_cast<int>(v));
        for (int b = 0; b < a; ++b) e += p[static_cast<size_t>(b)] * m.h(b);
        for (int gen = 0; gen < m.num_generators(); ++gen) {
            Vertex w = space.sigma().apply(2 * gen, v);
            if (w == v) {
                for (int b = 0; b < a; ++b) e += p[static_cast<size_t>(b)] * m.J(gen, b, b);
                continue;
            }
            auto J = sys.joint({static_cast<int>(v), static_cast<int>(w)});
            for (int x = 0; x < a; ++x)
                for (int y = 0; y < a; ++y) e += J.prob[static_cast<size_t>(x + a * y)] * m.J(gen, x, y);
        }
    }
    return e;
}

struct EntropyRow {
    size_t n = 0;
    double entropy_rate = 0.0;
    double stderr = 0.0;
    std::string method;
};

/// H(mu_n)/n; exact tables when small, else H = log Z_n - E[H*_n].
inline std::vector<EntropyRow> entropy_rate_estimate(const Model& model, const BuilderSpec& builder,
                                                     const std::vector<long long>& sizes, MethodChoice method,
                                                     const McmcOptions& opt = {},
                                                     Enforcement enforcement = Enforcement::good_windows) {
    std::vector<EntropyRow> rows;
    for (long long size : sizes) {
        DerivedSpace space(model, build_sofic(builder, size), enforcement);
        const auto n = static_cast<double>(space.size());
        bool table_ok = n * std::log2(static_cast<double>(space.alphabet())) <= table_cap_bits();
        if ((method == MethodChoice::automatic && table_ok) || method == MethodChoice::exact) {
            if (table_ok) {
                rows.push_back({space.size(), shannon_entropy_exact(space) / n, 0.0, "exact"});
            } else {
                double logz = partition_exact(space).log_Z;
                rows.push_back({space.size(), (logz - expected_energy_exact(space)) / n, 0.0, "exact"});
            }
            continue;
        }
        PartitionResult pr = partition(space, method, opt);
        if (pr.method != PartitionMethod::mcmc) {
            rows.push_back({space.size(), (pr.log_Z - expected_energy_exact(space)) / n, 0.0, method_name(pr.method)});
            continue;
        }
        GlauberChain chain(space, 0.0, derive_seed(opt.seed, 1'000'003));
        std::vector<double> energies;
        const int burn = static_cast<int>(opt.burn_in * opt.sweeps);
        for (int s = 0; s < opt.sweeps; ++s) {
            chain.sweep();
            if (s >= burn) energies.push_back(derived_energy(space, chain.state()));
        }
        MeanError me = batch_means(energies);
        double se = std::sqrt(pr.stderr * pr.stderr + me.stderr * me.stderr);
        rows.push_back({space.size(), (pr.log_Z - me.mean) / n, se / n, "mcmc"});
    }
    return rows;
}

/// P_x^sigma on B_r: average of point masses at Pi_v(x).
inline BallDistribution empirical_distribution(const Configuration& x, const SoficMap& sigma, int r) {
    require(x.size() == sigma.size(), ErrorCode::invalid_argument, "configuration length differs from |V_n|");
    CayleyBall B = ball(sigma.group(), r);
    std::vector<std::vector<int>> words;
    for (const auto& g : B.elements) words.push_back(to_word(sigma.group(), g));
    BallDistribution out;
    out.radius = r;
    const double w = 1.0 / static_cast<double>(sigma.size());
    std::vector<int> pat(words.size());
    for (Vertex v = 0; v < sigma.size(); ++v) {
        for (size_t i = 0; i < words.size(); ++i) pat[i] = x[sigma.act(words[i], v)];
        out.table[pat] += w;
    }
    return out;
}

/// Infinite-volume law of B_r for a rank-1 model, from the stationary chain.
inline BallDistribution transfer_reference(const Model& model, int r) {
    TransferMatrix tm(model);
    CayleyBall B = ball(model.group, r);
    std::vector<int> position;
    for (const auto& g : B.elements) position.push_back(g.data[0]);
    const int a = model.alphabet(), len = 2 * r + 1;
    BallDistribution out;
    out.radius = r;
    std::vector<int> path(static_cast<size_t>(len), 0);
    while (true) {
        double p = tm.window_probability(path);
        if (p > 0.0) {
            std::vector<int> w(B.elements.size());
            for (size_t i = 0; i < w.size(); ++i) w[i] = path[static_cast<size_t>(position[i] + r)];
            out.table.emplace(std::move(w), p);
        }
        int pos = len - 1;
        while (pos >= 0 && path[static_cast<size_t>(pos)] == a - 1) path[static_cast<size_t>(pos--)] = 0;
        if (pos < 0) break;
        ++path[static_cast<size_t>(pos)];
    }
    return out;
}

/// B_r marginal of the specification on B_{r+pad} with the safe symbol on S_{r+pad+1}.
inline BallDistribution ball_reference(const Model& model, int r, int pad) {
    auto safe = detect_safe_symbol(model.constraints);
    require(safe.has_value(), ErrorCode::no_safe_symbol, "ball reference uses a safe boundary");
    const int R = r + pad;
    RootedGraph G = ball(model.group, R + 1).graph();
    PairwiseSystem sys = system_on_graph(model, G);
    for (int i : sphere_indices(G, R)) sys.pin(i, *safe);
    const int inner = G.prefix_size(r);
    std::vector<int> kept(static_cast<size_t>(inner));
    for (int i = 0; i < inner; ++i) kept[static_cast<size_t>(i)] = i;
    auto J = sys.joint(kept);
    require(J.log_z != neg_inf, ErrorCode::empty_fiber, "safe boundary admits no interior");
    BallDistribution out;
    out.radius = r;
    const int a = model.alphabet();
    for (size_t idx = 0; idx < J.prob.size(); ++idx) {
        if (J.prob[idx] <= 0.0) continue;
        std::vector<int> w(static_cast<size_t>(inner));
        size_t rest = idx;
        for (int i = 0; i < inner; ++i) {
            w[static_cast<size_t>(i)] = static_cast<int>(rest % static_cast<size_t>(a));
            rest /= static_cast<size_t>(a);
        }
        out.table.emplace(std::move(w), J.prob[idx]);
    }
    return out;
}

struct ProbeOptions {
    bool sampled = false;
    int sweeps = 2000;
    std::uint64_t seed = 1;
};

struct GapReport {
    double fraction = 0.0;
    double max_tv = 0.0;
    std::vector<double> tv;
};

/// Fraction of v with TV((Pi_v)_* mu_n |B_r, reference) > eps.
inline GapReport local_weakstar_gap(const DerivedSpace& space, const BallDistribution& reference, int r, double eps,
                                    const ProbeOptions& probe = {}) {
    const SoficMap& sigma = space.sigma();
    CayleyBall B = ball(sigma.group(), r);
    std::vector<std::vector<int>> words;
    for (const auto& g : B.elements) words.push_back(to_word(sigma.group(), g));
    const int a = space.alphabet();
    GapReport rep;
    std::vector<BallDistribution> push(sigma.size());

    if (probe.sampled) {
        GlauberChain chain(space, 0.0, probe.seed);
        const int burn = probe.sweeps / 5;
        const double w = 1.0 / (probe.sweeps - burn);
        std::vector<int> pat(words.size());
        for (int s = 0; s < probe.sweeps; ++s) {
            chain.sweep();
            if (s < burn) continue;
            for (Vertex v = 0; v < sigma.size(); ++v) {
                for (size_t i = 0; i < words.size(); ++i) pat[i] = chain.state()[sigma.act(words[i], v)];
                push[v].table[pat] += w;
            }
        }
    } else {
        PairwiseSystem sys = space.system();
        for (Vertex v = 0; v < sigma.size(); ++v) {
            std::vector<int> img, kept;
            for (const auto& word : words) img.push_back(static_cast<int>(sigma.act(word, v)));
            kept = img;
            std::sort(kept.begin(), kept.end());
            kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
            auto J = sys.joint(kept);
            std::vector<int> digit_of(img.size());
            for (size_t i = 0; i < img.size(); ++i)
                digit_of[i] = static_cast<int>(std::lower_bound(kept.begin(), kept.end(), img[i]) - kept.begin());
            std::vector<int> vals(kept.size()), pat(img.size());
            for (size_t idx = 0; idx < J.prob.size(); ++idx) {
                if (J.prob[idx] <= 0.0) continue;
                size_t rest = idx;
                for (size_t i = 0; i < kept.size(); ++i) {
                    vals[i] = static_cast<int>(rest % static_cast<size_t>(a));
                    rest /= static_cast<size_t>(a);
                }
                for (size_t i = 0; i < img.size(); ++i) pat[i] = vals[static_cast<size_t>(digit_of[i])];
                push[v].table[pat] += J.prob[idx];
            }
        }
    }
    size_t bad = 0;
    for (Vertex v = 0; v < sigma.size(); ++v) {
        double tv = total_variation(push[v], reference);
        rep.tv.push_back(tv);
        rep.max_tv = std::max(rep.max_tv, tv);
        if (tv > eps) ++bad;
    }
    rep.fraction = static_cast<double>(bad) / static_cast<double>(sigma.size());
    return rep;
}

namespace detail {

// Calls visit(assignment) for every element of alphabet^len, last entry fastest.
template <class F>
void for_each_word(int alphabet, size_t len, F&& visit) {
    std::vector<int> w(len, 0);
    while (true) {
        visit(w);
        int pos = static_cast<int>(len) - 1;
        while (pos >= 0 && w[static_cast<size_t>(pos)] == alphabet - 1) w[static_cast<size_t>(pos--)] = 0;
        if (pos < 0) return;
        ++w[static_cast<size_t>(pos)];
    }
}

inline void check_budget(double count, double budget, const char* what) {
    require(count <= budget, ErrorCode::budget_exceeded, std::string(what) + " would need " + std::to_string(count) + " cases");
}

} // namespace detail

inline constexpr double default_enum_budget = 1e6;

/// beta_hat(r) = max over symbols of the spread of the centre marginal on B_r
/// across admissible boundaries on S_{r+1}; r = 0..r_max.
inline std::vector<double> ssm_profile_on_graph(const Model& model, const RootedGraph& g, int r_max,
                                                double budget = default_enum_budget) {
    require(g.max_distance() >= r_max + 1, ErrorCode::invalid_argument, "graph too small for r_max");
    const int a = model.alphabet();
    std::vector<double> beta;
    for (int r = 0; r <= r_max; ++r) {
        RootedGraph G = g.truncate(r + 1);
        auto sphere = sphere_indices(G, r);
        detail::check_budget(std::pow(a, static_cast<double>(sphere.size())), budget, "ssm_profile");
        PairwiseSystem sys = system_on_graph(model, G);
        std::vector<double> lo(static_cast<size_t>(a), 1.0), hi(static_cast<size_t>(a), 0.0);
        bool any = false;
        detail::for_each_word(a, sphere.size(), [&](const std::vector<int>& w) {
            for (size_t i = 0; i < sphere.size(); ++i) sys.pin(sphere[i], w[i]);
            auto J = sys.joint({0});
            if (J.log_z == neg_inf) return;
            any = true;
            for (int b = 0; b < a; ++b) {
                lo[static_cast<size_t>(b)] = std::min(lo[static_cast<size_t>(b)], J.prob[static_cast<size_t>(b)]);
                hi[static_cast<size_t>(b)] = std::max(hi[static_cast<size_t>(b)], J.prob[static_cast<size_t>(b)]);
            }
        });
        require(any, ErrorCode::empty_fiber, "no admissible boundary on the sphere");
        double b = 0.0;
        for (int s = 0; s < a; ++s) b = std::max(b, hi[static_cast<size_t>(s)] - lo[static_cast<size_t>(s)]);
        beta.push_back(b);
    }
    return beta;
}

inline std::vector<double> ssm_profile(const Model& model, int r_max, double budget = default_enum_budget) {
    return ssm_profile_on_graph(model, ball(model.group, r_max + 1).graph(), r_max, budget);
}

struct UniformBound {
    double c_hat = 1.0;
    double log_c_formula = 0.0;
    [[nodiscard]] double c_formula() const { return std::exp(log_c_formula); }
};

/// c_hat: smallest positive single-site conditional at the root, over
/// conditionings pinning S_{r+1} and any subset of B_r \ {1}. The formula
/// bound is |A|^{-|M|^4} e^{-2||phi|| |M|^4} |A|^{-|M|^6}, |M| = |B_1|, in logs.
inline UniformBound uniform_bound_on_graph(const Model& model, const RootedGraph& g, int r,
                                           double budget = default_enum_budget) {
    require(g.max_distance() >= r + 1, ErrorCode::invalid_argument, "graph too small for radius");
    const int a = model.alphabet();
    RootedGraph G = g.truncate(r + 1);
    auto sphere = sphere_indices(G, r);
    const int inner = G.prefix_size(r);
    detail::check_budget(std::pow(a, static_cast<double>(sphere.size())) * std::pow(a + 1, inner - 1), budget,
                         "uniform_bound_c");
    PairwiseSystem sys = system_on_graph(model, G);
    UniformBound ub;
    detail::for_each_word(a, sphere.size(), [&](const std::vector<int>& w) {
        for (size_t i = 0; i < sphere.size(); ++i) sys.pin(sphere[i], w[i]);
        detail::for_each_word(a + 1, static_cast<size_t>(inner - 1), [&](const std::vector<int>& pins) {
            for (int i = 1; i < inner; ++i) sys.pin(i, pins[static_cast<size_t>(i - 1)] - 1);
            auto J = sys.joint({0});
            if (J.log_z == neg_inf) return;
            for (double p : J.prob)
                if (p > 0.0) ub.c_hat = std::min(ub.c_hat, p);
        });
    });
    const double M = static_cast<double>(g.prefix_size(1));
    const double la = std::log(static_cast<double>(a));
    ub.log_c_formula = -std::pow(M, 4) * la - 2.0 * model.potential.norm() * std::pow(M, 4) - std::pow(M, 6) * la;
    return ub;
}

inline UniformBound uniform_bound_c(const Model& model, int r, double budget = default_enum_budget) {
    return uniform_bound_on_graph(model, ball(model.group, r + 1).graph(), r, budget);
}

} // namespace soficlab
