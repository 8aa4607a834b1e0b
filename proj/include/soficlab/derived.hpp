#pragma once

// Derived finite models: X^n, the derived energy H*_n and the derived
// partition function Z_n (exact elimination, cycle transfer matrices, and
// thermodynamic integration over Glauber chains).

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "soficlab/error.hpp"
#include "soficlab/model.hpp"
#include "soficlab/pairwise.hpp"
#include "soficlab/shift.hpp"
#include "soficlab/sofic.hpp"
#include "soficlab/stats.hpp"
#include "soficlab/transfer.hpp"

namespace soficlab {

/// Size caps, overridable through SOFICLAB_EXACT_CAP (log2 of the number of
/// configurations) and SOFICLAB_TABLE_CAP (same, for full Gibbs tables).
inline double env_cap(const char* name, double fallback) {
    if (const char* s = std::getenv(name)) {
        char* end = nullptr;
        double v = std::strtod(s, &end);
        if (end != s && v > 0) return v;
    }
    return fallback;
}
inline double exact_cap_bits() { return env_cap("SOFICLAB_EXACT_CAP", 24.0); }
inline double table_cap_bits() { return env_cap("SOFICLAB_TABLE_CAP", 20.0); }

inline long long provenance_param(const Provenance& p, const std::string& key, long long fallback = -1) {
    for (const auto& [k, v] : p.params)
        if (k == key) return v;
    return fallback;
}

class DerivedSpace {
public:
    DerivedSpace(Model model, SoficMap sigma, Enforcement enforcement = Enforcement::good_windows)
        : model_(checked(std::move(model), sigma)),
          sigma_(std::make_shared<const SoficMap>(std::move(sigma))),
          checker_(*sigma_, model_.constraints, enforcement) {}

    [[nodiscard]] const Model& model() const noexcept { return model_; }
    [[nodiscard]] const SoficMap& sigma() const noexcept { return *sigma_; }
    [[nodiscard]] const WindowChecker& checker() const noexcept { return checker_; }
    [[nodiscard]] Enforcement enforcement() const noexcept { return checker_.enforcement(); }
    [[nodiscard]] size_t size() const noexcept { return sigma_->size(); }
    [[nodiscard]] int alphabet() const noexcept { return model_.alphabet(); }

    /// One factor per sofic edge (v, sigma^{s_i} v); constrained iff enforced.
    [[nodiscard]] PairwiseSystem system() const {
        PairwiseSystem sys(model_, static_cast<int>(size()));
        for (Vertex v = 0; v < size(); ++v)
            for (int gen = 0; gen < model_.num_generators(); ++gen)
                sys.add_factor(static_cast<int>(v), static_cast<int>(sigma_->apply(2 * gen, v)), gen, checker_.enforced(v, gen));
        return sys;
    }

private:
    static Model checked(Model m, const SoficMap& sigma) {
        validate(m);
        require(m.group == sigma.group(), ErrorCode::invalid_argument,
                "model on " + m.group.describe() + " but sofic map on " + sigma.group().describe());
        return m;
    }

    Model model_;
    std::shared_ptr<const SoficMap> sigma_;
    WindowChecker checker_;
};

/// Pi_v^{sigma, B_r}(x), in canonical ball order.
inline Pattern pullback(const DerivedSpace& space, const Configuration& x, Vertex v, int r) {
    require(v < space.size(), ErrorCode::invalid_argument, "vertex out of range");
    CayleyBall B = ball(space.model().group, r);
    Pattern p{B.elements, {}};
    for (const auto& g : B.elements) p.values.push_back(x[sigma_word(space.sigma(), g, v)]);
    return p;
}

inline bool is_in_Xn(const DerivedSpace& space, const Configuration& x) { return space.checker().in_Xn(x); }

/// sum_v [h(x_v) + sum_i J_i(x_v, x_{sigma^{s_i} v})]
inline double derived_energy(const DerivedSpace& space, const Configuration& x) {
    require(x.size() == space.size(), ErrorCode::invalid_argument, "configuration length differs from |V_n|");
    const Model& m = space.model();
    double e = 0.0;
    for (Vertex v = 0; v < space.size(); ++v) {
        e += m.h(x[v]);
        for (int gen = 0; gen < m.num_generators(); ++gen) e += m.J(gen, x[v], x[space.sigma().apply(2 * gen, v)]);
    }
    return e;
}

enum class PartitionMethod { exact, transfer_cycle, mcmc };

inline const char* method_name(PartitionMethod m) {
    switch (m) {
        case PartitionMethod::exact: return "exact";
        case PartitionMethod::transfer_cycle: return "transfer";
        case PartitionMethod::mcmc: return "mcmc";
    }
    return "?";
}

struct McmcPoint {
    double t = 0.0;
    double mean_nonsafe = 0.0;
    double stderr = 0.0;
    double variance = 0.0;
};

struct PartitionResult {
    double log_Z = 0.0;
    PartitionMethod method = PartitionMethod::exact;
    double stderr = 0.0;
    std::vector<McmcPoint> diagnostics;
    /// Upper bound on the integral below t_min (MCMC only).
    double tail_bound = 0.0;
};

inline void require_exact_size(const DerivedSpace& space, double cap_bits) {
    double bits = static_cast<double>(space.size()) * std::log2(static_cast<double>(space.alphabet()));
    require(bits <= cap_bits + 1e-12, ErrorCode::cap_exceeded,
            "n = " + std::to_string(space.size()) + " exceeds the exact-enumeration cap");
}

/// log Z_n by exact variable elimination over X^n.
inline PartitionResult partition_exact(const DerivedSpace& space, std::optional<double> cap_bits = std::nullopt) {
    require_exact_size(space, cap_bits.value_or(exact_cap_bits()));
    return {space.system().log_partition(), PartitionMethod::exact, 0.0, {}, 0.0};
}

/// log Z_n = log trace of the product of per-edge transfer matrices (d = 1 tori).
inline PartitionResult partition_transfer_cycle(const DerivedSpace& space) {
    const auto& prov = space.sigma().provenance();
    require((prov.builder == "torus" || prov.builder == "folner") && provenance_param(prov, "d") == 1,
            ErrorCode::wrong_builder, "transfer method needs a d = 1 torus, got builder '" + prov.builder + "'");
    TransferMatrix tm(space.model());
    std::vector<char> enforced(space.size());
    for (Vertex v = 0; v < space.size(); ++v) enforced[v] = space.checker().enforced(v, 0) ? 1 : 0;
    return {tm.log_trace_product(enforced), PartitionMethod::transfer_cycle, 0.0, {}, 0.0};
}

/// Single-site heat-bath dynamics for exp(H*_n(x) + t N(x)) on X^n, N = number
/// of non-safe symbols. Starts from the all-safe configuration.
class GlauberChain {
public:
    GlauberChain(const DerivedSpace& space, double t, std::uint64_t seed) : space_(&space), t_(t), rng_(seed) {
        auto safe = detect_safe_symbol(space.model().constraints);
        require(safe.has_value(), ErrorCode::no_safe_symbol, "Glauber dynamics start from the safe configuration");
        safe_ = *safe;
        const auto& sigma = space.sigma();
        const int k = space.model().num_generators();
        incident_.resize(space.size());
        for (Vertex v = 0; v < space.size(); ++v) {
            for (int gen = 0; gen < k; ++gen) {
                Vertex w = sigma.apply(2 * gen, v);
                Vertex u = sigma.apply(2 * gen + 1, v);
                incident_[v].push_back({w, gen, true, space.checker().enforced(v, gen)});
                if (u != v) incident_[v].push_back({u, gen, false, space.checker().enforced(u, gen)});
            }
        }
        x_.assign(space.size(), safe_);
        weights_.resize(static_cast<size_t>(space.alphabet()));
    }

    void set_state(Configuration x) {
        require(space_->checker().in_Xn(x), ErrorCode::invalid_argument, "initial state must lie in X^n");
        x_ = std::move(x);
    }
    [[nodiscard]] const Configuration& state() const noexcept { return x_; }
    [[nodiscard]] int safe_symbol() const noexcept { return safe_; }

    [[nodiscard]] int nonsafe_count() const {
        int c = 0;
        for (int s : x_) c += s != safe_;
        return c;
    }

    void update(Vertex v) {
        const Model& m = space_->model();
        const int a = m.alphabet();
        double mx = neg_inf;
        for (int b = 0; b < a; ++b) {
            double w = m.h(b) + (b != safe_ ? t_ : 0.0);
            for (const auto& e : incident_[v]) {
                int xo = e.other == v ? b : x_[e.other];
                int from = e.out ? b : xo, to = e.out ? xo : b;
                if (e.enforced && !m.allowed(e.gen, from, to)) {
                    w = neg_inf;
                    break;
                }
                w += m.J(e.gen, from, to);
            }
            weights_[static_cast<size_t>(b)] = w;
            mx = std::max(mx, w);
        }
        double total = 0.0;
        for (double& w : weights_) {
            w = w == neg_inf ? 0.0 : std::exp(w - mx);
            total += w;
        }
        double u = std::uniform_real_distribution<double>(0.0, total)(rng_);
        int chosen = a - 1;
        for (int b = 0; b < a; ++b) {
            if (u < weights_[static_cast<size_t>(b)]) {
                chosen = b;
                break;
            }
            u -= weights_[static_cast<size_t>(b)];
        }
        while (weights_[static_cast<size_t>(chosen)] == 0.0) --chosen;
        x_[v] = chosen;
    }

    /// Sequential sweep in vertex order.
    void sweep() {
        for (Vertex v = 0; v < space_->size(); ++v) update(v);
    }

private:
    struct Incident {
        Vertex other;
        int gen;
        bool out;
        bool enforced;
    };
    const DerivedSpace* space_;
    double t_;
    std::mt19937_64 rng_;
    int safe_ = 0;
    Configuration x_;
    std::vector<std::vector<Incident>> incident_;
    std::vector<double> weights_;
};

struct McmcOptions {
    int grid_points = 64;
    double t_min = std::log(1e-6);
    int sweeps = 20000;
    double burn_in = 0.2;
    std::uint64_t seed = 1;
};

/// Thermodynamic integration: log Z_n = H*_n(0) + int_{-inf}^0 E_t[N] dt.
/// The integral below t_min is approximated by E_{t_min}[N] (E_t[N] ~ C e^t
/// there); its rigorous bound n a e^{t_min} e^{2||phi||} is reported.
inline PartitionResult partition_mcmc(const DerivedSpace& space, const McmcOptions& opt = {}) {
    require(opt.grid_points >= 2 && opt.sweeps >= 10, ErrorCode::invalid_argument, "need >= 2 grid points, >= 10 sweeps");
    require(opt.t_min < 0.0, ErrorCode::invalid_argument, "t_min must be negative");
    auto safe = detect_safe_symbol(space.model().constraints);
    require(safe.has_value(), ErrorCode::no_safe_symbol, "thermodynamic integration needs a safe symbol");

    PartitionResult res;
    res.method = PartitionMethod::mcmc;
    Configuration zero(space.size(), *safe);
    const double dt = -opt.t_min / (opt.grid_points - 1);
    const int burn = static_cast<int>(opt.burn_in * opt.sweeps);
    for (int i = 0; i < opt.grid_points; ++i) {
        double t = opt.t_min + dt * i;
        GlauberChain chain(space, t, derive_seed(opt.seed, static_cast<std::uint64_t>(i)));
        std::vector<double> series;
        series.reserve(static_cast<size_t>(opt.sweeps - burn));
        for (int s = 0; s < opt.sweeps; ++s) {
            chain.sweep();
            if (s >= burn) series.push_back(chain.nonsafe_count());
        }
        MeanError me = batch_means(series);
        double var = 0.0;
        for (double y : series) var += (y - me.mean) * (y - me.mean);
        var /= static_cast<double>(series.size());
        res.diagnostics.push_back({t, me.mean, me.stderr, var});
    }
    // trapezoid weights, plus the tail estimate carried by the first node
    double integral = 0.0, var = 0.0;
    for (int i = 0; i < opt.grid_points; ++i) {
        double w = (i == 0 || i == opt.grid_points - 1) ? dt / 2 : dt;
        if (i == 0) w += 1.0;
        integral += w * res.diagnostics[static_cast<size_t>(i)].mean_nonsafe;
        var += w * w * std::pow(res.diagnostics[static_cast<size_t>(i)].stderr, 2);
    }
    // Euler-Maclaurin end correction; d/dt E_t[N] = Var_t[N]
    integral -= dt * dt / 12.0 * (res.diagnostics.back().variance - res.diagnostics.front().variance);
    res.log_Z = derived_energy(space, zero) + integral;
    res.stderr = std::sqrt(var);
    res.tail_bound = static_cast<double>(space.size()) * space.alphabet() * std::exp(opt.t_min) *
                     std::exp(2.0 * space.model().potential.norm());
    return res;
}

/// Which sofic approximation to build at each size.
struct BuilderSpec {
    std::string builder = "torus";
    int d = 1;
    int k = 2;
    std::uint64_t seed = 1;
};

/// For torus and folner `size` is the side m; for random_perm it is n.
inline SoficMap build_sofic(const BuilderSpec& b, long long size) {
    if (b.builder == "torus") return build_torus(b.d, static_cast<int>(size));
    if (b.builder == "folner") return build_folner_box(b.d, static_cast<int>(size));
    if (b.builder == "random_perm") return build_random_perm(b.k, static_cast<size_t>(size), b.seed);
    fail(ErrorCode::schema, "unknown sofic builder '" + b.builder + "'");
}

inline GroupSpec builder_group(const BuilderSpec& b) {
    if (b.builder == "random_perm") return GroupSpec::free_group(b.k);
    return GroupSpec::zd(b.d);
}

enum class MethodChoice { automatic, exact, transfer, mcmc };

inline MethodChoice parse_method(const std::string& s) {
    if (s == "auto") return MethodChoice::automatic;
    if (s == "exact") return MethodChoice::exact;
    if (s == "transfer") return MethodChoice::transfer;
    if (s == "mcmc") return MethodChoice::mcmc;
    fail(ErrorCode::invalid_argument, "unknown method '" + s + "'");
}

inline PartitionResult partition(const DerivedSpace& space, MethodChoice method, const McmcOptions& opt = {}) {
    const auto& prov = space.sigma().provenance();
    bool cycle = (prov.builder == "torus" || prov.builder == "folner") && provenance_param(prov, "d") == 1;
    bool small = static_cast<double>(space.size()) * std::log2(static_cast<double>(space.alphabet())) <= exact_cap_bits();
    switch (method) {
        case MethodChoice::exact: return partition_exact(space);
        case MethodChoice::transfer: return partition_transfer_cycle(space);
        case MethodChoice::mcmc: return partition_mcmc(space, opt);
        case MethodChoice::automatic:
            if (cycle) return partition_transfer_cycle(space);
            if (small) return partition_exact(space);
            return partition_mcmc(space, opt);
    }
    return {};
}

struct PressureRow {
    size_t n = 0;
    double log_Z = 0.0;
    double pressure = 0.0;
    double stderr = 0.0;
    PartitionMethod method = PartitionMethod::exact;
    std::uint64_t seed = 0;
};

/// (n, log Z_n / n) along a sequence of sofic approximations.
inline std::vector<PressureRow> pressure_estimate(const Model& model, const BuilderSpec& builder,
                                                  const std::vector<long long>& sizes, MethodChoice method,
                                                  const McmcOptions& opt = {},
                                                  Enforcement enforcement = Enforcement::good_windows) {
    std::vector<PressureRow> rows;
    for (long long size : sizes) {
        DerivedSpace space(model, build_sofic(builder, size), enforcement);
        PartitionResult pr = partition(space, method, opt);
        const auto n = static_cast<double>(space.size());
        std::uint64_t seed = pr.method == PartitionMethod::mcmc ? opt.seed : builder.seed;
        rows.push_back({space.size(), pr.log_Z, pr.log_Z / n, pr.stderr / n, pr.method, seed});
    }
    return rows;
}

} // namespace soficlab
