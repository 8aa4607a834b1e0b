// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "soficlab/soficlab.hpp"

using namespace soficlab;

namespace {

const GroupSpec Z1 = GroupSpec::zd(1);
const GroupSpec Z2 = GroupSpec::zd(2);
const double log_golden = std::log((1 + std::sqrt(5.0)) / 2);

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.str().empty()) detail << "; ";
        detail << what << (ok ? "" : " [FAILED]");
    }
};

std::string fmt(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

// brute-force partition function of hardcore on the cycle C_m
double cycle_log_z(int m, double lambda) {
    double z = 0.0;
    for (unsigned long mask = 0; mask < (1ul << m); ++mask) {
        bool ok = true;
        for (int i = 0; i < m && ok; ++i) ok = !((mask >> i & 1ul) && (mask >> ((i + 1) % m) & 1ul));
        if (ok) z += std::pow(lambda, __builtin_popcountl(mask));
    }
    return std::log(z);
}

double transfer_pressure(double lambda, int m) {
    DerivedSpace space(models::hardcore(Z1, lambda), build_torus(1, m));
    return partition_transfer_cycle(space).log_Z / m;
}

Model random_model(std::mt19937_64& rng, const GroupSpec& g) {
    const int a = std::uniform_int_distribution<int>(2, 3)(rng);
    Model m{"random", g, {a, {}}, {{}, {}}};
    std::uniform_real_distribution<double> w(-1.0, 1.0);
    for (int b = 0; b < a; ++b) m.potential.vertex_log_weights.push_back(w(rng));
    for (int gen = 0; gen < g.rank(); ++gen) {
        std::vector<char> R(static_cast<size_t>(a * a));
        for (auto& c : R) c = std::bernoulli_distribution(0.7)(rng);
        for (int b = 0; b < a; ++b) R[static_cast<size_t>(b)] = R[static_cast<size_t>(b * a)] = 1;
        m.constraints.relations.push_back(R);
        std::vector<double> J(static_cast<size_t>(a * a));
        for (double& j : J) j = w(rng);
        m.potential.edge_log_weights.push_back(J);
    }
    return m;
}

using Adj = std::vector<std::vector<int>>;

Adj random_connected(std::mt19937_64& rng, int n) {
    Adj adj(static_cast<size_t>(n));
    auto add = [&](int u, int v) {
        auto& a = adj[static_cast<size_t>(u)];
        if (u == v || std::find(a.begin(), a.end(), v) != a.end()) return;
        a.push_back(v);
        adj[static_cast<size_t>(v)].push_back(u);
    };
    for (int v = 1; v < n; ++v) add(v, std::uniform_int_distribution<int>(0, v - 1)(rng));
    const int extra = std::uniform_int_distribution<int>(0, n)(rng);
    for (int e = 0; e < extra; ++e)
        add(std::uniform_int_distribution<int>(0, n - 1)(rng), std::uniform_int_distribution<int>(0, n - 1)(rng));
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return adj;
}

double brute_marginal(const Adj& adj, int v, double lambda, const std::vector<int>& pins) {
    const int n = static_cast<int>(adj.size());
    double z = 0.0, occ = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        bool ok = true;
        for (int u = 0; u < n && ok; ++u) {
            int xu = static_cast<int>(mask >> u & 1u);
            if (pins[static_cast<size_t>(u)] >= 0 && pins[static_cast<size_t>(u)] != xu) ok = false;
            if (xu)
                for (int w : adj[static_cast<size_t>(u)]) ok = ok && !(mask >> w & 1u);
        }
        if (!ok) continue;
        double w = std::pow(lambda, __builtin_popcount(mask));
        z += w;
        if (mask >> v & 1u) occ += w;
    }
    return occ / z;
}

Configuration random_config(size_t n, std::mt19937_64& rng, double p_one) {
    std::bernoulli_distribution one(p_one);
    Configuration x(n);
    for (int& s : x) s = one(rng) ? 1 : 0;
    return x;
}

// ------------------------------------------------------------ criteria

void c1(Outcome& o) {
    const double p = transfer_pressure(1.0, 64);
    o.check(std::abs(p - log_golden) <= 1e-6, "|p64 - log phi| = " + fmt(std::abs(p - log_golden)) + " <= 1e-6");
    double worst = 0.0;
    for (int m = 3; m <= 20; ++m) {
        DerivedSpace space(models::hardcore(Z1, 1.0), build_torus(1, m), Enforcement::all_edges);
        worst = std::max(worst, std::abs(partition_transfer_cycle(space).log_Z - cycle_log_z(m, 1.0)));
    }
    o.check(worst <= 1e-9, "max |log Z_brute - log trace| over m <= 20 = " + fmt(worst) + " <= 1e-9");
}

void c2(Outcome& o) {
    const double p = transfer_pressure(2.0, 64);
    o.check(std::abs(p - std::log(2.0)) <= 1e-6, "|p64 - log 2| = " + fmt(std::abs(p - std::log(2.0))) + " <= 1e-6");
}

void c3_one(Outcome& o, double lambda, double target) {
    const int r = 16;
    auto hc = models::hardcore(Z1, lambda);
    TransferOracle oracle(hc, r);
    auto est = kp_pressure_at_fixed_point(hc, oracle, r, 200000, 7);
    auto budget = kp_budget(hc, r);
    const double tol = 3 * est.stderr + budget.value();
    const double gap = std::abs(est.value - target);
    o.check(gap <= tol && est.stderr < 0.005, "lambda=" + fmt(lambda) + ": |" + fmt(est.value) + " - " + fmt(target) +
                                                  "| = " + fmt(gap) + " <= 3*" + fmt(est.stderr) + " + " +
                                                  fmt(budget.value()) + ", stderr < 0.005");
}

void c4(Outcome& o) {
    const int r = 16;
    for (double lambda : {1.0, 2.0}) {
        auto hc = models::hardcore(Z1, lambda);
        TransferOracle oracle(hc, r);
        auto fixed = kp_pressure_at_fixed_point(hc, oracle, r, 200000, 7);
        auto mu = kp_pressure_at_measure(hc, oracle, transfer_sampler(hc, r), r, 8, 25000, 19);
        const double joint = std::hypot(fixed.stderr, mu.total.stderr);
        const double gap = std::abs(fixed.value - mu.total.value);
        o.check(gap <= 3 * joint, "lambda=" + fmt(lambda) + ": |" + fmt(mu.total.value) + " - " + fmt(fixed.value) +
                                      "| = " + fmt(gap) + " <= 3*" + fmt(joint));
    }
}

void c5(Outcome& o) {
    const int r = 16;
    const double target = 2.0 / 3.0 * std::log(2.0);
    auto hc = models::hardcore(Z1, 2.0);
    TransferOracle oracle(hc, r);
    auto mu = kp_pressure_at_measure(hc, oracle, transfer_sampler(hc, r), r, 8, 25000, 23);
    const double gap = std::abs(mu.information.value - target);
    o.check(gap <= 0.01, "percolative entropy " + fmt(mu.information.value) + " (stderr " + fmt(mu.information.stderr) +
                             "), gap " + fmt(gap) + " <= 0.01");
    auto rows = entropy_rate_estimate(hc, {"torus", 1, 2, 1}, {8, 12, 16}, MethodChoice::exact);
    const double g16 = std::abs(rows.back().entropy_rate - target);
    const double g8 = std::abs(rows.front().entropy_rate - target);
    o.check(g16 < 0.02 && g16 < g8, "exact H/n gap at m=8 " + fmt(g8) + ", m=16 " + fmt(g16) + " < 0.02");
}

void c6(Outcome& o) {
    std::mt19937_64 rng(31);
    std::vector<SoficMap> maps{build_torus(1, 8), build_torus(1, 11), build_torus(2, 3), build_random_perm(2, 7, 5)};
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const SoficMap& sigma = maps[static_cast<size_t>(t) % maps.size()];
        DerivedSpace space(random_model(rng, sigma.group()), sigma);
        auto g = derived_gibbs_exact(space);
        worst = std::max(worst, std::abs(g.log_Z - (g.entropy() + g.mean_energy())));
        worst = std::max(worst, std::abs(g.log_Z - partition_exact(space).log_Z));
    }
    o.check(worst <= 1e-9, "max |log Z - H - E[H*]| over 20 models = " + fmt(worst) + " <= 1e-9");
}

void c7(Outcome& o) {
    std::mt19937_64 rng(37);
    DerivedSpace space(models::hardcore(Z1, 1.3), build_torus(1, 12));
    auto g = derived_gibbs_exact(space);
    const double best = g.entropy() + g.mean_energy();
    std::gamma_distribution<double> gam(0.5, 1.0);
    double excess = -INFINITY;
    for (int t = 0; t < 200; ++t) {
        std::vector<double> nu(g.configs.size());
        double s = 0.0;
        for (double& q : nu) s += (q = gam(rng));
        double h = 0.0, e = 0.0;
        for (size_t i = 0; i < nu.size(); ++i) {
            double q = nu[i] / s;
            if (q > 0.0) h -= q * std::log(q);
            e += q * g.energies[i];
        }
        excess = std::max(excess, h + e - best);
    }
    o.check(excess <= 1e-9, "max (H(nu) + E_nu - H(mu) - E_mu) over 200 nu = " + fmt(excess) + " <= 1e-9");
}

void c8(Outcome& o) {
    std::mt19937_64 rng(101);
    int failures = 0, checked = 0;
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int n = std::uniform_int_distribution<int>(1, 8)(rng);
        Adj adj = random_connected(rng, n);
        std::vector<int> pins(static_cast<size_t>(n), -1);
        for (int u = 0; u < n; ++u) {
            if (!std::bernoulli_distribution(0.25)(rng)) continue;
            int s = std::bernoulli_distribution(0.5)(rng);
            bool clash = false;
            for (int w : adj[static_cast<size_t>(u)]) clash = clash || pins[static_cast<size_t>(w)] == 1;
            pins[static_cast<size_t>(u)] = (s == 1 && clash) ? 0 : s;
        }
        for (double lambda : {0.5, 1.0, 2.0})
            for (int v = 0; v < n; ++v) {
                double d = std::abs(hardcore_marginal_via_saw(adj, v, lambda, pins) - brute_marginal(adj, v, lambda, pins));
                worst = std::max(worst, d);
                failures += d > 1e-10;
                ++checked;
            }
    }
    o.check(failures == 0, std::to_string(failures) + " failures in " + std::to_string(checked) +
                               " marginals, max diff " + fmt(worst) + " <= 1e-10");
}

void c9(Outcome& o) {
    std::mt19937_64 rng(41);
    auto sigma = build_torus(2, 6);
    WindowChecker wc(sigma, models::hardcore(Z2, 1.0).constraints);
    int bad = 0;
    for (int t = 0; t < 1000; ++t) {
        auto x = random_config(sigma.size(), rng, std::uniform_real_distribution<double>(0.05, 0.9)(rng));
        auto y = correct_errors(wc, x);
        bool ok = wc.in_Xn(y);
        auto U = wc.window_union(wc.error_set(x));
        for (Vertex v = 0; v < sigma.size() && ok; ++v)
            if (!std::binary_search(U.begin(), U.end(), v)) ok = y[v] == x[v];
        bad += !ok;
    }
    o.check(bad == 0, std::to_string(bad) + " of 1000 corrections left X^n or moved a vertex outside the error windows");
}

void c10(Outcome& o) {
    auto hc = check_tssm(models::hardcore(Z1, 1.0).constraints, Z1, 1, 2, 2);
    o.check(hc.kind == TssmVerdict::Kind::safe_symbol_certified, std::string("hardcore ") + tssm_kind_name(hc.kind));
    auto cb = models::checkerboard(Z1).constraints;
    auto v = check_tssm(cb, Z1, 1, 2, 2);
    bool replay = v.kind == TssmVerdict::Kind::violated_at && is_globally_admissible(cb, Z1, v.witness, 2) == Verdict::no;
    o.check(replay, std::string("checkerboard ") + tssm_kind_name(v.kind) + (replay ? ", witness replays" : ""));
    auto fs = check_tssm(models::full_shift(Z2, 2).constraints, Z2, 1, 2, 2);
    o.check(fs.kind == TssmVerdict::Kind::safe_symbol_certified, std::string("full shift ") + tssm_kind_name(fs.kind));
}

void c11(Outcome& o) {
    o.check(weitz_threshold(3) == 4.0, "lambda_c(3) = " + fmt(weitz_threshold(3)));
    o.check(weitz_threshold(4) == 1.6875, "lambda_c(4) = " + fmt(weitz_threshold(4)));
    o.check(weitz_threshold(5) == 256.0 / 243.0, "lambda_c(5) = " + fmt(weitz_threshold(5)) + " = 256/243");
}

void c12(Outcome& o) {
    auto hc = models::hardcore(Z1, 1.0);
    auto ref = transfer_reference(hc, 1);
    std::vector<double> fr;
    for (int m : {8, 16, 32}) fr.push_back(local_weakstar_gap(DerivedSpace(hc, build_torus(1, m)), ref, 1, 0.01).fraction);
    bool monotone = fr[1] <= fr[0] && fr[2] <= fr[1];
    o.check(monotone && fr[2] < 0.05,
            "gap fractions " + fmt(fr[0]) + ", " + fmt(fr[1]) + ", " + fmt(fr[2]) + " nonincreasing, final < 0.05");
}

void c13(Outcome& o) {
    auto hc = models::hardcore(Z1, 1.0);
    auto torus = pressure_estimate(hc, {"torus", 1, 2, 1}, {64}, MethodChoice::automatic);
    auto box = pressure_estimate(hc, {"folner", 1, 2, 1}, {64}, MethodChoice::automatic);
    const double gap = std::abs(torus[0].pressure - box[0].pressure);
    o.check(gap <= 1e-3, "|torus - folner| at m=64 = " + fmt(gap) + " <= 1e-3");
}

void c14(Outcome& o) {
    McmcOptions opt;
    opt.sweeps = 4000;
    opt.grid_points = 32;
    opt.seed = 1;
    DerivedSpace c4(models::hardcore(Z1, 1.0), build_torus(1, 4), Enforcement::all_edges);
    const double a = partition_mcmc(c4, opt).log_Z;
    o.check(std::abs(a - std::log(7.0)) <= 0.02, "C4: |" + fmt(a) + " - log 7| = " + fmt(std::abs(a - std::log(7.0))) + " <= 0.02");
    DerivedSpace t4(models::hardcore(Z2, 1.0), build_torus(2, 4), Enforcement::all_edges);
    const double b = partition_mcmc(t4, opt).log_Z, e = partition_exact(t4).log_Z;
    o.check(std::abs(b - e) <= 0.03, "4x4 torus: |" + fmt(b) + " - " + fmt(e) + "| = " + fmt(std::abs(b - e)) + " <= 0.03");
}

struct Criterion {
    int id;
    std::string name;
    double limit_s;  // 0: no runtime bound
    std::function<void(Outcome&)> run;
};

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "golden-mean pressure", 1.0, c1},
        {2, "lambda=2 pressure", 1.0, c2},
        {3, "KP fixed point, lambda=0.5", 60.0,
         [](Outcome& o) { c3_one(o, 0.5, std::log((1 + std::sqrt(3.0)) / 2)); }},
        {3, "KP fixed point, lambda=1", 60.0, [](Outcome& o) { c3_one(o, 1.0, log_golden); }},
        {3, "KP fixed point, lambda=2", 60.0, [](Outcome& o) { c3_one(o, 2.0, std::log(2.0)); }},
        {4, "nu-independence", 120.0, c4},
        {5, "entropy formula", 0.0, c5},
        {6, "equilibrium identity", 30.0, c6},
        {7, "Gibbs maximality", 0.0, c7},
        {8, "Weitz SAW equivalence", 30.0, c8},
        {9, "error correction", 10.0, c9},
        {10, "TSSM checker", 5.0, c10},
        {11, "lambda_c formula", 0.0, c11},
        {12, "local weak* convergence", 60.0, c12},
        {13, "sofic-independence proxy", 5.0, c13},
        {14, "MCMC partition sanity", 120.0, c14},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        auto start = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.check(false, std::string("threw ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.limit_s > 0.0) o.check(secs < c.limit_s, "runtime < " + fmt(c.limit_s) + " s");
        failed += !o.pass;
        std::printf("criterion %2d %s  %s (%.3f s): %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name.c_str(), secs,
                    o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%s: %d failing\n", failed ? "FAIL" : "PASS", failed);
    return failed ? 1 : 0;
}
