#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "soficlab/pairwise.hpp"
#include "soficlab/transfer.hpp"

using namespace soficlab;

namespace {

Model random_model(std::mt19937_64& rng, int a, int k) {
    Model m{"random", GroupSpec::free_group(k), {a, {}}, {{}, {}}};
    std::uniform_real_distribution<double> w(-1.0, 1.0);
    for (int b = 0; b < a; ++b) m.potential.vertex_log_weights.push_back(w(rng));
    for (int g = 0; g < k; ++g) {
        std::vector<char> R(static_cast<size_t>(a * a));
        for (auto& c : R) c = std::bernoulli_distribution(0.75)(rng);
        R[0] = 1;
        m.constraints.relations.push_back(R);
        std::vector<double> J(static_cast<size_t>(a * a));
        for (double& j : J) j = w(rng);
        m.potential.edge_log_weights.push_back(J);
    }
    return m;
}

struct Brute {
    double log_z = neg_inf;
    std::vector<std::vector<double>> marg;
};

// Plain enumeration of A^n.
Brute brute(const PairwiseSystem& sys) {
    const int n = sys.size(), a = sys.alphabet();
    std::vector<int> x(static_cast<size_t>(n), 0);
    std::vector<double> ws;
    std::vector<std::vector<int>> xs;
    while (true) {
        bool ok = true;
        for (int v = 0; v < n; ++v) {
            int p = sys.pins()[static_cast<size_t>(v)];
            ok = ok && (p < 0 || p == x[static_cast<size_t>(v)]);
        }
        double w = ok ? sys.log_weight(x) : neg_inf;
        if (w != neg_inf) {
            ws.push_back(w);
            xs.push_back(x);
        }
        int pos = 0;
        while (pos < n && x[static_cast<size_t>(pos)] == a - 1) x[static_cast<size_t>(pos++)] = 0;
        if (pos == n) break;
        ++x[static_cast<size_t>(pos)];
    }
    Brute b;
    b.log_z = log_sum_exp(ws);
    b.marg.assign(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(a), 0.0));
    for (size_t i = 0; i < ws.size(); ++i)
        for (int v = 0; v < n; ++v) b.marg[static_cast<size_t>(v)][static_cast<size_t>(xs[i][static_cast<size_t>(v)])] += std::exp(ws[i] - b.log_z);
    return b;
}

} // namespace

TEST(Pairwise, LogAdd) {
    EXPECT_NEAR(log_add(std::log(2.0), std::log(3.0)), std::log(5.0), 1e-15);
    EXPECT_EQ(log_add(neg_inf, 1.5), 1.5);
    EXPECT_EQ(log_sum_exp({}), neg_inf);
}

TEST(Pairwise, RandomSystemsMatchEnumeration) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 150; ++t) {
        const int a = std::uniform_int_distribution<int>(2, 3)(rng);
        const int k = std::uniform_int_distribution<int>(1, 2)(rng);
        const int n = std::uniform_int_distribution<int>(1, a == 2 ? 10 : 7)(rng);
        PairwiseSystem sys(random_model(rng, a, k), n);
        const int edges = std::uniform_int_distribution<int>(0, 2 * n)(rng);
        for (int e = 0; e < edges; ++e) {
            int u = std::uniform_int_distribution<int>(0, n - 1)(rng);
            int v = std::uniform_int_distribution<int>(0, n - 1)(rng);
            sys.add_factor(u, v, std::uniform_int_distribution<int>(0, k - 1)(rng), std::bernoulli_distribution(0.8)(rng));
        }
        for (int v = 0; v < n; ++v)
            if (std::bernoulli_distribution(0.2)(rng)) sys.pin(v, std::uniform_int_distribution<int>(0, a - 1)(rng));
        Brute b = brute(sys);
        double lz = sys.log_partition();
        if (b.log_z == neg_inf) {
            EXPECT_EQ(lz, neg_inf);
            continue;
        }
        EXPECT_NEAR(lz, b.log_z, 1e-10);
        for (int v = 0; v < n; ++v) {
            auto m = sys.marginal(v);
            for (int s = 0; s < a; ++s) EXPECT_NEAR(m[static_cast<size_t>(s)], b.marg[static_cast<size_t>(v)][static_cast<size_t>(s)], 1e-10);
        }
        // DFS enumeration agrees too
        std::vector<double> ws;
        sys.enumerate([&](const std::vector<int>&, double w) { ws.push_back(w); });
        EXPECT_NEAR(log_sum_exp(ws), b.log_z, 1e-10);
        auto found = sys.find_assignment();
        EXPECT_EQ(found.status, PairwiseSystem::SearchStatus::found);
        EXPECT_GT(sys.log_weight(found.assignment), neg_inf);
    }
}

TEST(Pairwise, JointOrdering) {
    std::mt19937_64 rng(3);
    Model m = random_model(rng, 2, 1);
    PairwiseSystem sys(m, 4);
    for (int v = 0; v < 4; ++v) sys.add_factor(v, (v + 1) % 4, 0);
    auto j = sys.joint({2, 0});
    auto m2 = sys.marginal(2), m0 = sys.marginal(0);
    // prob index = x_2 + 2 x_0
    EXPECT_NEAR(j.prob[0] + j.prob[2], m2[0], 1e-12);
    EXPECT_NEAR(j.prob[0] + j.prob[1], m0[0], 1e-12);
}

TEST(Pairwise, Infeasible) {
    Model m{"x", GroupSpec::zd(1), {2, {{0, 1, 1, 0}}}, {{0.0, 0.0}, {}}};
    PairwiseSystem sys(m, 3);
    for (int v = 0; v < 3; ++v) sys.add_factor(v, (v + 1) % 3, 0);
    EXPECT_EQ(sys.log_partition(), neg_inf);
    EXPECT_EQ(sys.find_assignment().status, PairwiseSystem::SearchStatus::infeasible);
    EXPECT_EQ(sys.marginal(0), (std::vector<double>{0.0, 0.0}));
}

TEST(Pairwise, StateCap) {
    Model m{"x", GroupSpec::zd(2), {2, {{1, 1, 1, 1}, {1, 1, 1, 1}}}, {{0.0, 0.0}, {}}};
    const int side = 8;
    PairwiseSystem sys(m, side * side);
    for (int v = 0; v < side * side; ++v) {
        sys.add_factor(v, (v + 1) % (side * side), 0);
        sys.add_factor(v, (v + side) % (side * side), 1);
    }
    sys.set_state_cap(1 << 6);
    try {
        (void)sys.log_partition();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::cap_exceeded);
    }
    sys.set_state_cap(default_state_cap);
    EXPECT_NEAR(sys.log_partition(), side * side * std::log(2.0), 1e-9);
}

TEST(Transfer, GoldenMean) {
    Model m{"hc", GroupSpec::zd(1), {2, {{1, 1, 1, 0}}}, {{0.0, 0.0}, {}}};
    TransferMatrix tm(m);
    EXPECT_NEAR(tm.log_rho(), std::log((1 + std::sqrt(5.0)) / 2), 1e-12);
    // occupation of the golden-mean measure: 1/(1 + phi^2)
    double phi = (1 + std::sqrt(5.0)) / 2;
    EXPECT_NEAR(tm.stationary()(1), 1.0 / (1.0 + phi * phi), 1e-12);
    EXPECT_NEAR(std::exp(tm.log_trace_power(4)), 7.0, 1e-9);
    EXPECT_NEAR(std::exp(tm.log_trace_power(5)), 11.0, 1e-9);
    EXPECT_NEAR(tm.entropy_rate(), tm.log_rho(), 1e-12);
}

TEST(Transfer, ConditionalMatchesEnumeration) {
    Model m{"hc", GroupSpec::zd(1), {2, {{1, 1, 1, 0}}}, {{0.0, std::log(2.0)}, {}}};
    TransferMatrix tm(m);
    // x_{-2} = 1, x_1 = 0: paths 1,0,1,0 (weight 2) and 1,0,0,0 (weight 1)
    auto c = tm.conditional(2, 1, 1, 0);
    EXPECT_NEAR(c[1], 2.0 / 3.0, 1e-12);
    TransferMatrix cb(Model{"cb", GroupSpec::zd(1), {2, {{0, 1, 1, 0}}}, {{0.0, 0.0}, {}}});
    EXPECT_THROW((void)cb.conditional(1, 0, 1, 1), Error);
    EXPECT_NEAR(cb.conditional(1, 0, 1, 0)[1], 1.0, 1e-12);
    EXPECT_THROW(TransferMatrix(Model{"z2", GroupSpec::zd(2), {2, {{1, 1, 1, 1}, {1, 1, 1, 1}}}, {{0.0, 0.0}, {}}}), Error);
}
