#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "soficlab/randompast.hpp"

using namespace soficlab;

TEST(RandomPast, PercolationBasics) {
    auto s = sample_percolation_past(GroupSpec::zd(2), 0, 4);
    EXPECT_TRUE(s.members().empty());
    auto t = sample_percolation_past(GroupSpec::free_group(2), 2, 4);
    ASSERT_EQ(t.member.size(), 17u);
    EXPECT_EQ(t.member[0], 0);
    for (size_t i = 1; i < t.member.size(); ++i) EXPECT_EQ(t.member[i] != 0, t.chi[i] < t.chi[0]);
    EXPECT_EQ(sample_percolation_past(17, 2, 9).member, sample_percolation_past(17, 2, 9).member);
}

TEST(RandomPast, PercolationStatistics) {
    const auto spec = GroupSpec::zd(2);
    const int r = 2, N = 10000;
    const int size = ball(spec, r).size();
    std::vector<int> hits(static_cast<size_t>(size), 0);
    double total = 0.0, total_sq = 0.0;
    for (int s = 0; s < N; ++s) {
        auto p = sample_percolation_past(spec, r, derive_seed(1, static_cast<std::uint64_t>(s)));
        double k = static_cast<double>(p.members().size());
        total += k;
        total_sq += k * k;
        for (int i : p.members()) ++hits[static_cast<size_t>(i)];
    }
    const double mean = total / N, var = total_sq / N - mean * mean;
    EXPECT_NEAR(mean, (size - 1) / 2.0, 3 * std::sqrt(var / N));
    const double sd = std::sqrt(0.25 / N);
    for (int i = 1; i < size; ++i) EXPECT_NEAR(hits[static_cast<size_t>(i)] / static_cast<double>(N), 0.5, 4 * sd);
}

TEST(RandomPast, Transitivity) {
    // u in the past of v and v in the past of w puts u in the past of w
    auto s = sample_percolation_past(40, 3, 12);
    for (size_t u = 0; u < s.chi.size(); ++u)
        for (size_t v = 0; v < s.chi.size(); ++v)
            for (size_t w = 0; w < s.chi.size(); ++w)
                if (precedes(s.chi[u], u, s.chi[v], v) && precedes(s.chi[v], v, s.chi[w], w)) {
                    EXPECT_TRUE(precedes(s.chi[u], u, s.chi[w], w));
                }
    for (size_t u = 0; u < s.chi.size(); ++u)
        for (size_t v = 0; v < s.chi.size(); ++v)
            if (u != v) {
                EXPECT_NE(precedes(s.chi[u], u, s.chi[v], v), precedes(s.chi[v], v, s.chi[u], u));
            }
    EXPECT_TRUE(precedes(0.5, 1, 0.5, 2));
}

TEST(RandomPast, LexPast) {
    const auto Z2 = GroupSpec::zd(2);
    EXPECT_TRUE(lex_past(Z2, {{-1, 5}}));
    EXPECT_TRUE(lex_past(Z2, {{0, -1}}));
    EXPECT_FALSE(lex_past(Z2, {{0, 0}}));
    EXPECT_FALSE(lex_past(Z2, {{0, 3}}));
    EXPECT_THROW((void)lex_past(GroupSpec::free_group(2), {{0}}), Error);
    auto B = ball(GroupSpec::zd(1), 3);
    EXPECT_EQ(lex_past_sample(B).members(), (std::vector<int>{2, 4, 6}));
    // invariance: g precedes h iff h - g is positive
    auto B2 = ball(Z2, 2);
    for (const auto& g : B2.elements)
        for (const auto& h : B2.elements) {
            GroupElement d{{h.data[0] - g.data[0], h.data[1] - g.data[1]}};
            GroupElement nd{{-d.data[0], -d.data[1]}};
            if (g != h) {
                EXPECT_NE(lex_past(Z2, d), lex_past(Z2, nd));
            }
        }
}

TEST(RandomPast, VertexOrder) {
    auto one = sample_vertex_order(SoficMap(GroupSpec::free_group(1), {{0}}, {}), 5);
    EXPECT_EQ(one.rank, (std::vector<Vertex>{0}));
    auto sigma = build_torus(1, 50);
    auto o = sample_vertex_order(sigma, 3);
    std::set<Vertex> seen(o.rank.begin(), o.rank.end());
    EXPECT_EQ(seen.size(), 50u);
    EXPECT_EQ(*seen.rbegin(), 49u);
    EXPECT_EQ(sample_vertex_order(sigma, 3).rank, o.rank);
}

TEST(RandomPast, VertexOrderUniform) {
    // rank of a fixed vertex over many seeds: chi-square against uniform on 10 bins
    auto sigma = build_torus(1, 100);
    const int N = 2000, bins = 10;
    std::vector<int> counts(bins, 0);
    for (int s = 0; s < N; ++s) ++counts[sample_vertex_order(sigma, derive_seed(2, static_cast<std::uint64_t>(s))).rank[17] / 10];
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - N / bins) * (c - N / bins) / static_cast<double>(N / bins);
    EXPECT_LT(chi2, 27.88);  // 9 degrees of freedom, p = 0.001
}

TEST(RandomPast, PulledBackPast) {
    auto sigma = build_torus(2, 8);
    auto o = sample_vertex_order(sigma, 7);
    for (Vertex v = 0; v < sigma.size(); ++v) EXPECT_TRUE(pulled_back_past(sigma, o, v, 0).empty());
    Vertex first = 0;
    for (Vertex v = 0; v < sigma.size(); ++v)
        if (o.rank[v] == 0) first = v;
    for (int r = 0; r <= 3; ++r) EXPECT_TRUE(pulled_back_past(sigma, o, first, r).empty());
}

TEST(RandomPast, DiagonalCouplingExact) {
    for (auto sigma : {build_torus(2, 8), build_random_perm(2, 500, 4), build_folner_box(2, 6)}) {
        const int r = 2;
        auto mask = good_mask(sigma, ball(sigma.group(), r));
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            auto o = sample_vertex_order(sigma, seed);
            for (Vertex v = 0; v < sigma.size(); ++v) {
                if (!mask[v]) continue;
                EXPECT_EQ(pulled_back_past(sigma, o, v, r), diagonal_past(sigma, o, v, r).members());
            }
        }
    }
}

TEST(RandomPast, CouplingCheck) {
    EXPECT_DOUBLE_EQ(coupling_check(build_torus(1, 6), 2), 1.0);
    EXPECT_DOUBLE_EQ(coupling_check(build_torus(1, 4), 2), 0.0);
    double f = coupling_check(build_random_perm(2, 10000, 1), 2);
    EXPECT_GE(f, 0.9);
    EXPECT_DOUBLE_EQ(f, coupling_check(build_random_perm(2, 10000, 1), 2));
}

TEST(RandomPast, FolnerLexOrder) {
    auto sigma = build_folner_box(2, 5);
    auto o = folner_lex_order(sigma);
    std::set<Vertex> seen(o.rank.begin(), o.rank.end());
    EXPECT_EQ(seen.size(), 25u);
    // index x + 5y has key 5x + y
    EXPECT_EQ(o.rank[1], 5u);
    EXPECT_EQ(o.rank[5], 1u);
    // away from the seams the pulled-back past is the lex past
    auto B = ball(sigma.group(), 1);
    const Vertex centre = 2 + 5 * 2;
    auto past = pulled_back_past(sigma, o, centre, 1);
    EXPECT_EQ(past, lex_past_sample(B).members());
    EXPECT_THROW((void)folner_lex_order(build_random_perm(2, 10, 1)), Error);
}
