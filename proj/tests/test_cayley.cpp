#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <set>

#include "soficlab/cayley.hpp"

using namespace soficlab;

namespace {

// l1 lattice points counted over the cube [-r, r]^d
long long zd_ball_size(int d, int r) {
    long long count = 0;
    std::vector<int> x(static_cast<size_t>(d), -r);
    while (true) {
        int len = 0;
        for (int c : x) len += std::abs(c);
        if (len <= r) ++count;
        int i = 0;
        while (i < d && x[static_cast<size_t>(i)] == r) x[static_cast<size_t>(i++)] = -r;
        if (i == d) return count;
        ++x[static_cast<size_t>(i)];
    }
}

long long free_ball_size(int k, int r) {
    long long s = 1, layer = 2 * k;
    for (int i = 1; i <= r; ++i) {
        s += layer;
        layer *= 2 * k - 1;
    }
    return s;
}

GroupElement random_element(const GroupSpec& spec, std::mt19937_64& rng, int max_len) {
    std::uniform_int_distribution<int> len(0, max_len), letter(0, spec.num_letters() - 1);
    std::vector<int> w(static_cast<size_t>(len(rng)));
    for (int& l : w) l = letter(rng);
    return from_word(spec, w);
}

} // namespace

TEST(Cayley, Identity) {
    EXPECT_EQ(identity(GroupSpec::zd(2)).data, (std::vector<int>{0, 0}));
    EXPECT_TRUE(identity(GroupSpec::free_group(2)).data.empty());
    EXPECT_EQ(identity(GroupSpec::zd(1)).data, (std::vector<int>{0}));
}

TEST(Cayley, Multiplication) {
    auto z2 = GroupSpec::zd(2);
    EXPECT_EQ(mul(z2, {{1, 0}}, {{0, 1}}).data, (std::vector<int>{1, 1}));
    auto f2 = GroupSpec::free_group(2);
    const int a = 0, A = 1, b = 2, B = 3;
    EXPECT_TRUE(mul(f2, {{a}}, {{A}}).data.empty());
    EXPECT_EQ(mul(f2, {{a, b}}, {{B, a}}).data, (std::vector<int>{a, a}));
}

TEST(Cayley, WordLength) {
    EXPECT_EQ(word_length(GroupSpec::zd(2), {{2, -1}}), 3);
    EXPECT_EQ(word_length(GroupSpec::free_group(2), {{0, 2, 1}}), 3);
    EXPECT_EQ(word_length(GroupSpec::free_group(3), identity(GroupSpec::free_group(3))), 0);
}

TEST(Cayley, BallExamples) {
    EXPECT_EQ(ball(GroupSpec::zd(2), 1).size(), 5);
    EXPECT_EQ(ball(GroupSpec::free_group(2), 2).size(), 17);
    auto b = ball(GroupSpec::zd(1), 3);
    ASSERT_EQ(b.size(), 7);
    std::set<int> xs;
    for (const auto& g : b.elements) xs.insert(g.data[0]);
    EXPECT_EQ(xs, (std::set<int>{-3, -2, -1, 0, 1, 2, 3}));
    EXPECT_EQ(ball(GroupSpec::zd(3), 0).size(), 1);
}

TEST(Cayley, CanonicalOrderZ1) {
    auto b = ball(GroupSpec::zd(1), 2);
    std::vector<int> xs;
    for (const auto& g : b.elements) xs.push_back(g.data[0]);
    EXPECT_EQ(xs, (std::vector<int>{0, 1, -1, 2, -2}));
}

TEST(Cayley, BallGrowthZd) {
    for (int d = 1; d <= 3; ++d)
        for (int r = 0; r <= 8; ++r) EXPECT_EQ(ball(GroupSpec::zd(d), r).size(), zd_ball_size(d, r)) << d << " " << r;
}

TEST(Cayley, BallGrowthFree) {
    for (int k = 2; k <= 3; ++k)
        for (int r = 0; r <= 6; ++r) {
            long long pow = 1;
            for (int i = 0; i < r; ++i) pow *= 2 * k - 1;
            long long closed = 1 + 2LL * k * (pow - 1) / (2 * k - 2);
            EXPECT_EQ(ball(GroupSpec::free_group(k), r).size(), free_ball_size(k, r));
            EXPECT_EQ(free_ball_size(k, r), closed);
        }
    EXPECT_EQ(ball(GroupSpec::free_group(1), 4).size(), 9);
}

TEST(Cayley, ExhaustionNesting) {
    for (auto spec : {GroupSpec::zd(1), GroupSpec::zd(2), GroupSpec::zd(3), GroupSpec::free_group(2)}) {
        for (int r = 0; r < 4; ++r) {
            auto small = ball(spec, r), big = ball(spec, r + 1);
            ASSERT_LE(small.size(), big.size());
            for (int i = 0; i < small.size(); ++i) EXPECT_EQ(small.elements[static_cast<size_t>(i)], big.elements[static_cast<size_t>(i)]);
            EXPECT_EQ(big.prefix_size(r), small.size());
        }
    }
}

TEST(Cayley, EdgesArePositiveGenerators) {
    auto spec = GroupSpec::zd(2);
    auto b = ball(spec, 2);
    for (const auto& e : b.edges) {
        auto expect = mul(spec, letter_element(spec, 2 * e.gen), b.elements[static_cast<size_t>(e.from)]);
        EXPECT_EQ(b.elements[static_cast<size_t>(e.to)], expect);
    }
    // Z^2 ball of radius 2: 13 vertices, edges counted per axis
    EXPECT_EQ(b.edges.size(), 16u);
}

TEST(Cayley, GroupAxioms) {
    std::mt19937_64 rng(11);
    for (auto spec : {GroupSpec::zd(2), GroupSpec::zd(3), GroupSpec::free_group(2), GroupSpec::free_group(3)}) {
        for (int t = 0; t < 200; ++t) {
            auto g = random_element(spec, rng, 8), h = random_element(spec, rng, 8), k = random_element(spec, rng, 8);
            EXPECT_EQ(mul(spec, mul(spec, g, h), k), mul(spec, g, mul(spec, h, k)));
            EXPECT_EQ(mul(spec, g, inv(spec, g)), identity(spec));
            EXPECT_EQ(mul(spec, inv(spec, g), g), identity(spec));
            EXPECT_EQ(mul(spec, g, identity(spec)), g);
            EXPECT_EQ(mul(spec, identity(spec), g), g);
            EXPECT_LE(word_length(spec, mul(spec, g, h)), word_length(spec, g) + word_length(spec, h));
            if (!spec.is_abelian()) {
                for (size_t i = 1; i < g.data.size(); ++i) EXPECT_NE(g.data[i], GroupSpec::inverse_letter(g.data[i - 1]));
            }
        }
    }
}

TEST(Cayley, RoundTripWords) {
    std::mt19937_64 rng(5);
    for (auto spec : {GroupSpec::zd(2), GroupSpec::free_group(2)}) {
        for (int t = 0; t < 100; ++t) {
            auto g = random_element(spec, rng, 8);
            EXPECT_EQ(from_word(spec, to_word(spec, g)), g);
            EXPECT_EQ(static_cast<int>(to_word(spec, g).size()), word_length(spec, g));
        }
    }
}

TEST(Cayley, RadiusValidation) {
    EXPECT_THROW(ball(GroupSpec::zd(1), -1), Error);
    EXPECT_THROW(GroupSpec::zd(0), Error);
    EXPECT_THROW(GroupSpec::free_group(0), Error);
    try {
        ball(GroupSpec::free_group(3), 10, 1000);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::cap_exceeded);
    }
}

TEST(Cayley, RootedIsomorphism) {
    auto a = ball(GroupSpec::zd(2), 2).graph();
    EXPECT_TRUE(rooted_labeled_isomorphic(a, a));
    auto b = ball(GroupSpec::free_group(2), 2).graph();
    EXPECT_FALSE(rooted_labeled_isomorphic(a, b));
    EXPECT_TRUE(rooted_labeled_isomorphic(ball(GroupSpec::zd(2), 3).graph().truncate(2), a));
}
