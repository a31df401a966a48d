#include <gtest/gtest.h>

#include <arbor/core_trees.hpp>
#include <arbor/rng.hpp>
#include <arbor/samplers.hpp>

using namespace arbor;

TEST(BuildTree, SingleNode) {
    auto t = build_tree({0});
    EXPECT_EQ(t.size(), 1u);
    EXPECT_EQ(t.height(), 0u);
}

TEST(BuildTree, Cherry) {
    auto t = build_tree({2, 0, 0});
    EXPECT_EQ(t.children()[0], (std::vector<std::size_t>{1, 2}));
}

TEST(BuildTree, PathThenCherry) {
    auto t = build_tree({1, 2, 0, 0});
    EXPECT_EQ(t.height(), 2u);
    EXPECT_EQ(t.luka(), (std::vector<degree_t>{1, 2, 0, 0}));
}

TEST(BuildTree, RejectsBadWords) {
    EXPECT_THROW(build_tree({0, 0}), invalid_word);
    EXPECT_THROW(build_tree({}), invalid_word);
    EXPECT_THROW(build_tree({0, 1}), invalid_word);
    EXPECT_THROW(build_tree({2, 0}), invalid_word);
}

TEST(DegreeStatisticsOp, Examples) {
    EXPECT_EQ(degree_statistics(build_tree({2, 0, 0})), (DegreeStatistics{{0, 2}, {2, 1}}));
    EXPECT_EQ(degree_statistics(build_tree({1, 2, 0, 0})), (DegreeStatistics{{0, 2}, {1, 1}, {2, 1}}));
    EXPECT_EQ(degree_statistics(build_tree({1, 1, 1, 1, 0})), (DegreeStatistics{{0, 1}, {1, 4}}));
}

TEST(DegreeStatisticsType, ForestCondition) {
    DegreeStatistics s{{0, 2}, {1, 1}, {2, 1}};
    EXPECT_EQ(s.trees(), 1u);
    EXPECT_EQ(s.node_count(), 4u);
    auto f = DegreeStatistics::forest({{0, 2}}, 2);
    EXPECT_EQ(f.trees(), 2u);
    EXPECT_THROW((DegreeStatistics{{0, 1}, {2, 1}}), invalid_statistics);
    EXPECT_THROW((DegreeStatistics{{1, 3}}), invalid_statistics);
    EXPECT_THROW(DegreeStatistics::forest({{0, 2}}, 1), invalid_statistics);
}

TEST(DegreeStatisticsType, JsonRoundTrip) {
    DegreeStatistics s{{0, 2}, {2, 1}};
    EXPECT_EQ(s.to_json().dump(), R"({"0":2,"2":1})");
    EXPECT_EQ(DegreeStatistics::from_json(nlohmann::json::parse(R"({"0":2,"2":1})")), s);
    EXPECT_THROW(DegreeStatistics::from_json(nlohmann::json::parse(R"({"x":2})")), invalid_statistics);
    EXPECT_THROW(DegreeStatistics::from_json(nlohmann::json::parse(R"({"0":-1})")), invalid_statistics);
}

TEST(HeightWidth, Examples) {
    auto a = build_tree({0});
    EXPECT_EQ(a.width_profile(), (std::vector<std::size_t>{1}));
    EXPECT_EQ(a.width(), 1u);
    auto b = build_tree({2, 0, 0});
    EXPECT_EQ(b.height(), 1u);
    EXPECT_EQ(b.width_profile(), (std::vector<std::size_t>{1, 2}));
    EXPECT_EQ(b.width(), 2u);
    auto c = build_tree({1, 2, 0, 0});
    EXPECT_EQ(c.width_profile(), (std::vector<std::size_t>{1, 1, 2}));
    EXPECT_EQ(c.width(), 2u);
}

TEST(Spine, Examples) {
    MarkedTree root(build_tree({0}), 0);
    EXPECT_TRUE(spinal_degrees(root, 0).empty());
    MarkedTree leaf(build_tree({2, 0, 0}), 2);
    EXPECT_EQ(spinal_degrees(leaf, 1), (std::vector<degree_t>{2}));
    MarkedTree deep(build_tree({1, 2, 0, 0}), 3);
    EXPECT_EQ(spinal_degrees(deep, 2), (std::vector<degree_t>{1, 2}));
    EXPECT_THROW(spinal_degrees(leaf, 2), k_too_large);
    EXPECT_THROW(MarkedTree(build_tree({0}), 1), invalid_mark);
}

TEST(NormsOp, Examples) {
    EXPECT_EQ(norms(DegreeStatistics{{0, 2}, {2, 1}}), (Norms{2, 4, 0}));
    EXPECT_EQ(norms(DegreeStatistics{{0, 2}, {1, 1}, {2, 1}}), (Norms{3, 5, 1}));
    EXPECT_EQ(norms(DegreeStatistics{{0, 5}, {2, 4}}), (Norms{8, 16, 0}));
}

TEST(NormsOp, SquareNormVersusOnes) {
    // p2sq >= n1, with equality exactly when no degree >= 2 is present
    EXPECT_EQ(norms(DegreeStatistics{{0, 1}, {1, 5}}).p2sq, 5u);
    EXPECT_GT(norms(DegreeStatistics{{0, 2}, {1, 5}, {2, 1}}).p2sq, 6u);
}

TEST(Serialization, LineFormat) {
    auto t = build_tree({2, 0, 1, 0});
    EXPECT_EQ(t.to_line(), "2 0 1 0");
    EXPECT_EQ(PlaneTree::from_line("2 0 1 0"), t);
    EXPECT_THROW(PlaneTree::from_line("2 x 0"), invalid_word);
}

class RandomTrees : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(RandomTrees, Invariants) {
    RngStream rng(GetParam(), 7);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + rng.below(60);
        // random multiset of degrees with sum n-1
        std::vector<degree_t> word(n, 0);
        for (std::size_t e = 0; e + 1 < n; ++e) ++word[rng.below(n)];
        auto t = cycle_lemma_rotate(word);
        EXPECT_EQ(build_tree(t.luka()).luka(), t.luka());
        auto prof = t.width_profile();
        std::size_t total = 0;
        for (auto w : prof) total += w;
        EXPECT_EQ(total, t.size());
        EXPECT_EQ(prof.front(), 1u);
        EXPECT_EQ(t.height() + 1, prof.size());
        const auto s = degree_statistics(t);
        EXPECT_EQ(1 + norms(s).p1, t.size());
        // statistics depend only on the multiset
        auto shuffled = word;
        shuffle(shuffled, rng);
        EXPECT_EQ(degree_statistics(cycle_lemma_rotate(shuffled)), s);
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomTrees, ::testing::Values(1u, 2u, 3u));
