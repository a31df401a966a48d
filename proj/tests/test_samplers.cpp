#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include <arbor/enumeration.hpp>
#include <arbor/samplers.hpp>
#include <arbor/simply_generated.hpp>
#include <arbor/stats.hpp>

using namespace arbor;

namespace {

constexpr std::uint64_t draws = 100000;

std::vector<double> probs_of(const ExactDistribution& d) {
    std::vector<double> p(d.support.empty() ? 1 : d.support.back() + 1, 0.0);
    for (std::size_t i = 0; i < d.support.size(); ++i) p[d.support[i]] = to_double(d.mass[i]);
    return p;
}

template <class F>
std::vector<std::uint64_t> histogram(F&& f, std::uint64_t count) {
    std::vector<std::uint64_t> h;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto x = f();
        if (x >= h.size()) h.resize(x + 1, 0);
        ++h[x];
    }
    return h;
}

void expect_within_3se(std::uint64_t hits, std::uint64_t n, double p) {
    const double se = std::sqrt(p * (1 - p) / static_cast<double>(n));
    EXPECT_LE(std::abs(static_cast<double>(hits) / static_cast<double>(n) - p), 3 * se + 1e-12);
}

std::vector<DegreeStatistics> battery(std::size_t max_nodes) {
    std::vector<DegreeStatistics> out;
    for (std::size_t n = 2; n <= max_nodes; ++n)
        for (auto& s : all_tree_statistics(n)) out.push_back(std::move(s));
    return out;
}

} // namespace

TEST(Rng, DeterministicStreams) {
    RngStream a(42, 3), b(42, 3), c(42, 4);
    std::vector<std::uint64_t> xa, xb, xc;
    for (int i = 0; i < 16; ++i) xa.push_back(a.bits()), xb.push_back(b.bits()), xc.push_back(c.bits());
    EXPECT_EQ(xa, xb);
    EXPECT_NE(xa, xc);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_LT(a.below(7), 7u);
    }
}

TEST(Rng, GoldenValue) {
    // mt19937_64 and splitmix64 are fully specified, so these hold on every platform.
    RngStream r(1, 0);
    EXPECT_EQ(r.bits(), 0x7fbbfd6a96c52780ULL);
    EXPECT_EQ(r.bits(), 0x5bfeb516f191ff56ULL);
}

TEST(SizeBiasing, Examples) {
    RngStream rng(1, 0);
    for (int i = 0; i < 100; ++i)
        EXPECT_EQ(sample_size_biasing(DegreeStatistics{{0, 2}, {2, 1}}, rng).d, (std::vector<degree_t>{2, 0, 0}));
    EXPECT_EQ(sample_size_biasing(DegreeStatistics{}, rng).d, (std::vector<degree_t>{0}));
    std::uint64_t twos = 0;
    for (std::uint64_t i = 0; i < draws; ++i) twos += sample_size_biasing(DegreeStatistics{{0, 2}, {1, 1}, {2, 1}}, rng).d[0] == 2;
    expect_within_3se(twos, draws, 2.0 / 3.0);
}

TEST(SizeBiasing, MultisetAndTrailingZeros) {
    RngStream rng(2, 0);
    for (const auto& s : battery(9)) {
        for (int rep = 0; rep < 20; ++rep) {
            const auto d = sample_size_biasing(s, rng).d;
            auto sorted = d;
            std::sort(sorted.begin(), sorted.end());
            EXPECT_EQ(sorted, s.sorted_degrees());
            for (std::size_t i = d.size() - s.count(0); i < d.size(); ++i) EXPECT_EQ(d[i], 0u);
        }
    }
    EXPECT_THROW(sample_size_biasing(DegreeStatistics::forest({{0, 2}}, 2), rng), invalid_statistics);
}

TEST(MarkHeight, Examples) {
    RngStream rng(3, 0);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_mark_height(DegreeStatistics{}, rng), 0u);
    for (auto s : {DegreeStatistics{{0, 2}, {2, 1}}, DegreeStatistics{{0, 2}, {1, 1}, {2, 1}}}) {
        const auto exact = exact_M_distribution(s);
        const auto h = histogram([&] { return sample_mark_height(s, rng); }, draws);
        EXPECT_TRUE(chi_square_gof(h, probs_of(exact)).passes(0.01));
        for (std::size_t k = 0; k < h.size(); ++k) expect_within_3se(h[k], draws, to_double(exact.at(k)));
    }
}

TEST(MarkHeight, MatchesExactLawUpToNine) {
    const auto all = battery(9);
    const double level = 0.01 / static_cast<double>(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        RngStream rng(4, i);
        const auto& s = all[i];
        const auto h = histogram([&] {
            const auto m = sample_mark_height(s, rng);
            EXPECT_LT(m, s.node_count());
            return m;
        }, draws);
        const auto r = chi_square_gof(h, probs_of(exact_mark_height_distribution(s)));
        EXPECT_TRUE(r.passes(level)) << s.to_json().dump() << " p=" << r.p_value;
    }
}

TEST(Sigma, Examples) {
    RngStream rng(5, 0);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_sigma(DegreeStatistics{{0, 2}, {2, 1}}, rng), 2u);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_sigma(DegreeStatistics{{0, 1}, {1, 4}}, rng), 5u);
    EXPECT_THROW(sample_sigma(DegreeStatistics{}, rng), invalid_statistics);
}

TEST(Sigma, DominatesM) {
    for (auto s : {DegreeStatistics{{0, 5}, {2, 4}}, DegreeStatistics{{0, 2}, {1, 1}, {2, 1}},
                   DegreeStatistics{{0, 6}, {1, 3}, {3, 1}, {4, 1}}, DegreeStatistics{{0, 20}, {1, 10}, {2, 19}}}) {
        RngStream ra(6, 0), rb(6, 1);
        const auto hs = histogram([&] { return sample_sigma(s, ra); }, draws);
        const auto hm = histogram([&] { return sample_mark_height(s, rb) + 1; }, draws);
        std::uint64_t ts = 0, tm = 0;
        for (std::size_t ell = std::max(hs.size(), hm.size()); ell-- > 0;) {
            ts += ell < hs.size() ? hs[ell] : 0;
            tm += ell < hm.size() ? hm[ell] : 0;
            const double ps = static_cast<double>(ts) / draws, pm = static_cast<double>(tm) / draws;
            const double se = std::sqrt((ps * (1 - ps) + pm * (1 - pm)) / draws);
            EXPECT_GE(ps, pm - 3 * se) << s.to_json().dump() << " ell=" << ell;
        }
    }
}

TEST(Poissonized, CherryAlwaysTwo) {
    RngStream rng(7, 0);
    for (int i = 0; i < 1000; ++i) {
        const auto run = sample_sigma_poissonized(DegreeStatistics{{0, 2}, {2, 1}}, rng);
        EXPECT_EQ(run.sigma, 2u);
        EXPECT_EQ(run.sigma_records, 1u);
        ASSERT_TRUE(run.tau.has_value());
    }
}

TEST(Poissonized, RunInvariants) {
    RngStream rng(8, 0);
    for (auto s : {DegreeStatistics{{0, 5}, {2, 4}}, DegreeStatistics{{0, 1}, {1, 6}},
                   DegreeStatistics{{0, 6}, {1, 3}, {3, 1}, {4, 1}}}) {
        for (int i = 0; i < 2000; ++i) {
            const auto run = sample_sigma_poissonized(s, rng);
            for (std::size_t l = 1; l < run.atoms.size(); ++l) EXPECT_LT(run.atoms[l - 1].time, run.atoms[l].time);
            std::size_t recs = 0;
            for (auto m : run.records) recs += (!run.tau || *run.tau > m);
            EXPECT_EQ(run.sigma_records, recs);
            if (run.tau) {
                EXPECT_LE(run.sigma_records, *run.tau - 1);
            }
            EXPECT_EQ(run.sigma, run.sigma_records + 1);
            EXPECT_EQ(run.records.size(), run.record_degrees.size());
        }
    }
}

TEST(Poissonized, PathHasNoStoppingTime) {
    RngStream rng(9, 0);
    const auto run = sample_sigma_poissonized(DegreeStatistics{{0, 1}, {1, 4}}, rng);
    EXPECT_FALSE(run.tau.has_value());
    EXPECT_EQ(run.sigma, 5u);
}

TEST(Poissonized, RecordDegreesAreSizeBiased) {
    // The record order D(1), D(2), ... is a size-biased order of the non-zero degrees.
    const DegreeStatistics s{{0, 2}, {1, 1}, {2, 1}};
    RngStream rng(10, 0);
    std::uint64_t first_two = 0, n = 0;
    for (std::uint64_t i = 0; i < draws; ++i) {
        const auto run = sample_sigma_poissonized(s, rng);
        if (run.record_degrees.empty()) continue;
        ++n;
        first_two += run.record_degrees[0] == 2;
    }
    expect_within_3se(first_two, n, 2.0 / 3.0);
}

TEST(Poissonized, SameLawAsSigmaBinary) {
    const DegreeStatistics s{{0, 5}, {2, 4}};
    RngStream ra(11, 0), rb(11, 1);
    std::map<std::int64_t, std::uint64_t> a, b;
    for (std::uint64_t i = 0; i < draws; ++i) {
        ++a[static_cast<std::int64_t>(sample_sigma(s, ra))];
        ++b[static_cast<std::int64_t>(sample_sigma_poissonized(s, rb).sigma)];
    }
    EXPECT_TRUE(chi_square_two_sample(a, b).passes(0.01));
}

TEST(UniformTree, Examples) {
    RngStream rng(12, 0);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(sample_uniform_tree(DegreeStatistics{{0, 2}, {2, 1}}, rng).luka(), (std::vector<degree_t>{2, 0, 0}));
        EXPECT_EQ(sample_uniform_tree(DegreeStatistics{{0, 3}, {3, 1}}, rng).luka(), (std::vector<degree_t>{3, 0, 0, 0}));
    }
    std::map<std::vector<degree_t>, std::uint64_t> seen;
    for (std::uint64_t i = 0; i < draws; ++i) ++seen[sample_uniform_tree(DegreeStatistics{{0, 2}, {1, 1}, {2, 1}}, rng).luka()];
    ASSERT_EQ(seen.size(), 3u);
    for (auto [w, c] : seen) expect_within_3se(c, draws, 1.0 / 3.0);
}

TEST(UniformTree, ChiSquareAgainstEnumeration) {
    std::vector<DegreeStatistics> cases;
    for (auto& s : battery(9)) {
        const auto c = count_forests(s);
        if (c >= 2 && c <= 30) cases.push_back(s);
    }
    const double level = 0.01 / static_cast<double>(cases.size());
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto trees = enumerate_trees(cases[i]);
        std::map<PlaneTree, std::size_t> index;
        for (std::size_t j = 0; j < trees.size(); ++j) index.emplace(trees[j], j);
        RngStream rng(13, i);
        std::vector<std::uint64_t> h(trees.size(), 0);
        for (std::uint64_t k = 0; k < draws; ++k) ++h.at(index.at(sample_uniform_tree(cases[i], rng)));
        const auto r = chi_square_gof(h, std::vector<double>(trees.size(), 1.0 / static_cast<double>(trees.size())));
        EXPECT_TRUE(r.passes(level)) << cases[i].to_json().dump();
    }
}

TEST(UniformMarkedTree, DepthLaw) {
    RngStream rng(14, 0);
    EXPECT_EQ(sample_uniform_marked_tree(DegreeStatistics{}, rng).mark_depth(), 0u);
    for (auto s : {DegreeStatistics{{0, 2}, {2, 1}}, DegreeStatistics{{0, 2}, {1, 1}, {2, 1}}}) {
        const auto h = histogram([&] { return sample_uniform_marked_tree(s, rng).mark_depth(); }, draws);
        const auto exact = exact_mark_height_distribution(s);
        for (std::size_t k = 0; k < h.size(); ++k) expect_within_3se(h[k], draws, to_double(exact.at(k)));
    }
}

TEST(CycleLemma, RotationIsValidAndUnique) {
    RngStream rng(15, 0);
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t n = 1 + rng.below(30);
        std::vector<degree_t> w(n, 0);
        for (std::size_t e = 0; e + 1 < n; ++e) ++w[rng.below(n)];
        std::size_t valid = 0;
        for (std::size_t r = 0; r < n; ++r) {
            std::vector<degree_t> rot(w.begin() + static_cast<std::ptrdiff_t>(r), w.end());
            rot.insert(rot.end(), w.begin(), w.begin() + static_cast<std::ptrdiff_t>(r));
            valid += PlaneTree::is_valid_word(rot);
        }
        EXPECT_EQ(valid, 1u);
        EXPECT_TRUE(PlaneTree::is_valid_word(cycle_lemma_rotate(w).luka()));
    }
}

TEST(Offspring, Validation) {
    EXPECT_THROW(OffspringDistribution::from_masses({0.5, 0.4}), invalid_distribution);
    EXPECT_THROW(OffspringDistribution::from_masses({1.2, -0.2}), invalid_distribution);
    EXPECT_THROW(OffspringDistribution::from_masses({0.0, 1.0}), invalid_distribution);
    EXPECT_NO_THROW(OffspringDistribution::from_masses({0.5, 0.5 - 5e-13}));
    const auto pl = OffspringDistribution::power_law(2.5, 0.6);
    double total = 0.0;
    for (std::size_t k = 0; k < 2000000; ++k) total += pl.mass(k);
    EXPECT_NEAR(total, 1.0, 1e-3);
    EXPECT_TRUE(pl.infinite_variance());
    EXPECT_LT(pl.mean(), 1.0);
    const auto round = OffspringDistribution::from_json(pl.to_json());
    EXPECT_EQ(round.mass(7), pl.mass(7));
}

TEST(ConditionedBienayme, Examples) {
    RngStream rng(16, 0);
    const auto binary = OffspringDistribution::from_masses({0.5, 0.0, 0.5});
    for (int i = 0; i < 100; ++i)
        EXPECT_EQ(sample_conditioned_bienayme(binary, 3, rng).luka(), (std::vector<degree_t>{2, 0, 0}));
    EXPECT_THROW(sample_conditioned_bienayme(binary, 4, rng, 10000), invalid_distribution);
    const auto heavy = OffspringDistribution::power_law(2.5, 0.6);
    EXPECT_THROW(sample_conditioned_bienayme(heavy, 3200, rng, 1), attempts_exhausted);
}

namespace {
void check_conditioned_law(const OffspringDistribution& mu, std::size_t n, std::uint64_t seed) {
    std::vector<rational> w;
    for (std::size_t k = 0; k < n; ++k) w.emplace_back(mu.mass(k));
    const auto law = exact_tree_law(WeightSequence::from_list(w), n);
    std::vector<double> probs;
    std::map<PlaneTree, std::size_t> index;
    for (const auto& [t, p] : law) {
        index.emplace(t, probs.size());
        probs.push_back(to_double(p));
    }
    ConditionedTreeSampler sampler(log_masses(mu, n), n);
    RngStream rng(seed, 0);
    std::vector<std::uint64_t> h(probs.size(), 0);
    for (std::uint64_t i = 0; i < draws; ++i) ++h.at(index.at(sampler(rng)));
    const auto r = chi_square_gof(h, probs);
    EXPECT_TRUE(r.passes(0.01)) << "p=" << r.p_value;
}
} // namespace

TEST(ConditionedBienayme, GeometricMatchesExactLaw) {
    std::vector<double> geo;
    for (int k = 0; k < 60; ++k) geo.push_back(std::ldexp(1.0, -(k + 1)));
    geo.back() *= 2; // absorb the tail so the masses sum to 1
    check_conditioned_law(OffspringDistribution::from_masses(geo), 4, 17);
}

TEST(ConditionedBienayme, NonUniformMatchesExactLaw) {
    check_conditioned_law(OffspringDistribution::from_masses({0.3, 0.2, 0.1, 0.4}), 6, 18);
}
