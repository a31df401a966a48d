#include <gtest/gtest.h>

#include <cmath>

#include <arbor/bounds.hpp>
#include <arbor/enumeration.hpp>
#include <arbor/rng.hpp>

using namespace arbor;

namespace {
BoundInput in(DegreeStatistics s) { return BoundInput::from_statistics(s); }
const DegreeStatistics binary9{{0, 5}, {2, 4}};
} // namespace

TEST(BoundInputType, V) {
    EXPECT_EQ(in(binary9).v, rational(2));
    EXPECT_EQ(in(DegreeStatistics{{0, 1}, {1, 5}}).v, 0);
    EXPECT_EQ(in(DegreeStatistics{{0, 2}, {1, 1}, {2, 1}}).v, rational(4, 3));
}

TEST(HeightTail, Examples) {
    EXPECT_NEAR(bound_height_tail(in(binary9), 125), std::exp(-10.0 / 3) + 2 * std::exp(-25.0 / 24), 1e-12);
    EXPECT_NEAR(bound_height_tail(in(binary9), 125), 0.7411, 5e-4);
    EXPECT_EQ(bound_height_tail(in(binary9), 70), 1.0);
    EXPECT_THROW(bound_height_tail(in(DegreeStatistics{{0, 1}, {1, 5}}), 125), path_degenerate);
}

TEST(HeightTailNoOnes, Examples) {
    EXPECT_NEAR(bound_height_tail_no_ones(in(binary9), 4), std::exp(-1.0), 1e-15);
    EXPECT_EQ(bound_height_tail_no_ones(in(binary9), 0), 1.0);
    EXPECT_THROW(bound_height_tail_no_ones(in(DegreeStatistics{{0, 2}, {1, 1}, {2, 1}}), 3), has_ones);
}

TEST(SigmaTailNoOnes, Examples) {
    EXPECT_EQ(bound_sigma_tail_no_ones(in(binary9), 1), 1.0);
    EXPECT_NEAR(bound_sigma_tail_no_ones(in(binary9), 5), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(bound_sigma_tail_no_ones(in(DegreeStatistics{{0, 2}, {2, 1}}), 3), std::exp(-1.0), 1e-15);
    EXPECT_THROW(bound_sigma_tail_no_ones(in(DegreeStatistics{{0, 2}, {1, 1}, {2, 1}}), 3), has_ones);
}

TEST(Tau, Examples) {
    EXPECT_EQ(bound_tau(in(DegreeStatistics{{0, 1}, {1, 5}}), 125), 0.0);
    EXPECT_NEAR(bound_tau(in(binary9), 125), std::exp(-10.0 / 3) + 2 * std::exp(-25.0 / 24), 1e-12);
    EXPECT_EQ(bound_tau(in(binary9), 70), 1.0);
}

TEST(Monotone, InBetaAndEll) {
    for (auto s : {binary9, DegreeStatistics{{0, 30}, {2, 10}, {9, 1}, {1, 4}}}) {
        const auto b = in(s);
        double prev_h = 1.0, prev_t = 1.0;
        for (double beta = 71; beta < 5000; beta *= 1.1) {
            const double h = bound_height_tail(b, beta), t = bound_tau(b, beta);
            EXPECT_LE(h, prev_h);
            EXPECT_LE(t, prev_t);
            prev_h = h;
            prev_t = t;
        }
    }
    double prev = 1.0;
    for (int ell = 1; ell < 40; ++ell) {
        const double x = bound_height_tail_no_ones(in(binary9), ell);
        EXPECT_LE(x, prev);
        prev = x;
    }
}

TEST(G, CherryExample) {
    const std::vector<degree_t> d{2, 0, 0};
    EXPECT_NEAR(g_eval(1, d), 1.5 * std::exp(-0.5), 1e-15);
    EXPECT_NEAR(g_eval(1, d), 0.90980, 1e-5);
    EXPECT_NEAR(g_upper(1, d), std::exp(-1.0 / 24), 1e-15);
    EXPECT_LE(g_eval(1, d), g_upper(1, d));
}

TEST(G, AtZero) {
    const std::vector<degree_t> d{3, 0, 2, 0, 0, 0};
    EXPECT_EQ(g_eval(0, d), 1.0);
    EXPECT_EQ(g_upper(0, d), 1.0);
}

TEST(G, Domains) {
    const std::vector<degree_t> d{2, 0, 0};
    EXPECT_THROW(g_eval(-1, d), out_of_range);
    EXPECT_THROW(g_upper(1.01, d), out_of_range);
    EXPECT_THROW(g_log_series(2.0, d, 10), out_of_range);
    EXPECT_THROW(g_error_band(2.0, d), out_of_range);
}

TEST(G, RandomBattery) {
    RngStream rng(2024, 0);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 2 + rng.below(200);
        std::vector<degree_t> d(n, 0);
        for (std::size_t e = 0; e + 1 < n; ++e) ++d[rng.below(n)];
        degree_t dmax = *std::max_element(d.begin(), d.end());
        const double t = rng.uniform() * static_cast<double>(n - 1) / dmax;
        const double g = g_eval(t, d);
        EXPECT_LE(g, g_upper(t, d) * (1 + 1e-12));
        const double series = g_log_series(t, d, 60);
        EXPECT_LT(std::abs(std::log(g) - series), 1e-10);
        EXPECT_LE(std::abs(std::log(g) + g_quadratic(t, d)), g_error_band(t, d) + 1e-12);
    }
}

TEST(PoissonTail, Examples) {
    EXPECT_NEAR(poisson_tail_bound(3, 3), 1.0, 1e-15);
    EXPECT_NEAR(poisson_tail_exact(2, 6), 0.004534, 1e-6);
    EXPECT_NEAR(poisson_tail_bound(2, 6), std::exp(-2 * (3 * std::log(3.0) - 2)), 1e-15);
    EXPECT_LE(poisson_tail_exact(2, 6), poisson_tail_bound(2, 6));
    // P(Poisson(1) > 10) = sum_{k >= 11} e^-1/k! = 1.0048e-8
    double direct = 0.0, term = std::exp(-1.0);
    for (int k = 1; k <= 40; ++k) {
        term /= k;
        if (k >= 11) direct += term;
    }
    EXPECT_NEAR(poisson_tail_exact(1, 10), direct, 1e-20);
    EXPECT_LE(poisson_tail_exact(1, 10), poisson_tail_bound(1, 10));
    EXPECT_THROW(poisson_tail_bound(2, 1), out_of_range);
}

TEST(PoissonTail, BoundDominatesExact) {
    for (double t : {0.5, 1.0, 2.0, 7.5, 20.0})
        for (double r : {1.0, 1.5, 2.0, 4.0, 10.0}) EXPECT_LE(poisson_tail_exact(t, r * t), poisson_tail_bound(t, r * t) * (1 + 1e-12));
}

TEST(HeightTail, ExactBatteryUpToNine) {
    for (std::size_t n = 2; n <= 9; ++n) {
        for (const auto& s : all_tree_statistics(n)) {
            const auto b = in(s);
            const auto law = exact_mark_height_distribution(s);
            if (b.n1 == 0) {
                for (std::size_t ell = 1; ell <= n; ++ell)
                    EXPECT_LE(to_double(law.tail(ell)), bound_height_tail_no_ones(b, static_cast<std::int64_t>(ell)));
            }
            if (b.p2sq == b.n1) continue;
            for (double beta : {80.0, 125.0, 216.0, 343.0}) {
                rational tail = 0;
                for (std::size_t i = 0; i < law.support.size(); ++i)
                    if (static_cast<double>(law.support[i]) > height_level(b, beta)) tail += law.mass[i];
                EXPECT_LE(to_double(tail), bound_height_tail(b, beta));
            }
        }
    }
}
