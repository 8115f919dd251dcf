#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qvfdag/rng.hpp"
#include "qvfdag/simgen.hpp"
#include "qvfdag/stability.hpp"

using namespace qvfdag;

TEST(Kappa, Examples)
{
    EXPECT_DOUBLE_EQ(cohen_kappa({1, 2}, {1, 2}, {1, 2, 3, 4, 5}), 1.0);
    EXPECT_NEAR(cohen_kappa(KappaCounts{2, 1, 0, 7}), 0.28 / 0.38, 1e-12);
    EXPECT_NEAR(cohen_kappa({1}, {2}, {1, 2}), -1.0, 1e-15);
    // identical full or empty sets
    EXPECT_EQ(cohen_kappa({1, 2, 3}, {1, 2, 3}, {1, 2, 3}), 1.0);
    EXPECT_EQ(cohen_kappa({}, {}, {1, 2, 3}), 1.0);
    EXPECT_THROW(cohen_kappa({9}, {}, {1, 2}), InputError);
    EXPECT_THROW(cohen_kappa({}, {}, {}), InputError);
}

TEST(KappaProperty, MatchesOracleSymmetricBounded)
{
    auto rng = make_rng(17);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t m = 1 + rng() % 12;
        NodeSet u;
        for (std::size_t k = 0; k < m; ++k) u.push_back(2 * k);
        const auto a = oracle::random_subset(u, rng), b = oracle::random_subset(u, rng);
        const double k = cohen_kappa(a, b, u);
        EXPECT_EQ(k, oracle::kappa(a, b, u));
        EXPECT_EQ(k, cohen_kappa(b, a, u));
        EXPECT_LE(k, 1.0 + 1e-15);
        if (a == b) {
            EXPECT_DOUBLE_EQ(k, 1.0);
        } else {
            EXPECT_LT(k, 1.0);
        }
    }
}

TEST(ChooseEpsilon, CutoffRule)
{
    EXPECT_EQ(choose_epsilon_index({1, 1, 1, 1}, 0.9), (std::pair<std::size_t, bool>{0, false}));
    // 0.9 / 1.0 sits exactly on the cutoff and passes
    EXPECT_EQ(choose_epsilon_index({0.2, 0.9, 1.0, 1.0}, 0.9), (std::pair<std::size_t, bool>{1, false}));
    EXPECT_EQ(choose_epsilon_index({0.2, 0.89, 1.0, 1.0}, 0.9), (std::pair<std::size_t, bool>{2, false}));
    EXPECT_EQ(choose_epsilon_index({-0.5, 0.0, -0.1}, 0.9), (std::pair<std::size_t, bool>{1, true}));
    EXPECT_EQ(choose_epsilon_index({0.0, 0.0}, 0.9), (std::pair<std::size_t, bool>{0, true}));
}

TEST(EpsilonGrid, Default)
{
    const auto g = default_epsilon_grid();
    ASSERT_EQ(g.size(), 61u);
    EXPECT_DOUBLE_EQ(g.front(), 0.01);
    EXPECT_NEAR(g.back(), 1e7, 1e-3);
}

TEST(StabilityScore, HugeEpsilonAgreesFully)
{
    const auto sim = simulate(preset_spec("example1", 5, 200, 3));
    const std::vector<QvfFamily> fams(5, QvfFamily::poisson());
    EXPECT_EQ(stability_score(1e7, {0, 1, 2, 3, 4}, {}, sim.data, fams, 5, 9), 1.0);
}

TEST(StabilityScore, SingleSplitReproducible)
{
    const auto sim = simulate(preset_spec("example1", 5, 200, 4));
    const std::vector<QvfFamily> fams(5, QvfFamily::poisson());
    const NodeSet cand{0, 1, 2, 3, 4};
    for (double eps : {0.05, 0.3, 1.0}) {
        EXPECT_EQ(stability_score(eps, cand, {}, sim.data, fams, 1, 10), stability_score(eps, cand, {}, sim.data, fams, 1, 10));
    }
}

TEST(StabilityScore, NoiseAtSmallestEpsilonNearZero)
{
    double total = 0.0;
    const std::vector<QvfFamily> fams(6, QvfFamily::poisson());
    for (std::uint64_t s = 0; s < 50; ++s) {
        auto rng = make_rng(s, {77});
        DataMatrix data(200, 6);
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
            for (Eigen::Index j = 0; j < 6; ++j) data(i, j) = sample(QvfFamily::poisson(), 1.0, rng);
        }
        total += stability_score(0.01, {0, 1, 2, 3, 4, 5}, {}, data, fams, 5, s);
    }
    EXPECT_LT(std::abs(total / 50), 0.2);
}

TEST(SelectEpsilon, ReportInvariants)
{
    const auto sim = simulate(preset_spec("example1", 5, 300, 6));
    const std::vector<QvfFamily> fams(5, QvfFamily::poisson());
    const auto grid = default_epsilon_grid();
    const auto r = select_epsilon(grid, {0, 1, 2, 3, 4}, {}, sim.data, fams, StabilityOptions{}, 21);
    EXPECT_EQ(r.grid, grid);
    EXPECT_EQ(r.scores.size(), grid.size());
    EXPECT_EQ(r.split_seeds.size(), 5u);
    EXPECT_EQ(r.chosen, grid[r.chosen_index]);
    for (double s : r.scores) {
        EXPECT_GE(s, -1.0);
        EXPECT_LE(s, 1.0);
    }
    const auto again = select_epsilon(grid, {0, 1, 2, 3, 4}, {}, sim.data, fams, StabilityOptions{}, 21);
    EXPECT_EQ(again.scores, r.scores);
    EXPECT_EQ(again.chosen, r.chosen);
    EXPECT_THROW(select_epsilon(grid, {0}, {}, sim.data, fams, StabilityOptions{5, 1.0}, 21), InputError);
}

TEST(SplitRatios, ParallelMatchesSerial)
{
    const auto sim = simulate(preset_spec("example1", 5, 300, 7));
    const std::vector<QvfFamily> fams(5, QvfFamily::poisson());
    const auto serial = split_ratios({1, 2, 3, 4}, {0}, sim.data, fams, 5, 8);
    const auto parallel = split_ratios({1, 2, 3, 4}, {0}, sim.data, fams, 5, 8, {}, Executor{4});
    ASSERT_EQ(serial.size(), parallel.size());
    for (std::size_t b = 0; b < serial.size(); ++b) {
        EXPECT_EQ(serial[b].seed, parallel[b].seed);
        EXPECT_EQ(serial[b].first, parallel[b].first);
        EXPECT_EQ(serial[b].second, parallel[b].second);
    }
    EXPECT_THROW(split_ratios({1}, {}, sim.data.topRows(3), fams, 5, 8), InputError);
}
