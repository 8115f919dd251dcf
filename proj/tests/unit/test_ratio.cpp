#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "qvfdag/assign_layer.hpp"
#include "qvfdag/ratio.hpp"
#include "qvfdag/rng.hpp"
#include "qvfdag/simgen.hpp"

using namespace qvfdag;

namespace {

Vector iid(const QvfFamily& f, double eta, Eigen::Index n, std::uint64_t seed)
{
    auto rng = make_rng(seed);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = sample(f, eta, rng);
    return v;
}

}  // namespace

TEST(UnconditionalRatio, HandComputed)
{
    EXPECT_NEAR(unconditional_ratio(Vector{{1.0, 2.0, 3.0}}, QvfFamily::poisson()), 1.0 / 3.0, 1e-15);
}

TEST(UnconditionalRatio, IidColumnsNearOne)
{
    EXPECT_NEAR(unconditional_ratio(iid(QvfFamily::poisson(), std::log(5.0), 100000, 1), QvfFamily::poisson()), 1.0, 0.05);
    EXPECT_NEAR(unconditional_ratio(iid(QvfFamily::binomial(4), 0.0, 100000, 2), QvfFamily::binomial(4)), 1.0, 0.05);
}

TEST(UnconditionalRatio, DegenerateColumns)
{
    EXPECT_THROW(unconditional_ratio(Vector::Zero(10), QvfFamily::poisson()), DegenerateError);
    // binomial column sitting at N makes the QVF factor vanish
    EXPECT_THROW(unconditional_ratio(Vector::Constant(10, 4.0), QvfFamily::binomial(4)), DegenerateError);
    EXPECT_THROW(unconditional_ratio(Vector{{1.0}}, QvfFamily::poisson()), InputError);
}

// The Poisson ratio is the index of dispersion.
TEST(UnconditionalRatioProperty, PoissonIsDispersionIndex)
{
    auto rng = make_rng(3);
    for (int r = 0; r < 100; ++r) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 50);
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<double>(rng() % 9);
        if (v.sum() == 0) v[0] = 1;
        const double mean = v.mean();
        const double var = (v.array() - mean).square().sum() / static_cast<double>(n);
        EXPECT_DOUBLE_EQ(unconditional_ratio(v, QvfFamily::poisson()), var / mean);
    }
}

TEST(ConditionalRatio, HubChildEqualsOneGivenHub)
{
    const auto sim = simulate(preset_spec("example1", 5, 20000, 41));
    for (NodeId child = 1; child < 5; ++child) {
        EXPECT_NEAR(conditional_ratio(child, {0}, sim.data, QvfFamily::poisson()), 1.0, 0.05) << child;
        EXPECT_GT(conditional_ratio(child, {}, sim.data, QvfFamily::poisson()), 1.05) << child;
    }
    EXPECT_NEAR(conditional_ratio(0, {}, sim.data, QvfFamily::poisson()), 1.0, 0.05);
}

TEST(ConditionalRatio, ExponentialIndependentOfConditioningSet)
{
    const Eigen::Index n = 100000;
    DataMatrix data(n, 2);
    data.col(0) = iid(QvfFamily::poisson(), 1.0, n, 4);
    data.col(1) = iid(QvfFamily::exponential(), 0.5, n, 5);
    EXPECT_NEAR(conditional_ratio(1, {0}, data, QvfFamily::exponential()), 1.0, 0.05);
}

// pa(j) inside S gives a ratio near 1 for each in-scope family.
TEST(ConditionalRatioProperty, EqualityCaseAcrossFamilies)
{
    const Eigen::Index n = 100000;
    const std::vector<QvfFamily> fams{QvfFamily::poisson(), QvfFamily::binomial(4), QvfFamily::exponential()};
    for (std::size_t f = 0; f < fams.size(); ++f) {
        auto rng = make_rng(50 + f);
        DataMatrix data(n, 3);
        for (Eigen::Index i = 0; i < n; ++i) {
            data(i, 0) = sample(QvfFamily::poisson(), 0.5, rng);
            data(i, 1) = sample(QvfFamily::poisson(), 0.2, rng);
            data(i, 2) = sample(fams[f], -0.3 + 0.25 * data(i, 0), rng);
        }
        EXPECT_NEAR(conditional_ratio(2, {0}, data, fams[f]), 1.0, 0.05) << fams[f].name();
        EXPECT_NEAR(conditional_ratio(2, {0, 1}, data, fams[f]), 1.0, 0.05) << fams[f].name();
    }
}

// A missing parent inflates the ratio; hub children given the empty set.
TEST(ConditionalRatioProperty, MissingParentExceedsOne)
{
    int all_above = 0;
    for (std::uint64_t r = 0; r < 50; ++r) {
        const auto sim = simulate(preset_spec("example1", 5, 2000, 900 + r));
        bool ok = true;
        for (NodeId child = 1; child < 5; ++child) ok = ok && conditional_ratio(child, {}, sim.data, QvfFamily::poisson()) > 1.05;
        all_above += ok;
    }
    EXPECT_GE(all_above, 49);
}

TEST(ConditionalRatioProperty, RowPermutationInvariant)
{
    const auto sim = simulate(preset_spec("example1", 5, 500, 77));
    std::vector<Eigen::Index> rows(500);
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    auto rng = make_rng(78);
    std::shuffle(rows.begin(), rows.end(), rng);
    const DataMatrix shuffled = sim.data(rows, Eigen::all);
    EXPECT_DOUBLE_EQ(unconditional_ratio(shuffled.col(2), QvfFamily::poisson()),
                     unconditional_ratio(sim.data.col(2), QvfFamily::poisson()));
    EXPECT_NEAR(conditional_ratio(2, {0}, shuffled, QvfFamily::poisson()),
                conditional_ratio(2, {0}, sim.data, QvfFamily::poisson()), 1e-9);
}

TEST(RatiosForCandidates, EmptySingleAndToyPattern)
{
    const auto sim = simulate(preset_spec("toy", 4, 20000, 5));
    const std::vector<QvfFamily> fams(4, QvfFamily::poisson());
    EXPECT_TRUE(ratios_for_candidates({}, {}, sim.data, fams).ratios.empty());

    const auto single = ratios_for_candidates({2}, {1}, sim.data, fams);
    ASSERT_EQ(single.ratios.size(), 1u);
    EXPECT_EQ(single.ratios.at(2), conditional_ratio(2, {1}, sim.data, QvfFamily::poisson()));

    const auto step0 = ratios_for_candidates({0, 1, 2, 3}, {}, sim.data, fams);
    EXPECT_NEAR(step0.ratios.at(0), 1.0, 0.05);
    EXPECT_NEAR(step0.ratios.at(3), 1.0, 0.05);
    EXPECT_GT(step0.ratios.at(1), 1.05);
    EXPECT_GT(step0.ratios.at(2), 1.05);
}

TEST(RatiosForCandidates, FailuresDoNotStopOthers)
{
    DataMatrix data(50, 2);
    data.col(0).setZero();
    data.col(1) = iid(QvfFamily::poisson(), 1.0, 50, 9);
    const auto step = ratios_for_candidates({0, 1}, {}, data, std::vector<QvfFamily>(2, QvfFamily::poisson()));
    EXPECT_EQ(step.failures.count(0), 1u);
    EXPECT_TRUE(step.failures.at(0).degenerate);
    EXPECT_EQ(step.ratios.count(1), 1u);
}

TEST(AssignLayer, Examples)
{
    auto a = assign_layer({{1, 1.02}, {2, 1.5}}, 0.1);
    EXPECT_EQ(a.nodes, (NodeSet{1}));
    EXPECT_FALSE(a.fallback);

    a = assign_layer({{1, 1.3}, {2, 1.5}}, 0.1);
    EXPECT_EQ(a.nodes, (NodeSet{1}));
    EXPECT_TRUE(a.fallback);

    a = assign_layer({{1, 0.98}, {2, 1.04}}, 0.05);
    EXPECT_EQ(a.nodes, (NodeSet{1, 2}));

    // ties go to the smallest id
    a = assign_layer({{4, 1.25}, {2, 0.75}}, 0.1);
    EXPECT_EQ(a.nodes, (NodeSet{2}));
    EXPECT_THROW(assign_layer({}, 0.1), InputError);
}
