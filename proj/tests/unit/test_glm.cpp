#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qvfdag/families.hpp"
#include "qvfdag/glm.hpp"
#include "qvfdag/rng.hpp"

using namespace qvfdag;

namespace {

struct Sample {
    Vector y;
    Matrix x;
};

// y ~ family(intercept + x * beta) with x_k ~ Poisson(xmean)
Sample draw(const QvfFamily& f, double intercept, const std::vector<double>& beta, Eigen::Index n, double xmean,
            std::uint64_t seed)
{
    auto rng = make_rng(seed);
    std::poisson_distribution<int> px(xmean);
    const auto q = static_cast<Eigen::Index>(beta.size());
    Sample s{Vector(n), Matrix(n, q)};
    for (Eigen::Index i = 0; i < n; ++i) {
        double eta = intercept;
        for (Eigen::Index k = 0; k < q; ++k) {
            s.x(i, k) = px(rng);
            eta += beta[static_cast<std::size_t>(k)] * s.x(i, k);
        }
        s.y[i] = sample(f, eta, rng);
    }
    return s;
}

}  // namespace

TEST(SoftThreshold, Examples)
{
    EXPECT_EQ(soft_threshold(3, 1), 2);
    EXPECT_EQ(soft_threshold(-0.5, 1), 0);
    EXPECT_EQ(soft_threshold(-3, 1), -2);
}

TEST(FitGlm, InterceptOnly)
{
    const Matrix none(3, 0);
    const auto pois = fit_glm(Vector{{1.0, 2.0, 3.0}}, none, QvfFamily::poisson(), 0.0);
    EXPECT_TRUE(pois.converged);
    EXPECT_NEAR(pois.predictor.intercept, std::log(2.0), 1e-10);
    EXPECT_TRUE(pois.predictor.coefficients.empty());

    const auto bin = fit_glm(Vector{{2.0, 2.0, 2.0, 2.0}}, Matrix(4, 0), QvfFamily::binomial(4), 0.0);
    EXPECT_NEAR(bin.predictor.intercept, 0.0, 1e-10);
}

TEST(FitGlm, PoissonSingleSlopeRecovered)
{
    const auto s = draw(QvfFamily::poisson(), 1.0, {0.3}, 50000, 2.0, 21);
    const auto fit = fit_glm(s.y, s.x, QvfFamily::poisson(), 0.0);
    ASSERT_TRUE(fit.converged);
    EXPECT_NEAR(fit.predictor.intercept, 1.0, 0.02);
    EXPECT_NEAR(fit.predictor.coefficients[0], 0.3, 0.02);
}

TEST(FitGlm, RejectsBadInput)
{
    Vector y{{1.0, std::nan(""), 2.0}};
    EXPECT_THROW(fit_glm(y, Matrix(3, 0), QvfFamily::poisson(), 0.0), InputError);
    EXPECT_THROW(fit_glm(Vector{{1.0, 5.0}}, Matrix(2, 0), QvfFamily::binomial(4), 0.0), InputError);
    EXPECT_THROW(fit_glm(Vector{{1.0, 2.0}}, Matrix(2, 0), QvfFamily::poisson(), -1.0), InputError);
    EXPECT_THROW(fit_glm(Vector{{1.0, 2.0}}, Matrix(2, 0), QvfFamily::mixture(QvfFamily::poisson(), QvfFamily::binomial(2)), 0.0),
                 InputError);
}

TEST(PredictMean, Examples)
{
    const Matrix row{{2.0}};
    EXPECT_NEAR(predict_mean(LinearPredictor{std::log(2.0), {}}, QvfFamily::poisson(), Matrix(1, 0))[0], 2.0, 1e-12);
    EXPECT_NEAR(predict_mean(LinearPredictor{0.0, {0.0}}, QvfFamily::binomial(4), row)[0], 2.0, 1e-12);
    EXPECT_NEAR(predict_mean(LinearPredictor{1.0, {0.5}}, QvfFamily::poisson(), row)[0], 7.38905609893065, 1e-10);
}

// Unpenalized Poisson fits satisfy the score equations.
TEST(FitGlmProperty, ScoreEquations)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = draw(QvfFamily::poisson(), 0.5, {0.2, -0.1, 0.05}, 3000, 1.5, 100 + seed);
        const auto fit = fit_glm(s.y, s.x, QvfFamily::poisson(), 0.0);
        ASSERT_TRUE(fit.converged);
        const Vector mu = predict_mean(fit, QvfFamily::poisson(), s.x);
        EXPECT_NEAR(mu.mean(), s.y.mean(), 1e-6 * s.y.mean());
        const Vector resid = s.y - mu;
        for (Eigen::Index k = 0; k < s.x.cols(); ++k) {
            const double scale = s.x.col(k).dot(s.y);
            EXPECT_LE(std::abs(s.x.col(k).dot(resid)), 1e-6 * scale);
        }
    }
}

// The penalized objective never increases between accepted iterations.
TEST(FitGlmProperty, ObjectiveMonotone)
{
    GlmOptions opt;
    opt.record_trace = true;
    const std::vector<QvfFamily> fams{QvfFamily::poisson(), QvfFamily::binomial(4), QvfFamily::exponential()};
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        for (const auto& f : fams) {
            const auto s = draw(f, 0.2, {0.15, 0.0, -0.1, 0.05}, 800, 1.0, 200 + seed);
            for (double lambda : {0.0, 0.002, 0.02}) {
                const auto fit = fit_glm(s.y, s.x, f, lambda, opt);
                ASSERT_GE(fit.objective_trace.size(), 1u);
                for (std::size_t t = 1; t < fit.objective_trace.size(); ++t) {
                    EXPECT_LE(fit.objective_trace[t], fit.objective_trace[t - 1] + 1e-12)
                        << f.name() << " lambda " << lambda << " step " << t;
                }
            }
        }
    }
}

TEST(FitGlmProperty, GradientMatchesFiniteDifferences)
{
    const std::vector<QvfFamily> fams{QvfFamily::poisson(), QvfFamily::binomial(4), QvfFamily::exponential()};
    for (const auto& f : fams) {
        const auto s = draw(f, 0.3, {0.1, -0.2}, 2000, 1.0, 300);
        const auto fit = fit_glm(s.y, s.x, f, 0.0);
        ASSERT_TRUE(fit.converged);
        EXPECT_LT(oracle::gradient_gap(s.y, s.x, f, fit.predictor), 1e-4) << f.name();
        // away from the optimum too
        EXPECT_LT(oracle::gradient_gap(s.y, s.x, f, LinearPredictor{0.1, {0.05, 0.3}}), 1e-4) << f.name();
    }
}

TEST(FitPath, WarmStartsMatchColdStarts)
{
    const auto s = draw(QvfFamily::poisson(), 0.5, {0.3, 0.0, 0.1, 0.0, -0.15}, 1000, 1.0, 400);
    const auto grid = lambda_grid(lambda_max(s.y, s.x, QvfFamily::poisson()), 20, 0.01);
    const auto path = fit_path(s.y, s.x, QvfFamily::poisson(), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto cold = fit_glm(s.y, s.x, QvfFamily::poisson(), grid[i]);
        EXPECT_NEAR(path[i].predictor.intercept, cold.predictor.intercept, 1e-6);
        for (std::size_t k = 0; k < 5; ++k) {
            EXPECT_NEAR(path[i].predictor.coefficients[k], cold.predictor.coefficients[k], 1e-6) << i << " " << k;
        }
    }
}

TEST(LambdaMax, ZerosEveryCoefficient)
{
    const auto s = draw(QvfFamily::poisson(), 0.5, {0.3, 0.1}, 500, 1.0, 500);
    const double lmax = lambda_max(s.y, s.x, QvfFamily::poisson());
    const auto at = fit_glm(s.y, s.x, QvfFamily::poisson(), lmax * 1.0001);
    EXPECT_EQ(at.nonzero_count(), 0u);
    const auto below = fit_glm(s.y, s.x, QvfFamily::poisson(), lmax * 0.9);
    EXPECT_GT(below.nonzero_count(), 0u);

    const auto grid = lambda_grid(2.0, 5, 0.01);
    EXPECT_DOUBLE_EQ(grid.front(), 2.0);
    EXPECT_NEAR(grid.back(), 0.02, 1e-15);
    for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_LT(grid[i], grid[i - 1]);
}

TEST(CvSelect, NoiseGivesFewSpuriousCoefficients)
{
    int clean = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto s = draw(QvfFamily::poisson(), 1.0, {0.0, 0.0, 0.0}, 2000, 1.0, 600 + seed);
        auto rng = make_rng(seed, {5});
        const auto cv = cv_select_lambda(s.y, s.x, QvfFamily::poisson(), CvOptions{}, rng);
        const auto fit = fit_glm(s.y, s.x, QvfFamily::poisson(), cv.chosen_lambda);
        clean += fit.nonzero_count() <= 1;
    }
    EXPECT_GE(clean, 45);
}

TEST(CvSelect, SignalIsAlwaysKept)
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto s = draw(QvfFamily::poisson(), 0.5, {0.5, 0.0}, 2000, 1.0, 700 + seed);
        auto rng = make_rng(seed, {5});
        const auto cv = cv_select_lambda(s.y, s.x, QvfFamily::poisson(), CvOptions{}, rng);
        const auto fit = fit_glm(s.y, s.x, QvfFamily::poisson(), cv.chosen_lambda);
        EXPECT_NE(fit.predictor.coefficients[0], 0.0) << seed;
    }
}

TEST(CvSelect, LeaveOneOutIsDeterministic)
{
    const auto s = draw(QvfFamily::poisson(), 0.5, {0.4}, 10, 2.0, 800);
    CvOptions opt;
    opt.folds = 10;
    auto r1 = make_rng(3), r2 = make_rng(3);
    const auto a = cv_select_lambda(s.y, s.x, QvfFamily::poisson(), opt, r1);
    const auto b = cv_select_lambda(s.y, s.x, QvfFamily::poisson(), opt, r2);
    EXPECT_EQ(a.chosen_lambda, b.chosen_lambda);
    EXPECT_EQ(a.mean_cv_deviance, b.mean_cv_deviance);
}

TEST(CvSelect, ConstantResponseIsDegenerate)
{
    Matrix x(20, 2);
    x.setRandom();
    x = x.array().abs();
    auto rng = make_rng(1);
    const auto cv = cv_select_lambda(Vector::Constant(20, 3.0), x, QvfFamily::poisson(), CvOptions{}, rng);
    EXPECT_TRUE(cv.degenerate);
    EXPECT_EQ(cv.chosen_lambda, cv.lambda_grid.front());
    CvOptions one_fold;
    one_fold.folds = 1;
    EXPECT_THROW(cv_select_lambda(Vector::Constant(20, 3.0), x, QvfFamily::poisson(), one_fold, rng), InputError);
}
