#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "qvfdag/error.hpp"
#include "qvfdag/families.hpp"
#include "qvfdag/rng.hpp"

namespace qvfdag {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct GlmOptions {
    int max_iterations = 100;
    /// Relative change of the objective, |f_old - f_new| / (|f_new| + 0.1).
    double tolerance = 1e-8;
    /// Largest absolute parameter change accepted as converged.
    double coef_tolerance = 1e-7;
    int max_halvings = 20;
    int max_cd_sweeps = 10000;
    /// Inner coordinate descent stops when every a_k * delta_k^2 falls below this
    /// fraction of the weighted variance of the working response.
    double cd_tolerance = 1e-12;
    bool record_trace = false;
};

struct GlmFit {
    LinearPredictor predictor;
    bool converged = false;
    int iterations = 0;
    double final_deviance = 0.0;
    double lambda = 0.0;
    /// Penalized objective after initialisation and after every accepted step.
    std::vector<double> objective_trace;

    std::size_t nonzero_count() const
    {
        return static_cast<std::size_t>(std::count_if(predictor.coefficients.begin(), predictor.coefficients.end(),
                                                      [](double c) { return c != 0.0; }));
    }
};

/// sign(z) * max(|z| - gamma, 0)
inline double soft_threshold(double z, double gamma) noexcept
{
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

namespace glm_detail {

inline double softplus(double x) noexcept { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double xlogy(double x, double y) noexcept { return x == 0.0 ? 0.0 : x * std::log(y); }

/// Negative log-likelihood of one observation, dropping terms that depend on y only.
inline double nll(const QvfFamily& f, double y, double eta)
{
    eta = clamp_eta(eta);
    switch (f.kind()) {
    case FamilyKind::poisson: return std::exp(eta) - y * eta;
    case FamilyKind::binomial: return f.trials() * softplus(eta) - y * eta;
    case FamilyKind::exponential: return y * std::exp(-eta) + eta;
    case FamilyKind::mixture: break;
    }
    throw InputError("GLM fitting needs a non-mixture family");
}

/// nll at the saturated mean mu = y; for an exponential zero response the constant is dropped.
inline double saturated_nll(const QvfFamily& f, double y)
{
    switch (f.kind()) {
    case FamilyKind::poisson: return y - xlogy(y, y);
    case FamilyKind::binomial: {
        const double n = f.trials();
        return -(xlogy(y, y / n) + xlogy(n - y, (n - y) / n));
    }
    case FamilyKind::exponential: return y > 0 ? std::log(y) + 1.0 : 0.0;
    case FamilyKind::mixture: break;
    }
    throw InputError("GLM fitting needs a non-mixture family");
}

inline double unit_deviance(const QvfFamily& f, double y, double eta) { return 2.0 * (nll(f, y, eta) - saturated_nll(f, y)); }

/// Derivative of nll with respect to eta.
inline double score(const QvfFamily& f, double y, double mu)
{
    return f.kind() == FamilyKind::exponential ? 1.0 - y / mu : mu - y;
}

/// Fisher information of eta for one observation.
inline double fisher_weight(const QvfFamily& f, double mu)
{
    switch (f.kind()) {
    case FamilyKind::poisson: return mu;
    case FamilyKind::binomial: return mu * (1.0 - mu / f.trials());
    case FamilyKind::exponential: return 1.0;
    case FamilyKind::mixture: break;
    }
    throw InputError("GLM fitting needs a non-mixture family");
}

inline double link(const QvfFamily& f, double mu)
{
    if (f.kind() == FamilyKind::binomial) {
        const double pi = std::clamp(mu / f.trials(), 1e-12, 1.0 - 1e-12);
        return std::log(pi / (1.0 - pi));
    }
    return clamp_eta(std::log(std::max(mu, 1e-300)));
}

inline void validate(const QvfFamily& f, const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& x)
{
    if (f.is_mixture()) throw InputError("GLM fitting needs a non-mixture family");
    if (y.size() < 2) throw InputError("GLM fit needs at least two observations");
    if (x.rows() != y.size()) throw InputError("predictor rows do not match response length");
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double v = y[i];
        if (!std::isfinite(v)) throw InputError("response contains a non-finite value at row " + std::to_string(i + 1));
        if (v < 0) throw InputError("response must be nonnegative for " + f.name() + " (row " + std::to_string(i + 1) + ")");
        if (f.kind() == FamilyKind::binomial && v > f.trials()) {
            throw InputError("binomial response exceeds trial count at row " + std::to_string(i + 1));
        }
    }
    if (!x.allFinite()) throw InputError("predictor matrix contains non-finite values");
}

struct State {
    double intercept;
    Vector beta;
};

inline double l1(const Vector& beta) { return beta.lpNorm<1>(); }

inline double objective(const QvfFamily& f, const Eigen::Ref<const Vector>& y, const Vector& eta, const State& s,
                        double lambda)
{
    double total = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) total += nll(f, y[i], eta[i]) - saturated_nll(f, y[i]);
    return total / static_cast<double>(y.size()) + lambda * l1(s.beta);
}

inline Vector linear_predictor(const Eigen::Ref<const Matrix>& x, const State& s)
{
    Vector eta = Vector::Constant(x.rows(), s.intercept);
    if (x.cols() > 0) eta.noalias() += x * s.beta;
    return eta;
}

/// Weighted least squares solve of the unpenalized Newton step.
inline State newton_step(const Eigen::Ref<const Matrix>& x, const Vector& w, const Vector& z)
{
    const Eigen::Index n = x.rows(), q = x.cols();
    Matrix design(n, q + 1);
    design.col(0).setOnes();
    design.rightCols(q) = x;
    const Matrix wx = design.array().colwise() * w.array();
    const Matrix gram = design.transpose() * wx;
    const Vector rhs = wx.transpose() * z;
    Vector sol;
    Eigen::LDLT<Matrix> ldlt(gram);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        sol = ldlt.solve(rhs);
    }
    if (sol.size() == 0 || !sol.allFinite()) sol = gram.completeOrthogonalDecomposition().solve(rhs);
    if (!sol.allFinite()) throw NumericError("weighted least squares step is not finite");
    return State{sol[0], sol.tail(q)};
}

/// Cyclic coordinate descent on (1/2n) sum w (z - eta)^2 + lambda |beta|_1, warm-started at s.
/// Columns are centered by their weighted means internally; the intercept absorbs the
/// shift, so the problem is unchanged but the intercept no longer couples to every slope.
inline State cd_step(const Eigen::Ref<const Matrix>& x, const Vector& w, const Vector& z, State s, double lambda,
                     const GlmOptions& opt)
{
    const Eigen::Index n = x.rows(), q = x.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    const double sum_w = w.sum();
    if (!(sum_w > 0)) return s;

    const Vector centers = (x.transpose() * w) / sum_w;
    const Matrix xc = x.rowwise() - centers.transpose();
    double b0 = s.intercept + centers.dot(s.beta);
    Vector r = z - xc * s.beta;
    r.array() -= b0;

    Vector a(q);
    for (Eigen::Index k = 0; k < q; ++k) a[k] = (w.array() * xc.col(k).array().square()).sum() * inv_n;
    const double zbar = w.dot(z) / sum_w;
    const double spread = (w.array() * (z.array() - zbar).square()).sum() * inv_n;
    const double threshold = opt.cd_tolerance * std::max(spread, std::numeric_limits<double>::min());

    // One pass over the intercept and the listed coordinates; returns the largest a_k * delta^2.
    auto pass = [&](bool everything) {
        const double d0 = w.dot(r) / sum_w;
        b0 += d0;
        r.array() -= d0;
        double worst = sum_w * inv_n * d0 * d0;
        for (Eigen::Index k = 0; k < q; ++k) {
            if (!everything && s.beta[k] == 0.0) continue;
            if (a[k] <= 0.0) {
                if (s.beta[k] != 0.0) {
                    r += s.beta[k] * xc.col(k);
                    s.beta[k] = 0.0;
                }
                continue;
            }
            const double g = (w.array() * xc.col(k).array() * r.array()).sum() * inv_n + a[k] * s.beta[k];
            const double updated = soft_threshold(g, lambda) / a[k];
            const double d = updated - s.beta[k];
            if (d != 0.0) {
                r -= d * xc.col(k);
                s.beta[k] = updated;
                worst = std::max(worst, a[k] * d * d);
            }
        }
        return worst;
    };

    // Full sweeps alternate with sweeps over the current nonzeros until a full sweep is quiet.
    int sweeps = 0;
    while (sweeps < opt.max_cd_sweeps) {
        ++sweeps;
        if (pass(true) < threshold) break;
        while (sweeps < opt.max_cd_sweeps) {
            ++sweeps;
            if (pass(false) < threshold) break;
        }
    }
    s.intercept = b0 - centers.dot(s.beta);
    return s;
}

}  // namespace glm_detail

/// Fits a GLM of y on the columns of x by penalized maximum likelihood:
/// minimizes (1/n) sum deviance/2 + lambda * sum |theta_k| with an unpenalized intercept.
/// IRLS outer loop with step halving; the inner solve is exact weighted least squares
/// for lambda = 0 and coordinate descent otherwise.
inline GlmFit fit_glm(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& x, const QvfFamily& family,
                      double lambda, const GlmOptions& opt = {}, const LinearPredictor* warm_start = nullptr)
{
    using namespace glm_detail;
    validate(family, y, x);
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be a finite nonnegative number");

    const Eigen::Index n = y.size(), q = x.cols();
    State s{link(family, y.mean()), Vector::Zero(q)};
    if (warm_start != nullptr && static_cast<Eigen::Index>(warm_start->coefficients.size()) == q) {
        s.intercept = warm_start->intercept;
        s.beta = Eigen::Map<const Vector>(warm_start->coefficients.data(), q);
    }

    GlmFit fit;
    fit.lambda = lambda;
    Vector eta = linear_predictor(x, s);
    double obj = objective(family, y, eta, s, lambda);
    if (opt.record_trace) fit.objective_trace.push_back(obj);

    Vector w(n), z(n);
    for (int it = 1; it <= opt.max_iterations; ++it) {
        fit.iterations = it;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mu = mean_from_eta(family, eta[i]);
            w[i] = std::max(fisher_weight(family, mu), 1e-10);
            z[i] = eta[i] - score(family, y[i], mu) / w[i];
        }
        State cand = lambda == 0.0 ? newton_step(x, w, z) : cd_step(x, w, z, s, lambda, opt);

        Vector cand_eta = linear_predictor(x, cand);
        double cand_obj = objective(family, y, cand_eta, cand, lambda);
        for (int h = 0; h < opt.max_halvings && !(cand_obj <= obj); ++h) {
            cand.intercept = 0.5 * (cand.intercept + s.intercept);
            cand.beta = 0.5 * (cand.beta + s.beta);
            cand_eta = linear_predictor(x, cand);
            cand_obj = objective(family, y, cand_eta, cand, lambda);
        }
        if (!(cand_obj <= obj)) {
            // No descent direction left: the current point is stationary up to rounding.
            fit.converged = std::abs(cand_obj - obj) / (std::abs(obj) + 0.1) < opt.tolerance;
            break;
        }

        double change = std::abs(cand.intercept - s.intercept);
        if (q > 0) change = std::max(change, (cand.beta - s.beta).cwiseAbs().maxCoeff());
        const double rel = (obj - cand_obj) / (std::abs(cand_obj) + 0.1);
        s = std::move(cand);
        eta = std::move(cand_eta);
        obj = cand_obj;
        if (opt.record_trace) fit.objective_trace.push_back(obj);
        if (rel < opt.tolerance && change < opt.coef_tolerance) {
            fit.converged = true;
            break;
        }
    }

    fit.predictor.intercept = s.intercept;
    fit.predictor.coefficients.assign(s.beta.data(), s.beta.data() + q);
    double dev = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) dev += unit_deviance(family, y[i], eta[i]);
    fit.final_deviance = dev;
    return fit;
}

/// Fitted means mu_i = mean_from_eta(theta_0 + x_i . theta).
inline Vector predict_mean(const LinearPredictor& pred, const QvfFamily& family, const Eigen::Ref<const Matrix>& x)
{
    if (static_cast<Eigen::Index>(pred.coefficients.size()) != x.cols()) {
        throw InputError("predictor has " + std::to_string(pred.coefficients.size()) + " coefficients but matrix has " +
                         std::to_string(x.cols()) + " columns");
    }
    Vector mu(x.rows());
    const auto beta = Eigen::Map<const Vector>(pred.coefficients.data(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double eta = pred.intercept + (x.cols() > 0 ? x.row(i).dot(beta) : 0.0);
        mu[i] = mean_from_eta(family, eta);
    }
    return mu;
}

inline Vector predict_mean(const GlmFit& fit, const QvfFamily& family, const Eigen::Ref<const Matrix>& x)
{
    return predict_mean(fit.predictor, family, x);
}

/// Mean negative log-likelihood (saturated terms removed) and its analytic gradient
/// in (intercept, coefficients) order. Exposed for gradient checks.
inline double mean_nll(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& x, const QvfFamily& family,
                       const LinearPredictor& pred, Vector* gradient = nullptr)
{
    using namespace glm_detail;
    const Eigen::Index n = y.size(), q = x.cols();
    State s{pred.intercept, Eigen::Map<const Vector>(pred.coefficients.data(), q)};
    const Vector eta = linear_predictor(x, s);
    double total = 0.0;
    Vector d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        total += nll(family, y[i], eta[i]) - saturated_nll(family, y[i]);
        d[i] = score(family, y[i], mean_from_eta(family, eta[i]));
    }
    if (gradient != nullptr) {
        gradient->resize(q + 1);
        (*gradient)[0] = d.sum() / n;
        if (q > 0) gradient->tail(q) = x.transpose() * d / static_cast<double>(n);
    }
    return total / static_cast<double>(n);
}

/// Smallest lambda at which every coefficient is zero: the sup-norm of the
/// null-model gradient of the mean negative log-likelihood. Predictors raw.
inline double lambda_max(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& x, const QvfFamily& family)
{
    if (x.cols() == 0) return 0.0;
    const double ybar = y.mean();
    if (ybar <= 0.0) return 0.0;
    const double scale = family.kind() == FamilyKind::exponential ? 1.0 / ybar : 1.0;
    const Vector centered = (y.array() - ybar).matrix();
    return ((x.transpose() * centered).cwiseAbs().maxCoeff()) * scale / static_cast<double>(y.size());
}

/// grid_size values log-spaced from lmax down to min_ratio * lmax, strictly decreasing.
inline std::vector<double> lambda_grid(double lmax, int grid_size, double min_ratio = 0.01)
{
    if (grid_size < 1) throw InputError("lambda grid needs at least one point");
    std::vector<double> grid(static_cast<std::size_t>(grid_size));
    if (grid_size == 1) {
        grid[0] = lmax;
        return grid;
    }
    const double step = std::log(min_ratio) / (grid_size - 1);
    for (int i = 0; i < grid_size; ++i) grid[static_cast<std::size_t>(i)] = lmax * std::exp(step * i);
    return grid;
}

/// Warm-started fits along a decreasing lambda grid.
inline std::vector<GlmFit> fit_path(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& x,
                                    const QvfFamily& family, const std::vector<double>& grid, const GlmOptions& opt = {})
{
    std::vector<GlmFit> path;
    path.reserve(grid.size());
    for (double lambda : grid) {
        path.push_back(fit_glm(y, x, family, lambda, opt, path.empty() ? nullptr : &path.back().predictor));
    }
    return path;
}

struct CvOptions {
    int folds = 5;
    int grid_size = 50;
    double min_ratio = 0.01;
    GlmOptions glm;
};

struct CvReport {
    std::vector<double> lambda_grid;
    std::vector<double> mean_cv_deviance;
    double chosen_lambda = 0.0;
    std::size_t chosen_index = 0;
    /// True when the response carries no signal to penalize (constant column, no
    /// predictors); the recommendation is then the intercept-only lambda_max.
    bool degenerate = false;
};

/// K-fold cross-validation over a log-spaced lambda grid; folds come from a
/// seeded shuffle, the chosen lambda minimizes mean held-out deviance.
template <class Urbg>
CvReport cv_select_lambda(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Matrix>& x, const QvfFamily& family,
                          const CvOptions& opt, Urbg& rng)
{
    glm_detail::validate(family, y, x);
    const Eigen::Index n = y.size();
    if (opt.folds < 2 || opt.folds > n) throw InputError("cross-validation needs 2 <= folds <= n");

    CvReport report;
    const double lmax = lambda_max(y, x, family);
    const bool constant = (y.array() == y[0]).all();
    if (constant || !(lmax > 0.0)) {
        report.lambda_grid = {lmax};
        report.mean_cv_deviance = {0.0};
        report.chosen_lambda = lmax;
        report.degenerate = true;
        return report;
    }
    report.lambda_grid = lambda_grid(lmax, opt.grid_size, opt.min_ratio);
    const std::size_t g = report.lambda_grid.size();
    report.mean_cv_deviance.assign(g, 0.0);

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < perm.size(); ++i) fold_of[static_cast<std::size_t>(perm[i])] = static_cast<int>(i % opt.folds);

    for (int f = 0; f < opt.folds; ++f) {
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < n; ++i) (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        const Vector ytr = y(train);
        const Matrix xtr = x(train, Eigen::all);
        const Matrix xte = x(test, Eigen::all);
        const auto path = fit_path(ytr, xtr, family, report.lambda_grid, opt.glm);
        for (std::size_t l = 0; l < g; ++l) {
            const auto& pred = path[l].predictor;
            const auto beta = Eigen::Map<const Vector>(pred.coefficients.data(), x.cols());
            const Vector eta = (xte * beta).array() + pred.intercept;
            double dev = 0.0;
            for (std::size_t t = 0; t < test.size(); ++t) dev += glm_detail::unit_deviance(family, y[test[t]], eta[static_cast<Eigen::Index>(t)]);
            report.mean_cv_deviance[l] += dev;
        }
    }
    for (auto& d : report.mean_cv_deviance) d /= static_cast<double>(n);
    report.chosen_index = static_cast<std::size_t>(
        std::min_element(report.mean_cv_deviance.begin(), report.mean_cv_deviance.end()) - report.mean_cv_deviance.begin());
    report.chosen_lambda = report.lambda_grid[report.chosen_index];
    return report;
}

}  // namespace qvfdag
