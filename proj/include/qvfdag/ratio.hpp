#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qvfdag/families.hpp"
#include "qvfdag/glm.hpp"
#include "qvfdag/graph.hpp"
#include "qvfdag/parallel.hpp"
#include "qvfdag/rng.hpp"

namespace qvfdag {

/// n x p observation matrix; column j holds variable X_j.
using DataMatrix = Matrix;

struct RatioOptions {
    GlmOptions glm;
    /// Used by the penalized variant when the conditioning set is large.
    CvOptions cv;
    std::uint64_t seed = 0;
};

namespace ratio_detail {

inline std::string node_label(NodeId j) { return "node " + std::to_string(j + 1); }

}  // namespace ratio_detail

/// Var(X_j) / ((beta1 + beta2 E[X_j]) E[X_j]) with divisor-n sample moments.
inline double unconditional_ratio(const Eigen::Ref<const Vector>& column, const QvfFamily& family)
{
    const Eigen::Index n = column.size();
    if (n < 2) throw InputError("ratio needs at least two observations");
    if (!column.allFinite()) throw InputError("column contains non-finite values");
    const double mean = column.mean();
    const double var = (column.array() - mean).square().sum() / static_cast<double>(n);
    const double denom = (family.beta1() + family.beta2() * mean) * mean;
    if (!(mean > 0.0) || !(std::abs(denom) > kOmegaGuard)) {
        throw DegenerateError("degenerate column: sample mean " + std::to_string(mean) + " leaves the ratio undefined");
    }
    return var / denom;
}

/// R(j, S) estimated with the residual-moment plug-in
///   [ (1/n) sum w_i^2 (x_ij - mu_i)^2 ] / [ (1/n) sum w_i x_ij ],
/// where mu_i is the GLM fit of X_j on X_S and w_i = omega(mu_i). An l1-penalized
/// fit with cross-validated lambda replaces the plain MLE once |S| >= n/2.
inline double conditional_ratio(NodeId j, const NodeSet& cond_set, const DataMatrix& data, const QvfFamily& family,
                                const RatioOptions& opt = {})
{
    using ratio_detail::node_label;
    if (j >= static_cast<NodeId>(data.cols())) throw InputError(node_label(j) + " is outside the data matrix");
    const Eigen::Index n = data.rows();
    const Vector y = data.col(static_cast<Eigen::Index>(j));
    if (cond_set.empty()) {
        try {
            return unconditional_ratio(y, family);
        } catch (const DegenerateError& e) {
            throw DegenerateError(node_label(j) + ": " + e.what());
        }
    }
    std::vector<Eigen::Index> cols(cond_set.begin(), cond_set.end());
    const Matrix x = data(Eigen::all, cols);

    GlmFit fit;
    if (2 * static_cast<Eigen::Index>(cond_set.size()) >= n) {
        auto rng = make_rng(opt.seed, {tag(Stream::ratio_cv), j});
        const auto cv = cv_select_lambda(y, x, family, opt.cv, rng);
        std::vector<double> grid(cv.lambda_grid.begin(), cv.lambda_grid.begin() + static_cast<std::ptrdiff_t>(cv.chosen_index) + 1);
        fit = fit_path(y, x, family, grid, opt.glm).back();
    } else {
        fit = fit_glm(y, x, family, 0.0, opt.glm);
    }
    if (!fit.converged) {
        throw NumericError(node_label(j) + ": GLM did not converge after " + std::to_string(fit.iterations) + " iterations");
    }

    const Vector mu = predict_mean(fit, family, x);
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double w;
        try {
            w = omega(family, mu[i]);
        } catch (const DegenerateError& e) {
            throw DegenerateError(node_label(j) + ": " + e.what());
        }
        const double r = y[i] - mu[i];
        num += w * w * r * r;
        den += w * y[i];
    }
    if (!(den > 0.0)) throw DegenerateError(node_label(j) + ": weighted mean is not positive");
    return num / den;
}

struct RatioFailure {
    std::string message;
    bool degenerate = false;
};

/// Ratios of all candidates against one conditioning set (one step of layer reconstruction).
struct RatioStep {
    NodeSet cond_set;
    std::map<NodeId, double> ratios;
    std::map<NodeId, RatioFailure> failures;
};

/// Computes each candidate's ratio independently; a failing node is recorded in
/// `failures` and does not stop the others.
inline RatioStep ratios_for_candidates(const NodeSet& candidates, const NodeSet& cond_set, const DataMatrix& data,
                                       const std::vector<QvfFamily>& families, const RatioOptions& opt = {},
                                       const Executor& exec = Executor{})
{
    if (families.size() != static_cast<std::size_t>(data.cols())) {
        throw InputError("family list has " + std::to_string(families.size()) + " entries but data has " +
                         std::to_string(data.cols()) + " columns");
    }
    struct Slot {
        double value = 0.0;
        bool ok = false;
        RatioFailure failure;
    };
    std::vector<Slot> slots(candidates.size());
    exec.parallel_for(candidates.size(), [&](std::size_t i) {
        const NodeId j = candidates[i];
        try {
            slots[i].value = conditional_ratio(j, cond_set, data, families.at(j), opt);
            slots[i].ok = true;
        } catch (const DegenerateError& e) {
            slots[i].failure = {e.what(), true};
        } catch (const Error& e) {
            slots[i].failure = {e.what(), false};
        }
    });

    RatioStep step;
    step.cond_set = cond_set;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (slots[i].ok) {
            step.ratios.emplace(candidates[i], slots[i].value);
        } else {
            step.failures.emplace(candidates[i], std::move(slots[i].failure));
        }
    }
    return step;
}

}  // namespace qvfdag
