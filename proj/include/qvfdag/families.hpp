#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvfdag/error.hpp"

namespace qvfdag {

enum class FamilyKind { poisson, binomial, exponential, mixture };

/// Linear predictors are clamped to this range before exponentiation.
inline constexpr double kEtaClamp = 30.0;
/// |beta1 + beta2 * mu| below this makes omega undefined.
inline constexpr double kOmegaGuard = 1e-12;

/// Conditional distribution of one node: a quadratic-variance-function family
/// Var = beta1 * mu + beta2 * mu^2, or a fair two-component mixture used only
/// for data generation.
class QvfFamily {
public:
    static QvfFamily poisson() { return QvfFamily{FamilyKind::poisson, 1.0, 0.0, 0}; }

    static QvfFamily binomial(int trials)
    {
        if (trials < 1) throw InputError("binomial trials must be a positive integer");
        return QvfFamily{FamilyKind::binomial, 1.0, -1.0 / trials, trials};
    }

    static QvfFamily exponential() { return QvfFamily{FamilyKind::exponential, 0.0, 1.0, 0}; }

    static QvfFamily mixture(QvfFamily first, QvfFamily second)
    {
        if (first.is_mixture() || second.is_mixture()) throw InputError("nested mixtures are not supported");
        QvfFamily f{FamilyKind::mixture, 0.0, 0.0, 0};
        f.components_ = {std::move(first), std::move(second)};
        return f;
    }

    FamilyKind kind() const noexcept { return kind_; }
    bool is_mixture() const noexcept { return kind_ == FamilyKind::mixture; }
    int trials() const noexcept { return trials_; }
    const std::vector<QvfFamily>& components() const noexcept { return components_; }

    double beta1() const { return qvf_constant(beta1_); }
    double beta2() const { return qvf_constant(beta2_); }

    std::string name() const
    {
        switch (kind_) {
        case FamilyKind::poisson: return "poisson";
        case FamilyKind::binomial: return "binomial";
        case FamilyKind::exponential: return "exponential";
        case FamilyKind::mixture: return "mixture";
        }
        return "unknown";
    }

    friend bool operator==(const QvfFamily& a, const QvfFamily& b)
    {
        return a.kind_ == b.kind_ && a.trials_ == b.trials_ && a.components_ == b.components_;
    }

private:
    QvfFamily(FamilyKind kind, double b1, double b2, int trials) : kind_{kind}, beta1_{b1}, beta2_{b2}, trials_{trials} {}

    double qvf_constant(double v) const
    {
        if (is_mixture()) throw InputError("a mixture family has no QVF constants; configure a learner family");
        return v;
    }

    FamilyKind kind_;
    double beta1_;
    double beta2_;
    int trials_;
    std::vector<QvfFamily> components_;
};

/// Intercept plus one coefficient per conditioning column.
struct LinearPredictor {
    double intercept = 0.0;
    std::vector<double> coefficients;

    friend bool operator==(const LinearPredictor&, const LinearPredictor&) = default;
};

inline double clamp_eta(double eta) noexcept { return std::clamp(eta, -kEtaClamp, kEtaClamp); }

inline double logistic(double eta) noexcept
{
    if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

/// Conditional mean for linear predictor eta (log link for Poisson and
/// Exponential, logit link for Binomial).
inline double mean_from_eta(const QvfFamily& family, double eta)
{
    if (!std::isfinite(eta)) throw InputError("linear predictor is not finite");
    eta = clamp_eta(eta);
    switch (family.kind()) {
    case FamilyKind::poisson:
    case FamilyKind::exponential: return std::exp(eta);
    case FamilyKind::binomial: return family.trials() * logistic(eta);
    case FamilyKind::mixture:
        return 0.5 * mean_from_eta(family.components()[0], eta) + 0.5 * mean_from_eta(family.components()[1], eta);
    }
    return 0.0;
}

inline double model_variance(const QvfFamily& family, double mu) { return family.beta1() * mu + family.beta2() * mu * mu; }

inline double omega(const QvfFamily& family, double mu)
{
    const double denom = family.beta1() + family.beta2() * mu;
    if (!(std::abs(denom) > kOmegaGuard)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "QVF weight undefined for " << family.name() << " at mean " << mu;
        throw DegenerateError(msg.str());
    }
    return 1.0 / denom;
}

/// One draw from the family at linear predictor eta. A mixture tosses a fair
/// coin for each call and samples the chosen component.
template <class Urbg>
double sample(const QvfFamily& family, double eta, Urbg& rng)
{
    switch (family.kind()) {
    case FamilyKind::poisson: {
        const double mu = mean_from_eta(family, eta);
        // Beyond ~1e9 the deviation from a rounded normal is far below double resolution of the mean.
        if (mu > 1e9) {
            std::normal_distribution<double> nd{mu, std::sqrt(mu)};
            return std::max(0.0, std::round(nd(rng)));
        }
        std::poisson_distribution<std::int64_t> pd{mu};
        return static_cast<double>(pd(rng));
    }
    case FamilyKind::binomial: {
        std::binomial_distribution<int> bd{family.trials(), logistic(clamp_eta(eta))};
        return static_cast<double>(bd(rng));
    }
    case FamilyKind::exponential: {
        std::exponential_distribution<double> ed{1.0 / mean_from_eta(family, eta)};
        return ed(rng);
    }
    case FamilyKind::mixture: {
        std::bernoulli_distribution coin{0.5};
        const auto& c = family.components();
        return coin(rng) ? sample(c[1], eta, rng) : sample(c[0], eta, rng);
    }
    }
    return 0.0;
}

// JSON form: {"kind":"poisson"}, {"kind":"binomial","trials":4}, {"kind":"exponential"},
// {"kind":"mixture","components":[{...},{...}]}
inline void to_json(nlohmann::json& j, const QvfFamily& f)
{
    j = nlohmann::json{{"kind", f.name()}};
    if (f.kind() == FamilyKind::binomial) j["trials"] = f.trials();
    if (f.is_mixture()) {
        nlohmann::json comps = nlohmann::json::array();
        for (const auto& c : f.components()) {
            nlohmann::json cj;
            to_json(cj, c);
            comps.push_back(std::move(cj));
        }
        j["components"] = std::move(comps);
    }
}

inline QvfFamily family_from_json(const nlohmann::json& j)
{
    if (j.is_string()) return family_from_json(nlohmann::json{{"kind", j}});
    if (!j.is_object() || !j.contains("kind")) throw InputError("family config needs a \"kind\" field");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "poisson") return QvfFamily::poisson();
    if (kind == "exponential") return QvfFamily::exponential();
    if (kind == "binomial") return QvfFamily::binomial(j.value("trials", 0));
    if (kind == "mixture") {
        const auto& c = j.at("components");
        if (!c.is_array() || c.size() != 2) throw InputError("mixture needs exactly two components");
        return QvfFamily::mixture(family_from_json(c[0]), family_from_json(c[1]));
    }
    throw InputError("unknown family kind '" + kind + "'");
}

}  // namespace qvfdag

template <>
struct nlohmann::adl_serializer<qvfdag::QvfFamily> {
    static qvfdag::QvfFamily from_json(const json& j) { return qvfdag::family_from_json(j); }
    static void to_json(json& j, const qvfdag::QvfFamily& f) { qvfdag::to_json(j, f); }
};
