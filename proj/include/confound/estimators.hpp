#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "confound/errors.hpp"
#include "confound/glm.hpp"

namespace confound {

enum class EstimatorTag { IPTW_HAJEK, IPTW_WREG, DR_AIPW, DR_WREG };

inline const char* to_string(EstimatorTag t) {
    switch (t) {
        case EstimatorTag::IPTW_HAJEK: return "IPTW_HAJEK";
        case EstimatorTag::IPTW_WREG: return "IPTW_WREG";
        case EstimatorTag::DR_AIPW: return "DR_AIPW";
        case EstimatorTag::DR_WREG: return "DR_WREG";
    }
    return "?";
}

struct PsWeights {
    std::vector<double> propensity; // in (0,1)
    std::vector<double> weights;    // A/e + (1-A)/(1-e)
};

struct AteEstimate {
    double estimate = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    EstimatorTag estimator = EstimatorTag::IPTW_WREG;
    std::string covariate_set;
};

inline constexpr double kPropensityFloor = 1e-6;
inline constexpr double kNormalQuantile975 = 1.96;

// Inverse probability of treatment weights from a fitted propensity model.
inline PsWeights compute_weights(const GlmFit& fit, const std::vector<double>& a) {
    const std::size_t n = a.size();
    if (fit.fitted.size() != n) throw Error("compute_weights: length mismatch");
    PsWeights out;
    out.propensity = fit.fitted;
    out.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double e = out.propensity[i];
        if (e < kPropensityFloor || e > 1.0 - kPropensityFloor)
            throw ExtremePropensity("compute_weights: propensity outside [1e-6, 1-1e-6]");
        out.weights[i] = a[i] == 1.0 ? 1.0 / e : 1.0 / (1.0 - e);
    }
    return out;
}

// Hajek (normalized) IPTW contrast of weighted group means.
inline double ate_iptw_hajek(const PsWeights& w, const std::vector<double>& a,
                             const std::vector<double>& y) {
    double s1 = 0.0, s0 = 0.0, n1 = 0.0, n0 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 1.0) {
            s1 += w.weights[i] * y[i];
            n1 += w.weights[i];
        } else {
            s0 += w.weights[i] * y[i];
            n0 += w.weights[i];
        }
    }
    if (n1 <= 0.0 || n0 <= 0.0) throw EmptyGroup("ate_iptw_hajek: a treatment group has no weight");
    return s1 / n1 - s0 / n0;
}

// IPTW via weighted regression of y on [1, a]; the coefficient of a is the
// effect, its SE comes from the sandwich vcov. Numerically identical point
// estimate to the Hajek contrast.
inline AteEstimate ate_iptw_wreg(const std::vector<double>& a, const std::vector<double>& y,
                                 const PsWeights& w) {
    DesignMatrix x = DesignMatrix::from_columns({a}, a.size());
    GlmFit fit = fit_wls(x, y, w.weights);
    AteEstimate est;
    est.estimate = fit.coefficients[1];
    est.se = std::sqrt(std::max(0.0, fit.vcov(1, 1)));
    est.ci_low = est.estimate - kNormalQuantile975 * est.se;
    est.ci_high = est.estimate + kNormalQuantile975 * est.se;
    est.estimator = EstimatorTag::IPTW_WREG;
    return est;
}

// Augmented IPTW (Lunceford-Davidian form): consistent when either the
// propensity model or the outcome predictions m1/m0 are correct.
inline double ate_dr_aipw(const std::vector<double>& a, const std::vector<double>& y,
                          const PsWeights& w, const std::vector<double>& m1,
                          const std::vector<double>& m0) {
    const std::size_t n = a.size();
    if (m1.size() != n || m0.size() != n) throw Error("ate_dr_aipw: length mismatch");
    double sum1 = 0.0, sum0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = w.propensity[i];
        if (e < kPropensityFloor || e > 1.0 - kPropensityFloor)
            throw ExtremePropensity("ate_dr_aipw: propensity outside [1e-6, 1-1e-6]");
        sum1 += a[i] * y[i] / e - (a[i] - e) * m1[i] / e;
        sum0 += (1.0 - a[i]) * y[i] / (1.0 - e) + (a[i] - e) * m0[i] / (1.0 - e);
    }
    return (sum1 - sum0) / static_cast<double>(n);
}

// Doubly robust variant actually used to reproduce the figures: weighted
// regression of y on [1, a, covariates], coefficient of a.
inline AteEstimate ate_dr_wreg(const std::vector<double>& a, const std::vector<double>& y,
                               const PsWeights& w,
                               const std::vector<std::vector<double>>& outcome_covariates) {
    std::vector<std::vector<double>> cols;
    cols.push_back(a);
    for (const auto& c : outcome_covariates) cols.push_back(c);
    DesignMatrix x = DesignMatrix::from_columns(cols, a.size());
    GlmFit fit = fit_wls(x, y, w.weights);
    AteEstimate est;
    est.estimate = fit.coefficients[1];
    est.se = std::sqrt(std::max(0.0, fit.vcov(1, 1)));
    est.ci_low = est.estimate - kNormalQuantile975 * est.se;
    est.ci_high = est.estimate + kNormalQuantile975 * est.se;
    est.estimator = EstimatorTag::DR_WREG;
    return est;
}

// Weighted standardized mean difference. Numerator uses weighted group
// means; denominator is the unweighted full-sample SD of x, so the scale
// does not move with the weights.
inline double weighted_smd(const std::vector<double>& x, const std::vector<double>& a,
                           const std::vector<double>& w) {
    const std::size_t n = x.size();
    double s1 = 0.0, s0 = 0.0, n1 = 0.0, n0 = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean += x[i];
        if (a[i] == 1.0) {
            s1 += w[i] * x[i];
            n1 += w[i];
        } else {
            s0 += w[i] * x[i];
            n0 += w[i];
        }
    }
    if (n1 <= 0.0 || n0 <= 0.0) throw EmptyGroup("weighted_smd: empty treatment group");
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd < 1e-12) throw ZeroVariance("weighted_smd: covariate has zero variance");
    return (s1 / n1 - s0 / n0) / sd;
}

} // namespace confound
