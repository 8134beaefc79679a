#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "confound/errors.hpp"
#include "confound/linalg.hpp"

namespace confound {

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Regression design with a leading intercept column of ones.
struct DesignMatrix {
    Matrix values; // n x p, first column all ones

    std::size_t n() const { return values.rows(); }
    std::size_t p() const { return values.cols(); }

    void validate() const {
        for (std::size_t i = 0; i < n(); ++i) {
            if (values(i, 0) != 1.0) throw Error("DesignMatrix: first column must be ones");
            for (std::size_t j = 0; j < p(); ++j)
                if (!std::isfinite(values(i, j))) throw Error("DesignMatrix: non-finite entry");
        }
    }

    // Build from predictor columns; the intercept is prepended.
    static DesignMatrix from_columns(const std::vector<std::vector<double>>& cols, std::size_t n) {
        DesignMatrix d;
        d.values = Matrix(n, cols.size() + 1);
        for (std::size_t i = 0; i < n; ++i) {
            d.values(i, 0) = 1.0;
            for (std::size_t j = 0; j < cols.size(); ++j) d.values(i, j + 1) = cols[j][i];
        }
        return d;
    }
};

struct GlmFit {
    std::vector<double> coefficients;
    Matrix vcov;
    std::vector<double> fitted;
    bool converged = false;
    int iterations = 0;
};

// Logistic regression by iteratively reweighted least squares.
// Start at zero, step-halve on likelihood decrease, stop when
// max |delta coef| < 1e-8. Divergence (|coef| > 30) is reported as
// Separation since that is its usual cause in these designs.
inline GlmFit fit_logistic(const DesignMatrix& x, const std::vector<double>& a) {
    const std::size_t n = x.n(), p = x.p();
    if (a.size() != n) throw Error("fit_logistic: length mismatch");
    if (n <= p) throw Error("fit_logistic: need n > p");
    std::size_t ones = 0;
    for (double v : a) {
        if (v != 0.0 && v != 1.0) throw Error("fit_logistic: treatment must be 0/1");
        if (v == 1.0) ++ones;
    }
    if (ones == 0 || ones == n) throw Separation("fit_logistic: single treatment class");

    std::vector<double> coef(p, 0.0), eta(n, 0.0), mu(n, 0.5);

    auto loglik = [&](const std::vector<double>& c) {
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = 0.0;
            for (std::size_t j = 0; j < p; ++j) e += x.values(i, j) * c[j];
            // log-likelihood contribution, numerically stable form
            ll += a[i] * e - (e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e)));
        }
        return ll;
    };

    double ll_old = loglik(coef);
    GlmFit fit;
    const int max_iter = 100;
    for (int iter = 1; iter <= max_iter; ++iter) {
        // score and information at current coef
        Matrix info(p, p);
        std::vector<double> score(p, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double e = 0.0;
            for (std::size_t j = 0; j < p; ++j) e += x.values(i, j) * coef[j];
            eta[i] = e;
            mu[i] = expit(e);
            double w = mu[i] * (1.0 - mu[i]);
            double r = a[i] - mu[i];
            for (std::size_t j = 0; j < p; ++j) {
                score[j] += x.values(i, j) * r;
                for (std::size_t k = 0; k <= j; ++k) info(j, k) += w * x.values(i, j) * x.values(i, k);
            }
        }
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = j + 1; k < p; ++k) info(j, k) = info(k, j);

        std::vector<double> delta;
        try {
            delta = solve_spd(info, score);
        } catch (const RankDeficient&) {
            // collapsed fitted probabilities zero out the information matrix;
            // that is separation, not a deficient design
            for (double m : mu)
                if (m < 1e-8 || m > 1.0 - 1e-8)
                    throw Separation("fit_logistic: fitted probabilities collapsed to 0/1");
            throw RankDeficient("fit_logistic: rank-deficient design");
        }

        double step = 1.0;
        std::vector<double> trial(p);
        double ll_new = 0.0;
        for (int h = 0; h < 30; ++h) {
            for (std::size_t j = 0; j < p; ++j) trial[j] = coef[j] + step * delta[j];
            ll_new = loglik(trial);
            if (ll_new >= ll_old - 1e-12) break;
            step *= 0.5;
        }
        double max_change = 0.0;
        for (std::size_t j = 0; j < p; ++j)
            max_change = std::max(max_change, std::fabs(trial[j] - coef[j]));
        coef = trial;
        ll_old = ll_new;
        fit.iterations = iter;

        for (double c : coef)
            if (std::fabs(c) > 30.0) throw Separation("fit_logistic: coefficient diverged (|coef| > 30)");

        if (max_change < 1e-8) {
            fit.converged = true;
            break;
        }
    }
    if (!fit.converged) throw NotConverged("fit_logistic: no convergence in 100 iterations");

    Matrix info(p, p);
    fit.fitted.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double e = 0.0;
        for (std::size_t j = 0; j < p; ++j) e += x.values(i, j) * coef[j];
        double m = expit(e);
        fit.fitted[i] = m;
        double w = m * (1.0 - m);
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = 0; k <= j; ++k) info(j, k) += w * x.values(i, j) * x.values(i, k);
    }
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = j + 1; k < p; ++k) info(j, k) = info(k, j);
    fit.coefficients = coef;
    fit.vcov = inverse_spd(info);
    return fit;
}

// Weighted least squares with design-based sandwich variance:
// (X'WX)^{-1} [ sum w_i^2 r_i^2 x_i x_i' ] (X'WX)^{-1}.
inline GlmFit fit_wls(const DesignMatrix& x, const std::vector<double>& y,
                      const std::vector<double>& w) {
    const std::size_t n = x.n(), p = x.p();
    if (y.size() != n || w.size() != n) throw Error("fit_wls: length mismatch");
    if (n <= p) throw Error("fit_wls: need n > p");
    for (double wi : w)
        if (!(wi > 0.0) || !std::isfinite(wi)) throw Error("fit_wls: weights must be finite and > 0");

    Matrix xtwx(p, p);
    std::vector<double> xtwy(p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            double wx = w[i] * x.values(i, j);
            xtwy[j] += wx * y[i];
            for (std::size_t k = 0; k <= j; ++k) xtwx(j, k) += wx * x.values(i, k);
        }
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = j + 1; k < p; ++k) xtwx(j, k) = xtwx(k, j);

    GlmFit fit;
    try {
        fit.coefficients = solve_spd(xtwx, xtwy);
    } catch (const RankDeficient&) {
        throw RankDeficient("fit_wls: X'WX rank-deficient");
    }

    fit.fitted.resize(n);
    Matrix meat(p, p);
    for (std::size_t i = 0; i < n; ++i) {
        double yhat = 0.0;
        for (std::size_t j = 0; j < p; ++j) yhat += x.values(i, j) * fit.coefficients[j];
        fit.fitted[i] = yhat;
        double s = w[i] * (y[i] - yhat);
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = 0; k <= j; ++k)
                meat(j, k) += s * s * x.values(i, j) * x.values(i, k);
    }
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = j + 1; k < p; ++k) meat(j, k) = meat(k, j);

    Matrix bread = inverse_spd(xtwx);
    fit.vcov = matmul(matmul(bread, meat), bread);
    fit.converged = true;
    fit.iterations = 1;
    return fit;
}

} // namespace confound
