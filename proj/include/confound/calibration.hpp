#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "confound/brent.hpp"
#include "confound/errors.hpp"
#include "confound/glm.hpp"
#include "confound/quadrature.hpp"
#include "confound/rng.hpp"
#include "confound/sampling.hpp"

namespace confound {

// Logistic treatment-assignment model over the true covariates:
// logit P(A=1 | X) = alpha0 + alphas' X, with X ~ N(0, cov).
struct TreatmentModel {
    double alpha0 = 0.0;
    std::vector<double> alphas;
    CovarianceSpec cov;

    void validate() const {
        cov.validate();
        if (alphas.size() != cov.dim) throw Error("TreatmentModel: alphas length != cov.dim");
    }
};

enum class ConfoundingMethod { QUADRATURE, MONTE_CARLO };

struct ConfoundingReport {
    std::vector<double> smd_per_covariate; // E(X_p|A=1) - E(X_p|A=0)
    double total_confounding = 0.0;        // sum_p beta_p * smd_p
    ConfoundingMethod method = ConfoundingMethod::QUADRATURE;
    double mc_se = 0.0;
};

namespace detail {

struct SmdResult {
    std::vector<double> smd;
    ConfoundingMethod method;
    std::vector<double> mc_se;
};

// Quadrature path, valid for alpha0 = 0. The score S = alphas'X is scalar
// Gaussian with variance alphas'Sigma alphas, and E[X_p | S] = c_p S with
// c_p = Cov(X_p, S)/Var(S), so each covariate's between-group mean
// difference reduces to a one-dimensional integral of S * expit(S).
inline SmdResult marginal_smd_quadrature(const TreatmentModel& model) {
    const std::size_t p = model.alphas.size();
    std::vector<double> cov_xs(p, 0.0);
    double var_s = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) cov_xs[i] += model.cov.matrix(i, j) * model.alphas[j];
        var_s += model.alphas[i] * cov_xs[i];
    }
    SmdResult out;
    out.method = ConfoundingMethod::QUADRATURE;
    out.mc_se.assign(p, 0.0);

    bool all_zero = true;
    for (double a : model.alphas)
        if (a != 0.0) all_zero = false;
    if (all_zero) {
        out.smd.assign(p, 0.0); // treatment independent of X
        return out;
    }
    if (var_s < 1e-12) throw DegenerateScore("marginal_smd: alphas'Sigma alphas < 1e-12");

    static const QuadratureRule rule = gauss_hermite(64);
    const double sd = std::sqrt(var_s);
    double e_s_sig = gauss_hermite_expectation(rule, sd, [](double s) { return s * expit(s); });
    double p1 = gauss_hermite_expectation(rule, sd, [](double s) { return expit(s); });
    // E(X_p|A=1) - E(X_p|A=0) = c_p E[S sig(S)] (1/p1 + 1/(1-p1))
    out.smd.resize(p);
    for (std::size_t i = 0; i < p; ++i)
        out.smd[i] = (cov_xs[i] / var_s) * e_s_sig * (1.0 / p1 + 1.0 / (1.0 - p1));
    return out;
}

// Monte Carlo fallback for alpha0 != 0, Rao-Blackwellized over the
// treatment draw: each sampled X contributes its assignment probability
// rather than a Bernoulli realization. mc_se from 20 batch means.
inline SmdResult marginal_smd_monte_carlo(const TreatmentModel& model, std::size_t n,
                                          const SeedSpec& seed) {
    const std::size_t p = model.alphas.size();
    const std::size_t batches = 20;
    Matrix x = sample_mvn(seed, model.cov, n, /*substream=*/101);
    std::vector<std::vector<double>> batch_smd(batches, std::vector<double>(p, 0.0));
    const std::size_t per = n / batches;
    for (std::size_t b = 0; b < batches; ++b) {
        std::vector<double> s1(p, 0.0), s0(p, 0.0);
        double p1 = 0.0, p0 = 0.0;
        for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
            double eta = model.alpha0;
            for (std::size_t j = 0; j < p; ++j) eta += model.alphas[j] * x(i, j);
            double e = expit(eta);
            p1 += e;
            p0 += 1.0 - e;
            for (std::size_t j = 0; j < p; ++j) {
                s1[j] += e * x(i, j);
                s0[j] += (1.0 - e) * x(i, j);
            }
        }
        for (std::size_t j = 0; j < p; ++j) batch_smd[b][j] = s1[j] / p1 - s0[j] / p0;
    }
    SmdResult out;
    out.method = ConfoundingMethod::MONTE_CARLO;
    out.smd.assign(p, 0.0);
    out.mc_se.assign(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t b = 0; b < batches; ++b) out.smd[j] += batch_smd[b][j];
        out.smd[j] /= static_cast<double>(batches);
        double ss = 0.0;
        for (std::size_t b = 0; b < batches; ++b) {
            double d = batch_smd[b][j] - out.smd[j];
            ss += d * d;
        }
        out.mc_se[j] = std::sqrt(ss / (batches * (batches - 1.0)));
    }
    return out;
}

inline SmdResult marginal_smd_detail(const TreatmentModel& model) {
    model.validate();
    if (model.alpha0 == 0.0) return marginal_smd_quadrature(model);
    return marginal_smd_monte_carlo(model, 1000000, SeedSpec{0xC0FFEE, 0});
}

} // namespace detail

// Per-covariate between-group mean differences E(X_p|A=1) - E(X_p|A=0)
// implied by the treatment model (population quantities, not sample ones).
inline std::vector<double> marginal_smd(const TreatmentModel& model) {
    return detail::marginal_smd_detail(model).smd;
}

// Total confounding: the bias of the naive outcome-on-treatment regression
// that omits the covariates, sum_p beta_p * smd_p. A functional of the
// treatment model and outcome coefficients only.
inline ConfoundingReport total_confounding(const TreatmentModel& model,
                                           const std::vector<double>& betas) {
    model.validate();
    if (betas.size() != model.cov.dim) throw Error("total_confounding: betas length != cov.dim");
    detail::SmdResult r = detail::marginal_smd_detail(model);
    ConfoundingReport rep;
    rep.smd_per_covariate = r.smd;
    rep.method = r.method;
    double tc = 0.0, var = 0.0;
    for (std::size_t j = 0; j < betas.size(); ++j) {
        tc += betas[j] * r.smd[j];
        var += betas[j] * betas[j] * r.mc_se[j] * r.mc_se[j];
    }
    rep.total_confounding = tc;
    rep.mc_se = std::sqrt(var);
    return rep;
}

// Coefficient patterns used by the calibrated designs.
enum class AlphaStructure {
    SIM1,       // two covariates, alpha = (a, a), cov has rho on (1,2)
    SIM2_RHO13, // three covariates, alpha = (a, 0, a), cov has rho on (1,3)
};

inline TreatmentModel make_structured_model(AlphaStructure structure, double a, double rho) {
    TreatmentModel m;
    if (structure == AlphaStructure::SIM1) {
        Matrix s = Matrix::identity(2);
        s(0, 1) = s(1, 0) = rho;
        m.cov = CovarianceSpec::from_matrix(s);
        m.alphas = {a, a};
    } else {
        Matrix s = Matrix::identity(3);
        s(0, 2) = s(2, 0) = rho;
        m.cov = CovarianceSpec::from_matrix(s);
        m.alphas = {a, 0.0, a};
    }
    return m;
}

// Solve for the common slope a in the structured treatment model so that
// total confounding hits target_tc. TC is smooth and strictly increasing
// in a on the bracket for the designs in use.
inline double solve_alpha(double target_tc, double rho_x, const std::vector<double>& betas,
                          AlphaStructure structure) {
    if (target_tc <= 0.0) throw Error("solve_alpha: target_tc must be > 0");
    auto tc_at = [&](double a) {
        TreatmentModel m = make_structured_model(structure, a, rho_x);
        return total_confounding(m, betas).total_confounding - target_tc;
    };
    const double lo = 1e-4, hi = 10.0;
    if (tc_at(hi) < 0.0) throw NoBracket("solve_alpha: total confounding at a=10 below target");
    return brent_root(tc_at, lo, hi, 1e-10);
}

// Sim-2 first block: alpha fixed at (a, 0, a), beta1 = beta2 = b unknown,
// beta3 = 0. Since SMD2 = rho_12 * SMD1, b = target / (SMD1 * (1 + rho_12)).
inline double solve_beta(double target_tc, double rho_12, double alpha_fixed) {
    Matrix s = Matrix::identity(3);
    s(0, 1) = s(1, 0) = rho_12;
    TreatmentModel m;
    m.cov = CovarianceSpec::from_matrix(s);
    m.alphas = {alpha_fixed, 0.0, alpha_fixed};
    std::vector<double> smd = marginal_smd(m);
    if (std::fabs(smd[0]) < 1e-10) throw ZeroSmd("solve_beta: SMD of the confounder is zero");
    return target_tc / (smd[0] + smd[1]);
}

} // namespace confound
