#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "confound/calibration.hpp"
#include "confound/errors.hpp"
#include "confound/glm.hpp"
#include "confound/rng.hpp"
#include "confound/sampling.hpp"

namespace confound {

enum class Design { SIM1, SIM2_RHO12, SIM2_RHO13, SIGNFLIP_A1 };

inline const char* to_string(Design d) {
    switch (d) {
        case Design::SIM1: return "SIM1";
        case Design::SIM2_RHO12: return "SIM2_RHO12";
        case Design::SIM2_RHO13: return "SIM2_RHO13";
        case Design::SIGNFLIP_A1: return "SIGNFLIP_A1";
    }
    return "?";
}

// Classical-error reliability Var(X)/Var(W) when Var(X) = 1.
inline double reliability(double sigma2) {
    if (sigma2 < 0.0) throw Error("reliability: sigma2 must be >= 0");
    return 1.0 / (1.0 + sigma2);
}

// One fully specified simulation cell.
struct ScenarioSpec {
    std::string id;
    Design design = Design::SIM1;
    double rho_x = 0.0;                  // correlation of the designated true-covariate pair
    double rho_w = 0.0;                  // correlation of the designated error pair
    std::vector<double> sigma2_w;        // error variance per covariate
    TreatmentModel alpha;                // treatment model over true covariates
    double tau = 2.0;                    // true ATE
    double beta0 = 0.0;
    std::vector<double> betas;           // outcome coefficients on true covariates
    std::size_t n = 1000;
    std::size_t replicates = 200;
    std::vector<std::string> covariate_sets;
    std::uint64_t master_seed = 0;

    std::size_t dim() const { return alpha.alphas.size(); }

    // Index pair whose measurement errors are correlated by rho_w.
    std::pair<std::size_t, std::size_t> error_pair() const {
        return design == Design::SIM2_RHO13 ? std::pair<std::size_t, std::size_t>{0, 2}
                                            : std::pair<std::size_t, std::size_t>{0, 1};
    }

    void validate() const {
        alpha.validate();
        if (betas.size() != dim()) throw Error("ScenarioSpec: betas length != covariate dim");
        if (sigma2_w.size() != dim()) throw Error("ScenarioSpec: sigma2_w length != covariate dim");
        for (double s : sigma2_w) {
            double r = reliability(s);
            if (!(r > 0.0 && r <= 1.0)) throw Error("ScenarioSpec: reliability outside (0,1]");
        }
        if (n < 2 || replicates < 1) throw Error("ScenarioSpec: n and replicates must be positive");
        if (!(rho_x > -1.0 && rho_x < 1.0)) throw Error("ScenarioSpec: rho_x outside (-1,1)");
        if (!(rho_w >= -1.0 && rho_w < 1.0)) throw Error("ScenarioSpec: rho_w outside [-1,1)");
        if (design == Design::SIM2_RHO12 || design == Design::SIM2_RHO13) {
            if (dim() != 3) throw Error("ScenarioSpec: SIM2 designs need 3 covariates");
            if (alpha.alphas[1] != 0.0) throw Error("ScenarioSpec: SIM2 requires alpha_2 = 0");
            if (betas[2] != 0.0) throw Error("ScenarioSpec: SIM2 requires beta_3 = 0");
            // X2 and X3 uncorrelated always; the off-design pair stays at zero
            if (alpha.cov.matrix(1, 2) != 0.0) throw Error("ScenarioSpec: SIM2 requires X2 _|_ X3");
            if (design == Design::SIM2_RHO12 && alpha.cov.matrix(0, 2) != 0.0)
                throw Error("ScenarioSpec: SIM2_RHO12 requires rho_13 = 0");
            if (design == Design::SIM2_RHO13 && alpha.cov.matrix(0, 1) != 0.0)
                throw Error("ScenarioSpec: SIM2_RHO13 requires rho_12 = 0");
        } else {
            if (dim() != 2) throw Error("ScenarioSpec: SIM1 designs need 2 covariates");
        }
    }

    bool error_free() const {
        for (double s : sigma2_w)
            if (s != 0.0) return false;
        return true;
    }

    // Only valid when not error_free().
    CovarianceSpec error_covariance() const {
        Matrix m(dim(), dim());
        for (std::size_t j = 0; j < dim(); ++j) m(j, j) = sigma2_w[j];
        auto [i, j] = error_pair();
        double off = rho_w * std::sqrt(sigma2_w[i] * sigma2_w[j]);
        m(i, j) = m(j, i) = off;
        return CovarianceSpec::from_matrix(std::move(m));
    }
};

// Convenience constructors mirroring the calibrated designs. `a` is the
// solved treatment slope; SIM1 uses beta = (1,1), SIM2 uses (b1, b2, 0).
inline ScenarioSpec make_sim1_scenario(double rho_x, double rho_w, double sigma2, double a,
                                       double tau = 2.0) {
    ScenarioSpec s;
    s.design = Design::SIM1;
    s.rho_x = rho_x;
    s.rho_w = rho_w;
    s.sigma2_w = {sigma2, sigma2};
    s.alpha = make_structured_model(AlphaStructure::SIM1, a, rho_x);
    s.tau = tau;
    s.betas = {1.0, 1.0};
    return s;
}

inline ScenarioSpec make_sim2_scenario(Design design, double rho, double rho_w, double sigma2,
                                       double a, double b, double tau = 2.0) {
    ScenarioSpec s;
    s.design = design;
    s.rho_x = rho;
    s.rho_w = rho_w;
    s.sigma2_w = {sigma2, sigma2, sigma2};
    Matrix cov = Matrix::identity(3);
    if (design == Design::SIM2_RHO12)
        cov(0, 1) = cov(1, 0) = rho;
    else if (design == Design::SIM2_RHO13)
        cov(0, 2) = cov(2, 0) = rho;
    else
        throw Error("make_sim2_scenario: design must be SIM2_RHO12 or SIM2_RHO13");
    s.alpha.cov = CovarianceSpec::from_matrix(std::move(cov));
    s.alpha.alphas = {a, 0.0, a};
    s.tau = tau;
    s.betas = {b, b, 0.0};
    return s;
}

// Mirror of the sim-1 scenario with mixed-sign alpha: rho_x positive,
// alpha = (a, -a), beta = (1, -1). Equivalent (by flipping X2) to the
// sim-1 scenario at -rho_x with alpha = (a, a), beta = (1, 1).
inline ScenarioSpec make_signflip_scenario(double rho_x, double rho_w, double sigma2, double a,
                                           double tau = 2.0) {
    ScenarioSpec s = make_sim1_scenario(rho_x, rho_w, sigma2, a, tau);
    s.design = Design::SIGNFLIP_A1;
    s.alpha.alphas = {a, -a};
    s.betas = {1.0, -1.0};
    return s;
}

struct SampleData {
    Matrix x_true; // n x p
    Matrix x_obs;  // W = X + e
    std::vector<double> a;
    std::vector<double> y;

    std::size_t n() const { return a.size(); }
    std::size_t p() const { return x_true.cols(); }
};

// Generate one replicate. Sub-streams keep the X draw, treatment draw,
// outcome noise, and measurement-error draw disjoint, so toggling rho_w
// or sigma2_w changes only the error draw (common random numbers across
// covariate-set comparisons).
inline SampleData generate(const ScenarioSpec& spec, std::uint64_t replicate) {
    spec.validate();
    const std::size_t n = spec.n, p = spec.dim();
    SeedSpec seed{spec.master_seed, replicate};

    SampleData d;
    d.x_true = sample_mvn(seed, spec.alpha.cov, n, /*substream=*/0);

    Rng a_rng(seed, 1);
    d.a.resize(n);
    std::size_t treated = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double eta = spec.alpha.alpha0;
        for (std::size_t j = 0; j < p; ++j) eta += spec.alpha.alphas[j] * d.x_true(i, j);
        d.a[i] = a_rng.bernoulli(expit(eta)) ? 1.0 : 0.0;
        treated += d.a[i] == 1.0;
    }
    if (treated == 0 || treated == n) throw Error("generate: degenerate treatment assignment");

    Rng y_rng(seed, 2);
    d.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double mu = spec.beta0 + spec.tau * d.a[i];
        for (std::size_t j = 0; j < p; ++j) mu += spec.betas[j] * d.x_true(i, j);
        d.y[i] = mu + y_rng.normal();
    }

    if (spec.error_free()) {
        d.x_obs = d.x_true; // W = X exactly
    } else {
        Matrix e = sample_mvn(seed, spec.error_covariance(), n, /*substream=*/3);
        d.x_obs = Matrix(n, p);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < p; ++j) d.x_obs(i, j) = d.x_true(i, j) + e(i, j);
    }
    return d;
}

// Parse a covariate-set tag such as "X1,X2" or "W1,X2,W3" into design
// columns (true or observed per token), intercept prepended.
inline DesignMatrix covariate_view(const SampleData& data, const std::string& set) {
    std::vector<std::vector<double>> cols;
    std::size_t pos = 0;
    while (pos < set.size()) {
        std::size_t comma = set.find(',', pos);
        std::string tok = set.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        pos = comma == std::string::npos ? set.size() : comma + 1;
        if (tok.size() != 2 || (tok[0] != 'X' && tok[0] != 'W') || tok[1] < '1' || tok[1] > '9')
            throw InvalidSet("covariate_view: bad token '" + tok + "' in set '" + set + "'");
        std::size_t idx = static_cast<std::size_t>(tok[1] - '1');
        if (idx >= data.p()) throw InvalidSet("covariate_view: index out of range in '" + set + "'");
        const Matrix& src = tok[0] == 'X' ? data.x_true : data.x_obs;
        std::vector<double> col(data.n());
        for (std::size_t i = 0; i < data.n(); ++i) col[i] = src(i, idx);
        cols.push_back(std::move(col));
    }
    if (cols.empty()) throw InvalidSet("covariate_view: empty set");
    return DesignMatrix::from_columns(cols, data.n());
}

// Empirical realization of the total-confounding definition: generate one
// large dataset, regress Y on the treatment indicator alone (with
// intercept), and return the coefficient minus the true effect.
inline double naive_bias_oracle(const ScenarioSpec& scenario, std::size_t n, const SeedSpec& seed) {
    ScenarioSpec s = scenario;
    s.n = n;
    s.master_seed = seed.master_seed;
    SampleData d = generate(s, seed.stream_id);
    DesignMatrix x = DesignMatrix::from_columns({d.a}, n);
    std::vector<double> ones(n, 1.0);
    GlmFit fit = fit_wls(x, d.y, ones);
    return fit.coefficients[1] - s.tau;
}

} // namespace confound
