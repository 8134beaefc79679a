#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "confound/glm.hpp"

using namespace confound;

namespace {

// Independent Newton-Raphson logistic oracle written directly from the
// Bernoulli log-likelihood; shares no code with fit_logistic.
std::vector<double> newton_logistic_oracle(const std::vector<double>& x,
                                           const std::vector<double>& a) {
    double b0 = 0.0, b1 = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        double g0 = 0, g1 = 0, h00 = 0, h01 = 0, h11 = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double p = 1.0 / (1.0 + std::exp(-(b0 + b1 * x[i])));
            double r = a[i] - p;
            g0 += r;
            g1 += r * x[i];
            double w = p * (1.0 - p);
            h00 += w;
            h01 += w * x[i];
            h11 += w * x[i] * x[i];
        }
        double det = h00 * h11 - h01 * h01;
        double d0 = (h11 * g0 - h01 * g1) / det;
        double d1 = (h00 * g1 - h01 * g0) / det;
        b0 += d0;
        b1 += d1;
        if (std::fabs(d0) < 1e-12 && std::fabs(d1) < 1e-12) break;
    }
    return {b0, b1};
}

double loglik(const DesignMatrix& x, const std::vector<double>& a,
              const std::vector<double>& coef) {
    double ll = 0.0;
    for (std::size_t i = 0; i < x.n(); ++i) {
        double eta = 0.0;
        for (std::size_t j = 0; j < x.p(); ++j) eta += x.values(i, j) * coef[j];
        double p = 1.0 / (1.0 + std::exp(-eta));
        ll += a[i] * std::log(p) + (1.0 - a[i]) * std::log(1.0 - p);
    }
    return ll;
}

} // namespace

TEST_CASE("intercept-only logistic MLE is logit of the sample mean") {
    std::vector<double> a(16, 0.0);
    for (int i = 0; i < 4; ++i) a[i] = 1.0; // mean 0.25
    DesignMatrix x = DesignMatrix::from_columns({}, a.size());
    GlmFit fit = fit_logistic(x, a);
    CHECK(fit.converged);
    CHECK(fit.coefficients[0] == Catch::Approx(-1.098612).margin(1e-6));
    for (double f : fit.fitted) CHECK(f == Catch::Approx(0.25).margin(1e-8));
}

TEST_CASE("null-model slope is near zero when treatment ignores x") {
    const std::size_t n = 100000;
    std::mt19937 gen(11);
    std::normal_distribution<double> nd;
    std::bernoulli_distribution bd(0.4);
    std::vector<double> xs(n), a(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = nd(gen);
        a[i] = bd(gen) ? 1.0 : 0.0;
    }
    DesignMatrix x = DesignMatrix::from_columns({xs}, n);
    GlmFit fit = fit_logistic(x, a);
    double se = std::sqrt(fit.vcov(1, 1));
    CHECK(std::fabs(fit.coefficients[1]) < 3.0 * se);
}

TEST_CASE("logistic matches independent Newton oracle to 1e-6") {
    std::vector<double> xs = {-1.2, -0.7, -0.3, 0.1, 0.4, 0.9, 1.3, 1.8, -0.5, 0.6, 2.1, -1.9};
    std::vector<double> a = {0, 0, 1, 0, 1, 1, 0, 1, 0, 1, 1, 0};
    DesignMatrix x = DesignMatrix::from_columns({xs}, xs.size());
    GlmFit fit = fit_logistic(x, a);
    std::vector<double> oracle = newton_logistic_oracle(xs, a);
    CHECK(fit.coefficients[0] == Catch::Approx(oracle[0]).margin(1e-6));
    CHECK(fit.coefficients[1] == Catch::Approx(oracle[1]).margin(1e-6));
}

TEST_CASE("score equations hold at convergence") {
    std::mt19937 gen(17);
    std::normal_distribution<double> nd;
    const std::size_t n = 2000;
    std::vector<double> x1(n), x2(n), a(n);
    for (std::size_t i = 0; i < n; ++i) {
        x1[i] = nd(gen);
        x2[i] = nd(gen);
        double p = 1.0 / (1.0 + std::exp(-(0.3 + 0.5 * x1[i] - 0.7 * x2[i])));
        a[i] = std::generate_canonical<double, 53>(gen) < p ? 1.0 : 0.0;
    }
    DesignMatrix x = DesignMatrix::from_columns({x1, x2}, n);
    GlmFit fit = fit_logistic(x, a);
    for (std::size_t j = 0; j < x.p(); ++j) {
        double score = 0.0;
        for (std::size_t i = 0; i < n; ++i) score += x.values(i, j) * (a[i] - fit.fitted[i]);
        CHECK(std::fabs(score) < 1e-6);
    }
}

TEST_CASE("logistic gradient matches central finite differences") {
    std::mt19937 gen(23);
    std::normal_distribution<double> nd;
    const std::size_t n = 300;
    std::vector<double> x1(n), a(n);
    for (std::size_t i = 0; i < n; ++i) {
        x1[i] = nd(gen);
        a[i] = std::generate_canonical<double, 53>(gen) < 0.5 ? 1.0 : 0.0;
    }
    DesignMatrix x = DesignMatrix::from_columns({x1}, n);
    const double h = 1e-5;
    for (int pt = 0; pt < 10; ++pt) {
        std::vector<double> coef = {0.5 * nd(gen), 0.5 * nd(gen)};
        for (std::size_t j = 0; j < 2; ++j) {
            // analytic score used by IRLS: X'(a - expit(X coef))
            double analytic = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double eta = coef[0] + coef[1] * x1[i];
                analytic += x.values(i, j) * (a[i] - expit(eta));
            }
            std::vector<double> up = coef, dn = coef;
            up[j] += h;
            dn[j] -= h;
            double fd = (loglik(x, a, up) - loglik(x, a, dn)) / (2.0 * h);
            CHECK(std::fabs(fd - analytic) / std::max(1.0, std::fabs(analytic)) < 1e-4);
        }
    }
}

TEST_CASE("separated data raises Separation") {
    std::vector<double> xs = {-2, -1.5, -1, 1, 1.5, 2};
    std::vector<double> a = {0, 0, 0, 1, 1, 1};
    DesignMatrix x = DesignMatrix::from_columns({xs}, xs.size());
    CHECK_THROWS_AS(fit_logistic(x, a), Separation);
}

TEST_CASE("single treatment class raises Separation") {
    std::vector<double> xs = {0.1, 0.2, 0.3, 0.4};
    std::vector<double> a = {1, 1, 1, 1};
    DesignMatrix x = DesignMatrix::from_columns({xs}, 4);
    CHECK_THROWS_AS(fit_logistic(x, a), Separation);
}

TEST_CASE("duplicated column raises RankDeficient") {
    std::vector<double> xs = {0.3, -0.2, 1.1, 0.9, -0.8, 0.5, -1.2, 0.1};
    std::vector<double> a = {0, 1, 1, 0, 0, 1, 0, 1};
    DesignMatrix x = DesignMatrix::from_columns({xs, xs}, xs.size());
    CHECK_THROWS_AS(fit_logistic(x, a), RankDeficient);
}

TEST_CASE("WLS exact fit has zero residuals and zero sandwich SE") {
    std::vector<double> xs = {1, 2, 3, 4, 5};
    std::vector<double> y = {2, 4, 6, 8, 10};
    std::vector<double> w(5, 1.0);
    DesignMatrix x = DesignMatrix::from_columns({xs}, 5);
    GlmFit fit = fit_wls(x, y, w);
    CHECK(fit.coefficients[1] == Catch::Approx(2.0).margin(1e-12));
    CHECK(fit.coefficients[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(std::sqrt(std::fabs(fit.vcov(1, 1))) < 1e-10);
}

TEST_CASE("equal weights reproduce OLS closed form on a 5-point fixture") {
    std::vector<double> xs = {0.0, 1.0, 2.0, 3.0, 4.0};
    std::vector<double> y = {1.1, 1.9, 3.2, 3.8, 5.3};
    std::vector<double> w(5, 1.0);
    // closed-form normal equations
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 5;
    for (int i = 0; i < 5; ++i) {
        sx += xs[i];
        sy += y[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * y[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double intercept = (sy - slope * sx) / n;
    DesignMatrix x = DesignMatrix::from_columns({xs}, 5);
    GlmFit fit = fit_wls(x, y, w);
    CHECK(fit.coefficients[0] == Catch::Approx(intercept).margin(1e-10));
    CHECK(fit.coefficients[1] == Catch::Approx(slope).margin(1e-10));
}

TEST_CASE("splitting rows with half weight leaves coefficients unchanged") {
    std::vector<double> xs = {0.2, 1.4, -0.8, 2.2};
    std::vector<double> y = {0.5, 2.0, -1.1, 3.3};
    std::vector<double> w(4, 1.0);
    DesignMatrix x = DesignMatrix::from_columns({xs}, 4);
    GlmFit base = fit_wls(x, y, w);

    std::vector<double> xs2, y2, w2;
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 2; ++k) {
            xs2.push_back(xs[i]);
            y2.push_back(y[i]);
            w2.push_back(0.5);
        }
    DesignMatrix xdup = DesignMatrix::from_columns({xs2}, 8);
    GlmFit dup = fit_wls(xdup, y2, w2);
    CHECK(dup.coefficients[0] == Catch::Approx(base.coefficients[0]).margin(1e-12));
    CHECK(dup.coefficients[1] == Catch::Approx(base.coefficients[1]).margin(1e-12));
}

TEST_CASE("rescaling weights changes vcov but not coefficients") {
    std::mt19937 gen(31);
    std::normal_distribution<double> nd;
    const std::size_t n = 50;
    std::vector<double> xs(n), y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = nd(gen);
        y[i] = 1.0 + 2.0 * xs[i] + 0.3 * nd(gen);
        w[i] = 0.5 + std::generate_canonical<double, 53>(gen);
    }
    DesignMatrix x = DesignMatrix::from_columns({xs}, n);
    GlmFit base = fit_wls(x, y, w);
    std::vector<double> w2 = w;
    for (double& v : w2) v *= 7.3;
    GlmFit scaled = fit_wls(x, y, w2);
    CHECK(scaled.coefficients[0] == Catch::Approx(base.coefficients[0]).margin(1e-10));
    CHECK(scaled.coefficients[1] == Catch::Approx(base.coefficients[1]).margin(1e-10));
}

TEST_CASE("sandwich SE tracks bootstrap variance of the weighted slope", "[slow]") {
    const std::size_t n = 5000;
    std::mt19937 gen(47);
    std::normal_distribution<double> nd;
    std::vector<double> xs(n), y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = nd(gen);
        y[i] = 0.5 + 1.5 * xs[i] + nd(gen) * (1.0 + 0.5 * std::fabs(xs[i]));
        w[i] = 0.2 + 2.0 * std::generate_canonical<double, 53>(gen);
    }
    DesignMatrix x = DesignMatrix::from_columns({xs}, n);
    GlmFit fit = fit_wls(x, y, w);
    double sandwich_se = std::sqrt(fit.vcov(1, 1));

    const int B = 400;
    std::vector<double> slopes(B);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (int b = 0; b < B; ++b) {
        std::vector<double> bx(n), by(n), bw(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t k = pick(gen);
            bx[i] = xs[k];
            by[i] = y[k];
            bw[i] = w[k];
        }
        slopes[b] = fit_wls(DesignMatrix::from_columns({bx}, n), by, bw).coefficients[1];
    }
    double mean = 0;
    for (double s : slopes) mean += s;
    mean /= B;
    double var = 0;
    for (double s : slopes) var += (s - mean) * (s - mean);
    double boot_se = std::sqrt(var / (B - 1));
    CHECK(std::fabs(sandwich_se - boot_se) / boot_se < 0.15);
}

TEST_CASE("degenerate WLS inputs fail loudly") {
    std::vector<double> xs = {1, 2, 3, 4};
    std::vector<double> y = {1, 2, 3, 4};
    DesignMatrix x = DesignMatrix::from_columns({xs}, 4);
    CHECK_THROWS_AS(fit_wls(x, y, {1, 1, -1, 1}), Error);
    std::vector<double> constant(4, 2.0);
    DesignMatrix xc = DesignMatrix::from_columns({constant}, 4);
    CHECK_THROWS_AS(fit_wls(xc, y, std::vector<double>(4, 1.0)), RankDeficient);
}
