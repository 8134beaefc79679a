#pragma once

#include <map>
#include <string>
#include <vector>

#include "confound/calibration.hpp"
#include "confound/csv.hpp"
#include "confound/engine.hpp"
#include "confound/errors.hpp"
#include "confound/simgen.hpp"

namespace confound {

// Declarative description of a simulation grid, one scenario cell per
// (rho_x, rho_w, sigma2_w) combination. Treatment/outcome coefficients are
// calibrated so every cell has the same total confounding.
struct GridConfig {
    Design design = Design::SIM1;
    std::vector<double> rho_x = {0.0, 0.3, 0.6, 0.9};
    std::vector<double> rho_w = {0.0};
    std::vector<double> sigma2_w = {1.0, 0.43, 0.1};
    std::size_t n = 1000;
    std::size_t replicates = 200;
    std::vector<std::string> covariate_sets; // empty = design default
    std::uint64_t seed = 20240501;
    double tau = 2.0;
    double target_tc = 1.0;
};

inline std::vector<std::string> default_covariate_sets(Design design) {
    if (design == Design::SIM1 || design == Design::SIGNFLIP_A1) return {"X1,X2", "W1,W2"};
    return {"X1,X2",    "X1,X2,X3", "X1,W2,X3", "X1,X2,W3", "X1,W2,W3",
            "W1,X2,X3", "W1,X2,W3", "W1,W2,X3", "W1,W2,W3", "W1,W2"};
}

namespace detail {

inline std::string cell_id(const GridConfig& cfg, double rx, double rw, double s2) {
    return std::string(to_string(cfg.design)) + "_rx" + format_number(rx) + "_rw" +
           format_number(rw) + "_s" + format_number(s2);
}

} // namespace detail

// Expand a grid config into calibrated scenario cells. All cells share the
// grid's master seed, so cells differing only in rho_w or sigma2_w see the
// same covariate, treatment, and outcome draws (common random numbers).
inline std::vector<ScenarioSpec> build_grid(const GridConfig& cfg) {
    std::vector<std::string> sets =
        cfg.covariate_sets.empty() ? default_covariate_sets(cfg.design) : cfg.covariate_sets;
    if (cfg.rho_x.empty() || cfg.rho_w.empty() || cfg.sigma2_w.empty())
        throw ConfigError("build_grid: empty rho_x, rho_w, or sigma2_w grid");

    // solve the calibrated coefficients once per rho_x
    std::map<double, std::pair<double, double>> coef; // rho_x -> (alpha slope, beta slope)
    double sim2_alpha_fixed = 0.0;
    if (cfg.design == Design::SIM2_RHO12)
        sim2_alpha_fixed = solve_alpha(cfg.target_tc, 0.0, {2.0, 2.0, 0.0}, AlphaStructure::SIM2_RHO13);
    for (double rx : cfg.rho_x) {
        if (coef.count(rx)) continue;
        switch (cfg.design) {
            case Design::SIM1:
                coef[rx] = {solve_alpha(cfg.target_tc, rx, {1.0, 1.0}, AlphaStructure::SIM1), 1.0};
                break;
            case Design::SIGNFLIP_A1:
                // mirror of the sim-1 scenario at -rho_x
                coef[rx] = {solve_alpha(cfg.target_tc, -rx, {1.0, 1.0}, AlphaStructure::SIM1), 1.0};
                break;
            case Design::SIM2_RHO13:
                coef[rx] = {solve_alpha(cfg.target_tc, rx, {2.0, 2.0, 0.0}, AlphaStructure::SIM2_RHO13), 2.0};
                break;
            case Design::SIM2_RHO12:
                coef[rx] = {sim2_alpha_fixed, solve_beta(cfg.target_tc, rx, sim2_alpha_fixed)};
                break;
        }
    }

    std::vector<ScenarioSpec> grid;
    for (double rx : cfg.rho_x)
        for (double s2 : cfg.sigma2_w)
            for (double rw : cfg.rho_w) {
                auto [a, b] = coef.at(rx);
                ScenarioSpec s;
                switch (cfg.design) {
                    case Design::SIM1: s = make_sim1_scenario(rx, rw, s2, a, cfg.tau); break;
                    case Design::SIGNFLIP_A1: s = make_signflip_scenario(rx, rw, s2, a, cfg.tau); break;
                    default: s = make_sim2_scenario(cfg.design, rx, rw, s2, a, b, cfg.tau); break;
                }
                s.id = detail::cell_id(cfg, rx, rw, s2);
                s.n = cfg.n;
                s.replicates = cfg.replicates;
                s.covariate_sets = sets;
                s.master_seed = cfg.seed;
                grid.push_back(std::move(s));
            }
    return grid;
}

// Flatten grid summaries into the simulate CSV schema. Row order follows
// the grid: cell, then covariate set, then estimator.
inline CsvTable summaries_to_csv(const std::vector<ScenarioSpec>& grid,
                                 const std::vector<CellSummary>& summaries) {
    CsvTable t;
    t.header = {"scenario_id", "design", "rho_x", "rho_w", "sigma2_w", "reliability",
                "n", "replicates_requested", "estimator", "covariate_set", "bias", "mse",
                "coverage", "successes", "failures", "mc_se_bias", "flagged"};
    std::size_t k = 0;
    for (const ScenarioSpec& spec : grid)
        for (std::size_t si = 0; si < spec.covariate_sets.size(); ++si)
            for (int e = 0; e < 2; ++e) {
                const CellSummary& s = summaries.at(k++);
                t.rows.push_back({s.scenario_id,
                                  to_string(spec.design),
                                  format_number(spec.rho_x),
                                  format_number(spec.rho_w),
                                  format_number(spec.sigma2_w[0]),
                                  format_number(reliability(spec.sigma2_w[0])),
                                  std::to_string(spec.n),
                                  std::to_string(spec.replicates),
                                  to_string(s.estimator),
                                  s.covariate_set,
                                  format_number(s.bias),
                                  format_number(s.mse),
                                  format_number(s.coverage),
                                  std::to_string(s.replicates),
                                  std::to_string(s.failures),
                                  format_number(s.mc_se_bias),
                                  s.flagged ? "1" : "0"});
            }
    return t;
}

} // namespace confound
