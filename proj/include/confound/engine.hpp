#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "confound/errors.hpp"
#include "confound/estimators.hpp"
#include "confound/simgen.hpp"

namespace confound {

// Monte Carlo metrics for one (scenario, estimator, covariate set) cell.
struct CellSummary {
    std::string scenario_id;
    EstimatorTag estimator = EstimatorTag::IPTW_WREG;
    std::string covariate_set;
    double bias = 0.0;       // mean(tau_hat) - tau
    double mse = 0.0;        // mean((tau_hat - tau)^2)
    double coverage = 0.0;   // fraction of CIs containing tau
    std::size_t replicates = 0;
    std::size_t failures = 0;
    double mc_se_bias = 0.0;
    bool flagged = false;    // > 1% replicate failures
};

struct ReplicateResult {
    std::uint64_t replicate = 0;
    std::vector<AteEstimate> estimates;
    std::vector<std::string> failures; // "covariate_set: reason"
};

// One replicate of one scenario: generate data, then for each covariate
// set fit the propensity model, weight, and compute the weighted-regression
// IPTW and DR estimates. The DR outcome model uses the same covariate set
// as the propensity model. Failures are tagged per set, never dropped.
inline ReplicateResult run_replicate(const ScenarioSpec& spec, std::uint64_t r) {
    ReplicateResult out;
    out.replicate = r;
    SampleData data = generate(spec, r);
    for (const std::string& set : spec.covariate_sets) {
        try {
            DesignMatrix x = covariate_view(data, set);
            GlmFit ps = fit_logistic(x, data.a);
            PsWeights w = compute_weights(ps, data.a);

            AteEstimate iptw = ate_iptw_wreg(data.a, data.y, w);
            iptw.covariate_set = set;
            out.estimates.push_back(iptw);

            std::vector<std::vector<double>> outcome_cols;
            for (std::size_t j = 1; j < x.p(); ++j) {
                std::vector<double> col(data.n());
                for (std::size_t i = 0; i < data.n(); ++i) col[i] = x.values(i, j);
                outcome_cols.push_back(std::move(col));
            }
            AteEstimate dr = ate_dr_wreg(data.a, data.y, w, outcome_cols);
            dr.covariate_set = set;
            out.estimates.push_back(dr);
        } catch (const Error& e) {
            out.failures.push_back(set + ": " + e.what());
        }
    }
    return out;
}

// Fold one cell's per-replicate estimates into bias/MSE/coverage.
inline CellSummary summarize(const std::vector<AteEstimate>& estimates, double tau_true,
                             std::size_t failures = 0) {
    if (estimates.size() < 2) throw TooFewReplicates("summarize: need >= 2 successful replicates");
    CellSummary s;
    s.replicates = estimates.size();
    s.failures = failures;
    double sum = 0.0, sumsq = 0.0;
    std::size_t covered = 0;
    for (const AteEstimate& e : estimates) {
        double err = e.estimate - tau_true;
        sum += err;
        sumsq += err * err;
        if (e.ci_low <= tau_true && tau_true <= e.ci_high) ++covered;
    }
    const double r = static_cast<double>(s.replicates);
    s.bias = sum / r;
    s.mse = sumsq / r;
    s.coverage = static_cast<double>(covered) / r;
    double var = (sumsq - sum * sum / r) / (r - 1.0);
    s.mc_se_bias = std::sqrt(std::max(0.0, var) / r);
    s.flagged = failures * 100 > (s.replicates + failures);
    return s;
}

inline std::size_t default_workers() {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Run all replicates of one scenario, parallel over replicates. Replicate
// r always uses stream_id r, so results do not depend on scheduling.
inline std::vector<ReplicateResult> run_scenario(const ScenarioSpec& spec, std::size_t workers) {
    spec.validate();
    std::vector<ReplicateResult> results(spec.replicates);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t r = next.fetch_add(1);
            if (r >= spec.replicates) return;
            try {
                results[r] = run_replicate(spec, r);
            } catch (const Error& e) {
                results[r].replicate = r;
                results[r].failures.push_back(std::string("replicate: ") + e.what());
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return results;
}

// Execute a grid of scenario cells; output order equals input order and is
// independent of worker count.
inline std::vector<CellSummary> run_grid(const std::vector<ScenarioSpec>& grid,
                                         std::size_t workers = 0) {
    if (workers == 0) workers = default_workers();
    std::vector<CellSummary> out;
    for (const ScenarioSpec& spec : grid) {
        std::vector<ReplicateResult> reps = run_scenario(spec, workers);
        // group estimates by (covariate set, estimator), preserving the
        // declared set order
        for (const std::string& set : spec.covariate_sets) {
            for (EstimatorTag tag : {EstimatorTag::IPTW_WREG, EstimatorTag::DR_WREG}) {
                std::vector<AteEstimate> cell;
                std::size_t failures = 0;
                for (const ReplicateResult& r : reps) {
                    for (const AteEstimate& e : r.estimates)
                        if (e.covariate_set == set && e.estimator == tag) cell.push_back(e);
                    for (const std::string& f : r.failures)
                        if (f.rfind(set + ":", 0) == 0 || f.rfind("replicate:", 0) == 0) ++failures;
                }
                CellSummary s = summarize(cell, spec.tau, failures);
                s.scenario_id = spec.id;
                s.estimator = tag;
                s.covariate_set = set;
                out.push_back(s);
            }
        }
    }
    return out;
}

} // namespace confound
