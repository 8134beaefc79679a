#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "confound/csv.hpp"
#include "confound/errors.hpp"

namespace confound {

// One parsed row of the simulate summary CSV.
struct SummaryRow {
    std::string scenario_id;
    std::string design;
    double rho_x = 0.0;
    double rho_w = 0.0;
    double sigma2_w = 0.0;
    double reliability = 0.0;
    std::size_t replicates = 0;
    std::string estimator;
    std::string covariate_set;
    double bias = 0.0;
    double mse = 0.0;
    double coverage = 0.0;
    double mc_se_bias = 0.0;
};

inline std::vector<SummaryRow> parse_summary_csv(const CsvTable& t) {
    std::vector<std::string> needed = {"scenario_id", "design", "rho_x", "rho_w", "sigma2_w",
                                       "reliability", "estimator", "covariate_set", "bias",
                                       "mse", "coverage", "successes", "mc_se_bias"};
    std::map<std::string, int> col;
    for (const std::string& c : needed) {
        int j = t.column(c);
        if (j < 0) throw SchemaMismatch("summary CSV missing column '" + c + "'");
        col[c] = j;
    }
    std::vector<SummaryRow> rows;
    for (const auto& r : t.rows) {
        SummaryRow s;
        s.scenario_id = r[col["scenario_id"]];
        s.design = r[col["design"]];
        s.rho_x = std::stod(r[col["rho_x"]]);
        s.rho_w = std::stod(r[col["rho_w"]]);
        s.sigma2_w = std::stod(r[col["sigma2_w"]]);
        s.reliability = std::stod(r[col["reliability"]]);
        s.replicates = static_cast<std::size_t>(std::stoul(r[col["successes"]]));
        s.estimator = r[col["estimator"]];
        s.covariate_set = r[col["covariate_set"]];
        s.bias = std::stod(r[col["bias"]]);
        s.mse = std::stod(r[col["mse"]]);
        s.coverage = std::stod(r[col["coverage"]]);
        s.mc_se_bias = std::stod(r[col["mc_se_bias"]]);
        rows.push_back(std::move(s));
    }
    return rows;
}

namespace detail {

inline bool all_true_covariates(const std::string& set) {
    return set.find('W') == std::string::npos;
}

inline double step_slack(const SummaryRow& a, const SummaryRow& b) {
    return 2.0 * std::sqrt(a.mc_se_bias * a.mc_se_bias + b.mc_se_bias * b.mc_se_bias);
}

inline double coverage_se(const SummaryRow& r) {
    double c = std::min(std::max(r.coverage, 1e-3), 1.0 - 1e-3);
    return std::sqrt(c * (1.0 - c) / static_cast<double>(r.replicates));
}

inline const SummaryRow* find_row(const std::vector<SummaryRow>& rows, const std::string& est,
                                  const std::string& set, double rx, double rw, double rel) {
    for (const auto& r : rows)
        if (r.estimator == est && r.covariate_set == set && std::fabs(r.rho_x - rx) < 1e-9 &&
            std::fabs(r.rho_w - rw) < 1e-9 && std::fabs(r.reliability - rel) < 5e-3)
            return &r;
    return nullptr;
}

inline std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(),
                        [](double a, double b) { return std::fabs(a - b) < 1e-9; }),
            v.end());
    return v;
}

} // namespace detail

// Qualitative results the summary data must exhibit, evaluated against an
// emitted summary CSV. Returns human-readable failure messages; empty
// means all applicable checks passed.
inline std::vector<std::string> verify_trends(const std::vector<SummaryRow>& rows) {
    using namespace detail;
    std::vector<std::string> failures;
    auto fail = [&](const std::string& msg) { failures.push_back(msg); };

    // truth-only covariate sets are unbiased everywhere
    for (const auto& r : rows)
        if (all_true_covariates(r.covariate_set) && std::fabs(r.bias) >= 3.0 * r.mc_se_bias)
            fail("unbiasedness: |bias|=" + format_number(std::fabs(r.bias)) + " >= 3*mc_se for " +
                 r.estimator + "(" + r.covariate_set + ") in " + r.scenario_id);

    // IPTW and DR with shared covariates track each other
    for (const auto& r : rows) {
        if (r.estimator != "IPTW_WREG") continue;
        const SummaryRow* dr =
            find_row(rows, "DR_WREG", r.covariate_set, r.rho_x, r.rho_w, r.reliability);
        if (dr && std::fabs(r.bias - dr->bias) >= step_slack(r, *dr) &&
            r.design == dr->design && r.scenario_id == dr->scenario_id)
            fail("iptw-vs-dr: bias gap " + format_number(std::fabs(r.bias - dr->bias)) +
                 " in " + r.scenario_id + " set " + r.covariate_set);
    }

    std::vector<double> rxs, rws, rels;
    bool sim1 = false;
    for (const auto& r : rows) {
        if (r.design == "SIM1") sim1 = true;
        rxs.push_back(r.rho_x);
        rws.push_back(r.rho_w);
        rels.push_back(r.reliability);
    }
    rxs = sorted_unique(rxs);
    rws = sorted_unique(rws);
    rels = sorted_unique(rels);

    if (sim1) {
        // bias of IPTW(W) non-increasing in rho_x at reliability 0.5, rho_w = 0
        std::vector<const SummaryRow*> seq;
        for (double rx : rxs)
            if (const SummaryRow* r = find_row(rows, "IPTW_WREG", "W1,W2", rx, 0.0, 0.5))
                seq.push_back(r);
        for (std::size_t i = 0; i + 1 < seq.size(); ++i)
            if (seq[i + 1]->bias > seq[i]->bias + step_slack(*seq[i], *seq[i + 1]))
                fail("rho_x-trend: IPTW(W) bias increased from rho_x=" + format_number(seq[i]->rho_x) +
                     " to " + format_number(seq[i + 1]->rho_x) + " at reliability 0.5");
        if (seq.size() >= 2 && !(seq.front()->bias - seq.back()->bias > 0.1))
            fail("rho_x-trend: IPTW(W) bias drop across rho_x is " +
                 format_number(seq.front()->bias - seq.back()->bias) + ", expected > 0.1");

        // higher reliability gives smaller bias, per rho_x
        for (double rx : rxs) {
            const SummaryRow* lo = find_row(rows, "IPTW_WREG", "W1,W2", rx, 0.0, 0.5);
            const SummaryRow* hi = find_row(rows, "IPTW_WREG", "W1,W2", rx, 0.0, 0.909);
            if (lo && hi && !(hi->bias < lo->bias))
                fail("rho_x-trend: bias at reliability 0.9 not below reliability 0.5 at rho_x=" +
                     format_number(rx));
        }

        // bias non-decreasing and coverage non-increasing in rho_w at reliability 0.7
        if (rws.size() >= 2)
            for (double rx : rxs) {
                std::vector<const SummaryRow*> wseq;
                for (double rw : rws)
                    if (const SummaryRow* r = find_row(rows, "IPTW_WREG", "W1,W2", rx, rw, 0.699))
                        wseq.push_back(r);
                for (std::size_t i = 0; i + 1 < wseq.size(); ++i) {
                    if (wseq[i + 1]->bias < wseq[i]->bias - step_slack(*wseq[i], *wseq[i + 1]))
                        fail("rho_w-trend: IPTW(W) bias decreased from rho_w=" +
                             format_number(wseq[i]->rho_w) + " to " +
                             format_number(wseq[i + 1]->rho_w) + " at rho_x=" + format_number(rx));
                    double cov_slack =
                        2.0 * std::sqrt(coverage_se(*wseq[i]) * coverage_se(*wseq[i]) +
                                        coverage_se(*wseq[i + 1]) * coverage_se(*wseq[i + 1]));
                    if (wseq[i + 1]->coverage > wseq[i]->coverage + cov_slack)
                        fail("rho_w-trend: IPTW(W) coverage increased from rho_w=" +
                             format_number(wseq[i]->rho_w) + " to " +
                             format_number(wseq[i + 1]->rho_w) + " at rho_x=" + format_number(rx));
                }
            }
    }

    bool sim2_12 = false, sim2_13 = false;
    for (const auto& r : rows) {
        if (r.design == "SIM2_RHO12") sim2_12 = true;
        if (r.design == "SIM2_RHO13") sim2_13 = true;
    }

    if (sim2_12) {
        // partially mismeasured sets with the true X2 beat fully mismeasured
        const SummaryRow* g2 = find_row(rows, "IPTW_WREG", "W1,X2,X3", 0.6, 0.0, 0.5);
        const SummaryRow* g3 = find_row(rows, "IPTW_WREG", "W1,W2,X3", 0.6, 0.0, 0.5);
        if (g2 && g3 && !(std::fabs(g2->bias) < std::fabs(g3->bias)))
            fail("set-grouping: |bias(W1,X2,X3)| not below |bias(W1,W2,X3)| at rho_12=0.6, reliability 0.5");
    }

    if (sim2_13) {
        // correctly measured treatment-only covariate helps when X1 is mismeasured
        for (auto pair : {std::pair<const char*, const char*>{"W1,X2,X3", "W1,X2,W3"},
                          std::pair<const char*, const char*>{"W1,W2,X3", "W1,W2,W3"}}) {
            const SummaryRow* with_x3 = find_row(rows, "IPTW_WREG", pair.first, 0.6, 0.0, 0.5);
            const SummaryRow* with_w3 = find_row(rows, "IPTW_WREG", pair.second, 0.6, 0.0, 0.5);
            if (with_x3 && with_w3 && !(std::fabs(with_x3->bias) < std::fabs(with_w3->bias)))
                fail(std::string("instrument-grouping: |bias(") + pair.first + ")| not below |bias(" + pair.second +
                     ")| at rho_13=0.6, reliability 0.5");
        }
        // the (W1, W2) set never sees X3, so its bias ignores rho_13
        std::vector<const SummaryRow*> seq;
        for (double rx : rxs)
            if (const SummaryRow* r = find_row(rows, "IPTW_WREG", "W1,W2", rx, 0.0, 0.5))
                seq.push_back(r);
        for (std::size_t i = 0; i + 1 < seq.size(); ++i)
            if (std::fabs(seq[i + 1]->bias - seq[i]->bias) > step_slack(*seq[i], *seq[i + 1]))
                fail("instrument-grouping: IPTW(W1,W2) bias moved with rho_13 between " +
                     format_number(seq[i]->rho_x) + " and " + format_number(seq[i + 1]->rho_x));
    }

    return failures;
}

} // namespace confound
