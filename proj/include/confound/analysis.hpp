#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "confound/csv.hpp"
#include "confound/errors.hpp"
#include "confound/estimators.hpp"
#include "confound/glm.hpp"

namespace confound {

// Which CSV column carries which measurement of which variable.
struct MeasurementColumn {
    std::string variable;   // e.g. "energy"
    std::string instrument; // e.g. "biomarker", "24hr", "ffq"
    std::string column;     // CSV column name
    bool is_gold = false;
    bool log_transform = false;
};

struct FrameSchema {
    std::string outcome;
    std::string treatment;
    std::string subgroup; // empty = no subgrouping
    std::vector<MeasurementColumn> measurements;
};

// Typed study dataset keyed by (variable, instrument).
struct StudyFrame {
    std::vector<double> outcome;
    std::vector<double> treatment;
    std::vector<std::string> subgroup;
    std::map<std::string, std::map<std::string, std::vector<double>>> values; // variable -> instrument -> column
    std::map<std::string, std::string> gold_instrument;                       // variable -> instrument
    std::vector<std::string> variables;   // declared order
    std::vector<std::string> instruments; // declared order
    std::size_t dropped = 0;

    std::size_t n() const { return outcome.size(); }

    const std::vector<double>& column(const std::string& variable,
                                      const std::string& instrument) const {
        auto v = values.find(variable);
        if (v == values.end()) throw SchemaMismatch("unknown variable " + variable);
        auto i = v->second.find(instrument);
        if (i == v->second.end())
            throw SchemaMismatch("no instrument " + instrument + " for variable " + variable);
        return i->second;
    }

    const std::vector<double>& gold_column(const std::string& variable) const {
        auto g = gold_instrument.find(variable);
        if (g == gold_instrument.end())
            throw SchemaMismatch("no gold instrument for variable " + variable);
        return column(variable, g->second);
    }
};

namespace detail {

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size() && std::isfinite(out);
    } catch (...) {
        return false;
    }
}

inline double sample_variance(const std::vector<double>& x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(x.size() - 1);
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0.0, my = 0.0;
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx < 1e-12 || syy < 1e-12) throw ZeroVariance("pearson: a series has zero variance");
    return sxy / std::sqrt(sxx * syy);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

} // namespace detail

// Read a CSV into a typed frame. Rows missing any required field are
// dropped and counted; log transforms are applied where flagged and
// require strictly positive values.
inline StudyFrame ingest_csv(const std::string& path, const FrameSchema& schema) {
    CsvTable t = read_csv(path);

    auto need = [&](const std::string& name) {
        int j = t.column(name);
        if (j < 0) throw SchemaMismatch("ingest_csv: missing column '" + name + "'");
        return j;
    };
    int outcome_col = need(schema.outcome);
    int treatment_col = need(schema.treatment);
    int subgroup_col = schema.subgroup.empty() ? -1 : need(schema.subgroup);

    StudyFrame f;
    std::set<std::string> seen_vars, seen_instr;
    std::vector<int> meas_cols;
    for (const MeasurementColumn& m : schema.measurements) {
        meas_cols.push_back(need(m.column));
        if (!seen_vars.count(m.variable)) {
            f.variables.push_back(m.variable);
            seen_vars.insert(m.variable);
        }
        if (!seen_instr.count(m.instrument)) {
            f.instruments.push_back(m.instrument);
            seen_instr.insert(m.instrument);
        }
        if (m.is_gold) {
            if (f.gold_instrument.count(m.variable))
                throw SchemaMismatch("ingest_csv: multiple gold instruments for " + m.variable);
            f.gold_instrument[m.variable] = m.instrument;
        }
    }

    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        double y, a;
        bool ok = detail::parse_double(row[outcome_col], y) &&
                  detail::parse_double(row[treatment_col], a) && (a == 0.0 || a == 1.0);
        std::vector<double> vals(schema.measurements.size());
        for (std::size_t k = 0; ok && k < schema.measurements.size(); ++k) {
            ok = detail::parse_double(row[meas_cols[k]], vals[k]);
            if (ok && schema.measurements[k].log_transform) {
                if (vals[k] <= 0.0)
                    throw NonPositiveLog("ingest_csv: non-positive value in column '" +
                                         schema.measurements[k].column + "' at data row " +
                                         std::to_string(r + 1));
                vals[k] = std::log(vals[k]);
            }
        }
        if (!ok) {
            ++f.dropped;
            continue;
        }
        f.outcome.push_back(y);
        f.treatment.push_back(a);
        f.subgroup.push_back(subgroup_col < 0 ? "" : row[subgroup_col]);
        for (std::size_t k = 0; k < schema.measurements.size(); ++k)
            f.values[schema.measurements[k].variable][schema.measurements[k].instrument]
                .push_back(vals[k]);
    }
    return f;
}

// Var(gold)/Var(instrument) on the analysis scale.
inline double instrument_reliability(const StudyFrame& frame, const std::string& variable,
                                     const std::string& instrument) {
    const std::vector<double>& gold = frame.gold_column(variable);
    const std::vector<double>& w = frame.column(variable, instrument);
    double vg = detail::sample_variance(gold);
    double vw = detail::sample_variance(w);
    if (vw < 1e-12) throw ZeroVariance("instrument_reliability: instrument has zero variance");
    return vg / vw;
}

// Correlation of the two variables' measurement errors e = W - X under one
// instrument.
inline double error_correlation(const StudyFrame& frame, const std::string& variable1,
                                const std::string& variable2, const std::string& instrument) {
    const std::vector<double>& g1 = frame.gold_column(variable1);
    const std::vector<double>& g2 = frame.gold_column(variable2);
    const std::vector<double>& w1 = frame.column(variable1, instrument);
    const std::vector<double>& w2 = frame.column(variable2, instrument);
    std::vector<double> e1(g1.size()), e2(g2.size());
    for (std::size_t i = 0; i < g1.size(); ++i) {
        e1[i] = w1[i] - g1[i];
        e2[i] = w2[i] - g2[i];
    }
    return detail::pearson(e1, e2);
}

struct AnalysisRow {
    std::string subgroup;
    std::string instrument;
    EstimatorTag estimator = EstimatorTag::IPTW_WREG;
    double estimate = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double p_value = 1.0;
    std::map<std::string, double> reliability; // per variable (gold -> 1)
    std::map<std::string, double> smd_gold;    // post-weighting SMD of gold columns
};

// One subgroup x instrument analysis: propensity model on the chosen
// instrument's measurements, IPTW and DR estimates, and post-weighting
// SMDs of the gold columns regardless of which instrument was used.
inline std::vector<AnalysisRow> analyze_subgroup(const StudyFrame& frame,
                                                 const std::string& subgroup_value,
                                                 const std::string& instrument) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < frame.n(); ++i)
        if (frame.subgroup[i] == subgroup_value) idx.push_back(i);
    if (idx.empty()) throw EmptyGroup("analyze_subgroup: empty subgroup '" + subgroup_value + "'");

    auto take = [&](const std::vector<double>& col) {
        std::vector<double> out(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) out[k] = col[idx[k]];
        return out;
    };
    std::vector<double> a = take(frame.treatment);
    std::vector<double> y = take(frame.outcome);
    bool has0 = false, has1 = false;
    for (double v : a) (v == 1.0 ? has1 : has0) = true;
    if (!has0 || !has1) throw EmptyGroup("analyze_subgroup: subgroup lacks a treatment arm");

    std::vector<std::vector<double>> cov_cols;
    for (const std::string& var : frame.variables)
        cov_cols.push_back(take(frame.column(var, instrument)));
    DesignMatrix x = DesignMatrix::from_columns(cov_cols, a.size());
    GlmFit ps = fit_logistic(x, a);
    PsWeights w = compute_weights(ps, a);

    // reliability and balance are computed within the subgroup
    std::map<std::string, double> rel, smd;
    for (const std::string& var : frame.variables) {
        std::vector<double> gold = take(frame.gold_column(var));
        std::vector<double> inst = take(frame.column(var, instrument));
        double vg = detail::sample_variance(gold);
        double vw = detail::sample_variance(inst);
        if (vw < 1e-12) throw ZeroVariance("analyze_subgroup: zero-variance instrument column");
        rel[var] = vg / vw;
        smd[var] = weighted_smd(gold, a, w.weights);
    }

    std::vector<AnalysisRow> rows;
    AteEstimate iptw = ate_iptw_wreg(a, y, w);
    AteEstimate dr = ate_dr_wreg(a, y, w, cov_cols);
    for (const AteEstimate& e : {iptw, dr}) {
        AnalysisRow row;
        row.subgroup = subgroup_value;
        row.instrument = instrument;
        row.estimator = e.estimator;
        row.estimate = e.estimate;
        row.se = e.se;
        row.ci_low = e.ci_low;
        row.ci_high = e.ci_high;
        double z = e.se > 0.0 ? std::fabs(e.estimate) / e.se : INFINITY;
        row.p_value = 2.0 * (1.0 - detail::normal_cdf(z));
        row.reliability = rel;
        row.smd_gold = smd;
        rows.push_back(std::move(row));
    }
    return rows;
}

// Full report: every subgroup level crossed with every instrument.
inline std::vector<AnalysisRow> analyze_all(const StudyFrame& frame) {
    std::vector<std::string> groups;
    for (const std::string& g : frame.subgroup)
        if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
    std::sort(groups.begin(), groups.end());
    std::vector<AnalysisRow> rows;
    for (const std::string& g : groups)
        for (const std::string& inst : frame.instruments)
            for (AnalysisRow& r : analyze_subgroup(frame, g, inst)) rows.push_back(std::move(r));
    return rows;
}

// Serialize rows with one reliability_<var> and smd_gold_<var> column per
// variable, in the frame's declared variable order.
inline CsvTable report_to_csv(const std::vector<AnalysisRow>& rows,
                              const std::vector<std::string>& variables) {
    CsvTable t;
    t.header = {"subgroup", "instrument", "estimator", "estimate", "ci_low", "ci_high", "se", "p_value"};
    for (const std::string& v : variables) t.header.push_back("reliability_" + v);
    for (const std::string& v : variables) t.header.push_back("smd_gold_" + v);
    for (const AnalysisRow& r : rows) {
        std::vector<std::string> row = {r.subgroup,
                                        r.instrument,
                                        to_string(r.estimator),
                                        format_number(r.estimate),
                                        format_number(r.ci_low),
                                        format_number(r.ci_high),
                                        format_number(r.se),
                                        format_number(r.p_value)};
        for (const std::string& v : variables) row.push_back(format_number(r.reliability.at(v)));
        for (const std::string& v : variables) row.push_back(format_number(r.smd_gold.at(v)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace confound
