// confound_forge: calibrate simulation coefficient tables, run Monte Carlo
// grids of propensity-score estimators under covariate measurement error,
// analyze real datasets with gold-standard and error-prone measurements,
// and render summary charts.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "confound/analysis.hpp"
#include "confound/calibration.hpp"
#include "confound/csv.hpp"
#include "confound/engine.hpp"
#include "confound/grids.hpp"
#include "confound/simgen.hpp"
#include "confound/svg.hpp"
#include "confound/trends.hpp"

using json = nlohmann::json;
using namespace confound;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
}

Design parse_design(const std::string& s) {
    if (s == "sim1") return Design::SIM1;
    if (s == "sim2_rho12") return Design::SIM2_RHO12;
    if (s == "sim2_rho13") return Design::SIM2_RHO13;
    if (s == "signflip") return Design::SIGNFLIP_A1;
    throw ConfigError("unknown design '" + s + "' (expected sim1, sim2_rho12, sim2_rho13, signflip)");
}

std::size_t workers_from_env() {
    if (const char* env = std::getenv("CONFOUND_FORGE_WORKERS")) {
        long v = std::atol(env);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    return default_workers();
}

void require_writable_parent(const std::string& path) {
    std::filesystem::path p(path);
    auto dir = p.parent_path();
    if (!dir.empty() && !std::filesystem::exists(dir))
        throw ConfigError("output directory does not exist: " + dir.string());
}

// ---- calibrate ----

int cmd_calibrate(const json& cfg, const std::string& out_flag) {
    reject_unknown_keys(cfg, {"design", "rho", "target_tc", "output"}, "calibrate config");
    std::string design_str = cfg.value("design", "sim1");
    Design design = parse_design(design_str);
    std::vector<double> rho = cfg.value("rho", std::vector<double>{0.0, 0.3, 0.6, 0.9});
    double target = cfg.value("target_tc", 1.0);
    std::string output = !out_flag.empty() ? out_flag : cfg.value("output", std::string());
    if (output.empty()) throw ConfigError("calibrate: no output path given");
    if (rho.empty()) throw ConfigError("calibrate: empty rho grid");
    require_writable_parent(output);

    CsvTable t;
    t.header = {"design", "rho", "solved_coefficient", "total_confounding_achieved"};
    double alpha_fixed = 0.0;
    if (design == Design::SIM2_RHO12)
        alpha_fixed = solve_alpha(target, 0.0, {2.0, 2.0, 0.0}, AlphaStructure::SIM2_RHO13);
    for (double r : rho) {
        double coef = 0.0, achieved = 0.0;
        switch (design) {
            case Design::SIM1: {
                coef = solve_alpha(target, r, {1.0, 1.0}, AlphaStructure::SIM1);
                achieved = total_confounding(make_structured_model(AlphaStructure::SIM1, coef, r),
                                             {1.0, 1.0})
                               .total_confounding;
                break;
            }
            case Design::SIGNFLIP_A1: {
                coef = solve_alpha(target, -r, {1.0, 1.0}, AlphaStructure::SIM1);
                achieved = total_confounding(make_structured_model(AlphaStructure::SIM1, coef, -r),
                                             {1.0, 1.0})
                               .total_confounding;
                break;
            }
            case Design::SIM2_RHO13: {
                coef = solve_alpha(target, r, {2.0, 2.0, 0.0}, AlphaStructure::SIM2_RHO13);
                achieved =
                    total_confounding(make_structured_model(AlphaStructure::SIM2_RHO13, coef, r),
                                      {2.0, 2.0, 0.0})
                        .total_confounding;
                break;
            }
            case Design::SIM2_RHO12: {
                coef = solve_beta(target, r, alpha_fixed);
                Matrix s = Matrix::identity(3);
                s(0, 1) = s(1, 0) = r;
                TreatmentModel m;
                m.cov = CovarianceSpec::from_matrix(std::move(s));
                m.alphas = {alpha_fixed, 0.0, alpha_fixed};
                achieved = total_confounding(m, {coef, coef, 0.0}).total_confounding;
                break;
            }
        }
        t.rows.push_back({design_str, format_number(r), format_number(coef), format_number(achieved)});
    }
    write_csv(output, t);
    std::cout << "wrote " << t.rows.size() << " calibration rows to " << output << "\n";
    return 0;
}

// ---- simulate ----

GridConfig grid_from_json(const json& cfg) {
    reject_unknown_keys(cfg,
                        {"design", "rho_x", "rho_w", "sigma2_w", "n", "replicates",
                         "covariate_sets", "seed", "tau", "target_tc", "output", "svg_prefix"},
                        "simulate config");
    GridConfig g;
    g.design = parse_design(cfg.value("design", "sim1"));
    if (cfg.contains("rho_x")) g.rho_x = cfg["rho_x"].get<std::vector<double>>();
    if (cfg.contains("rho_w")) g.rho_w = cfg["rho_w"].get<std::vector<double>>();
    if (cfg.contains("sigma2_w")) g.sigma2_w = cfg["sigma2_w"].get<std::vector<double>>();
    g.n = cfg.value("n", std::size_t{1000});
    g.replicates = cfg.value("replicates", std::size_t{200});
    if (cfg.contains("covariate_sets"))
        g.covariate_sets = cfg["covariate_sets"].get<std::vector<std::string>>();
    g.seed = cfg.value("seed", std::uint64_t{20240501});
    g.tau = cfg.value("tau", 2.0);
    g.target_tc = cfg.value("target_tc", 1.0);
    return g;
}

void write_summary_charts(const std::string& prefix, const std::vector<SummaryRow>& rows) {
    // bias/mse/coverage vs rho_x, one chart per metric at rho_w = 0,
    // faceted by reliability via one series per (set, reliability)
    struct Metric {
        const char* name;
        double SummaryRow::* field;
    };
    for (Metric m : {Metric{"bias", &SummaryRow::bias}, Metric{"mse", &SummaryRow::mse},
                     Metric{"coverage", &SummaryRow::coverage}}) {
        std::map<std::string, SvgSeries> by_label;
        for (const auto& r : rows) {
            if (std::fabs(r.rho_w) > 1e-9 || r.estimator != "IPTW_WREG") continue;
            std::string label = r.covariate_set + " rel=" + format_number(r.reliability);
            SvgSeries& s = by_label[label];
            s.label = label;
            s.x.push_back(r.rho_x);
            s.y.push_back(r.*(m.field));
        }
        std::vector<SvgSeries> series;
        for (auto& [label, s] : by_label) series.push_back(std::move(s));
        std::string svg = render_line_chart(std::string("IPTW ") + m.name + " vs rho_x", "rho_x",
                                            m.name, series);
        write_text_file(prefix + "_" + m.name + ".svg", svg);
    }
}

int cmd_simulate(const json& cfg, const std::string& out_flag, std::size_t workers) {
    GridConfig g = grid_from_json(cfg);
    std::string output = !out_flag.empty() ? out_flag : cfg.value("output", std::string());
    if (output.empty()) throw ConfigError("simulate: no output path given");
    require_writable_parent(output);

    std::vector<ScenarioSpec> grid = build_grid(g);
    std::vector<CellSummary> summaries = run_grid(grid, workers);
    CsvTable t = summaries_to_csv(grid, summaries);
    write_csv(output, t);
    std::cout << "wrote " << t.rows.size() << " summary rows to " << output << "\n";

    std::string svg_prefix = cfg.value("svg_prefix", std::string());
    if (!svg_prefix.empty()) write_summary_charts(svg_prefix, parse_summary_csv(t));

    for (const CellSummary& s : summaries)
        if (s.flagged)
            std::cerr << "warning: cell " << s.scenario_id << " set " << s.covariate_set << " had "
                      << s.failures << " replicate failures\n";
    return 0;
}

// ---- analyze ----

FrameSchema schema_from_json(const json& js) {
    reject_unknown_keys(js, {"outcome", "treatment", "subgroup", "measurements"}, "analyze schema");
    FrameSchema schema;
    for (const char* key : {"outcome", "treatment"})
        if (!js.contains(key)) throw ConfigError(std::string("analyze schema: missing key '") + key + "'");
    schema.outcome = js["outcome"].get<std::string>();
    schema.treatment = js["treatment"].get<std::string>();
    schema.subgroup = js.value("subgroup", std::string());
    if (!js.contains("measurements")) throw ConfigError("analyze schema: missing key 'measurements'");
    for (const json& m : js["measurements"]) {
        reject_unknown_keys(m, {"variable", "instrument", "column", "gold", "log"},
                            "analyze schema measurement");
        for (const char* key : {"variable", "instrument", "column"})
            if (!m.contains(key))
                throw ConfigError(std::string("analyze schema measurement: missing key '") + key + "'");
        MeasurementColumn c;
        c.variable = m["variable"].get<std::string>();
        c.instrument = m["instrument"].get<std::string>();
        c.column = m["column"].get<std::string>();
        c.is_gold = m.value("gold", false);
        c.log_transform = m.value("log", false);
        schema.measurements.push_back(std::move(c));
    }
    return schema;
}

int cmd_analyze(const json& cfg, const std::string& out_flag) {
    reject_unknown_keys(cfg, {"input", "output", "schema"}, "analyze config");
    if (!cfg.contains("input")) throw ConfigError("analyze: missing key 'input'");
    if (!cfg.contains("schema")) throw ConfigError("analyze: missing key 'schema'");
    std::string input = cfg["input"].get<std::string>();
    std::string output = !out_flag.empty() ? out_flag : cfg.value("output", std::string());
    if (output.empty()) throw ConfigError("analyze: no output path given");
    require_writable_parent(output);

    FrameSchema schema = schema_from_json(cfg["schema"]);
    StudyFrame frame = ingest_csv(input, schema);
    if (frame.dropped > 0)
        std::cerr << "note: dropped " << frame.dropped << " rows with missing/invalid fields\n";
    std::vector<AnalysisRow> rows = analyze_all(frame);
    write_csv(output, report_to_csv(rows, frame.variables));
    std::cout << "wrote " << rows.size() << " report rows to " << output << "\n";
    return 0;
}

// ---- report / verify-trends ----

int cmd_report(const std::string& input, const std::string& prefix) {
    if (input.empty() || prefix.empty())
        throw ConfigError("report: need --input summary CSV and --out chart prefix");
    std::vector<SummaryRow> rows = parse_summary_csv(read_csv(input));
    write_summary_charts(prefix, rows);
    std::cout << "wrote charts with prefix " << prefix << "\n";
    return 0;
}

int cmd_verify_trends(const std::string& input) {
    if (input.empty()) throw ConfigError("verify-trends: need --input summary CSV");
    std::vector<SummaryRow> rows = parse_summary_csv(read_csv(input));
    std::vector<std::string> failures = verify_trends(rows);
    if (failures.empty()) {
        std::cout << "all trend checks passed (" << rows.size() << " summary rows)\n";
        return 0;
    }
    for (const std::string& f : failures) std::cerr << "FAIL " << f << "\n";
    return kExitNumeric;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Propensity-score estimators under correlated covariate measurement error"};
    app.require_subcommand(1);

    std::string config_path, output, input, svg_prefix, design_flag;
    std::size_t workers = workers_from_env();
    std::optional<std::uint64_t> seed_flag;
    std::optional<std::size_t> reps_flag, n_flag;
    std::optional<std::vector<double>> rho_w_flag;

    CLI::App* calibrate = app.add_subcommand("calibrate", "Solve coefficient tables for target total confounding");
    calibrate->add_option("--config", config_path, "JSON config file");
    calibrate->add_option("--out", output, "Output CSV path");
    calibrate->add_option("--design", design_flag, "sim1 | sim2_rho12 | sim2_rho13 | signflip");

    CLI::App* simulate = app.add_subcommand("simulate", "Run a Monte Carlo grid and emit summary CSV");
    simulate->add_option("--config", config_path, "JSON config file");
    simulate->add_option("--out", output, "Output CSV path");
    simulate->add_option("--design", design_flag, "sim1 | sim2_rho12 | sim2_rho13 | signflip");
    simulate->add_option("--seed", seed_flag, "Master seed");
    simulate->add_option("--reps", reps_flag, "Replicates per cell");
    simulate->add_option("--n", n_flag, "Sample size per replicate");
    simulate->add_option("--rho-w", rho_w_flag, "Measurement-error correlation grid");
    simulate->add_option("--workers", workers, "Worker thread cap (no effect on output bytes)");
    simulate->add_option("--svg", svg_prefix, "Chart file prefix");

    CLI::App* analyze = app.add_subcommand("analyze", "Analyze a CSV dataset with gold and error-prone covariates");
    analyze->add_option("--config", config_path, "JSON config file")->required();
    analyze->add_option("--out", output, "Output report CSV path");

    CLI::App* report = app.add_subcommand("report", "Render SVG charts from a simulate summary CSV");
    report->add_option("--input", input, "Summary CSV from simulate")->required();
    report->add_option("--out", svg_prefix, "Chart file prefix")->required();

    CLI::App* verify = app.add_subcommand("verify-trends", "Check figure trends on a simulate summary CSV");
    verify->add_option("--input", input, "Summary CSV from simulate")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        json cfg = load_config(config_path);
        // flag overrides
        if (!design_flag.empty()) cfg["design"] = design_flag;
        if (seed_flag) cfg["seed"] = *seed_flag;
        if (reps_flag) cfg["replicates"] = *reps_flag;
        if (n_flag) cfg["n"] = *n_flag;
        if (rho_w_flag) cfg["rho_w"] = *rho_w_flag;
        if (!svg_prefix.empty() && simulate->parsed()) cfg["svg_prefix"] = svg_prefix;

        if (calibrate->parsed()) return cmd_calibrate(cfg, output);
        if (simulate->parsed()) return cmd_simulate(cfg, output, workers);
        if (analyze->parsed()) return cmd_analyze(cfg, output);
        if (report->parsed()) return cmd_report(input, svg_prefix);
        if (verify->parsed()) return cmd_verify_trends(input);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SchemaMismatch& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NonPositiveLog& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const Error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    return 0;
}
