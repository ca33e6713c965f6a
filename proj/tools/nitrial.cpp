// nitrial command line: simulation studies, external-data analysis, the
// estimand recommendation, report rendering, and the scenario catalog dump.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nitrial/csv.hpp"
#include "nitrial/errors.hpp"
#include "nitrial/mcharness.hpp"

namespace {

using nitrial::ConfigInvalid;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitEstimators = 4;

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw nitrial::Error("cannot write " + tmp.string());
        }
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigInvalid("cannot open config file: " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigInvalid("config is not valid JSON: " + std::string(e.what()));
    }
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    if (!obj.is_object()) {
        throw ConfigInvalid(where + " must be a JSON object");
    }
    for (const auto& item : obj.items()) {
        if (allowed.find(item.key()) == allowed.end()) {
            throw ConfigInvalid("unknown key \"" + item.key() + "\" in " + where);
        }
    }
}

template <typename T>
T get_field(const json& obj, const std::string& key, const T& fallback,
            const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigInvalid("key \"" + key + "\" in " + where + " has the wrong type");
    }
}

nitrial::EstimatorSpec parse_estimator_entry(const json& entry, std::size_t pos) {
    const std::string where = "estimators[" + std::to_string(pos) + "]";
    if (!entry.is_object() || !entry.contains("id")) {
        throw ConfigInvalid(where + " must be an object with an \"id\" key");
    }
    nitrial::EstimatorSpec spec;
    spec.id = nitrial::parse_estimator_id(
        get_field<std::string>(entry, "id", "", where));
    if (spec.id == nitrial::EstimatorId::iv_bayes) {
        reject_unknown_keys(entry, {"id", "prior"}, where);
        if (entry.contains("prior")) {
            const json& prior = entry.at("prior");
            reject_unknown_keys(prior, {"label", "mean", "sd", "vague_sd"},
                                where + ".prior");
            spec.prior_label = get_field<std::string>(prior, "label", "", where + ".prior");
            spec.prior.mean = get_field<double>(prior, "mean", 0.0, where + ".prior");
            spec.prior.sd = get_field<double>(prior, "sd", 1.0, where + ".prior");
            spec.prior.vague_sd =
                get_field<double>(prior, "vague_sd", 1000.0, where + ".prior");
        }
        spec.prior.validate();
    } else if (spec.id == nitrial::EstimatorId::ipw) {
        reject_unknown_keys(entry, {"id", "separation"}, where);
        const std::string policy =
            get_field<std::string>(entry, "separation", "drop_and_count", where);
        if (policy == "drop_and_count") {
            spec.ipw.separation = nitrial::SeparationPolicy::drop_and_count;
        } else if (policy == "keep_weight_one") {
            spec.ipw.separation = nitrial::SeparationPolicy::keep_weight_one;
        } else {
            throw ConfigInvalid(where +
                                ".separation must be drop_and_count or keep_weight_one");
        }
    } else {
        reject_unknown_keys(entry, {"id"}, where);
    }
    return spec;
}

ordered_json echo_estimator_entry(const nitrial::EstimatorSpec& spec) {
    ordered_json entry;
    entry["id"] = nitrial::estimator_id_name(spec.id);
    if (spec.id == nitrial::EstimatorId::iv_bayes) {
        entry["prior"] = {{"label", spec.prior_label},
                          {"mean", spec.prior.mean},
                          {"sd", spec.prior.sd},
                          {"vague_sd", spec.prior.vague_sd}};
    } else if (spec.id == nitrial::EstimatorId::ipw) {
        entry["separation"] =
            spec.ipw.separation == nitrial::SeparationPolicy::drop_and_count
                ? "drop_and_count"
                : "keep_weight_one";
    }
    return entry;
}

int resolve_threads(int configured) {
    const char* env = std::getenv("NITRIAL_THREADS");
    if (env == nullptr || *env == '\0') return configured;
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end == nullptr || *end != '\0' || value < 0) {
        throw ConfigInvalid("NITRIAL_THREADS must be a non-negative integer");
    }
    return static_cast<int>(value);
}

struct SimulateOptions {
    nitrial::StudyConfig study;
    std::string output_dir;
};

SimulateOptions parse_simulate_config(const json& doc) {
    reject_unknown_keys(doc,
                        {"scenarios", "estimators", "nsim", "master_seed", "margin",
                         "alpha", "chain", "threads", "output_dir", "catalog_hash"},
                        "config");
    SimulateOptions opt;
    if (!doc.contains("scenarios") || !doc.at("scenarios").is_array()) {
        throw ConfigInvalid("key \"scenarios\" must be an array of scenario ids");
    }
    for (const json& sel : doc.at("scenarios")) {
        if (!sel.is_string()) {
            throw ConfigInvalid("scenario selectors must be strings");
        }
        const std::string id = sel.get<std::string>();
        if (id == "sim1-all") {
            for (const std::string& s : nitrial::sim1_ids()) {
                opt.study.scenario_ids.push_back(s);
            }
        } else if (id == "sim2-all") {
            for (const std::string& s : nitrial::sim2_ids()) {
                opt.study.scenario_ids.push_back(s);
            }
        } else {
            opt.study.scenario_ids.push_back(id);
        }
    }
    if (!doc.contains("estimators") || !doc.at("estimators").is_array()) {
        throw ConfigInvalid("key \"estimators\" must be an array");
    }
    std::size_t pos = 0;
    for (const json& entry : doc.at("estimators")) {
        opt.study.estimators.push_back(parse_estimator_entry(entry, pos++));
    }
    opt.study.nsim = get_field<int>(doc, "nsim", 2000, "config");
    opt.study.master_seed = get_field<std::uint64_t>(doc, "master_seed", 0, "config");
    opt.study.rule.margin = get_field<double>(doc, "margin", -0.3, "config");
    opt.study.rule.alpha = get_field<double>(doc, "alpha", 0.025, "config");
    if (doc.contains("chain")) {
        reject_unknown_keys(doc.at("chain"), {"iterations", "burn_in"}, "config.chain");
        opt.study.chain.iterations =
            get_field<int>(doc.at("chain"), "iterations", 10000, "config.chain");
        opt.study.chain.burn_in =
            get_field<int>(doc.at("chain"), "burn_in", 1000, "config.chain");
    }
    opt.study.threads = resolve_threads(get_field<int>(doc, "threads", 1, "config"));
    opt.output_dir = get_field<std::string>(doc, "output_dir", "out", "config");
    if (doc.contains("catalog_hash") &&
        doc.at("catalog_hash").get<std::uint64_t>() != nitrial::catalog_hash()) {
        throw ConfigInvalid("key \"catalog_hash\" does not match the built-in catalog");
    }
    return opt;
}

std::string config_echo(const SimulateOptions& opt) {
    ordered_json doc;
    doc["scenarios"] = opt.study.scenario_ids;
    ordered_json ests = ordered_json::array();
    for (const nitrial::EstimatorSpec& es : opt.study.estimators) {
        ests.push_back(echo_estimator_entry(es));
    }
    doc["estimators"] = ests;
    doc["nsim"] = opt.study.nsim;
    doc["master_seed"] = opt.study.master_seed;
    doc["margin"] = opt.study.rule.margin;
    doc["alpha"] = opt.study.rule.alpha;
    doc["chain"] = {{"iterations", opt.study.chain.iterations},
                    {"burn_in", opt.study.chain.burn_in}};
    doc["threads"] = opt.study.threads;
    doc["output_dir"] = opt.output_dir;
    doc["catalog_hash"] = nitrial::catalog_hash();
    return doc.dump(2) + "\n";
}

int cmd_simulate(const std::string& config_path) {
    SimulateOptions opt;
    try {
        opt = parse_simulate_config(read_json_file(config_path));
        opt.study.validate();
    } catch (const nitrial::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        const nitrial::StudyResult result = nitrial::run_study(opt.study);
        std::filesystem::create_directories(opt.output_dir);
        const std::filesystem::path dir(opt.output_dir);
        write_file_atomic(dir / "results.csv", nitrial::results_csv(result));
        write_file_atomic(dir / "summary.json",
                          nitrial::summary_json(result, opt.study));
        write_file_atomic(dir / "config_echo.json", config_echo(opt));
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

// --- analyze ---

struct AnalyzeRow {
    std::string label;
    nitrial::EstimatorSpec spec;
    std::vector<Eigen::Index> weight_covariates;  // ipw
    Eigen::Index instrument_covariate = 0;        // iv_interaction
};

struct AnalyzeOptions {
    std::vector<std::string> covariates;
    std::vector<AnalyzeRow> rows;
    nitrial::NiRule rule;
    nitrial::ChainSettings chain;
    std::uint64_t master_seed = 0;
    std::string output;
};

Eigen::Index covariate_index(const std::vector<std::string>& names,
                             const std::string& name, const std::string& where) {
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (names[j] == name) return static_cast<Eigen::Index>(j);
    }
    throw ConfigInvalid(where + " names undeclared covariate \"" + name + "\"");
}

AnalyzeOptions parse_analyze_config(const json& doc, double level) {
    reject_unknown_keys(doc,
                        {"covariates", "estimators", "margin", "chain",
                         "master_seed", "output"},
                        "config");
    AnalyzeOptions opt;
    opt.covariates =
        get_field<std::vector<std::string>>(doc, "covariates", {}, "config");
    if (!doc.contains("estimators") || !doc.at("estimators").is_array()) {
        throw ConfigInvalid("key \"estimators\" must be an array");
    }
    std::size_t pos = 0;
    for (const json& entry : doc.at("estimators")) {
        const std::string where = "estimators[" + std::to_string(pos) + "]";
        AnalyzeRow row;
        if (entry.is_object() && entry.contains("id") &&
            entry.at("id").is_string() &&
            entry.at("id").get<std::string>() == "iv_interaction") {
            reject_unknown_keys(entry, {"id", "instrument"}, where);
            row.spec.id = nitrial::EstimatorId::iv_interaction;
            const std::string inst =
                get_field<std::string>(entry, "instrument", "", where);
            if (inst.empty()) {
                throw ConfigInvalid(where +
                                    " (iv_interaction) needs an \"instrument\" covariate");
            }
            row.instrument_covariate =
                covariate_index(opt.covariates, inst, where + ".instrument");
            row.label = "iv_interaction:" + inst;
        } else if (entry.is_object() && entry.contains("id") &&
                   entry.at("id").is_string() &&
                   entry.at("id").get<std::string>() == "ipw") {
            reject_unknown_keys(entry, {"id", "separation", "weight_covariates"}, where);
            row.spec = parse_estimator_entry(
                json{{"id", "ipw"},
                     {"separation", get_field<std::string>(entry, "separation",
                                                           "drop_and_count", where)}},
                pos);
            for (const std::string& name : get_field<std::vector<std::string>>(
                     entry, "weight_covariates", {}, where)) {
                row.weight_covariates.push_back(
                    covariate_index(opt.covariates, name, where + ".weight_covariates"));
            }
            row.label = "ipw";
        } else {
            row.spec = parse_estimator_entry(entry, pos);
            if (row.spec.id == nitrial::EstimatorId::iv_bayes &&
                row.spec.prior_label.empty()) {
                throw ConfigInvalid(where + " (iv_bayes) needs a labelled prior");
            }
            row.label = row.spec.column_label();
        }
        opt.rows.push_back(std::move(row));
        ++pos;
    }
    if (opt.rows.empty()) {
        throw ConfigInvalid("at least one estimator must be configured");
    }
    opt.rule.margin = get_field<double>(doc, "margin", -0.3, "config");
    opt.rule.alpha = (1.0 - level) / 2.0;
    opt.rule.validate();
    if (doc.contains("chain")) {
        reject_unknown_keys(doc.at("chain"), {"iterations", "burn_in"}, "config.chain");
        opt.chain.iterations =
            get_field<int>(doc.at("chain"), "iterations", 10000, "config.chain");
        opt.chain.burn_in =
            get_field<int>(doc.at("chain"), "burn_in", 1000, "config.chain");
    }
    opt.master_seed = get_field<std::uint64_t>(doc, "master_seed", 0, "config");
    opt.output = get_field<std::string>(doc, "output", "analysis_results.csv", "config");
    return opt;
}

Eigen::VectorXd numeric_column(const nitrial::CsvTable& table, const std::string& name) {
    const int j = table.column(name);
    if (j < 0) {
        throw ConfigInvalid("data file is missing required column \"" + name + "\"");
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(table.n_rows()));
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        const std::string& cell = table.rows[i][static_cast<std::size_t>(j)];
        if (cell.empty()) {
            throw ConfigInvalid("column \"" + name + "\" has a missing value at row " +
                                std::to_string(i + 1));
        }
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != cell.size()) {
            throw ConfigInvalid("column \"" + name + "\" has a non-numeric value at row " +
                                std::to_string(i + 1));
        }
        out[static_cast<Eigen::Index>(i)] = v;
    }
    return out;
}

int cmd_analyze(const std::string& data_path, const std::string& config_path,
                double level) {
    AnalyzeOptions opt;
    nitrial::AnalysisDataset data;
    try {
        if (level <= 0.0 || level >= 1.0) {
            throw ConfigInvalid("--level must lie in (0, 1)");
        }
        opt = parse_analyze_config(read_json_file(config_path), level);
        const nitrial::CsvTable table = nitrial::read_csv(data_path);
        data.y = numeric_column(table, "y");
        data.z = numeric_column(table, "z");
        data.c = numeric_column(table, "c");
        data.covariates.resize(data.y.size(),
                               static_cast<Eigen::Index>(opt.covariates.size()));
        data.covariate_names = opt.covariates;
        for (std::size_t j = 0; j < opt.covariates.size(); ++j) {
            data.covariates.col(static_cast<Eigen::Index>(j)) =
                numeric_column(table, opt.covariates[j]);
        }
        data.validate();
    } catch (const nitrial::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    std::string out_csv = "estimator,point,se,lower,upper,p_value,ni,error\n";
    std::ostringstream screen;
    screen << "estimator\tpoint\tse\tlower\tupper\tp\tni\n";
    std::size_t failures = 0;
    for (std::size_t j = 0; j < opt.rows.size(); ++j) {
        const AnalyzeRow& row = opt.rows[j];
        std::string error;
        nitrial::EstimateResult est;
        try {
            switch (row.spec.id) {
                case nitrial::EstimatorId::itt:
                    est = nitrial::estimate_itt(data, opt.rule);
                    break;
                case nitrial::EstimatorId::pp:
                    est = nitrial::estimate_pp(data, opt.rule);
                    break;
                case nitrial::EstimatorId::ipw:
                    est = nitrial::estimate_ipw(data, opt.rule, row.spec.ipw,
                                                row.weight_covariates);
                    break;
                case nitrial::EstimatorId::iv_interaction:
                    est = nitrial::estimate_iv_interaction(data, opt.rule,
                                                           row.instrument_covariate);
                    break;
                case nitrial::EstimatorId::iv_bayes: {
                    nitrial::ChainConfig cfg;
                    cfg.iterations = opt.chain.iterations;
                    cfg.burn_in = opt.chain.burn_in;
                    cfg.seed = nitrial::derive_seed(opt.master_seed, 0, 1000 + j);
                    est = nitrial::estimate_iv_bayes(data, row.spec.prior, cfg, opt.rule);
                    break;
                }
            }
        } catch (const nitrial::Error& e) {
            error = e.what();
        }
        if (!error.empty()) {
            ++failures;
            out_csv += row.label + ",,,,,,," + error + "\n";
            screen << row.label << "\terror: " << error << "\n";
            continue;
        }
        const std::string p =
            est.p_value ? nitrial::format_double(*est.p_value) : "-";
        out_csv += row.label + ',' + nitrial::format_double(est.point) + ',' +
                   nitrial::format_double(est.se) + ',' +
                   nitrial::format_double(est.lower) + ',' +
                   nitrial::format_double(est.upper) + ',' + p + ',' +
                   (est.ni_declared ? "1" : "0") + ",\n";
        screen << row.label << '\t' << est.point << '\t' << est.se << '\t'
               << est.lower << '\t' << est.upper << '\t' << p << '\t'
               << (est.ni_declared ? "1" : "0") << "\n";
    }
    std::cout << screen.str();
    try {
        write_file_atomic(opt.output, out_csv);
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return failures == opt.rows.size() ? kExitEstimators : kExitOk;
}

// --- advise ---

int cmd_advise(const std::string& ies) {
    bool occur = false;
    bool identifiable = false;
    if (ies == "none") {
        occur = false;
    } else if (ies == "identifiable") {
        occur = true;
        identifiable = true;
    } else if (ies == "unidentifiable") {
        occur = true;
        identifiable = false;
    } else {
        std::cerr << "config error: --trial-specific-ies must be one of "
                     "none|identifiable|unidentifiable\n";
        return kExitConfig;
    }
    const nitrial::EstimandAdvice advice =
        nitrial::advise_estimand(occur, identifiable);
    std::cout << "estimands: " << advice.n_estimands << "\n";
    std::cout << "primary: " << advice.primary << "\n";
    if (!advice.secondary.empty()) {
        std::cout << "secondary: " << advice.secondary << "\n";
    }
    return kExitOk;
}

// --- report ---

int cmd_report(const std::string& results_dir, const std::string& format) {
    json summary;
    try {
        summary = read_json_file(
            (std::filesystem::path(results_dir) / "summary.json").string());
        if (!summary.contains("scenarios") || !summary.at("scenarios").is_object()) {
            throw ConfigInvalid("summary.json has no \"scenarios\" object");
        }
    } catch (const nitrial::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    // Collect the estimator columns in deterministic order.
    std::set<std::string> columns;
    const json& scenarios = summary.at("scenarios");
    for (const auto& sc : scenarios.items()) {
        for (const auto& est : sc.value().at("estimators").items()) {
            columns.insert(est.key());
        }
    }

    const char* metrics[] = {"bias",          "bias_mcse",        "empirical_se",
                             "mean_model_se", "relative_se_error", "ni_rate",
                             "ni_rate_mcse",  "precision_vs_itt", "ipw_dropped_rate",
                             "filtered",      "failed"};
    for (const char* metric : metrics) {
        if (format == "md") {
            std::cout << "## " << metric << "\n\n";
            std::cout << "| scenario |";
            for (const std::string& col : columns) std::cout << " " << col << " |";
            std::cout << "\n|---|";
            for (std::size_t i = 0; i < columns.size(); ++i) std::cout << "---|";
            std::cout << "\n";
        } else {
            std::cout << "# " << metric << "\nscenario";
            for (const std::string& col : columns) std::cout << ',' << col;
            std::cout << "\n";
        }
        for (const auto& sc : scenarios.items()) {
            std::cout << (format == "md" ? "| " : "") << sc.key();
            for (const std::string& col : columns) {
                std::string cell;
                const json& ests = sc.value().at("estimators");
                if (ests.contains(col) && ests.at(col).contains(metric)) {
                    const json& v = ests.at(col).at(metric);
                    cell = v.is_number_float()
                               ? nitrial::format_double(v.get<double>())
                               : v.dump();
                }
                std::cout << (format == "md" ? " | " : ",") << cell;
            }
            std::cout << (format == "md" ? " |\n" : "\n");
        }
        std::cout << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"estimators of the hypothetical estimand in non-inferiority trials"};
    app.require_subcommand(1);

    std::string sim_config;
    CLI::App* simulate = app.add_subcommand("simulate", "run a simulation study");
    simulate->add_option("--config", sim_config, "study config JSON")->required();

    std::string an_data;
    std::string an_config;
    double an_level = 0.95;
    CLI::App* analyze = app.add_subcommand("analyze", "analyze a trial dataset");
    analyze->add_option("--data", an_data, "trial data CSV")->required();
    analyze->add_option("--config", an_config, "analysis config JSON")->required();
    analyze->add_option("--level", an_level, "two-sided interval level");

    std::string ies;
    CLI::App* advise = app.add_subcommand("advise", "print the estimand recommendation");
    advise->add_option("--trial-specific-ies", ies,
                       "none|identifiable|unidentifiable")
        ->required();

    std::string report_dir;
    std::string report_format = "md";
    CLI::App* report = app.add_subcommand("report", "render summary tables");
    report->add_option("dir", report_dir, "results directory")->required();
    report->add_option("--format", report_format, "csv or md")
        ->check(CLI::IsMember({"csv", "md"}));

    CLI::App* dump = app.add_subcommand("dump-catalog", "print the scenario catalog");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim_config);
        if (analyze->parsed()) return cmd_analyze(an_data, an_config, an_level);
        if (advise->parsed()) return cmd_advise(ies);
        if (report->parsed()) return cmd_report(report_dir, report_format);
        if (dump->parsed()) {
            std::cout << nitrial::dump_catalog_json();
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
