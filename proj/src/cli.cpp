#include "narx/cli.hpp"
#include "narx/errors.hpp"
#include "narx/metrics.hpp"
#include "narx/model_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace narx {

using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- logging

int log_level() {
    const char* env = std::getenv("NARX_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::cout << msg << "\n";
}

void debug_log(const std::string& msg) {
    if (log_level() >= 2) std::cout << "[debug] " << msg << "\n";
}

// ------------------------------------------------------------- small utils

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
    if (!out) throw DataError("failed writing '" + path + "'");
}

std::vector<std::string> header_columns(const std::string& path, char delim) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) {
        auto b = field.find_first_not_of(" \t\r\n");
        auto e = field.find_last_not_of(" \t\r\n");
        out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    return out;
}

// ------------------------------------------------------------ config load

void check_keys(const json& obj, const char* where,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) { known = true; break; }
        if (!known)
            throw ConfigError(std::string("config: unknown key '") + it.key() +
                              "' in " + where);
    }
}

template <typename T>
T fetch(const json& obj, const char* where, const char* key, T fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: key '") + key + "' in " + where +
                          " has the wrong type");
    }
}

FitMode parse_mode(const std::string& text) {
    if (text == "pooled") return FitMode::Pooled;
    if (text == "per_class" || text == "per-class") return FitMode::PerClass;
    throw ConfigError("config: mode must be 'pooled' or 'per-class', got '" +
                      text + "'");
}

std::string mode_name(FitMode mode) {
    return mode == FitMode::Pooled ? "pooled" : "per-class";
}

} // namespace

void RunConfig::validate() const {
    if (!(train_fraction > 0.0 && train_fraction <= 1.0))
        throw ConfigError("config: train_fraction must lie in (0,1]");
    if (folds < 2) throw ConfigError("config: folds must be >= 2");
    if (k_max < 1) throw ConfigError("config: k_max must be >= 1");
    if (lambda < 0.0) throw ConfigError("config: lambda must be >= 0");
    if (knn_k < 1) throw ConfigError("config: knn_k must be >= 1");
    if (size_rule != "none" && size_rule != "one_std_error") {
        int v = 0;
        auto [ptr, ec] = std::from_chars(
            size_rule.data(), size_rule.data() + size_rule.size(), v);
        if (ec != std::errc{} || ptr != size_rule.data() + size_rule.size() ||
            v < 1)
            throw ConfigError("config: size_rule must be 'none', "
                              "'one_std_error', or a positive integer");
    }
    for (const std::string& b : baselines)
        if (b != "knn" && b != "forest")
            throw ConfigError("config: unknown baseline '" + b + "'");
    LagSpec checked = spec;
    checked.input_channels = 1;  // filled from data at run time
    checked.validate();
}

RunConfig run_config_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: root must be an object");
    check_keys(doc, "the config root",
               {"dataset", "terms", "selection", "split", "cv", "simulate",
                "baselines", "output", "label_columns"});

    RunConfig cfg;
    if (doc.contains("dataset")) {
        const json& d = doc["dataset"];
        check_keys(d, "dataset",
                   {"path", "input_columns", "label_column", "load_column",
                    "class_names", "delimiter", "drop_bad_rows"});
        cfg.dataset_path = fetch<std::string>(d, "dataset", "path", "");
        cfg.schema.input_columns = fetch<std::vector<std::string>>(
            d, "dataset", "input_columns", {});
        cfg.schema.label_column =
            fetch<std::string>(d, "dataset", "label_column", "");
        cfg.schema.load_column =
            fetch<std::string>(d, "dataset", "load_column", "");
        cfg.schema.class_names = fetch<std::vector<std::string>>(
            d, "dataset", "class_names", {});
        const std::string delim =
            fetch<std::string>(d, "dataset", "delimiter", ",");
        if (delim.size() != 1)
            throw ConfigError("config: delimiter must be one character");
        cfg.schema.delimiter = delim[0];
        cfg.schema.drop_bad_rows =
            fetch<bool>(d, "dataset", "drop_bad_rows", false);
    }
    if (doc.contains("terms")) {
        const json& t = doc["terms"];
        check_keys(t, "terms",
                   {"nonlinearity_degree", "max_output_lag", "max_input_lag",
                    "allow_lag_zero_inputs"});
        cfg.spec.nonlinearity_degree =
            fetch<int>(t, "terms", "nonlinearity_degree", 2);
        cfg.spec.max_output_lag = fetch<int>(t, "terms", "max_output_lag", 0);
        cfg.spec.max_input_lag = fetch<int>(t, "terms", "max_input_lag", 0);
        cfg.spec.allow_lag_zero_inputs =
            fetch<bool>(t, "terms", "allow_lag_zero_inputs", true);
    }
    if (doc.contains("selection")) {
        const json& s = doc["selection"];
        check_keys(s, "selection", {"k_max", "mode", "lambda", "size_rule"});
        cfg.k_max = fetch<int>(s, "selection", "k_max", 10);
        cfg.mode = parse_mode(fetch<std::string>(s, "selection", "mode", "pooled"));
        cfg.lambda = fetch<double>(s, "selection", "lambda", 1e-4);
        if (s.contains("size_rule")) {
            if (s["size_rule"].is_number_integer())
                cfg.size_rule = std::to_string(s["size_rule"].get<int>());
            else
                cfg.size_rule =
                    fetch<std::string>(s, "selection", "size_rule", "none");
        }
    }
    if (doc.contains("split")) {
        const json& s = doc["split"];
        check_keys(s, "split", {"train_fraction", "seed"});
        cfg.train_fraction = fetch<double>(s, "split", "train_fraction", 0.8);
        cfg.split_seed = fetch<std::uint64_t>(s, "split", "seed", 7);
    }
    if (doc.contains("cv")) {
        const json& c = doc["cv"];
        check_keys(c, "cv", {"folds", "seed"});
        cfg.folds = fetch<int>(c, "cv", "folds", 5);
        cfg.cv_seed = fetch<std::uint64_t>(c, "cv", "seed", 11);
    }
    if (doc.contains("simulate")) {
        const json& s = doc["simulate"];
        check_keys(s, "simulate",
                   {"sections", "samples_per_section", "mixture",
                    "signal_channels", "signal_strength", "noise_std", "seed"});
        cfg.sim.sections = fetch<int>(s, "simulate", "sections", 10);
        cfg.sim.samples_per_section =
            fetch<int>(s, "simulate", "samples_per_section", 100);
        if (s.contains("mixture")) {
            const auto mixture =
                fetch<std::vector<double>>(s, "simulate", "mixture", {});
            if (mixture.size() != 4)
                throw ConfigError("config: mixture must list 4 class weights");
            std::copy(mixture.begin(), mixture.end(), cfg.sim.mixture.begin());
        }
        cfg.sim.signal_channels = fetch<std::vector<int>>(
            s, "simulate", "signal_channels", cfg.sim.signal_channels);
        cfg.sim.signal_strength =
            fetch<double>(s, "simulate", "signal_strength", 1.0);
        cfg.sim.noise_std = fetch<double>(s, "simulate", "noise_std", 1.0);
        cfg.sim.seed = fetch<std::uint64_t>(s, "simulate", "seed", 0);
    }
    if (doc.contains("baselines")) {
        const json& b = doc["baselines"];
        check_keys(b, "baselines", {"enabled", "knn_k", "grid", "seed"});
        cfg.baselines = fetch<std::vector<std::string>>(
            b, "baselines", "enabled", cfg.baselines);
        cfg.knn_k = fetch<int>(b, "baselines", "knn_k", 5);
        cfg.baseline_seed = fetch<std::uint64_t>(b, "baselines", "seed", 101);
        if (b.contains("grid")) {
            const json& g = b["grid"];
            check_keys(g, "baselines.grid",
                       {"trees", "max_depth", "min_leaf", "features_per_split"});
            cfg.grid.trees = fetch<std::vector<int>>(g, "grid", "trees",
                                                     cfg.grid.trees);
            cfg.grid.max_depth = fetch<std::vector<int>>(
                g, "grid", "max_depth", cfg.grid.max_depth);
            cfg.grid.min_leaf = fetch<std::vector<int>>(g, "grid", "min_leaf",
                                                        cfg.grid.min_leaf);
            cfg.grid.features_per_split = fetch<std::vector<int>>(
                g, "grid", "features_per_split", cfg.grid.features_per_split);
        }
    }
    if (doc.contains("output")) {
        const json& o = doc["output"];
        check_keys(o, "output", {"model", "report", "csv"});
        cfg.model_path = fetch<std::string>(o, "output", "model", "model.json");
        cfg.report_path =
            fetch<std::string>(o, "output", "report", "report.json");
        cfg.output_csv = fetch<std::string>(o, "output", "csv", "out.csv");
    }
    if (doc.contains("label_columns")) {
        const json& l = doc["label_columns"];
        check_keys(l, "label_columns", {"relief", "lv", "load"});
        cfg.relief_column = fetch<std::string>(l, "label_columns", "relief",
                                               "relief");
        cfg.lv_column = fetch<std::string>(l, "label_columns", "lv", "lv");
        cfg.load_column = fetch<std::string>(l, "label_columns", "load",
                                             "load");
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return run_config_from_json(buffer.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
    json doc;
    doc["dataset"] = {{"path", cfg.dataset_path},
                      {"input_columns", cfg.schema.input_columns},
                      {"label_column", cfg.schema.label_column},
                      {"load_column", cfg.schema.load_column},
                      {"class_names", cfg.schema.class_names},
                      {"delimiter", std::string(1, cfg.schema.delimiter)},
                      {"drop_bad_rows", cfg.schema.drop_bad_rows}};
    doc["terms"] = {{"nonlinearity_degree", cfg.spec.nonlinearity_degree},
                    {"max_output_lag", cfg.spec.max_output_lag},
                    {"max_input_lag", cfg.spec.max_input_lag},
                    {"allow_lag_zero_inputs", cfg.spec.allow_lag_zero_inputs}};
    doc["selection"] = {{"k_max", cfg.k_max},
                        {"mode", mode_name(cfg.mode)},
                        {"lambda", cfg.lambda},
                        {"size_rule", cfg.size_rule}};
    doc["split"] = {{"train_fraction", cfg.train_fraction},
                    {"seed", cfg.split_seed}};
    doc["cv"] = {{"folds", cfg.folds}, {"seed", cfg.cv_seed}};
    doc["simulate"] = {
        {"sections", cfg.sim.sections},
        {"samples_per_section", cfg.sim.samples_per_section},
        {"mixture", std::vector<double>(cfg.sim.mixture.begin(),
                                        cfg.sim.mixture.end())},
        {"signal_channels", cfg.sim.signal_channels},
        {"signal_strength", cfg.sim.signal_strength},
        {"noise_std", cfg.sim.noise_std},
        {"seed", cfg.sim.seed}};
    doc["baselines"] = {
        {"enabled", cfg.baselines},
        {"knn_k", cfg.knn_k},
        {"grid",
         {{"trees", cfg.grid.trees},
          {"max_depth", cfg.grid.max_depth},
          {"min_leaf", cfg.grid.min_leaf},
          {"features_per_split", cfg.grid.features_per_split}}},
        {"seed", cfg.baseline_seed}};
    doc["output"] = {{"model", cfg.model_path},
                     {"report", cfg.report_path},
                     {"csv", cfg.output_csv}};
    doc["label_columns"] = {{"relief", cfg.relief_column},
                            {"lv", cfg.lv_column},
                            {"load", cfg.load_column}};
    return doc.dump(2) + "\n";
}

std::string config_hash(const RunConfig& cfg) {
    const std::string text = run_config_to_json(cfg);
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64-bit
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

namespace {

// ------------------------------------------------------- shared helpers

CsvSchema effective_schema(const RunConfig& cfg) {
    CsvSchema schema = cfg.schema;
    if (schema.input_columns.empty())
        schema.input_columns = simulated_channel_names();
    if (schema.label_column.empty()) schema.label_column = "criticality";
    if (schema.class_names.empty()) schema.class_names = criticality_names();
    return schema;
}

std::optional<SizeRule> size_rule_of(const RunConfig& cfg) {
    if (cfg.size_rule == "none") return std::nullopt;
    if (cfg.size_rule == "one_std_error") return SizeRule::one_std_error();
    return SizeRule::fixed(std::stoi(cfg.size_rule));
}

struct SplitResult {
    TimeSeriesDataset train;
    TimeSeriesDataset validation;
    bool held_out = false;
};

SplitResult split_dataset(const RunConfig& cfg, const TimeSeriesDataset& ds) {
    if (cfg.train_fraction >= 1.0) return {ds, ds, false};
    auto [train, validation] =
        train_validation_split(ds, cfg.train_fraction, cfg.split_seed);
    return {std::move(train), std::move(validation), true};
}

std::vector<long> class_counts(const TimeSeriesDataset& ds) {
    std::vector<long> counts(static_cast<std::size_t>(ds.class_count()), 0);
    for (int label : ds.labels)
        ++counts[static_cast<std::size_t>(label - 1)];
    return counts;
}

std::string count_summary(const TimeSeriesDataset& ds) {
    std::ostringstream out;
    const auto counts = class_counts(ds);
    for (std::size_t v = 0; v < counts.size(); ++v) {
        if (v) out << ", ";
        out << ds.class_names[v] << "=" << counts[v];
    }
    return out.str();
}

json metrics_to_json(const MetricReport& rep) {
    json m;
    m["average_accuracy"] = rep.average_accuracy;
    m["macro"] = {{"sensitivity", rep.macro_sensitivity},
                  {"specificity", rep.macro_specificity},
                  {"precision", rep.macro_precision},
                  {"f1", rep.macro_f1}};
    m["weighted"] = {{"sensitivity", rep.weighted_sensitivity},
                     {"specificity", rep.weighted_specificity},
                     {"precision", rep.weighted_precision},
                     {"f1", rep.weighted_f1}};
    return m;
}

json per_class_to_json(const ConfusionMatrix& cm, const MetricReport& rep) {
    json arr = json::array();
    for (std::size_t v = 0; v < rep.per_class.size(); ++v) {
        const ClassMetrics& c = rep.per_class[v];
        json entry;
        entry["name"] = cm.class_names[v];
        entry["support"] = c.support;
        entry["sensitivity"] = c.sensitivity;
        entry["sensitivity_defined"] = c.sensitivity_defined;
        entry["specificity"] = c.specificity;
        entry["specificity_defined"] = c.specificity_defined;
        entry["precision"] = c.precision;
        entry["precision_defined"] = c.precision_defined;
        entry["f1"] = c.f1;
        entry["f1_defined"] = c.f1_defined;
        arr.push_back(std::move(entry));
    }
    return arr;
}

json confusion_to_json(const ConfusionMatrix& cm) {
    json counts = json::array();
    for (Eigen::Index i = 0; i < cm.counts.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < cm.counts.cols(); ++j)
            row.push_back(cm.counts(i, j));
        counts.push_back(std::move(row));
    }
    const Eigen::MatrixXd percent = cm.row_normalized();
    json rows = json::array();
    for (Eigen::Index i = 0; i < percent.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < percent.cols(); ++j)
            row.push_back(percent(i, j));
        rows.push_back(std::move(row));
    }
    json out;
    out["class_names"] = cm.class_names;
    out["counts"] = counts;
    out["row_percent"] = rows;
    return out;
}

std::string metric_line(const std::string& name, const MetricReport& rep) {
    std::ostringstream out;
    out << "  [" << name << "] "
        << "Average Accuracy: " << std::fixed << std::setprecision(4)
        << rep.average_accuracy << "  Sensitivity: " << rep.weighted_sensitivity
        << "  Specificity: " << rep.weighted_specificity
        << "  Precision: " << rep.weighted_precision
        << "  F1 Score: " << rep.weighted_f1 << "  (weighted averages)";
    return out.str();
}

void print_term_table(const MultinomialNarxClassifier& clf) {
    const ImportanceReport importance = feature_importance(clf);
    std::ostringstream out;
    out << "  rank  term                          score     coefficients\n";
    int rank = 1;
    for (const ImportanceEntry& entry : importance.entries) {
        out << "  " << std::left << std::setw(6) << rank << std::setw(30)
            << entry.term_string << std::right << std::fixed
            << std::setprecision(4) << std::setw(8) << entry.best_score << "  ";
        for (std::size_t i = 0; i < entry.coefficients.size(); ++i) {
            if (i) out << ", ";
            out << clf.class_labels[static_cast<std::size_t>(
                       entry.classes[i] - 1)]
                << "=" << std::setprecision(3) << entry.coefficients[i];
        }
        out << "\n";
        ++rank;
    }
    info(out.str());
}

} // namespace

// ---------------------------------------------------------------- commands

void cmd_simulate(const RunConfig& cfg) {
    cfg.validate();
    const TimeSeriesDataset ds = simulate_dataset(cfg.sim);
    const CsvSchema schema = effective_schema(cfg);
    save_csv(ds, cfg.output_csv, schema.label_column);
    info("simulate: wrote " + std::to_string(ds.sample_count()) + " rows x " +
         std::to_string(ds.channel_count()) + " channels to " + cfg.output_csv);
    info("simulate: class counts " + count_summary(ds));
}

void cmd_label(const RunConfig& cfg) {
    cfg.validate();
    CsvSchema schema;
    schema.input_columns = {cfg.relief_column, cfg.lv_column};
    schema.load_column = cfg.load_column;
    schema.delimiter = cfg.schema.delimiter;
    const TimeSeriesDataset ds = load_csv(cfg.dataset_path, schema);

    std::ofstream out(cfg.output_csv, std::ios::binary);
    if (!out) throw DataError("cannot write '" + cfg.output_csv + "'");
    out << cfg.relief_column << ',' << cfg.lv_column << ',' << cfg.load_column
        << ",criticality\n";
    std::vector<long> counts(4, 0);
    for (Eigen::Index i = 0; i < ds.sample_count(); ++i) {
        const double relief = ds.channels(i, 0);
        const double lv = ds.channels(i, 1);
        const LoadState load = ds.load_state[static_cast<std::size_t>(i)];
        const Criticality label = label_criticality(relief, lv, load);
        ++counts[static_cast<std::size_t>(static_cast<int>(label) - 1)];
        out << format_double(relief) << ',' << format_double(lv) << ','
            << (load == LoadState::Loaded ? "loaded" : "empty") << ','
            << to_string(label) << '\n';
    }
    if (!out) throw DataError("failed writing '" + cfg.output_csv + "'");
    std::ostringstream summary;
    summary << "label: wrote " << ds.sample_count() << " rows to "
            << cfg.output_csv << " (";
    for (std::size_t v = 0; v < counts.size(); ++v) {
        if (v) summary << ", ";
        summary << criticality_names()[v] << "=" << counts[v];
    }
    summary << ")";
    info(summary.str());
}

void cmd_train(const RunConfig& cfg) {
    cfg.validate();
    const CsvSchema schema = effective_schema(cfg);
    const TimeSeriesDataset ds = load_csv(cfg.dataset_path, schema);
    if (ds.labels.empty())
        throw DataError("training requires a labeled dataset");
    const SplitResult split = split_dataset(cfg, ds);
    debug_log("train rows: " + std::to_string(split.train.sample_count()) +
              ", validation rows: " +
              std::to_string(split.validation.sample_count()));

    LagSpec spec = cfg.spec;
    spec.input_channels = static_cast<int>(ds.channel_count());
    spec.validate();

    const std::vector<int> labels_eff = effective_labels(split.train, spec);
    const FoldPlan plan = make_folds(labels_eff, cfg.folds, cfg.cv_seed);

    FitConfig fit_config;
    fit_config.k_max = cfg.k_max;
    fit_config.mode = cfg.mode;
    fit_config.lambda = cfg.lambda;
    fit_config.size_rule = size_rule_of(cfg);
    const MultinomialNarxClassifier clf =
        fit(split.train, spec, plan, fit_config);

    ModelProvenance prov{config_hash(cfg), cfg.split_seed};
    save_model(clf, cfg.model_path, prov);

    json report;
    report["format_version"] = 1;
    report["kind"] = "training-report";
    report["config_hash"] = prov.config_hash;
    report["mode"] = mode_name(clf.mode);
    report["class_labels"] = clf.class_labels;
    report["rows"] = {{"total", ds.sample_count()},
                      {"train", split.train.sample_count()},
                      {"validation",
                       split.held_out ? split.validation.sample_count() : 0},
                      {"effective", static_cast<long>(labels_eff.size())}};
    report["candidate_terms"] =
        static_cast<long>(enumerate_terms(spec).size());
    json selection = json::array();
    for (int v = 0; v < clf.class_count(); ++v) {
        const SelectionTrace& trace = clf.per_class[static_cast<std::size_t>(v)];
        json entry;
        entry["label"] = clf.class_labels[static_cast<std::size_t>(v)];
        entry["model_size"] = clf.model_sizes[static_cast<std::size_t>(v)];
        entry["suggested_size_one_std_error"] =
            trace.selected.empty()
                ? 0
                : choose_model_size(trace, SizeRule::one_std_error());
        json steps = json::array();
        for (std::size_t s = 0; s < trace.selected.size(); ++s) {
            json step;
            step["step"] = s + 1;
            step["term"] = trace.selected[s].term.render();
            step["score"] = trace.selected[s].score;
            step["cv_mean"] = trace.cv_accuracy_per_step[s].mean;
            step["cv_std"] = trace.cv_accuracy_per_step[s].stddev;
            steps.push_back(std::move(step));
        }
        entry["steps"] = steps;
        entry["eliminated_candidates"] =
            static_cast<long>(trace.eliminated.size());
        entry["warnings"] = trace.warnings;
        selection.push_back(std::move(entry));
    }
    report["selection"] = selection;
    json terms = json::array();
    for (const ImportanceEntry& e : feature_importance(clf).entries) {
        json entry;
        entry["term"] = e.term_string;
        json class_names = json::array();
        for (int c : e.classes)
            class_names.push_back(
                clf.class_labels[static_cast<std::size_t>(c - 1)]);
        entry["classes"] = class_names;
        entry["scores"] = e.scores;
        entry["coefficients"] = e.coefficients;
        entry["best_rank"] = e.best_rank;
        entry["best_score"] = e.best_score;
        terms.push_back(std::move(entry));
    }
    report["terms"] = terms;
    write_text_file(cfg.report_path, report.dump(2) + "\n");

    info("train: fitted " + mode_name(clf.mode) + " model on " +
         std::to_string(split.train.sample_count()) + " rows; model -> " +
         cfg.model_path + ", report -> " + cfg.report_path);
    print_term_table(clf);
}

void cmd_select(const RunConfig& cfg) {
    cfg.validate();
    const MultinomialNarxClassifier clf = load_model(cfg.model_path);
    const CsvSchema schema = effective_schema(cfg);
    const TimeSeriesDataset ds = load_csv(cfg.dataset_path, schema);
    if (ds.labels.empty())
        throw DataError("select requires a labeled dataset");

    std::vector<int> used(clf.channel_names.size(), 0);
    for (int v = 0; v < clf.class_count(); ++v)
        for (const CandidateTerm& term : clf.class_terms(v))
            for (const CandidateTerm::Factor& f : term.factors)
                if (!f.var.is_output)
                    used[static_cast<std::size_t>(f.var.channel)] = 1;
    std::vector<std::string> keep;
    for (std::size_t j = 0; j < used.size(); ++j)
        if (used[j]) keep.push_back(clf.channel_names[j]);
    if (keep.empty())
        throw ConfigError("model uses no input channels; nothing to select");

    TimeSeriesDataset reduced;
    reduced.channel_names = keep;
    reduced.channels.resize(ds.sample_count(),
                            static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        const auto it = std::find(ds.channel_names.begin(),
                                  ds.channel_names.end(), keep[j]);
        if (it == ds.channel_names.end())
            throw DataError("dataset lacks channel '" + keep[j] +
                            "' used by the model");
        reduced.channels.col(static_cast<Eigen::Index>(j)) = ds.channels.col(
            static_cast<Eigen::Index>(it - ds.channel_names.begin()));
    }
    reduced.labels = ds.labels;
    reduced.class_names = ds.class_names;
    reduced.load_state = ds.load_state;
    save_csv(reduced, cfg.output_csv, schema.label_column);
    info("select: kept " + std::to_string(keep.size()) + " of " +
         std::to_string(ds.channel_count()) + " channels -> " + cfg.output_csv);
}

void cmd_evaluate(const RunConfig& cfg) {
    cfg.validate();
    const MultinomialNarxClassifier clf = load_model(cfg.model_path);
    const CsvSchema schema = effective_schema(cfg);
    const TimeSeriesDataset ds = load_csv(cfg.dataset_path, schema);
    if (ds.labels.empty())
        throw DataError("evaluation requires a labeled dataset");
    const SplitResult split = split_dataset(cfg, ds);
    if (!split.held_out)
        info("evaluate: train_fraction is 1, scoring on the training data");
    const TimeSeriesDataset& valid = split.validation;

    json classifiers = json::array();
    std::vector<std::string> lines;

    const PredictionResult pred = predict_with_scores(clf, valid);
    std::vector<int> y_true(valid.labels.begin() + (pred.effective_start - 1),
                            valid.labels.end());
    const ConfusionMatrix cm = confusion(y_true, pred.labels, ds.class_count(),
                                         ds.class_names);
    const MetricReport rep = per_class_metrics(cm);
    {
        json entry;
        entry["name"] = "logistic-narx";
        entry["metrics"] = metrics_to_json(rep);
        entry["per_class"] = per_class_to_json(cm, rep);
        entry["confusion"] = confusion_to_json(cm);
        classifiers.push_back(std::move(entry));
        lines.push_back(metric_line("logistic-narx", rep));
    }

    const bool want_knn = std::count(cfg.baselines.begin(), cfg.baselines.end(),
                                     "knn") > 0;
    const bool want_forest = std::count(cfg.baselines.begin(),
                                        cfg.baselines.end(), "forest") > 0;
    if (want_knn) {
        auto [train_std, scaler] = standardize(split.train);
        const KnnModel knn =
            knn_fit(train_std.channels, split.train.labels, cfg.knn_k);
        const std::vector<int> knn_pred =
            knn_predict(knn, scaler.apply(valid.channels));
        const ConfusionMatrix knn_cm =
            confusion(valid.labels, knn_pred, ds.class_count(), ds.class_names);
        const MetricReport knn_rep = per_class_metrics(knn_cm);
        json entry;
        entry["name"] = "knn";
        entry["k"] = cfg.knn_k;
        entry["metrics"] = metrics_to_json(knn_rep);
        entry["per_class"] = per_class_to_json(knn_cm, knn_rep);
        entry["confusion"] = confusion_to_json(knn_cm);
        classifiers.push_back(std::move(entry));
        lines.push_back(metric_line("knn", knn_rep));
    }
    if (want_forest) {
        const FoldPlan forest_plan =
            make_folds(split.train, cfg.folds, cfg.cv_seed);
        const GridSearchResult gs =
            grid_search(cfg.grid, split.train, forest_plan, cfg.baseline_seed);
        const std::vector<int> rf_pred =
            forest_predict(gs.model, valid.channels);
        const ConfusionMatrix rf_cm =
            confusion(valid.labels, rf_pred, ds.class_count(), ds.class_names);
        const MetricReport rf_rep = per_class_metrics(rf_cm);
        json entry;
        entry["name"] = "random-forest";
        entry["grid_best"] = {
            {"trees", gs.best.trees},
            {"max_depth", gs.best.max_depth},
            {"min_leaf", gs.best.min_leaf},
            {"features_per_split", gs.best.features_per_split}};
        entry["grid_cv_accuracy"] = gs.cv_accuracy;
        entry["metrics"] = metrics_to_json(rf_rep);
        entry["per_class"] = per_class_to_json(rf_cm, rf_rep);
        entry["confusion"] = confusion_to_json(rf_cm);
        classifiers.push_back(std::move(entry));
        lines.push_back(metric_line("random-forest", rf_rep));
    }

    json report;
    report["format_version"] = 1;
    report["kind"] = "evaluation-report";
    report["config_hash"] = config_hash(cfg);
    report["dataset"] = cfg.dataset_path;
    report["metric_names"] = {"Average Accuracy", "Sensitivity", "Specificity",
                              "Precision", "F1 Score"};
    report["rows"] = {{"total", ds.sample_count()},
                      {"train", split.train.sample_count()},
                      {"validation", valid.sample_count()}};
    report["classifiers"] = classifiers;
    write_text_file(cfg.report_path, report.dump(2) + "\n");

    info("evaluate: " + std::to_string(valid.sample_count()) +
         " validation rows; report -> " + cfg.report_path);
    for (const std::string& line : lines) info(line);
}

void cmd_predict(const RunConfig& cfg) {
    cfg.validate();
    const MultinomialNarxClassifier clf = load_model(cfg.model_path);
    CsvSchema schema = effective_schema(cfg);
    const auto header = header_columns(cfg.dataset_path, schema.delimiter);
    if (std::find(header.begin(), header.end(), schema.label_column) ==
        header.end())
        schema.label_column.clear();
    const TimeSeriesDataset ds = load_csv(cfg.dataset_path, schema);
    const PredictionResult pred = predict_with_scores(clf, ds);

    std::ofstream out(cfg.output_csv, std::ios::binary);
    if (!out) throw DataError("cannot write '" + cfg.output_csv + "'");
    out << "row,prediction\n";
    for (std::size_t i = 0; i < pred.labels.size(); ++i)
        out << (pred.effective_start + static_cast<long>(i)) << ','
            << clf.class_labels[static_cast<std::size_t>(pred.labels[i] - 1)]
            << '\n';
    if (!out) throw DataError("failed writing '" + cfg.output_csv + "'");
    std::vector<long> counts(clf.class_labels.size(), 0);
    for (int label : pred.labels)
        ++counts[static_cast<std::size_t>(label - 1)];
    std::ostringstream summary;
    summary << "predict: wrote " << pred.labels.size() << " predictions to "
            << cfg.output_csv << " (";
    for (std::size_t v = 0; v < counts.size(); ++v) {
        if (v) summary << ", ";
        summary << clf.class_labels[v] << "=" << counts[v];
    }
    summary << ")";
    info(summary.str());
}

void cmd_report(const RunConfig& cfg) {
    const MultinomialNarxClassifier clf = load_model(cfg.model_path);
    const ModelProvenance prov = read_provenance(cfg.model_path);
    std::cout << "model: " << cfg.model_path << "\n"
              << "  kind: logistic-narx-multinomial (" << mode_name(clf.mode)
              << " mode, lambda=" << clf.lambda << ")\n"
              << "  classes:";
    for (const std::string& name : clf.class_labels) std::cout << " " << name;
    std::cout << "\n  channels: " << clf.channel_names.size()
              << ", degree " << clf.term_spec.nonlinearity_degree
              << ", output lags " << clf.term_spec.max_output_lag
              << ", input lags " << clf.term_spec.max_input_lag
              << (clf.term_spec.allow_lag_zero_inputs ? " (lag-0 inputs)" : "")
              << "\n  provenance: config " << prov.config_hash << ", seed "
              << prov.seed << "\n";
    const ImportanceReport importance = feature_importance(clf);
    std::cout << "  rank  term                          score     "
                 "coefficients\n";
    int rank = 1;
    for (const ImportanceEntry& entry : importance.entries) {
        std::cout << "  " << std::left << std::setw(6) << rank << std::setw(30)
                  << entry.term_string << std::right << std::fixed
                  << std::setprecision(4) << std::setw(8) << entry.best_score
                  << "  ";
        for (std::size_t i = 0; i < entry.coefficients.size(); ++i) {
            if (i) std::cout << ", ";
            std::cout << clf.class_labels[static_cast<std::size_t>(
                             entry.classes[i] - 1)]
                      << "=" << std::setprecision(3) << entry.coefficients[i];
        }
        std::cout << "\n";
        ++rank;
    }
}

// ------------------------------------------------------------- entry point

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Polynomial NARX multinomial classifier for railway track "
                 "criticality"};
    app.require_subcommand(1);

    std::string config_path, dataset, out_csv, model_path, report_path;
    std::string mode_str, size_rule;
    int k_max = 0, folds = 0, degree = 0, knn_k = 0, sections = 0, samples = 0;
    double lambda = -1.0, train_fraction = -1.0, noise = -1.0, strength = -1.0;
    std::uint64_t sim_seed = 0, split_seed = 0, cv_seed = 0, baseline_seed = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--dataset", dataset, "input dataset CSV");
        sub->add_option("--out", out_csv, "output CSV path");
        sub->add_option("--model", model_path, "model file path");
        sub->add_option("--report", report_path, "report file path");
    };

    CLI::App* sim = app.add_subcommand(
        "simulate", "generate a synthetic labeled railway dataset CSV");
    add_common(sim);
    sim->add_option("--sections", sections, "track section count");
    sim->add_option("--samples", samples, "samples per section");
    sim->add_option("--noise", noise, "noise standard deviation");
    sim->add_option("--strength", strength, "class signal strength");
    sim->add_option("--sim-seed", sim_seed, "generator seed");

    CLI::App* lab = app.add_subcommand(
        "label", "append a criticality column from relief/lv/load columns");
    add_common(lab);

    CLI::App* train = app.add_subcommand(
        "train", "select terms and fit the multinomial classifier");
    add_common(train);
    train->add_option("--k-max", k_max, "maximum selected terms per model");
    train->add_option("--mode", mode_str, "pooled or per-class selection");
    train->add_option("--lambda", lambda, "ridge penalty");
    train->add_option("--degree", degree, "polynomial nonlinearity degree");
    train->add_option("--folds", folds, "cross-validation folds");
    train->add_option("--train-fraction", train_fraction,
                      "training share of the split");
    train->add_option("--size-rule", size_rule,
                      "none, one_std_error, or a fixed size");
    train->add_option("--split-seed", split_seed, "split seed");
    train->add_option("--cv-seed", cv_seed, "fold seed");

    CLI::App* select = app.add_subcommand(
        "select", "write the dataset reduced to channels used by the model");
    add_common(select);

    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "score the model and baselines on the validation split");
    add_common(evaluate);
    evaluate->add_option("--folds", folds, "grid-search folds");
    evaluate->add_option("--train-fraction", train_fraction,
                         "training share of the split");
    evaluate->add_option("--split-seed", split_seed, "split seed");
    evaluate->add_option("--cv-seed", cv_seed, "fold seed");
    evaluate->add_option("--baseline-seed", baseline_seed, "baseline seed");
    evaluate->add_option("--knn-k", knn_k, "neighbour count for KNN");

    CLI::App* predict = app.add_subcommand(
        "predict", "write predicted labels for a dataset");
    add_common(predict);

    CLI::App* report = app.add_subcommand(
        "report", "print a readable summary of a model file");
    add_common(report);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_run_config(config_path);
        if (!dataset.empty()) cfg.dataset_path = dataset;
        if (!out_csv.empty()) cfg.output_csv = out_csv;
        if (!model_path.empty()) cfg.model_path = model_path;
        if (!report_path.empty()) cfg.report_path = report_path;
        if (sim->count("--sections")) cfg.sim.sections = sections;
        if (sim->count("--samples")) cfg.sim.samples_per_section = samples;
        if (sim->count("--noise")) cfg.sim.noise_std = noise;
        if (sim->count("--strength")) cfg.sim.signal_strength = strength;
        if (sim->count("--sim-seed")) cfg.sim.seed = sim_seed;
        if (train->count("--k-max")) cfg.k_max = k_max;
        if (train->count("--mode")) cfg.mode = parse_mode(mode_str);
        if (train->count("--lambda")) cfg.lambda = lambda;
        if (train->count("--degree")) cfg.spec.nonlinearity_degree = degree;
        if (train->count("--folds") || evaluate->count("--folds"))
            cfg.folds = folds;
        if (train->count("--train-fraction") ||
            evaluate->count("--train-fraction"))
            cfg.train_fraction = train_fraction;
        if (train->count("--size-rule")) cfg.size_rule = size_rule;
        if (train->count("--split-seed") || evaluate->count("--split-seed"))
            cfg.split_seed = split_seed;
        if (train->count("--cv-seed") || evaluate->count("--cv-seed"))
            cfg.cv_seed = cv_seed;
        if (evaluate->count("--baseline-seed")) cfg.baseline_seed = baseline_seed;
        if (evaluate->count("--knn-k")) cfg.knn_k = knn_k;

        if (sim->parsed()) cmd_simulate(cfg);
        else if (lab->parsed()) cmd_label(cfg);
        else if (train->parsed()) cmd_train(cfg);
        else if (select->parsed()) cmd_select(cfg);
        else if (evaluate->parsed()) cmd_evaluate(cfg);
        else if (predict->parsed()) cmd_predict(cfg);
        else if (report->parsed()) cmd_report(cfg);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace narx
