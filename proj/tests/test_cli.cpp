#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "narx/cli.hpp"
#include "narx/dataset.hpp"
#include "narx/errors.hpp"
#include "narx/model_io.hpp"
#include "narx/multiclass.hpp"
#include "narx/railway.hpp"
#include "narx/terms.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace narx;

namespace {

// Silence the commands' informational chatter for the whole binary.
const int quiet_logs = [] {
    ::setenv("NARX_LOG", "quiet", 1);
    return 0;
}();

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("narx-cli-test-" + std::to_string(++counter) + "-" +
                std::to_string(static_cast<unsigned>(::getpid())));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    REQUIRE(out.good());
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::vector<std::string> fields_of(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.push_back(sep);
        out += parts[i];
    }
    return out;
}

SimConfig small_sim(std::uint64_t seed) {
    SimConfig sim;
    sim.sections = 4;
    sim.samples_per_section = 30;
    sim.signal_strength = 1.6;
    sim.noise_std = 0.6;
    sim.seed = seed;
    return sim;
}

CsvSchema simulated_schema() {
    CsvSchema schema;
    schema.input_columns = simulated_channel_names();
    schema.label_column = "criticality";
    schema.class_names = criticality_names();
    return schema;
}

// Config for fast but non-trivial training runs on simulated data.
RunConfig quick_train_config(const TempDir& dir, const std::string& data_csv) {
    RunConfig cfg;
    cfg.dataset_path = data_csv;
    cfg.spec.nonlinearity_degree = 1;
    cfg.k_max = 3;
    cfg.folds = 3;
    cfg.model_path = dir.file("model.json");
    cfg.report_path = dir.file("report.json");
    cfg.output_csv = dir.file("out.csv");
    return cfg;
}

// Independent restatement of the criticality rule used by `label`:
// count band edges passed, then escalate to the worse of the two verdicts.
Criticality reference_label(double relief, double lv, bool loaded) {
    int relief_level = 0;
    for (double edge : {50.0, 60.0, 85.0})
        if (relief >= edge) ++relief_level;
    const Criticality relief_map[4] = {Criticality::Normal, Criticality::P2,
                                       Criticality::P1, Criticality::P0};
    Criticality from_lv;
    if (loaded) {
        const int level = (lv > 0.6 ? 1 : 0) + (lv >= 0.8 ? 1 : 0);
        const Criticality map[3] = {Criticality::Normal, Criticality::P1,
                                    Criticality::P0};
        from_lv = map[level];
    } else {
        const int level =
            (lv > 0.6 ? 1 : 0) + (lv >= 0.8 ? 1 : 0) + (lv >= 1.0 ? 1 : 0);
        const Criticality map[4] = {Criticality::Normal, Criticality::P2,
                                    Criticality::P1, Criticality::P0};
        from_lv = map[level];
    }
    return std::max(relief_map[relief_level], from_lv);
}

} // namespace

TEST_CASE("empty config document yields the documented defaults") {
    const RunConfig cfg = run_config_from_json("{}");
    CHECK(cfg.dataset_path.empty());
    CHECK(cfg.schema.input_columns.empty());
    CHECK(cfg.schema.label_column.empty());
    CHECK(cfg.schema.delimiter == ',');
    CHECK_FALSE(cfg.schema.drop_bad_rows);
    CHECK(cfg.spec.nonlinearity_degree == 2);
    CHECK(cfg.spec.max_output_lag == 0);
    CHECK(cfg.spec.max_input_lag == 0);
    CHECK(cfg.spec.allow_lag_zero_inputs);
    CHECK(cfg.k_max == 10);
    CHECK(cfg.mode == FitMode::Pooled);
    CHECK(cfg.lambda == 1e-4);
    CHECK(cfg.size_rule == "none");
    CHECK(cfg.train_fraction == 0.8);
    CHECK(cfg.split_seed == 7);
    CHECK(cfg.folds == 5);
    CHECK(cfg.cv_seed == 11);
    CHECK(cfg.baselines == std::vector<std::string>{"knn", "forest"});
    CHECK(cfg.knn_k == 5);
    CHECK(cfg.baseline_seed == 101);
    CHECK(cfg.model_path == "model.json");
    CHECK(cfg.report_path == "report.json");
    CHECK(cfg.output_csv == "out.csv");
    CHECK(cfg.relief_column == "relief");
    CHECK(cfg.lv_column == "lv");
    CHECK(cfg.load_column == "load");
}

TEST_CASE("full config document reaches every field") {
    const char* text = R"({
      "dataset": {"path": "d.csv", "input_columns": ["a", "b"],
                  "label_column": "y", "load_column": "ld",
                  "class_names": ["c1", "c2"], "delimiter": ";",
                  "drop_bad_rows": true},
      "terms": {"nonlinearity_degree": 3, "max_output_lag": 1,
                "max_input_lag": 2, "allow_lag_zero_inputs": false},
      "selection": {"k_max": 4, "mode": "per-class", "lambda": 0.5,
                    "size_rule": "one_std_error"},
      "split": {"train_fraction": 0.7, "seed": 99},
      "cv": {"folds": 4, "seed": 13},
      "simulate": {"sections": 3, "samples_per_section": 20,
                   "mixture": [0.1, 0.2, 0.3, 0.4], "signal_channels": [1, 2],
                   "signal_strength": 2.0, "noise_std": 0.5, "seed": 21},
      "baselines": {"enabled": ["knn"], "knn_k": 7,
                    "grid": {"trees": [5], "max_depth": [2], "min_leaf": [1],
                             "features_per_split": [0]},
                    "seed": 3},
      "output": {"model": "m.json", "report": "r.json", "csv": "c.csv"},
      "label_columns": {"relief": "R", "lv": "L", "load": "W"}
    })";
    const RunConfig cfg = run_config_from_json(text);
    CHECK(cfg.dataset_path == "d.csv");
    CHECK(cfg.schema.input_columns == std::vector<std::string>{"a", "b"});
    CHECK(cfg.schema.label_column == "y");
    CHECK(cfg.schema.load_column == "ld");
    CHECK(cfg.schema.class_names == std::vector<std::string>{"c1", "c2"});
    CHECK(cfg.schema.delimiter == ';');
    CHECK(cfg.schema.drop_bad_rows);
    CHECK(cfg.spec.nonlinearity_degree == 3);
    CHECK(cfg.spec.max_output_lag == 1);
    CHECK(cfg.spec.max_input_lag == 2);
    CHECK_FALSE(cfg.spec.allow_lag_zero_inputs);
    CHECK(cfg.k_max == 4);
    CHECK(cfg.mode == FitMode::PerClass);
    CHECK(cfg.lambda == 0.5);
    CHECK(cfg.size_rule == "one_std_error");
    CHECK(cfg.train_fraction == 0.7);
    CHECK(cfg.split_seed == 99);
    CHECK(cfg.folds == 4);
    CHECK(cfg.cv_seed == 13);
    CHECK(cfg.sim.sections == 3);
    CHECK(cfg.sim.samples_per_section == 20);
    CHECK(cfg.sim.mixture == std::array<double, 4>{0.1, 0.2, 0.3, 0.4});
    CHECK(cfg.sim.signal_channels == std::vector<int>{1, 2});
    CHECK(cfg.sim.signal_strength == 2.0);
    CHECK(cfg.sim.noise_std == 0.5);
    CHECK(cfg.sim.seed == 21);
    CHECK(cfg.baselines == std::vector<std::string>{"knn"});
    CHECK(cfg.knn_k == 7);
    CHECK(cfg.grid.trees == std::vector<int>{5});
    CHECK(cfg.grid.max_depth == std::vector<int>{2});
    CHECK(cfg.grid.min_leaf == std::vector<int>{1});
    CHECK(cfg.grid.features_per_split == std::vector<int>{0});
    CHECK(cfg.baseline_seed == 3);
    CHECK(cfg.model_path == "m.json");
    CHECK(cfg.report_path == "r.json");
    CHECK(cfg.output_csv == "c.csv");
    CHECK(cfg.relief_column == "R");
    CHECK(cfg.lv_column == "L");
    CHECK(cfg.load_column == "W");

    // Both spellings of the per-class mode and the integer size-rule form.
    CHECK(run_config_from_json(R"({"selection": {"mode": "per_class"}})").mode ==
          FitMode::PerClass);
    CHECK(run_config_from_json(R"({"selection": {"size_rule": 2}})").size_rule ==
          "2");
}

TEST_CASE("malformed config documents are rejected") {
    CHECK_THROWS_AS(run_config_from_json("{not json"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json("[1, 2]"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"datasets": {}})"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"selection": {"kmax": 3}})"),
                    ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"selection": {"k_max": "three"}})"),
                    ConfigError);
    CHECK_THROWS_AS(
        run_config_from_json(R"({"dataset": {"delimiter": "::"}})"),
        ConfigError);
    CHECK_THROWS_AS(
        run_config_from_json(R"({"simulate": {"mixture": [0.5, 0.3, 0.2]}})"),
        ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"selection": {"mode": "banana"}})"),
                    ConfigError);
    // Field validation runs as part of parsing.
    CHECK_THROWS_AS(run_config_from_json(R"({"split": {"train_fraction": 0}})"),
                    ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"cv": {"folds": 1}})"),
                    ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"selection": {"lambda": -1}})"),
                    ConfigError);
    CHECK_THROWS_AS(
        run_config_from_json(R"({"selection": {"size_rule": "sometimes"}})"),
        ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"selection": {"size_rule": 0}})"),
                    ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"selection": {"size_rule": -2}})"),
                    ConfigError);
    CHECK_THROWS_AS(
        run_config_from_json(R"({"baselines": {"enabled": ["svm"]}})"),
        ConfigError);
}

TEST_CASE("direct validation bounds") {
    RunConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.size_rule = "3";
    CHECK_NOTHROW(cfg.validate());

    RunConfig bad = cfg;
    bad.train_fraction = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.k_max = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.knn_k = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.spec.nonlinearity_degree = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("canonical rendering round-trips and hashes stably") {
    RunConfig a;
    a.dataset_path = "runs/data.csv";
    a.k_max = 6;
    const std::string text = run_config_to_json(a);
    REQUIRE_FALSE(text.empty());
    CHECK(text.back() == '\n');

    // Parse-then-render reproduces the exact canonical text.
    const RunConfig b = run_config_from_json(text);
    CHECK(run_config_to_json(b) == text);
    CHECK(config_hash(b) == config_hash(a));

    const std::string h = config_hash(a);
    CHECK(h.size() == 16);
    for (char c : h)
        CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));

    RunConfig c = a;
    c.k_max = 7;
    CHECK(config_hash(c) != h);
}

TEST_CASE("simulate writes a CSV that reloads to the exact dataset") {
    TempDir dir;
    RunConfig cfg;
    cfg.sim = small_sim(123);
    cfg.output_csv = dir.file("sim.csv");
    cmd_simulate(cfg);

    const TimeSeriesDataset direct = simulate_dataset(cfg.sim);
    const TimeSeriesDataset loaded =
        load_csv(cfg.output_csv, simulated_schema());
    CHECK(loaded.channel_names == direct.channel_names);
    CHECK(loaded.class_names == direct.class_names);
    CHECK(loaded.labels == direct.labels);
    // Numbers are written in shortest round-trip form, so the reload is exact.
    CHECK(loaded.channels == direct.channels);

    const auto lines = read_lines(cfg.output_csv);
    REQUIRE(lines.size() ==
            1 + static_cast<std::size_t>(direct.sample_count()));
    CHECK(lines[0] == join(simulated_channel_names(), ',') + ",criticality");
}

TEST_CASE("label reproduces the banded criticality rules") {
    TempDir dir;
    const std::vector<std::string> relief_vals = {"0",  "49.9", "50",  "59.9",
                                                  "60", "84.9", "85", "100"};
    const std::vector<std::string> lv_vals = {"0",    "0.6", "0.7", "0.8",
                                              "0.95", "1",   "1.2"};
    std::ostringstream in;
    in << "relief,lv,load\n";
    for (const std::string& r : relief_vals)
        for (const std::string& l : lv_vals)
            for (const char* w : {"loaded", "empty"})
                in << r << ',' << l << ',' << w << '\n';
    const std::string in_path = dir.file("bands.csv");
    spit(in_path, in.str());

    RunConfig cfg;
    cfg.dataset_path = in_path;
    cfg.output_csv = dir.file("labeled.csv");
    cmd_label(cfg);

    const auto lines = read_lines(cfg.output_csv);
    REQUIRE(lines.size() == 1 + relief_vals.size() * lv_vals.size() * 2);
    CHECK(lines[0] == "relief,lv,load,criticality");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = fields_of(lines[i]);
        REQUIRE(f.size() == 4);
        const double relief = std::stod(f[0]);
        const double lv = std::stod(f[1]);
        REQUIRE((f[2] == "loaded" || f[2] == "empty"));
        const Criticality expect =
            reference_label(relief, lv, f[2] == "loaded");
        CHECK(f[3] == to_string(expect));
    }
}

TEST_CASE("label honours custom column names and rejects bad rows") {
    TempDir dir;
    const std::string renamed = dir.file("renamed.csv");
    spit(renamed, "R,L,W\n55,0.61,loaded\n");
    RunConfig cfg;
    cfg.dataset_path = renamed;
    cfg.output_csv = dir.file("renamed-out.csv");
    cfg.relief_column = "R";
    cfg.lv_column = "L";
    cfg.load_column = "W";
    cmd_label(cfg);
    const auto lines = read_lines(cfg.output_csv);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "R,L,W,criticality");
    CHECK(fields_of(lines[1])[3] == "P1");

    const std::string bad_lv = dir.file("bad-lv.csv");
    spit(bad_lv, "relief,lv,load\n40,-0.1,empty\n");
    RunConfig bad;
    bad.dataset_path = bad_lv;
    bad.output_csv = dir.file("bad-lv-out.csv");
    CHECK_THROWS_AS(cmd_label(bad), DataError);

    const std::string bad_relief = dir.file("bad-relief.csv");
    spit(bad_relief, "relief,lv,load\n140,0.1,empty\n");
    bad.dataset_path = bad_relief;
    CHECK_THROWS_AS(cmd_label(bad), DataError);

    const std::string no_load = dir.file("no-load.csv");
    spit(no_load, "relief,lv\n40,0.1\n");
    bad.dataset_path = no_load;
    CHECK_THROWS_AS(cmd_label(bad), DataError);
}

TEST_CASE("train writes a deterministic model and a structured report") {
    TempDir dir;
    RunConfig sim_cfg;
    sim_cfg.sim = small_sim(7);
    sim_cfg.output_csv = dir.file("sim.csv");
    cmd_simulate(sim_cfg);

    RunConfig cfg = quick_train_config(dir, sim_cfg.output_csv);
    cmd_train(cfg);

    const std::string model_text = slurp(cfg.model_path);
    const json model = json::parse(model_text);
    CHECK(model["format_version"] == 1);
    CHECK(model["kind"] == "logistic-narx-multinomial");
    CHECK(model["provenance"]["config_hash"] == config_hash(cfg));
    CHECK(model["provenance"]["seed"] == cfg.split_seed);

    const json report = json::parse(slurp(cfg.report_path));
    CHECK(report["format_version"] == 1);
    CHECK(report["kind"] == "training-report");
    CHECK(report["config_hash"] == config_hash(cfg));
    CHECK(report["mode"] == "pooled");
    CHECK(report["class_labels"].get<std::vector<std::string>>() ==
          criticality_names());
    CHECK(report["rows"]["total"] == 120);
    CHECK(report["rows"]["train"] == 96);  // round(0.8 * 120)
    CHECK(report["rows"]["validation"] == 24);
    CHECK(report["rows"]["effective"] == 96);  // static terms keep every row
    // Degree-1, lag-0-only library over the 18 channels.
    CHECK(report["candidate_terms"] == 18);

    REQUIRE(report["selection"].size() == 4);
    for (const json& entry : report["selection"]) {
        const auto steps = entry["steps"];
        REQUIRE(!steps.empty());
        CHECK(steps.size() <= 3);
        CHECK(entry["model_size"] == steps.size());  // size_rule "none"
        const int suggested = entry["suggested_size_one_std_error"];
        CHECK(suggested >= 1);
        CHECK(suggested <= static_cast<int>(steps.size()));
        for (std::size_t s = 0; s < steps.size(); ++s) {
            CHECK(steps[s]["step"] == s + 1);
            CHECK_FALSE(steps[s]["term"].get<std::string>().empty());
            const double score = steps[s]["score"];
            const double mean = steps[s]["cv_mean"];
            const double stddev = steps[s]["cv_std"];
            CHECK(score >= 0.0);
            CHECK(score <= 1.0);
            CHECK(mean >= 0.0);
            CHECK(mean <= 1.0);
            CHECK(stddev >= 0.0);
        }
        CHECK(entry["eliminated_candidates"].get<long>() >= 0);
        CHECK(entry["warnings"].is_array());
    }

    REQUIRE(!report["terms"].empty());
    double last_best = 2.0;
    for (const json& term : report["terms"]) {
        CHECK_FALSE(term["term"].get<std::string>().empty());
        CHECK(term["classes"].size() == term["scores"].size());
        CHECK(term["classes"].size() == term["coefficients"].size());
        CHECK(term["best_rank"].get<int>() >= 1);
        const double best = term["best_score"];
        CHECK(best <= last_best);
        last_best = best;
    }

    // Re-running the identical configuration reproduces both files exactly.
    cmd_train(cfg);
    CHECK(slurp(cfg.model_path) == model_text);
    CHECK(json::parse(slurp(cfg.report_path)) == report);
}

TEST_CASE("saved models reload with identical behaviour") {
    TempDir dir;
    const TimeSeriesDataset ds = simulate_dataset(small_sim(31));
    LagSpec spec{1, 0, 0, static_cast<int>(ds.channel_count()), true};
    const FoldPlan plan = make_folds(effective_labels(ds, spec), 3, 11);
    FitConfig fit_cfg;
    fit_cfg.k_max = 2;
    const MultinomialNarxClassifier clf = fit(ds, spec, plan, fit_cfg);

    const std::string path = dir.file("model.json");
    save_model(clf, path, {"0123456789abcdef", 42});
    const MultinomialNarxClassifier loaded = load_model(path);

    const PredictionResult before = predict_with_scores(clf, ds);
    const PredictionResult after = predict_with_scores(loaded, ds);
    CHECK(after.effective_start == before.effective_start);
    CHECK(after.labels == before.labels);
    CHECK(after.proba == before.proba);

    const ModelProvenance prov = read_provenance(path);
    CHECK(prov.config_hash == "0123456789abcdef");
    CHECK(prov.seed == 42);

    // Serializing the reloaded model reproduces the file byte for byte.
    CHECK(model_to_json(loaded, prov) == slurp(path));
}

TEST_CASE("predict writes one aligned row per usable sample") {
    TempDir dir;
    RunConfig sim_cfg;
    sim_cfg.sim = small_sim(19);
    sim_cfg.output_csv = dir.file("sim.csv");
    cmd_simulate(sim_cfg);

    RunConfig cfg = quick_train_config(dir, sim_cfg.output_csv);
    cfg.k_max = 2;
    cmd_train(cfg);
    cfg.output_csv = dir.file("pred.csv");
    cmd_predict(cfg);

    const MultinomialNarxClassifier clf = load_model(cfg.model_path);
    const TimeSeriesDataset ds = load_csv(sim_cfg.output_csv, simulated_schema());
    const PredictionResult pred = predict_with_scores(clf, ds);

    const auto lines = read_lines(cfg.output_csv);
    REQUIRE(lines.size() == 1 + pred.labels.size());
    CHECK(lines[0] == "row,prediction");
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        const auto f = fields_of(lines[1 + i]);
        REQUIRE(f.size() == 2);
        CHECK(f[0] == std::to_string(pred.effective_start +
                                     static_cast<long>(i)));
        CHECK(f[1] == clf.class_labels[static_cast<std::size_t>(
                          pred.labels[i] - 1)]);
    }

    // A dataset without the label column predicts identically.
    std::ostringstream stripped;
    for (const std::string& line : read_lines(sim_cfg.output_csv))
        stripped << line.substr(0, line.rfind(',')) << '\n';
    const std::string unlabeled = dir.file("unlabeled.csv");
    spit(unlabeled, stripped.str());
    RunConfig cfg2 = cfg;
    cfg2.dataset_path = unlabeled;
    cfg2.output_csv = dir.file("pred2.csv");
    cmd_predict(cfg2);
    CHECK(slurp(cfg2.output_csv) == slurp(cfg.output_csv));
}

TEST_CASE("select keeps exactly the channels the model references") {
    TempDir dir;
    RunConfig sim_cfg;
    sim_cfg.sim = small_sim(47);
    sim_cfg.output_csv = dir.file("sim.csv");
    cmd_simulate(sim_cfg);

    RunConfig cfg = quick_train_config(dir, sim_cfg.output_csv);
    cmd_train(cfg);
    cfg.output_csv = dir.file("reduced.csv");
    cmd_select(cfg);

    const MultinomialNarxClassifier clf = load_model(cfg.model_path);
    std::vector<int> used(clf.channel_names.size(), 0);
    for (int v = 0; v < clf.class_count(); ++v)
        for (const CandidateTerm& term : clf.class_terms(v))
            for (const CandidateTerm::Factor& f : term.factors)
                if (!f.var.is_output)
                    used[static_cast<std::size_t>(f.var.channel)] = 1;
    std::vector<std::string> kept;
    for (std::size_t j = 0; j < used.size(); ++j)
        if (used[j]) kept.push_back(clf.channel_names[j]);
    REQUIRE(!kept.empty());

    const auto lines = read_lines(cfg.output_csv);
    CHECK(lines[0] == join(kept, ',') + ",criticality");

    // The reduced dataset carries the original columns unchanged.
    CsvSchema reduced_schema;
    reduced_schema.input_columns = kept;
    reduced_schema.label_column = "criticality";
    reduced_schema.class_names = criticality_names();
    const TimeSeriesDataset reduced = load_csv(cfg.output_csv, reduced_schema);
    const TimeSeriesDataset full =
        load_csv(sim_cfg.output_csv, simulated_schema());
    REQUIRE(reduced.sample_count() == full.sample_count());
    CHECK(reduced.labels == full.labels);
    for (std::size_t j = 0; j < kept.size(); ++j) {
        const auto it = std::find(full.channel_names.begin(),
                                  full.channel_names.end(), kept[j]);
        REQUIRE(it != full.channel_names.end());
        CHECK(reduced.channels.col(static_cast<Eigen::Index>(j)) ==
              full.channels.col(it - full.channel_names.begin()));
    }

    // Retraining on the reduced file round-trips through the same pipeline.
    RunConfig retrain = quick_train_config(dir, cfg.output_csv);
    retrain.schema.input_columns = kept;
    retrain.model_path = dir.file("model2.json");
    retrain.report_path = dir.file("report2.json");
    cmd_train(retrain);
    CHECK(json::parse(slurp(retrain.model_path))["kind"] ==
          "logistic-narx-multinomial");
}

TEST_CASE("evaluate reports the model and both baselines") {
    TempDir dir;
    RunConfig sim_cfg;
    sim_cfg.sim = small_sim(23);
    sim_cfg.output_csv = dir.file("sim.csv");
    cmd_simulate(sim_cfg);

    RunConfig cfg = quick_train_config(dir, sim_cfg.output_csv);
    cfg.k_max = 2;
    cmd_train(cfg);

    cfg.knn_k = 3;
    cfg.grid.trees = {15};
    cfg.grid.max_depth = {4};
    cfg.grid.min_leaf = {1};
    cfg.grid.features_per_split = {0};
    cmd_evaluate(cfg);

    const json report = json::parse(slurp(cfg.report_path));
    CHECK(report["format_version"] == 1);
    CHECK(report["kind"] == "evaluation-report");
    CHECK(report["config_hash"] == config_hash(cfg));
    CHECK(report["metric_names"].get<std::vector<std::string>>() ==
          std::vector<std::string>{"Average Accuracy", "Sensitivity",
                                   "Specificity", "Precision", "F1 Score"});
    CHECK(report["rows"]["total"] == 120);
    CHECK(report["rows"]["train"] == 96);
    CHECK(report["rows"]["validation"] == 24);

    REQUIRE(report["classifiers"].size() == 3);
    CHECK(report["classifiers"][0]["name"] == "logistic-narx");
    CHECK(report["classifiers"][1]["name"] == "knn");
    CHECK(report["classifiers"][1]["k"] == 3);
    CHECK(report["classifiers"][2]["name"] == "random-forest");
    CHECK(report["classifiers"][2]["grid_best"]["trees"] == 15);
    const double grid_acc = report["classifiers"][2]["grid_cv_accuracy"];
    CHECK(grid_acc >= 0.0);
    CHECK(grid_acc <= 1.0);

    for (const json& entry : report["classifiers"]) {
        const json& metrics = entry["metrics"];
        const double acc = metrics["average_accuracy"];
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
        for (const char* flavour : {"macro", "weighted"})
            for (const char* key : {"sensitivity", "specificity", "precision",
                                    "f1"})
                CHECK(metrics[flavour][key].is_number());

        REQUIRE(entry["per_class"].size() == 4);
        for (const json& pc : entry["per_class"]) {
            CHECK(pc["support"].get<long>() >= 0);
            for (const char* key :
                 {"sensitivity_defined", "specificity_defined",
                  "precision_defined", "f1_defined"})
                CHECK(pc[key].is_boolean());
        }

        const json& confusion = entry["confusion"];
        CHECK(confusion["class_names"].get<std::vector<std::string>>() ==
              criticality_names());
        long total = 0;
        REQUIRE(confusion["counts"].size() == 4);
        for (const json& row : confusion["counts"]) {
            REQUIRE(row.size() == 4);
            for (const json& cell : row) total += cell.get<long>();
        }
        CHECK(total == 24);  // every validation row is scored
        for (const json& row : confusion["row_percent"]) {
            double sum = 0.0;
            for (const json& cell : row) sum += cell.get<double>();
            CHECK((sum == doctest::Approx(100.0).epsilon(1e-9) ||
                   sum == doctest::Approx(0.0)));
        }
    }
}

TEST_CASE("report prints a readable model summary") {
    TempDir dir;
    RunConfig sim_cfg;
    sim_cfg.sim = small_sim(29);
    sim_cfg.output_csv = dir.file("sim.csv");
    cmd_simulate(sim_cfg);
    RunConfig cfg = quick_train_config(dir, sim_cfg.output_csv);
    cfg.k_max = 2;
    cmd_train(cfg);

    std::ostringstream captured;
    std::streambuf* saved = std::cout.rdbuf(captured.rdbuf());
    cmd_report(cfg);
    std::cout.rdbuf(saved);

    const std::string text = captured.str();
    CHECK(text.find("logistic-narx-multinomial") != std::string::npos);
    CHECK(text.find("pooled") != std::string::npos);
    CHECK(text.find("rank") != std::string::npos);
    for (const std::string& name : criticality_names())
        CHECK(text.find(name) != std::string::npos);
    CHECK(text.find(config_hash(cfg)) != std::string::npos);
}

TEST_CASE("command line maps failures to distinct exit codes") {
    TempDir dir;
    std::ostringstream sink;
    std::streambuf* saved_out = std::cout.rdbuf(sink.rdbuf());
    std::streambuf* saved_err = std::cerr.rdbuf(sink.rdbuf());

    const std::string sim = dir.file("sim.csv");
    CHECK(run_cli({"simulate", "--out", sim, "--sections", "3", "--samples",
                   "12", "--noise", "0.8", "--sim-seed", "5"}) == 0);
    CHECK(read_lines(sim).size() == 1 + 36);

    CHECK(run_cli({}) == 1);                    // a subcommand is required
    CHECK(run_cli({"bogus"}) == 1);             // unknown subcommand
    CHECK(run_cli({"--help"}) == 0);
    CHECK(run_cli({"train", "--config", dir.file("missing.json")}) == 1);
    CHECK(run_cli({"train", "--dataset", dir.file("absent.csv")}) == 2);
    CHECK(run_cli({"evaluate", "--dataset", sim, "--model",
                   dir.file("no-model.json")}) == 2);

    const std::string bad_cfg = dir.file("bad.json");
    spit(bad_cfg, R"({"selection": {"k_max": 0}})");
    CHECK(run_cli({"train", "--config", bad_cfg}) == 1);

    // All-zero channels leave no usable candidate terms.
    std::ostringstream zeros;
    zeros << "a,b,y\n";
    for (int i = 0; i < 12; ++i)
        zeros << "0,0," << (i % 2 ? "B" : "A") << '\n';
    const std::string zeros_csv = dir.file("zeros.csv");
    spit(zeros_csv, zeros.str());
    const std::string zeros_cfg = dir.file("zeros-config.json");
    spit(zeros_cfg, std::string(R"({
      "dataset": {"path": ")") + zeros_csv + R"(", "input_columns": ["a", "b"],
                  "label_column": "y", "class_names": ["A", "B"]},
      "terms": {"nonlinearity_degree": 1},
      "selection": {"k_max": 1},
      "split": {"train_fraction": 1.0},
      "cv": {"folds": 3},
      "output": {"model": ")" + dir.file("z-model.json") + R"(",
                 "report": ")" + dir.file("z-report.json") + R"("}
    })");
    CHECK(run_cli({"train", "--config", zeros_cfg}) == 3);

    // Flag overrides on a successful run.
    const std::string model = dir.file("cli-model.json");
    const std::string report = dir.file("cli-report.json");
    CHECK(run_cli({"train", "--dataset", sim, "--k-max", "2", "--degree", "1",
                   "--folds", "3", "--model", model, "--report", report}) == 0);

    std::cout.rdbuf(saved_out);
    std::cerr.rdbuf(saved_err);

    const MultinomialNarxClassifier clf = load_model(model);
    CHECK(clf.class_count() == 4);
    CHECK(json::parse(slurp(report))["kind"] == "training-report");
}
