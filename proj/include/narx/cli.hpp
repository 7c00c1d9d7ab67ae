#pragma once

#include "narx/baselines.hpp"
#include "narx/dataset.hpp"
#include "narx/multiclass.hpp"
#include "narx/railway.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace narx {

/// One experiment description: dataset location and schema, term-space
/// bounds, selection settings, split/CV seeds, baselines, output paths.
/// Loaded from a JSON config file; command-line flags override fields.
struct RunConfig {
    // dataset
    std::string dataset_path;
    CsvSchema schema;  // empty input_columns -> simulated channel set

    // term space (input_channels is filled from the dataset at run time)
    LagSpec spec{2, 0, 0, 0, true};

    // selection
    int k_max = 10;
    FitMode mode = FitMode::Pooled;
    double lambda = 1e-4;
    std::string size_rule = "none";  // "none" | "one_std_error" | integer

    // split & cross-validation
    double train_fraction = 0.8;
    std::uint64_t split_seed = 7;
    int folds = 5;
    std::uint64_t cv_seed = 11;

    // synthetic generator
    SimConfig sim;

    // baselines
    std::vector<std::string> baselines = {"knn", "forest"};
    int knn_k = 5;
    ParamGrid grid;
    std::uint64_t baseline_seed = 101;

    // outputs
    std::string model_path = "model.json";
    std::string report_path = "report.json";
    std::string output_csv = "out.csv";

    // column names for the labeling command
    std::string relief_column = "relief";
    std::string lv_column = "lv";
    std::string load_column = "load";

    void validate() const;
};

RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);
/// Canonical JSON rendering; equal configs produce equal text.
std::string run_config_to_json(const RunConfig& cfg);
/// FNV-1a hash of the canonical rendering, as fixed-width hex.
std::string config_hash(const RunConfig& cfg);

// Subcommand bodies. Errors surface as the narx exception types; the
// entry point maps them to exit codes (config 1, data 2, numeric 3).
void cmd_simulate(const RunConfig& cfg);
void cmd_label(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_select(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_predict(const RunConfig& cfg);
void cmd_report(const RunConfig& cfg);

/// Full argv-level entry point (subcommand dispatch, flag overrides,
/// exception-to-exit-code mapping). `args` excludes the program name.
int run_cli(const std::vector<std::string>& args);

} // namespace narx
