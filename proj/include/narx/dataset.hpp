#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace narx {

enum class LoadState : int { Loaded = 0, Empty = 1 };

/// Named multichannel time series with a categorical output sequence.
///
/// Channels are the columns of `channels` (N rows, one per sample).
/// Labels take values 1..C; `class_names[v-1]` is the name of class v.
/// `labels` may be empty for prediction-only data. `load_state` is either
/// empty or has one entry per sample.
struct TimeSeriesDataset {
    std::vector<std::string> channel_names;
    Eigen::MatrixXd channels;              // N x p
    std::vector<int> labels;               // values in 1..C, or empty
    std::vector<std::string> class_names;  // size C
    std::vector<LoadState> load_state;     // empty or size N

    Eigen::Index sample_count() const { return channels.rows(); }
    Eigen::Index channel_count() const { return channels.cols(); }
    int class_count() const { return static_cast<int>(class_names.size()); }

    /// Throws DataError if any structural invariant is violated
    /// (length mismatches, labels out of 1..C, non-finite channel values).
    void validate() const;
};

/// Column mapping for CSV ingestion.
///
/// `class_names` fixes the label-string -> 1..C mapping (order = class
/// index order). When empty the mapping is inferred from the data as the
/// sorted set of distinct label strings. `label_column` may be empty for
/// prediction-only files. When `drop_bad_rows` is set, rows with
/// non-finite or non-numeric input cells are dropped instead of rejected.
struct CsvSchema {
    std::vector<std::string> input_columns;
    std::string label_column;
    std::string load_column;               // optional
    std::vector<std::string> class_names;  // optional explicit mapping
    char delimiter = ',';
    bool drop_bad_rows = false;
};

/// Partition of sample indices 0..N-1 into k stratified folds.
///
/// Fold sizes differ by at most one and per-fold class counts are within
/// one of the proportional share. Deterministic for a fixed seed.
struct FoldPlan {
    int k = 0;
    std::vector<int> assignments;  // sample index -> fold id in 0..k-1
    std::uint64_t seed = 0;

    std::vector<Eigen::Index> fold_indices(int fold) const;
    std::vector<Eigen::Index> complement_indices(int fold) const;
};

/// Per-channel affine transform x -> (x - mean) / std.
///
/// Population (1/N) standard deviation; constant channels store std 1 so
/// they pass through centered.
struct Standardizer {
    Eigen::VectorXd means;
    Eigen::VectorXd stds;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd invert(const Eigen::MatrixXd& x) const;
};

TimeSeriesDataset load_csv(const std::string& path, const CsvSchema& schema);
void save_csv(const TimeSeriesDataset& ds, const std::string& path,
              const std::string& label_column = "label");

/// Stratified, seeded split into (train, validation) with
/// |train| = round(train_fraction * N). Every class lands in both parts.
std::pair<TimeSeriesDataset, TimeSeriesDataset>
train_validation_split(const TimeSeriesDataset& ds, double train_fraction,
                       std::uint64_t seed);

FoldPlan make_folds(const TimeSeriesDataset& ds, int k, std::uint64_t seed);

/// Stratified fold assignment over an arbitrary label vector (values 1..C).
FoldPlan make_folds(const std::vector<int>& labels, int k, std::uint64_t seed);

std::pair<TimeSeriesDataset, Standardizer>
standardize(const TimeSeriesDataset& ds);

/// Dataset restricted to the given rows, order preserved. Lag-based terms
/// lose their meaning across subset boundaries; callers doing
/// cross-validation on lagged models should subset design-matrix rows
/// instead.
TimeSeriesDataset dataset_subset(const TimeSeriesDataset& ds,
                                 const std::vector<Eigen::Index>& rows);

} // namespace narx
