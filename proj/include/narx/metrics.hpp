#pragma once

#include "narx/dataset.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace narx {

/// Counts with rows = true class, columns = predicted class.
struct ConfusionMatrix {
    Eigen::MatrixXi counts;
    std::vector<std::string> class_names;

    int class_count() const { return static_cast<int>(counts.rows()); }
    long total() const { return counts.sum(); }
    /// Rows rescaled to percentages (each row sums to ~100 when nonempty).
    Eigen::MatrixXd row_normalized() const;
};

/// Per-class ratios; a zero denominator reports 0 with `*_defined` unset.
struct ClassMetrics {
    double sensitivity = 0.0;
    double specificity = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
    bool sensitivity_defined = false;
    bool specificity_defined = false;
    bool precision_defined = false;
    bool f1_defined = false;
    long support = 0;
};

struct MetricReport {
    std::vector<ClassMetrics> per_class;
    double average_accuracy = 0.0;  // trace / total
    double macro_sensitivity = 0.0;
    double macro_specificity = 0.0;
    double macro_precision = 0.0;
    double macro_f1 = 0.0;
    double weighted_sensitivity = 0.0;
    double weighted_specificity = 0.0;
    double weighted_precision = 0.0;
    double weighted_f1 = 0.0;
};

ConfusionMatrix confusion(const std::vector<int>& y_true,
                          const std::vector<int>& y_pred, int class_count,
                          std::vector<std::string> class_names = {});

MetricReport per_class_metrics(const ConfusionMatrix& cm);

/// Trains on the fold complement and predicts the held-out rows;
/// returns one label per test row.
using FitPredictFn = std::function<std::vector<int>(
    const TimeSeriesDataset& ds, const std::vector<Eigen::Index>& train_rows,
    const std::vector<Eigen::Index>& test_rows)>;

struct CvStat {
    std::vector<double> per_fold;
    double mean = 0.0;
    double stddev = 0.0;
};

struct CvMetrics {
    CvStat average_accuracy;
    CvStat macro_sensitivity;
    CvStat macro_specificity;
    CvStat macro_precision;
    CvStat macro_f1;
    CvStat weighted_precision;
    CvStat weighted_sensitivity;
    CvStat weighted_f1;
    std::vector<int> skipped_folds;  // folds whose training part lacked a class
    std::vector<std::string> warnings;
};

/// k-fold evaluation of an arbitrary training procedure. Folds whose
/// training portion misses a class are skipped with a warning rather
/// than polluting the aggregate.
CvMetrics cross_validate(const FitPredictFn& fit_predict,
                         const TimeSeriesDataset& ds, const FoldPlan& folds);

} // namespace narx
