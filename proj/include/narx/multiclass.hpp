#pragma once

#include "narx/dataset.hpp"
#include "narx/logistic.hpp"
#include "narx/ofr.hpp"
#include "narx/terms.hpp"

#include <optional>
#include <string>
#include <vector>

namespace narx {

enum class FitMode { PerClass, Pooled };

/// One-vs-all composition of per-class logistic models over selected
/// polynomial terms.
///
/// Per-class mode runs an independent selection per class. Pooled mode
/// (the default in the CLI) runs one selection scored by the mean of the
/// per-class 1-D accuracies, so all classes share a single term set and
/// the report carries one row per term; coefficients still differ per
/// class, since C binary models cannot share one parameter vector.
struct MultinomialNarxClassifier {
    std::vector<std::string> class_labels;
    std::vector<std::string> channel_names;  // training channel order
    LagSpec term_spec;
    Standardizer standardizer;
    FitMode mode = FitMode::Pooled;
    double lambda = 1e-4;

    std::vector<SelectionTrace> per_class;  // full traces, one per class
    std::vector<int> model_sizes;           // terms actually used per class
    std::vector<LogisticModel> models;      // f_v over the first model_sizes[v] terms

    int class_count() const { return static_cast<int>(class_labels.size()); }
    /// The terms class v's model consumes (first model_sizes[v] of its trace).
    std::vector<CandidateTerm> class_terms(int v) const;
};

struct FitConfig {
    int k_max = 10;
    FitMode mode = FitMode::Pooled;
    double lambda = 1e-4;
    /// When set, per-class models are cut back to the rule's size and
    /// refit; the traces keep the full CV curve for reporting.
    std::optional<SizeRule> size_rule;
};

/// Builds the standardized term library for `spec` over `ds` and runs
/// selection. `folds` must cover the library's effective rows; use
/// `make_folds(library.labels, ...)` after `effective_labels`.
MultinomialNarxClassifier fit(const TimeSeriesDataset& ds, const LagSpec& spec,
                              const FoldPlan& folds, const FitConfig& config);

/// Labels aligned with `ds` rows from `effective_start` on (1-based).
struct PredictionResult {
    std::vector<int> labels;
    Eigen::MatrixXd proba;  // rows x C, columns are OVA scores, not normalized
    int effective_start = 1;
};

PredictionResult predict_with_scores(const MultinomialNarxClassifier& clf,
                                     const TimeSeriesDataset& ds);

/// Row-wise argmax of the per-class probabilities; ties go to the lowest
/// class index.
std::vector<int> predict(const MultinomialNarxClassifier& clf,
                         const TimeSeriesDataset& ds);

/// Per-class OVA probabilities; rows are not normalized to sum to one.
Eigen::MatrixXd predict_proba(const MultinomialNarxClassifier& clf,
                              const TimeSeriesDataset& ds);

struct ImportanceEntry {
    CandidateTerm term;
    std::string term_string;
    std::vector<int> classes;          // 1-based classes whose model uses it
    std::vector<double> scores;        // per listed class, selection score r
    std::vector<double> coefficients;  // per listed class, fitted theta
    int best_rank = 0;                 // earliest selection step, 1-based
    double best_score = 0.0;
};

struct ImportanceReport {
    std::vector<ImportanceEntry> entries;  // ranked by best per-class score
};

ImportanceReport feature_importance(const MultinomialNarxClassifier& clf);

/// The labels actually regressed on once lags consume the first rows.
std::vector<int> effective_labels(const TimeSeriesDataset& ds,
                                  const LagSpec& spec);

} // namespace narx
