#pragma once

#include "narx/dataset.hpp"
#include "narx/logistic.hpp"
#include "narx/terms.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace narx {

/// Squared-norm threshold below which an orthogonalized candidate is
/// dropped as collinear with the selected terms.
inline constexpr double kEliminationThreshold = 1e-10;

/// Orthonormal basis built from the selected candidates, one column per
/// selection step.
struct OrthogonalBasis {
    Eigen::MatrixXd columns;  // N_eff x s

    Eigen::Index size() const { return columns.cols(); }
    void append(const Eigen::VectorXd& q);
    /// max |q_i . q_j| over i != j; test hook for the orthogonality
    /// invariant.
    double max_off_diagonal() const;
};

/// Unit-normalized copy of the column, or nullopt for a (numerically)
/// zero column, which callers treat as removable.
std::optional<Eigen::VectorXd> normalize_column(const Eigen::VectorXd& phi);

/// Residual of phi against the basis via modified Gram-Schmidt; runs a
/// second pass when the first leaves a projection above 1e-10.
Eigen::VectorXd orthogonalize(const Eigen::VectorXd& phi,
                              const OrthogonalBasis& basis);

struct SelectedTerm {
    int term_index = -1;  // column in the source library
    CandidateTerm term;
    double score = 0.0;   // accuracy of the 1-D fit at selection time
};

struct CvSummary {
    double mean = 0.0;
    double stddev = 0.0;
};

/// Ordered outcome of a greedy selection run.
struct SelectionTrace {
    std::vector<SelectedTerm> selected;
    std::vector<CvSummary> cv_accuracy_per_step;
    std::vector<int> eliminated;  // term indices removed as collinear
    LogisticModel final_model;    // refit on the selected original columns
    std::vector<std::string> warnings;

    std::vector<int> selected_indices() const;
};

/// Scores a unit-norm orthogonalized candidate column.
using CandidateScorer = std::function<double(const Eigen::VectorXd&)>;
/// Cross-validates a refit on the selected original columns.
using StepEvaluator = std::function<CvSummary(const Eigen::MatrixXd&)>;

/// Greedy forward selection: per step, orthogonalize every surviving
/// candidate against the basis, drop near-zero residuals, score the
/// rest, take the argmax (ties -> lowest index), grow the basis with the
/// winner's orthonormalized residual and cross-validate the refit on the
/// original columns. Scoring and refitting are injected so binary and
/// pooled multiclass selection share the loop.
SelectionTrace run_greedy_selection(const TermLibrary& library, int k_max,
                                    const CandidateScorer& score,
                                    const StepEvaluator& evaluate_step);

/// Binary Logistic-NARX selection: candidates scored by 1-D logistic
/// accuracy against y, per-step k-fold CV of the refit on the selected
/// original columns. The final model is refit on those columns so its
/// coefficients refer to the named terms, not the orthogonal images.
SelectionTrace select_terms(const TermLibrary& library,
                            const Eigen::VectorXd& y_binary, int k_max,
                            const FoldPlan& folds, double lambda = 1e-4);

/// k-fold CV of a penalized logistic refit on fixed columns.
CvSummary cv_binary_accuracy(const Eigen::MatrixXd& x,
                             const Eigen::VectorXd& y, const FoldPlan& folds,
                             double lambda);

struct SizeRule {
    enum class Kind { OneStdError, Fixed };
    Kind kind = Kind::OneStdError;
    int fixed_size = 0;

    static SizeRule one_std_error() { return {Kind::OneStdError, 0}; }
    static SizeRule fixed(int s) { return {Kind::Fixed, s}; }
};

/// Model size from the per-step CV curve. Default rule: smallest step
/// whose CV mean is within one CV stddev of the best mean.
int choose_model_size(const SelectionTrace& trace, const SizeRule& rule);

} // namespace narx
