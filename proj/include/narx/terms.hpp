#pragma once

#include "narx/dataset.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace narx {

/// Bounds of the polynomial term search space.
///
/// `nonlinearity_degree` is the maximum total degree l. Output lags run
/// 1..max_output_lag; input lags run 1..max_input_lag, or 0..max_input_lag
/// when `allow_lag_zero_inputs` is set (contemporaneous features, the
/// static-classification configuration).
struct LagSpec {
    int nonlinearity_degree = 2;  // l >= 1
    int max_output_lag = 0;       // n_y
    int max_input_lag = 0;        // n_u
    int input_channels = 0;       // p
    bool allow_lag_zero_inputs = false;

    void validate() const;
    int variable_count() const;
};

/// One variable of the regression vector: a lagged output y(k-lag) or a
/// lagged input u<channel+1>(k-lag).
struct TermVariable {
    bool is_output = false;
    int channel = 0;  // 0-based, ignored for outputs
    int lag = 0;

    friend bool operator==(const TermVariable&, const TermVariable&) = default;
    // Canonical order: output lags ascending, then inputs by (channel, lag).
    bool operator<(const TermVariable& o) const;
    std::string render() const;
};

/// A polynomial monomial over regression-vector variables.
///
/// Factors are kept sorted by variable with powers >= 1 merged, so equal
/// terms have identical representations.
struct CandidateTerm {
    struct Factor {
        TermVariable var;
        int power = 1;
        friend bool operator==(const Factor&, const Factor&) = default;
    };
    std::vector<Factor> factors;

    int degree() const;
    int max_lag() const;
    bool uses_output() const;
    void canonicalize();

    /// Canonical string, e.g. "u1(k-1)*u3(k-2)^2" or "y(k-1)".
    ///
    /// Grammar:
    ///   term   := factor ("*" factor)*
    ///   factor := var ("^" integer)?
    ///   var    := ("y" | "u" integer) "(k" ("-" integer)? ")"
    std::string render() const;

    friend bool operator==(const CandidateTerm&, const CandidateTerm&) = default;
};

CandidateTerm parse_term(const std::string& text);

/// Ordered candidate set with its evaluated design matrix.
///
/// Row r of `design_matrix` corresponds to sample index
/// `effective_start - 1 + r` of the source data (0-based); `labels` holds
/// the aligned outputs when the source carries them.
struct TermLibrary {
    std::vector<CandidateTerm> terms;
    Eigen::MatrixXd design_matrix;  // N_eff x m
    int effective_start = 1;        // first usable 1-based time index
    std::vector<int> labels;        // aligned y(k), may be empty

    Eigen::Index term_count() const { return static_cast<Eigen::Index>(terms.size()); }
    Eigen::Index row_count() const { return design_matrix.rows(); }
};

/// All monomials of total degree 1..l over the regression-vector
/// variables, degree-major then lexicographic. No constant term; the
/// intercept lives in the logistic model.
std::vector<CandidateTerm> enumerate_terms(const LagSpec& spec);

/// Evaluates the given terms over the dataset. Output lags read the
/// observed numeric class labels. With `require_trainable` the row count
/// must reach twice the class count (enough to train and score).
TermLibrary build_design_matrix(const TimeSeriesDataset& ds,
                                const std::vector<CandidateTerm>& terms,
                                bool require_trainable = true);

} // namespace narx
