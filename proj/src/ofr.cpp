#include "narx/ofr.hpp"
#include "narx/errors.hpp"

#include <algorithm>
#include <cmath>

namespace narx {

void OrthogonalBasis::append(const Eigen::VectorXd& q) {
    if (columns.cols() > 0 && columns.rows() != q.size())
        throw DataError("basis column length mismatch");
    columns.conservativeResize(q.size(), columns.cols() + 1);
    columns.col(columns.cols() - 1) = q;
}

double OrthogonalBasis::max_off_diagonal() const {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < columns.cols(); ++i)
        for (Eigen::Index j = i + 1; j < columns.cols(); ++j)
            worst = std::max(worst, std::abs(columns.col(i).dot(columns.col(j))));
    return worst;
}

std::optional<Eigen::VectorXd> normalize_column(const Eigen::VectorXd& phi) {
    const double norm = phi.norm();
    if (!(norm > 1e-154)) return std::nullopt;
    return phi / norm;
}

Eigen::VectorXd orthogonalize(const Eigen::VectorXd& phi,
                              const OrthogonalBasis& basis) {
    Eigen::VectorXd r = phi;
    if (basis.size() == 0) return r;
    for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index j = 0; j < basis.size(); ++j)
            r -= basis.columns.col(j).dot(r) * basis.columns.col(j);
        const double leftover =
            (basis.columns.transpose() * r).lpNorm<Eigen::Infinity>();
        if (leftover <= 1e-10) break;
    }
    return r;
}

std::vector<int> SelectionTrace::selected_indices() const {
    std::vector<int> out;
    out.reserve(selected.size());
    for (const auto& s : selected) out.push_back(s.term_index);
    return out;
}

SelectionTrace run_greedy_selection(const TermLibrary& library, int k_max,
                                    const CandidateScorer& score,
                                    const StepEvaluator& evaluate_step) {
    const auto m = library.term_count();
    if (m == 0) throw ConfigError("term library is empty");
    if (k_max < 1) throw ConfigError("k_max must be at least 1");

    SelectionTrace trace;
    if (k_max > m) {
        trace.warnings.push_back("k_max " + std::to_string(k_max) +
                                 " exceeds library size " + std::to_string(m) +
                                 "; truncating");
        k_max = static_cast<int>(m);
    }

    // Unit-normalized candidates; zero columns are removable outright.
    std::vector<Eigen::VectorXd> unit(static_cast<std::size_t>(m));
    std::vector<int> alive;
    for (Eigen::Index j = 0; j < m; ++j) {
        auto u = normalize_column(library.design_matrix.col(j));
        if (u) {
            unit[static_cast<std::size_t>(j)] = std::move(*u);
            alive.push_back(static_cast<int>(j));
        } else {
            trace.eliminated.push_back(static_cast<int>(j));
        }
    }

    OrthogonalBasis basis;
    Eigen::MatrixXd selected_cols(library.row_count(), 0);

    for (int s = 1; s <= k_max; ++s) {
        int best_index = -1;
        double best_score = 0.0;
        Eigen::VectorXd best_direction;
        std::vector<int> dropped;

        for (int j : alive) {
            Eigen::VectorXd w = s == 1
                ? unit[static_cast<std::size_t>(j)]
                : orthogonalize(unit[static_cast<std::size_t>(j)], basis);
            if (s > 1 && w.squaredNorm() < kEliminationThreshold) {
                dropped.push_back(j);
                continue;
            }
            w.normalize();
            const double r = score(w);
            if (best_index < 0 || r > best_score) {
                best_index = j;
                best_score = r;
                best_direction = w;
            }
        }

        for (int j : dropped) {
            alive.erase(std::find(alive.begin(), alive.end(), j));
            trace.eliminated.push_back(j);
        }

        if (best_index < 0) {
            if (trace.selected.empty())
                throw NumericError(
                    "all candidates eliminated before any selection");
            trace.warnings.push_back("candidates exhausted after " +
                                     std::to_string(s - 1) + " steps");
            break;
        }

        basis.append(best_direction);
        alive.erase(std::find(alive.begin(), alive.end(), best_index));
        trace.selected.push_back({best_index,
                                  library.terms[static_cast<std::size_t>(best_index)],
                                  best_score});

        selected_cols.conservativeResize(Eigen::NoChange, selected_cols.cols() + 1);
        selected_cols.col(selected_cols.cols() - 1) =
            library.design_matrix.col(best_index);
        trace.cv_accuracy_per_step.push_back(evaluate_step(selected_cols));
    }

    std::sort(trace.eliminated.begin(), trace.eliminated.end());
    return trace;
}

CvSummary cv_binary_accuracy(const Eigen::MatrixXd& x,
                             const Eigen::VectorXd& y, const FoldPlan& folds,
                             double lambda) {
    if (static_cast<Eigen::Index>(folds.assignments.size()) != x.rows())
        throw DataError("fold plan does not cover the design-matrix rows");
    FitOptions opts;
    opts.lambda = lambda;
    std::vector<double> accs;
    for (int f = 0; f < folds.k; ++f) {
        const auto train = folds.complement_indices(f);
        const auto test = folds.fold_indices(f);
        Eigen::MatrixXd xtr(train.size(), x.cols()), xte(test.size(), x.cols());
        Eigen::VectorXd ytr(train.size()), yte(test.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            xtr.row(static_cast<Eigen::Index>(i)) = x.row(train[i]);
            ytr(static_cast<Eigen::Index>(i)) = y(train[i]);
        }
        for (std::size_t i = 0; i < test.size(); ++i) {
            xte.row(static_cast<Eigen::Index>(i)) = x.row(test[i]);
            yte(static_cast<Eigen::Index>(i)) = y(test[i]);
        }
        const LogisticModel model = fit_mle(xtr, ytr, opts);
        accs.push_back(accuracy(model, xte, yte));
    }
    CvSummary out;
    for (double a : accs) out.mean += a;
    out.mean /= static_cast<double>(accs.size());
    if (accs.size() > 1) {
        double ss = 0.0;
        for (double a : accs) ss += (a - out.mean) * (a - out.mean);
        out.stddev = std::sqrt(ss / static_cast<double>(accs.size() - 1));
    }
    return out;
}

SelectionTrace select_terms(const TermLibrary& library,
                            const Eigen::VectorXd& y_binary, int k_max,
                            const FoldPlan& folds, double lambda) {
    if (y_binary.size() != library.row_count())
        throw DataError("binary labels do not match design-matrix rows");
    const double positives = y_binary.sum();
    if (positives == 0.0 || positives == static_cast<double>(y_binary.size()))
        throw DataError("selection needs both classes present");

    FitOptions opts;
    opts.lambda = lambda;
    auto scorer = [&](const Eigen::VectorXd& w) {
        const Eigen::MatrixXd col = w;
        return accuracy(fit_mle(col, y_binary, opts), col, y_binary);
    };
    auto evaluator = [&](const Eigen::MatrixXd& cols) {
        return cv_binary_accuracy(cols, y_binary, folds, lambda);
    };

    SelectionTrace trace = run_greedy_selection(library, k_max, scorer, evaluator);

    Eigen::MatrixXd cols(library.row_count(),
                         static_cast<Eigen::Index>(trace.selected.size()));
    for (std::size_t i = 0; i < trace.selected.size(); ++i)
        cols.col(static_cast<Eigen::Index>(i)) =
            library.design_matrix.col(trace.selected[i].term_index);
    trace.final_model = fit_mle(cols, y_binary, opts);
    return trace;
}

int choose_model_size(const SelectionTrace& trace, const SizeRule& rule) {
    const int steps = static_cast<int>(trace.cv_accuracy_per_step.size());
    if (steps == 0) throw DataError("selection trace is empty");
    if (rule.kind == SizeRule::Kind::Fixed) {
        if (rule.fixed_size < 1) throw ConfigError("fixed model size must be >= 1");
        return std::min(rule.fixed_size, steps);
    }
    int best = 0;
    for (int s = 1; s < steps; ++s)
        if (trace.cv_accuracy_per_step[static_cast<std::size_t>(s)].mean >
            trace.cv_accuracy_per_step[static_cast<std::size_t>(best)].mean)
            best = s;
    const double threshold =
        trace.cv_accuracy_per_step[static_cast<std::size_t>(best)].mean -
        trace.cv_accuracy_per_step[static_cast<std::size_t>(best)].stddev;
    for (int s = 0; s < steps; ++s)
        if (trace.cv_accuracy_per_step[static_cast<std::size_t>(s)].mean >=
            threshold)
            return s + 1;
    return best + 1;
}

} // namespace narx
